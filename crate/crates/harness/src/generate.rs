//! Random and planted problem instances.
//!
//! Every directive is drawn from a `ChaCha20Rng` seeded with the directive's
//! seed; repetition `r` of an experiment uses stream `r` of that generator, so
//! repetitions are independent and each one is reproducible on its own.

use anyhow::{bail, ensure, Result};
use jacobi_diag::{Complex64, CostSpec, DenseTensor, Mat, NamedCost};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// What to generate. Serialized with a `kind` tag and the short field names
/// `d` (order), `n` (dimension) and `L` (number of matrices), e.g.
/// `{ kind = "planted-orthogonal", d = 3, n = 10 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorDirective {
    /// One fully symmetric real tensor with i.i.d. standard normal entries,
    /// symmetrized by averaging over index permutations.
    RandomSymmetric {
        #[serde(rename = "d")]
        order: usize,
        #[serde(rename = "n")]
        dim: usize,
    },
    /// A diagonal tensor conjugated on every mode by a Haar orthogonal matrix.
    /// `values` defaults to `1, 2, …, dim`.
    PlantedOrthogonal {
        #[serde(rename = "d")]
        order: usize,
        #[serde(rename = "n")]
        dim: usize,
        #[serde(default)]
        values: Option<Vec<f64>>,
    },
    /// `count` random Hermitian matrices for the JADE cost.
    RandomJade {
        #[serde(rename = "n")]
        dim: usize,
        #[serde(rename = "L")]
        count: usize,
    },
    /// `count` real diagonal matrices conjugated by one Haar unitary. When
    /// `commuting` is false a Hermitian perturbation of size 0.1 is added, so
    /// the matrices are only approximately jointly diagonalizable.
    PlantedJade {
        #[serde(rename = "n")]
        dim: usize,
        #[serde(rename = "L")]
        count: usize,
        #[serde(default = "default_true")]
        commuting: bool,
    },
    /// A complex Gaussian third-order tensor.
    RandomComplex3 {
        #[serde(rename = "n")]
        dim: usize,
    },
    /// A random Hermitian-paired tensor of order `2 * half_order` for the trace form.
    RandomHermitianForm {
        #[serde(rename = "d")]
        half_order: usize,
        #[serde(rename = "n")]
        dim: usize,
    },
}

fn default_true() -> bool {
    true
}

/// Known optimum of a planted instance.
#[derive(Clone, Debug, PartialEq)]
pub enum PlantedTransform {
    Orthogonal(Mat<f64>),
    Unitary(Mat<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Planted {
    pub transform: PlantedTransform,
    pub f_star: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub spec: CostSpec,
    pub planted: Option<Planted>,
}

impl GeneratorDirective {
    pub fn dim(&self) -> usize {
        match *self {
            GeneratorDirective::RandomSymmetric { dim, .. }
            | GeneratorDirective::PlantedOrthogonal { dim, .. }
            | GeneratorDirective::RandomJade { dim, .. }
            | GeneratorDirective::PlantedJade { dim, .. }
            | GeneratorDirective::RandomComplex3 { dim }
            | GeneratorDirective::RandomHermitianForm { dim, .. } => dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorDirective::RandomSymmetric { .. } => "random-symmetric",
            GeneratorDirective::PlantedOrthogonal { .. } => "planted-orthogonal",
            GeneratorDirective::RandomJade { .. } => "random-jade",
            GeneratorDirective::PlantedJade { .. } => "planted-jade",
            GeneratorDirective::RandomComplex3 { .. } => "random-complex3",
            GeneratorDirective::RandomHermitianForm { .. } => "random-hermitian-form",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        ensure!(n >= 2, "dimension must be at least 2, got {n}");
        match self {
            GeneratorDirective::RandomSymmetric { order, .. } => {
                ensure!(*order >= 2, "order must be at least 2")
            }
            GeneratorDirective::PlantedOrthogonal { order, values, .. } => {
                ensure!(*order >= 2, "order must be at least 2");
                if let Some(v) = values {
                    ensure!(
                        v.len() == n,
                        "{} diagonal values for dimension {n}",
                        v.len()
                    );
                    ensure!(
                        v.iter().all(|x| x.is_finite()),
                        "diagonal values must be finite"
                    );
                }
            }
            GeneratorDirective::RandomJade { count, .. }
            | GeneratorDirective::PlantedJade { count, .. } => {
                ensure!(*count >= 1, "need at least one matrix")
            }
            GeneratorDirective::RandomComplex3 { .. } => {}
            GeneratorDirective::RandomHermitianForm { half_order, .. } => {
                ensure!((1..=3).contains(half_order), "half_order must be 1, 2 or 3")
            }
        }
        let entries = match self {
            GeneratorDirective::RandomSymmetric { order, .. }
            | GeneratorDirective::PlantedOrthogonal { order, .. } => n.checked_pow(*order as u32),
            GeneratorDirective::RandomHermitianForm { half_order, .. } => {
                n.checked_pow(2 * *half_order as u32)
            }
            GeneratorDirective::RandomComplex3 { .. } => n.checked_pow(3),
            _ => n.checked_pow(2),
        };
        match entries {
            Some(e) if e <= 1 << 26 => Ok(()),
            _ => bail!("{} instance with dimension {n} is too large", self.kind()),
        }
    }

    /// Draws the instance for repetition `rep`.
    pub fn generate(&self, seed: u64, rep: u64) -> Result<Instance> {
        self.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(rep);
        let n = self.dim();
        let instance = match self {
            GeneratorDirective::RandomSymmetric { order, .. } => Instance {
                spec: CostSpec::RealSymmetric {
                    tensors: vec![random_symmetric(&mut rng, *order, n)?],
                },
                planted: None,
            },
            GeneratorDirective::PlantedOrthogonal { order, values, .. } => {
                let values = values
                    .clone()
                    .unwrap_or_else(|| (1..=n).map(|k| k as f64).collect());
                let q = haar_orthogonal(&mut rng, n);
                let diag = DenseTensor::from_fn(*order, n, |ix| {
                    if ix.iter().all(|&v| v == ix[0]) {
                        values[ix[0]]
                    } else {
                        0.0
                    }
                })?;
                let modes: Vec<usize> = (0..*order).collect();
                let t = diag.multi_transform(&q.transpose(), &[], &modes)?;
                Instance {
                    spec: CostSpec::RealSymmetric {
                        tensors: vec![t.symmetrize()],
                    },
                    planted: Some(Planted {
                        transform: PlantedTransform::Orthogonal(q),
                        f_star: values.iter().map(|v| v * v).sum(),
                    }),
                }
            }
            GeneratorDirective::RandomJade { count, .. } => Instance {
                spec: NamedCost::Jade((0..*count).map(|_| random_hermitian(&mut rng, n)).collect())
                    .into_spec()?,
                planted: None,
            },
            GeneratorDirective::PlantedJade {
                count, commuting, ..
            } => {
                let u = haar_unitary(&mut rng, n);
                let diags = separated_diagonals(&mut rng, *count, n);
                let mats = diags
                    .iter()
                    .map(|d| {
                        let dm = Mat::from_diagonal(&DVector::from_fn(n, |k, _| {
                            Complex64::new(d[k], 0.0)
                        }));
                        let mut a = &u * dm * u.adjoint();
                        if !commuting {
                            a += random_hermitian(&mut rng, n).scale(0.1);
                        }
                        hermitian_part(&a)
                    })
                    .collect();
                Instance {
                    spec: NamedCost::Jade(mats).into_spec()?,
                    planted: commuting.then(|| Planted {
                        transform: PlantedTransform::Unitary(u),
                        f_star: diags.iter().flatten().map(|v| v * v).sum(),
                    }),
                }
            }
            GeneratorDirective::RandomComplex3 { .. } => Instance {
                spec: NamedCost::Complex3(complex_gaussian_tensor(&mut rng, 3, n)?).into_spec()?,
                planted: None,
            },
            GeneratorDirective::RandomHermitianForm { half_order, .. } => {
                let b = hermitian_paired(&complex_gaussian_tensor(&mut rng, 2 * half_order, n)?);
                Instance {
                    spec: CostSpec::TraceForm { b },
                    planted: None,
                }
            }
        };
        instance.spec.validate()?;
        Ok(instance)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn random_symmetric<R: Rng + ?Sized>(
    rng: &mut R,
    order: usize,
    n: usize,
) -> Result<DenseTensor<f64>> {
    Ok(DenseTensor::from_fn(order, n, |_| gaussian(rng))?.symmetrize())
}

fn complex_gaussian_tensor<R: Rng + ?Sized>(
    rng: &mut R,
    order: usize,
    n: usize,
) -> Result<DenseTensor<Complex64>> {
    Ok(DenseTensor::from_fn(order, n, |_| {
        Complex64::new(gaussian(rng), gaussian(rng))
    })?)
}

fn hermitian_part(a: &Mat<Complex64>) -> Mat<Complex64> {
    (a + a.adjoint()).scale(0.5)
}

fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat<Complex64> {
    hermitian_part(&Mat::from_fn(n, n, |_, _| {
        Complex64::new(gaussian(rng), gaussian(rng))
    }))
}

/// `(B + B†)/2` with `B†[I, J] = conj(B[J, I])` over index blocks of half the order.
pub fn hermitian_paired(b: &DenseTensor<Complex64>) -> DenseTensor<Complex64> {
    let d = b.order() / 2;
    let mut out = b.clone();
    let mut swapped = vec![0; b.order()];
    let mut idx = vec![0; b.order()];
    for off in 0..b.values().len() {
        let mut rest = off;
        for k in (0..b.order()).rev() {
            idx[k] = rest % b.dim();
            rest /= b.dim();
        }
        swapped[..d].copy_from_slice(&idx[d..]);
        swapped[d..].copy_from_slice(&idx[..d]);
        out.set(&idx, (b.get(&idx) + b.get(&swapped).conj()) * 0.5);
    }
    out
}

/// Haar orthogonal matrix: QR of a Gaussian matrix with the signs of `R`'s
/// diagonal moved into `Q`.
pub fn haar_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat<f64> {
    let qr = Mat::<f64>::from_fn(n, n, |_, _| gaussian(rng)).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// Haar unitary matrix: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat<Complex64> {
    let qr =
        Mat::<Complex64>::from_fn(n, n, |_, _| Complex64::new(gaussian(rng), gaussian(rng))).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for z in q.column_mut(k).iter_mut() {
                *z *= phase;
            }
        }
    }
    q
}

/// Minimum distance between any two joint eigenvalue profiles.
const MIN_SEPARATION: f64 = 0.5;

/// `count` Gaussian diagonals, redrawn until every two coordinates differ by
/// at least [`MIN_SEPARATION`] in the Euclidean norm across matrices.
fn separated_diagonals<R: Rng + ?Sized>(rng: &mut R, count: usize, n: usize) -> Vec<Vec<f64>> {
    loop {
        let d: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..n).map(|_| 2.0 * gaussian(rng)).collect())
            .collect();
        let ok = (0..n).all(|i| {
            (i + 1..n).all(|j| {
                d.iter().map(|v| (v[i] - v[j]).powi(2)).sum::<f64>().sqrt() >= MIN_SEPARATION
            })
        });
        if ok {
            return d;
        }
    }
}

/// Column-match score between `x` and a planted `reference`: the mean absolute
/// inner product `|⟨r_k, x_π(k)⟩|` under the assignment `π` maximizing it. It
/// equals 1 exactly when `x` is `reference` up to signed (phased) permutation.
pub fn match_score(x: &PlantedTransform, reference: &PlantedTransform) -> Result<f64> {
    let corr: Mat<f64> = match (x, reference) {
        (PlantedTransform::Orthogonal(x), PlantedTransform::Orthogonal(r)) => {
            (r.transpose() * x).map(f64::abs)
        }
        (PlantedTransform::Unitary(x), PlantedTransform::Unitary(r)) => {
            (r.adjoint() * x).map(|z| z.norm())
        }
        _ => bail!("cannot compare orthogonal and unitary transforms"),
    };
    ensure!(corr.is_square(), "transform is not square");
    let n = corr.nrows();
    let assignment = crate::matching::max_weight_assignment(&corr);
    Ok((0..n).map(|k| corr[(k, assignment[k])]).sum::<f64>() / n as f64)
}
