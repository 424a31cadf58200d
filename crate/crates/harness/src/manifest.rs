//! Cost manifests: a JSON file naming the cost variant, the per-term weights
//! and conjugated-mode counts, and the `.ten` files holding the tensors.
//!
//! ```json
//! {
//!   "variant": "complex_general",
//!   "terms": [ { "path": "term0.ten", "weight": 1.0, "conj_modes": 1 } ]
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Planted
//! instances also get a `truth.json` sidecar with the optimum value and the
//! path of the ground-truth transform.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use jacobi_diag::tensor::io;
use jacobi_diag::{ComplexTerm, CostSpec, DenseTensor};
use serde::{Deserialize, Serialize};

use crate::generate::{Instance, Planted, PlantedTransform};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRUTH_FILE: &str = "truth.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub variant: String,
    pub terms: Vec<ManifestTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTerm {
    pub path: PathBuf,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default)]
    pub conj_modes: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSidecar {
    pub f_star: f64,
    pub transform: PathBuf,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Writes the instance into `dir` (created if missing) and returns the
/// manifest path.
pub fn write_instance(dir: &Path, instance: &Instance) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let manifest = write_spec(dir, &instance.spec)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;
    if let Some(planted) = &instance.planted {
        let transform = PathBuf::from("truth.ten");
        write_transform(&dir.join(&transform), &planted.transform)?;
        write_json(
            &dir.join(TRUTH_FILE),
            &TruthSidecar {
                f_star: planted.f_star,
                transform,
            },
        )?;
    }
    Ok(manifest_path)
}

fn write_spec(dir: &Path, spec: &CostSpec) -> Result<Manifest> {
    let mut terms = Vec::new();
    match spec {
        CostSpec::RealSymmetric { tensors } => {
            for (k, t) in tensors.iter().enumerate() {
                let path = PathBuf::from(format!("term{k}.ten"));
                io::write(dir.join(&path), t)?;
                terms.push(ManifestTerm {
                    path,
                    weight: 1.0,
                    conj_modes: 0,
                });
            }
        }
        CostSpec::ComplexGeneral { terms: ts } => {
            for (k, t) in ts.iter().enumerate() {
                let path = PathBuf::from(format!("term{k}.ten"));
                io::write(dir.join(&path), &t.tensor)?;
                terms.push(ManifestTerm {
                    path,
                    weight: t.weight,
                    conj_modes: t.conj_modes,
                });
            }
        }
        CostSpec::TraceForm { b } => {
            let path = PathBuf::from("b.ten");
            io::write(dir.join(&path), b)?;
            terms.push(ManifestTerm {
                path,
                weight: 1.0,
                conj_modes: b.order() / 2,
            });
        }
    }
    Ok(Manifest {
        variant: spec.variant_name().to_string(),
        terms,
    })
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

/// Loads and validates the cost described by the manifest at `path`.
pub fn read_spec(path: &Path) -> Result<CostSpec> {
    let manifest = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let load = |t: &ManifestTerm| {
        let p = resolve(base, &t.path);
        io::read(&p).with_context(|| format!("reading tensor {}", p.display()))
    };
    let spec = match manifest.variant.as_str() {
        "real_symmetric" => CostSpec::RealSymmetric {
            tensors: manifest
                .terms
                .iter()
                .map(|t| {
                    if t.weight != 1.0 {
                        bail!("real_symmetric terms carry no weights");
                    }
                    Ok(load(t)?.into_real()?)
                })
                .collect::<Result<_>>()?,
        },
        "complex_general" => CostSpec::ComplexGeneral {
            terms: manifest
                .terms
                .iter()
                .map(|t| {
                    Ok(ComplexTerm {
                        tensor: load(t)?.into_complex(),
                        conj_modes: t.conj_modes,
                        weight: t.weight,
                    })
                })
                .collect::<Result<_>>()?,
        },
        "trace_form" => {
            let [t] = manifest.terms.as_slice() else {
                bail!(
                    "trace_form needs exactly one tensor, found {}",
                    manifest.terms.len()
                );
            };
            CostSpec::TraceForm {
                b: load(t)?.into_complex(),
            }
        }
        other => bail!("unknown cost variant {other:?}"),
    };
    spec.validate()
        .with_context(|| format!("invalid cost in {}", path.display()))?;
    Ok(spec)
}

/// Reads the `truth.json` sidecar next to a manifest, if there is one.
pub fn read_truth(manifest_path: &Path) -> Result<Option<Planted>> {
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let path = base.join(TRUTH_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let sidecar: TruthSidecar =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let transform = read_transform(&resolve(base, &sidecar.transform))?;
    Ok(Some(Planted {
        transform,
        f_star: sidecar.f_star,
    }))
}

/// Reads a transform saved as an order-2 `.ten` file.
pub fn read_transform(path: &Path) -> Result<PlantedTransform> {
    Ok(
        match io::read(path).with_context(|| format!("reading {}", path.display()))? {
            io::AnyTensor::Real(t) => PlantedTransform::Orthogonal(t.to_matrix()?),
            io::AnyTensor::Complex(t) => PlantedTransform::Unitary(t.to_matrix()?),
        },
    )
}

pub fn write_transform(path: &Path, x: &PlantedTransform) -> Result<()> {
    match x {
        PlantedTransform::Orthogonal(q) => io::write(path, &DenseTensor::from_matrix(q)?)?,
        PlantedTransform::Unitary(u) => io::write(path, &DenseTensor::from_matrix(u)?)?,
    }
    Ok(())
}
