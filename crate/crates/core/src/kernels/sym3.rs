//! Eigendecomposition of 3×3 real symmetric matrices.

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym3Eigen {
    pub values: [f64; 3],
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: [[f64; 3]; 3],
}

/// Eigendecomposition of a symmetric `g` by cyclic Jacobi rotations, which
/// keeps eigenvectors accurate to round-off even when they are within a
/// hair of the coordinate axes. Each vector is signed so that its
/// largest-magnitude component is positive.
pub fn sym3_eig(g: &[[f64; 3]; 3]) -> Sym3Eigen {
    let mut eig = jacobi(g);
    for v in eig.vectors.iter_mut() {
        let big = (0..3)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .unwrap_or(0);
        if v[big] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    eig
}

fn jacobi(g: &[[f64; 3]; 3]) -> Sym3Eigen {
    let mut a = *g;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..64 {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            // Standard negligibility test: a_pq is below the precision of the diagonal.
            let apq = a[p][q].abs();
            if apq == 0.0 || apq <= 1e-18 * (a[p][p].abs() + a[q][q].abs()) {
                continue;
            }
            rotated = true;
            let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = if tau == 0.0 {
                1.0
            } else {
                tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            for row in a.iter_mut() {
                let (x, y) = (row[p], row[q]);
                row[p] = c * x - s * y;
                row[q] = s * x + c * y;
            }
            for k in 0..3 {
                let (x, y) = (a[p][k], a[q][k]);
                a[p][k] = c * x - s * y;
                a[q][k] = s * x + c * y;
            }
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            for row in v.iter_mut() {
                let (x, y) = (row[p], row[q]);
                row[p] = c * x - s * y;
                row[q] = s * x + c * y;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    Sym3Eigen {
        values: order.map(|k| a[k][k]),
        vectors: order.map(|k| [v[0][k], v[1][k], v[2][k]]),
    }
}
