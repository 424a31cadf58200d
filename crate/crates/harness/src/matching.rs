//! Maximum-weight assignment on a square matrix (Hungarian method with
//! potentials, O(n³)).

use jacobi_diag::Mat;

/// Returns `assignment` with row `i` matched to column `assignment[i]`,
/// maximizing `Σ_i w[(i, assignment[i])]`.
pub fn max_weight_assignment(w: &Mat<f64>) -> Vec<usize> {
    let n = w.nrows();
    assert_eq!(n, w.ncols(), "assignment needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    // Minimize the negated weights. Rows and columns are 1-based below; index
    // 0 is the virtual start column.
    let cost = |i: usize, j: usize| -w[(i - 1, j - 1)];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(w: &Mat<f64>) -> f64 {
        fn rec(w: &Mat<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == w.nrows() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for j in 0..w.ncols() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[(row, j)] + rec(w, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(w, 0, &mut vec![false; w.ncols()])
    }

    #[test]
    fn permutation_matrix_is_recovered() {
        let perm = [2, 0, 3, 1];
        let w = Mat::from_fn(4, 4, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
        assert_eq!(max_weight_assignment(&w), perm);
    }

    #[test]
    fn matches_brute_force() {
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=6 {
            for _ in 0..20 {
                let w = Mat::from_fn(n, n, |_, _| next());
                let a = max_weight_assignment(&w);
                let mut seen = a.clone();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                let total: f64 = (0..n).map(|i| w[(i, a[i])]).sum();
                assert!((total - brute_force(&w)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_matrix() {
        assert!(max_weight_assignment(&Mat::zeros(0, 0)).is_empty());
    }
}
