//! Small dense helpers (subproblem systems, rank checks).

use crate::Scalar;

use super::LinalgError;

/// Solves `a x = b` for a row-major `n x n` matrix by Gaussian elimination with partial pivoting.
pub fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>, LinalgError> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| {
                a[i][k]
                    .abs()
                    .partial_cmp(&a[j][k].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or(LinalgError::Singular)?;
        if !(a[piv][k].abs() > T::zero()) {
            return Err(LinalgError::Singular);
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s: T = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}

/// Numerical rank of the column set `cols` (each a vector of equal length), using Gram-Schmidt
/// with relative tolerance `tol`.
pub fn column_rank<T: Scalar>(cols: &[Vec<T>], tol: T) -> usize {
    let scale = cols
        .iter()
        .map(|c| c.iter().map(|&v| v * v).sum::<T>().sqrt())
        .fold(T::zero(), T::max);
    if scale == T::zero() {
        return 0;
    }
    let mut basis: Vec<Vec<T>> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &basis {
                let d: T = v.iter().zip(q).map(|(&a, &b)| a * b).sum();
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi -= d * qi;
                }
            }
        }
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > tol * scale {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoting_solve() {
        let a = vec![vec![0.0f64, 2.0], vec![3.0, 1.0]];
        let x = solve(a, vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_detects_dependence() {
        let cols = vec![
            vec![1.0f64, 0.0, 1.0],
            vec![2.0, 0.0, 2.0],
            vec![0.0, 1.0, 0.0],
        ];
        assert_eq!(column_rank(&cols, 1e-10), 2);
    }
}
