use crate::Scalar;

use super::{CsrMatrix, LinalgError};

#[derive(Debug, Clone)]
pub struct CgOutcome<T> {
    pub solution: Vec<T>,
    pub iterations: usize,
    pub relative_residual: T,
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive definite `a`.
pub fn conjugate_gradient<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &[T],
    x0: Option<&[T]>,
    rel_tol: T,
    max_iter: usize,
) -> Result<CgOutcome<T>, LinalgError> {
    let n = a.nrows();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > T::zero() { d.recip() } else { T::one() })
        .collect();
    let mut x = x0.map(<[T]>::to_vec).unwrap_or_else(|| vec![T::zero(); n]);
    let ax = a.mul_vec(&x);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let b_norm = b.iter().map(|&v| v * v).sum::<T>().sqrt();
    if b_norm == T::zero() {
        return Ok(CgOutcome {
            solution: vec![T::zero(); n],
            iterations: 0,
            relative_residual: T::zero(),
        });
    }
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: T = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
    let mut res = r.iter().map(|&v| v * v).sum::<T>().sqrt() / b_norm;
    for it in 0..max_iter {
        if res <= rel_tol {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                relative_residual: res,
            });
        }
        let ap = a.mul_vec(&p);
        let pap: T = p.iter().zip(&ap).map(|(&a, &b)| a * b).sum();
        if !(pap > T::zero()) {
            return Err(LinalgError::NotPositiveDefinite {
                pivot: it,
                value: pap.to_f64_lossy(),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: T = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = r.iter().map(|&v| v * v).sum::<T>().sqrt() / b_norm;
    }
    if res <= rel_tol {
        Ok(CgOutcome {
            solution: x,
            iterations: max_iter,
            relative_residual: res,
        })
    } else {
        Err(LinalgError::NoConvergence {
            iterations: max_iter,
            residual: res.to_f64_lossy(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_solution() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let cg = conjugate_gradient(&a, &b, None, 1e-12, 1000).unwrap();
        let direct = crate::linalg::SkylineCholesky::factor(&a)
            .unwrap()
            .solve(&b)
            .unwrap();
        for (u, v) in cg.solution.iter().zip(&direct) {
            assert!((u - v).abs() < 1e-9 * v.abs().max(1.0));
        }
    }
}
