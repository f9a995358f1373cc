use crate::Scalar;

use super::{envelope_size, reverse_cuthill_mckee, CsrMatrix, LinalgError, SparsityPattern};

/// Ordering and envelope layout of a skyline factorization; reusable across matrices that share a
/// sparsity pattern.
#[derive(Debug, Clone)]
pub struct SkylineSymbolic {
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
}

impl SkylineSymbolic {
    pub fn analyze(pattern: &SparsityPattern) -> Self {
        let n = pattern.nrows();
        let rcm = reverse_cuthill_mckee(pattern);
        let ident: Vec<usize> = (0..n).collect();
        let perm = if envelope_size(pattern, &rcm) <= envelope_size(pattern, &ident) {
            rcm
        } else {
            ident
        };
        let mut inv_perm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }
        let mut first = vec![0; n];
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for new in 0..n {
            let f = pattern
                .row(perm[new])
                .iter()
                .map(|&c| inv_perm[c])
                .filter(|&c| c <= new)
                .min()
                .unwrap_or(new);
            first[new] = f;
            start.push(start[new] + new - f + 1);
        }
        Self {
            perm,
            inv_perm,
            first,
            start,
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn envelope_len(&self) -> usize {
        *self.start.last().unwrap_or(&0)
    }
}

/// Envelope Cholesky factor `P A Pᵀ = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SkylineCholesky<T> {
    symbolic: SkylineSymbolic,
    data: Vec<T>,
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

impl<T: Scalar> SkylineCholesky<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        let symbolic = SkylineSymbolic::analyze(a.pattern());
        Self::factor_with(symbolic, a)
    }

    /// Numeric factorization using a precomputed layout. Only the lower triangle of `a` is read.
    pub fn factor_with(symbolic: SkylineSymbolic, a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        let n = symbolic.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: a.nrows(),
            });
        }
        let mut data = vec![T::zero(); symbolic.envelope_len()];
        for new in 0..n {
            let row_start = symbolic.start[new];
            let f = symbolic.first[new];
            for (c, v) in a.row_iter(symbolic.perm[new]) {
                let cn = symbolic.inv_perm[c];
                if cn <= new {
                    if cn < f {
                        return Err(LinalgError::DimensionMismatch {
                            expected: f,
                            got: cn,
                        });
                    }
                    data[row_start + cn - f] = v;
                }
            }
        }

        for i in 0..n {
            let fi = symbolic.first[i];
            let si = symbolic.start[i];
            for j in fi..i {
                let fj = symbolic.first[j];
                let sj = symbolic.start[j];
                let k0 = fi.max(fj);
                let (head, row_i) = data.split_at_mut(si);
                let row_j = &head[sj..sj + (j - fj + 1)];
                let s = row_i[j - fi] - dot(&row_i[k0 - fi..j - fi], &row_j[k0 - fj..j - fj]);
                row_i[j - fi] = s / row_j[j - fj];
            }
            let row_i = &mut data[si..si + (i - fi + 1)];
            let off = &row_i[..i - fi];
            let d = row_i[i - fi] - dot(off, off);
            if !(d > T::zero()) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    pivot: symbolic.perm[i],
                    value: d.to_f64_lossy(),
                });
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(Self { symbolic, data })
    }

    pub fn dim(&self) -> usize {
        self.symbolic.dim()
    }

    pub fn symbolic(&self) -> &SkylineSymbolic {
        &self.symbolic
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let sym = &self.symbolic;
        let mut y: Vec<T> = sym.perm.iter().map(|&old| rhs[old]).collect();
        for i in 0..n {
            let fi = sym.first[i];
            let row = &self.data[sym.start[i]..sym.start[i + 1]];
            let s = y[i] - dot(&row[..i - fi], &y[fi..i]);
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = sym.first[i];
            let row = &self.data[sym.start[i]..sym.start[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (k, &l) in (fi..i).zip(row[..i - fi].iter()) {
                y[k] -= l * xi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in sym.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplace_1d(50, 0.0);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = SkylineCholesky::factor(&a).unwrap().solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let a = laplace_1d(5, -3.0);
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let t: Vec<(usize, usize, f32)> = vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)];
        let a = CsrMatrix::from_triplets(2, 2, &t);
        let x = SkylineCholesky::factor(&a)
            .unwrap()
            .solve(&[1.0, 2.0])
            .unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-6);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-6);
    }
}
