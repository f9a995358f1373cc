use crate::Scalar;

use super::LinalgError;

/// Row-compressed nonzero structure with sorted column indices per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds the pattern from an arbitrary (possibly repeating) list of entries.
    pub fn from_entries(
        nrows: usize,
        ncols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nrows];
        for (r, c) in entries {
            debug_assert!(r < nrows && c < ncols);
            rows[r].push(c);
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(&row);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    /// Position of `(r, c)` in the value array.
    pub fn index_of(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.row(r).binary_search(&c).ok().map(|k| start + k)
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    pattern: SparsityPattern,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(pattern: SparsityPattern) -> Self {
        let values = vec![T::zero(); pattern.nnz()];
        Self { pattern, values }
    }

    pub fn from_pattern(pattern: SparsityPattern, values: Vec<T>) -> Result<Self, LinalgError> {
        if values.len() != pattern.nnz() {
            return Err(LinalgError::DimensionMismatch {
                expected: pattern.nnz(),
                got: values.len(),
            });
        }
        Ok(Self { pattern, values })
    }

    /// Sums duplicate entries. Duplicates are accumulated in input order so the result does not
    /// depend on anything but the triplet sequence.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let pattern =
            SparsityPattern::from_entries(nrows, ncols, triplets.iter().map(|&(r, c, _)| (r, c)));
        let mut m = Self::zeros(pattern);
        for &(r, c, v) in triplets {
            let k = m.pattern.index_of(r, c).expect("entry present in pattern");
            m.values[k] += v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.pattern
            .index_of(r, c)
            .map(|k| self.values[k])
            .unwrap_or_else(T::zero)
    }

    /// Iterates `(column, value)` pairs of row `r`.
    pub fn row_iter(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.pattern.row_range(r);
        self.pattern.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols());
        (0..self.nrows())
            .map(|r| self.row_iter(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows()).map(|r| self.get(r, r)).collect()
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.nrows() {
            for (c, v) in self.row_iter(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `keep` (indices into the original numbering, any order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.nrows()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_r, &old_r) in keep.iter().enumerate() {
            for (c, v) in self.row_iter(old_r) {
                if map[c] != usize::MAX {
                    triplets.push((new_r, map[c], v));
                }
            }
        }
        Self::from_triplets(keep.len(), keep.len(), &triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols()]; self.nrows()];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row_iter(r) {
                row[c] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (0, 0, 3.0), (1, 1, 5.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.pattern().nnz(), 3);
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![6.0, 5.0]);
    }

    #[test]
    fn submatrix_keeps_requested_order() {
        let m = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 1.0),
                (1, 1, 2.0),
                (2, 2, 3.0),
                (0, 2, 7.0),
                (2, 0, 7.0),
            ],
        );
        let s = m.principal_submatrix(&[2, 0]);
        assert_eq!(s.get(0, 0), 3.0);
        assert_eq!(s.get(1, 1), 1.0);
        assert_eq!(s.get(0, 1), 7.0);
    }
}
