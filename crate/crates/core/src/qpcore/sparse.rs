use std::fmt;

use nalgebra::DMatrix;

use crate::error::{dim_check, Error, Result};

/// Row-compressed sparse matrix of finite `f64` values.
///
/// Entries are unique per `(row, col)` and explicit zeros are never stored.
#[derive(Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and entries that end up zero are dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (k, (i, j, v)) in triplets.into_iter().enumerate() {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Invalid(format!(
                    "triplet {k}: index ({i}, {j}) out of range for {n_rows}x{n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Invalid(format!("triplet {k}: value {v} is not finite")));
            }
            entries.push((i, j, v));
        }
        // stable sort keeps duplicate summation order equal to input order
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        let mut idx = 0;
        while idx < entries.len() {
            let (i, j, mut v) = entries[idx];
            idx += 1;
            while idx < entries.len() && entries[idx].0 == i && entries[idx].1 == j {
                v += entries[idx].2;
                idx += 1;
            }
            if v != 0.0 {
                row_ptr[i + 1] += 1;
                cols.push(j);
                vals.push(v);
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix { n_rows, n_cols, row_ptr, cols, vals })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_triplets(n, n, d.iter().enumerate().map(|(i, &v)| (i, i, v)))
            .expect("diagonal entries must be finite")
    }

    /// Builds a matrix from dense rows; zeros are not stored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_triplets(
            n_rows,
            n_cols,
            rows.iter()
                .enumerate()
                .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v))),
        )
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        let (r, c) = m.shape();
        Self::from_triplets(
            r,
            c,
            (0..r).flat_map(|i| (0..c).map(move |j| (i, j, m[(i, j)]))),
        )
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzeros of row `i` as `(col, value)` in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    /// All nonzeros in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        Self::from_triplets(self.n_cols, self.n_rows, self.triplets().map(|(i, j, v)| (j, i, v)))
            .expect("transpose of a valid matrix is valid")
    }

    pub fn scale(&self, alpha: f64) -> SparseMatrix {
        Self::from_triplets(self.n_rows, self.n_cols, self.triplets().map(|(i, j, v)| (i, j, alpha * v)))
            .expect("scaled values must stay finite")
    }

    /// `M x`
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        dim_check(x.len() == self.n_cols, || {
            format!("vector of length {} times {}x{} matrix", x.len(), self.n_rows, self.n_cols)
        })?;
        Ok((0..self.n_rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    /// `Mᵀ y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        dim_check(y.len() == self.n_rows, || {
            format!("vector of length {} times transpose of {}x{} matrix", y.len(), self.n_rows, self.n_cols)
        })?;
        let mut out = vec![0.0; self.n_cols];
        for (i, j, v) in self.triplets() {
            out[j] += v * y[i];
        }
        Ok(out)
    }

    /// First `(i, j)` with `M_ij != M_ji` bitwise, if any.
    pub fn first_asymmetry(&self) -> Option<(usize, usize)> {
        if !self.is_square() {
            return Some((0, 0));
        }
        self.triplets()
            .find(|&(i, j, v)| self.get(j, i).to_bits() != v.to_bits())
            .map(|(i, j, _)| (i, j))
    }

    pub fn is_symmetric(&self) -> bool {
        self.first_asymmetry().is_none()
    }

    /// `(M + Mᵀ) / 2`, which is bitwise symmetric.
    pub fn symmetrized(&self) -> Result<SparseMatrix> {
        dim_check(self.is_square(), || "symmetrizing a non-square matrix".into())?;
        let t = self.transpose();
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.triplets()
                .map(|(i, j, v)| (i, j, 0.5 * (v + t.get(i, j))))
                .chain(t.triplets().filter(|&(i, j, _)| self.get(i, j) == 0.0).map(|(i, j, v)| (i, j, 0.5 * v))),
        )
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖self − other‖_max`
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> Result<f64> {
        dim_check(self.n_rows == other.n_rows && self.n_cols == other.n_cols, || {
            format!(
                "comparing {}x{} with {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )
        })?;
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                let d = match (a.peek().copied(), b.peek().copied()) {
                    (None, None) => break,
                    (Some((_, va)), None) => {
                        a.next();
                        va
                    }
                    (None, Some((_, vb))) => {
                        b.next();
                        -vb
                    }
                    (Some((ja, va)), Some((jb, vb))) => {
                        if ja == jb {
                            a.next();
                            b.next();
                            va - vb
                        } else if ja < jb {
                            a.next();
                            va
                        } else {
                            b.next();
                            -vb
                        }
                    }
                };
                worst = worst.max(d.abs());
            }
        }
        Ok(worst)
    }
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseMatrix({}x{}, [", self.n_rows, self.n_cols)?;
        for (k, (i, j, v)) in self.triplets().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({i},{j})={v}")?;
        }
        write!(f, "])")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 0.0), (0, 1, 1.0), (0, 1, -1.0)])
            .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn rejects_out_of_range_and_non_finite() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn products_and_transpose() {
        let m = SparseMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 3.0, 4.0]]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]).unwrap(), vec![1.0, 5.0, 4.0]);
        assert_eq!(m.transpose().get(2, 1), 4.0);
        assert!(m.mul_vec(&[1.0]).is_err());
    }

    #[test]
    fn symmetrize_gives_exact_symmetry() {
        let m = SparseMatrix::from_rows(&[vec![1.0, 0.1], vec![0.3, 2.0]]).unwrap();
        assert!(!m.is_symmetric());
        let s = m.symmetrized().unwrap();
        assert!(s.is_symmetric());
        assert_eq!(s.get(0, 1), 0.5 * (0.1 + 0.3));
        let upper = SparseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(upper.symmetrized().unwrap().get(1, 0), 1.0);
    }

    #[test]
    fn max_abs_diff_merges_patterns() {
        let a = SparseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let b = SparseMatrix::from_rows(&[vec![0.0, -3.0], vec![0.0, 2.5]]).unwrap();
        assert_eq!(a.max_abs_diff(&b).unwrap(), 3.0);
        assert_eq!(a.max_abs_diff(&a).unwrap(), 0.0);
    }
}
