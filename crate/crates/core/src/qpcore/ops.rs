//! Partition-matrix algebra.
//!
//! `X^P` has entries `1/|class(i)|` where `i` and `j` share a class and 0
//! elsewhere. It is dense of rank `p`, so it is never formed; every product
//! below is computed from class sums in `O(nnz)`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{dim_check, Error, Result};
use crate::qpcore::{Partition, SparseMatrix};

/// Tolerance on the smallest eigenvalue when checking PSD-ness.
pub const PSD_TOL: f64 = 1e-8;
/// Largest dimension for which the dense eigenvalue check runs.
pub const PSD_CHECK_LIMIT: usize = 2000;

/// `X^P x`: replaces every entry by the mean over its class.
pub fn average_over_partition(x: &[f64], p: &Partition) -> Result<Vec<f64>> {
    dim_check(x.len() == p.len(), || {
        format!("vector of length {} averaged over partition of {}", x.len(), p.len())
    })?;
    let means: Vec<f64> = p
        .classes()
        .iter()
        .map(|c| c.iter().map(|&i| x[i]).sum::<f64>() / c.len() as f64)
        .collect();
    Ok((0..x.len()).map(|i| means[p.class_of(i)]).collect())
}

/// `X^P M`: row `i` becomes the mean of the rows in `class(i)`.
pub fn left_multiply_partition_matrix(m: &SparseMatrix, p: &Partition) -> Result<SparseMatrix> {
    dim_check(p.len() == m.n_rows(), || {
        format!("partition of {} applied to {} rows", p.len(), m.n_rows())
    })?;
    let mut acc = vec![0.0; m.n_cols()];
    let mut touched = Vec::new();
    let mut triplets = Vec::new();
    for class in p.classes() {
        let size = class.len() as f64;
        for &i in class {
            for (j, v) in m.row(i) {
                if acc[j] == 0.0 {
                    touched.push(j);
                }
                acc[j] += v;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for &i in class {
            triplets.extend(touched.iter().map(|&j| (i, j, acc[j] / size)));
        }
        for &j in &touched {
            acc[j] = 0.0;
        }
        touched.clear();
    }
    SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), triplets)
}

/// `M X^P`: entry `(i, j)` becomes the mean of row `i` over `class(j)`.
pub fn right_multiply_partition_matrix(m: &SparseMatrix, p: &Partition) -> Result<SparseMatrix> {
    dim_check(p.len() == m.n_cols(), || {
        format!("partition of {} applied to {} columns", p.len(), m.n_cols())
    })?;
    let mut sums = vec![0.0; p.num_classes()];
    let mut touched = Vec::new();
    let mut triplets = Vec::new();
    for i in 0..m.n_rows() {
        for (j, v) in m.row(i) {
            let c = p.class_of(j);
            if sums[c] == 0.0 {
                touched.push(c);
            }
            sums[c] += v;
        }
        touched.sort_unstable();
        touched.dedup();
        for &c in &touched {
            let mean = sums[c] / p.class_size(c) as f64;
            triplets.extend(p.members(c).iter().map(|&j| (i, j, mean)));
            sums[c] = 0.0;
        }
        touched.clear();
    }
    SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), triplets)
}

/// True iff the smallest eigenvalue of `(Q + Qᵀ)/2` is at least `-tol`.
///
/// Returns [`Error::Unchecked`] above [`PSD_CHECK_LIMIT`].
pub fn check_psd(q: &SparseMatrix, tol: f64) -> Result<bool> {
    dim_check(q.is_square(), || format!("psd check on {}x{} matrix", q.n_rows(), q.n_cols()))?;
    let n = q.n_rows();
    if n > PSD_CHECK_LIMIT {
        return Err(Error::Unchecked { size: n, limit: PSD_CHECK_LIMIT });
    }
    Ok(min_eigenvalue(q) >= -tol)
}

pub(crate) fn min_eigenvalue(q: &SparseMatrix) -> f64 {
    if q.n_rows() == 0 {
        return 0.0;
    }
    let d = q.to_dense();
    let sym: DMatrix<f64> = (&d + d.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Lightweight handle for `X^P`, backed only by its partition.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionMatrixView {
    partition: Partition,
}

impl PartitionMatrixView {
    pub fn new(partition: Partition) -> Self {
        PartitionMatrixView { partition }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        average_over_partition(x, &self.partition)
    }

    pub fn left_mul(&self, m: &SparseMatrix) -> Result<SparseMatrix> {
        left_multiply_partition_matrix(m, &self.partition)
    }

    pub fn right_mul(&self, m: &SparseMatrix) -> Result<SparseMatrix> {
        right_multiply_partition_matrix(m, &self.partition)
    }

    /// `‖X^P M − M X^P‖_max` for square `M`.
    pub fn commutator_max(&self, m: &SparseMatrix) -> Result<f64> {
        self.left_mul(m)?.max_abs_diff(&self.right_mul(m)?)
    }

    /// Dense copy, for diagnostics on small instances.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.partition.len();
        DMatrix::from_fn(n, n, |i, j| {
            let c = self.partition.class_of(i);
            if c == self.partition.class_of(j) {
                1.0 / self.partition.class_size(c) as f64
            } else {
                0.0
            }
        })
    }
}
