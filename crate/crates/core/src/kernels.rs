//! Gram and kernel matrices of a data set and the transfer of counting
//! partitions from `Q = BBᵀ` to kernel matrices.
//!
//! Any kernel of the form `K_ij = f(Q_ii, Q_jj, Q_ij)` keeps every counting
//! partition of `Q`: equal `Q` entries between the same pair of classes map to
//! equal `K` entries. Both kernels here have that form, since
//! `‖x_i − x_j‖² = Q_ii + Q_jj − 2Q_ij`. Sum-based equitable partitions do
//! not transfer in general.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{dim_check, Error, Result};
use crate::qpcore::{Partition, SparseMatrix};
use crate::refine::is_counting;

/// Largest number of data points accepted.
pub const KERNEL_LIMIT: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `(⟨x, y⟩ + 1)^g`
    Poly { degree: u32 },
    /// `exp(−2γ²‖x − y‖²)`
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Poly { degree: 0 } => Err(Error::Invalid("polynomial degree must be ≥ 1".into())),
            KernelSpec::Rbf { gamma } if gamma == 0.0 || !gamma.is_finite() => {
                Err(Error::Invalid("rbf gamma must be a nonzero real".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Poly { degree } => (dot(x, y) + 1.0).powi(degree as i32),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-2.0 * gamma * gamma * d2).exp()
            }
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn check_data(data: &DMatrix<f64>) -> Result<()> {
    if data.nrows() > KERNEL_LIMIT {
        return Err(Error::TooLarge { n: data.nrows(), limit: KERNEL_LIMIT });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("data contains non-finite values".into()));
    }
    Ok(())
}

fn rows(data: &DMatrix<f64>) -> Vec<Vec<f64>> {
    data.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `Q_ij = ⟨x_i, x_j⟩` over the rows of `data`.
pub fn gram_matrix(data: &DMatrix<f64>) -> Result<SparseMatrix> {
    check_data(data)?;
    let r = rows(data);
    let n = r.len();
    SparseMatrix::from_triplets(n, n, (0..n).flat_map(|i| {
        let r = &r;
        (0..n).map(move |j| (i, j, dot(&r[i], &r[j])))
    }))
}

pub fn kernel_matrix(data: &DMatrix<f64>, spec: &KernelSpec) -> Result<SparseMatrix> {
    spec.validate()?;
    check_data(data)?;
    let r = rows(data);
    let n = r.len();
    SparseMatrix::from_triplets(n, n, (0..n).flat_map(|i| {
        let r = &r;
        (0..n).map(move |j| (i, j, spec.eval(&r[i], &r[j])))
    }))
}

/// `K_ij = f(Q_ii, Q_jj, Q_ij)` for an arbitrary `f`.
pub fn kernel_from_gram<F>(q: &SparseMatrix, f: F) -> Result<SparseMatrix>
where
    F: Fn(f64, f64, f64) -> f64,
{
    dim_check(q.is_square(), || "kernel from a non-square gram matrix".into())?;
    let n = q.n_rows();
    let diag: Vec<f64> = (0..n).map(|i| q.get(i, i)).collect();
    let (diag, f) = (&diag, &f);
    SparseMatrix::from_triplets(n, n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j, f(diag[i], diag[j], q.get(i, j))))))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferReport {
    pub q_counting: bool,
    pub k_counting: bool,
}

impl TransferReport {
    /// `q_counting ⇒ k_counting`
    pub fn holds(&self) -> bool {
        !self.q_counting || self.k_counting
    }
}

pub fn check_counting_transfer(data: &DMatrix<f64>, spec: &KernelSpec, p: &Partition, tol: f64) -> Result<TransferReport> {
    dim_check(p.len() == data.nrows(), || format!("partition of {} for {} points", p.len(), data.nrows()))?;
    let q = gram_matrix(data)?;
    let k = kernel_matrix(data, spec)?;
    Ok(TransferReport {
        q_counting: is_counting(&q, p, tol)?,
        k_counting: is_counting(&k, p, tol)?,
    })
}
