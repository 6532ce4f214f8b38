//! Gram factors `Q = BBᵀ` and the correspondence between partition matrices
//! commuting with `Q` and symmetric transformations `R` with `XB = BR`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{dim_check, Error, Result};
use crate::qpcore::{Partition, PartitionMatrixView, SparseMatrix, PSD_CHECK_LIMIT, PSD_TOL};

/// Default residual bound for `‖BBᵀ − Q‖_max`, relative to `max(1, ‖Q‖_max)`.
pub const FACTOR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GramFactor {
    /// `n × k`, full column rank.
    pub b: DMatrix<f64>,
    pub rank_tol: f64,
    /// `‖BBᵀ − Q‖_max`
    pub reconstruction_error: f64,
}

impl GramFactor {
    pub fn rank(&self) -> usize {
        self.b.ncols()
    }
}

/// Eigendecomposition-based factor `B = U₊ Λ₊^{1/2}` keeping eigenvalues above
/// `rank_tol`; `None` uses `n · ε · λ_max`.
pub fn gram_factor(q: &SparseMatrix, rank_tol: Option<f64>) -> Result<GramFactor> {
    dim_check(q.is_square(), || format!("gram factor of {}x{} matrix", q.n_rows(), q.n_cols()))?;
    let n = q.n_rows();
    if n > PSD_CHECK_LIMIT {
        return Err(Error::TooLarge { n, limit: PSD_CHECK_LIMIT });
    }
    let dense = q.to_dense();
    let eig = SymmetricEigen::new((&dense + dense.transpose()) * 0.5);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if n > 0 && lmin < -PSD_TOL * lmax.max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: lmin });
    }
    let tol = rank_tol.unwrap_or(n as f64 * f64::EPSILON * lmax);
    let mut keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > tol).collect();
    // largest eigenvalue first
    keep.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut b = DMatrix::zeros(n, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        b.set_column(col, &(eig.eigenvectors.column(i) * s));
    }
    let reconstruction_error = (&b * b.transpose() - &dense).amax();
    Ok(GramFactor { b, rank_tol: tol, reconstruction_error })
}

/// `X^P B`, averaging the rows of `B` within classes.
pub fn average_rows(b: &DMatrix<f64>, p: &Partition) -> Result<DMatrix<f64>> {
    dim_check(b.nrows() == p.len(), || format!("partition of {} for {} rows", p.len(), b.nrows()))?;
    let mut out = DMatrix::zeros(b.nrows(), b.ncols());
    for class in p.classes() {
        let mut mean = b.row(class[0]).clone_owned();
        for &i in &class[1..] {
            mean += b.row(i);
        }
        mean /= class.len() as f64;
        for &i in class {
            out.set_row(i, &mean);
        }
    }
    Ok(out)
}

/// `R = Bᵀ X B (BᵀB)⁻¹`
pub fn compute_r(b: &GramFactor, p: &Partition) -> Result<DMatrix<f64>> {
    compute_r_dense(&b.b, p)
}

pub fn compute_r_dense(b: &DMatrix<f64>, p: &Partition) -> Result<DMatrix<f64>> {
    let gram = b.transpose() * b;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("BᵀB is singular; B lacks full column rank".into()))?;
    let w = b.transpose() * average_rows(b, p)?;
    // R (BᵀB) = W and BᵀB is symmetric, so Rᵀ = (BᵀB)⁻¹ Wᵀ
    Ok(chol.solve(&w.transpose()).transpose())
}

/// Both directions of the `XQ = QX ⇔ ∃ R = Rᵀ : XB = BR` correspondence,
/// evaluated with `R` from [`compute_r`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BcharReport {
    pub commutes: bool,
    pub r_symmetric: bool,
    pub xb_equals_br: bool,
    /// `‖X^P Q − Q X^P‖_max`
    pub commutator: f64,
    /// `‖R − Rᵀ‖_max`
    pub r_asymmetry: f64,
    /// `‖XB − BR‖_max`
    pub xb_br_residual: f64,
    pub rank: usize,
}

impl BcharReport {
    /// The biconditional: the two sides agree.
    pub fn consistent(&self) -> bool {
        self.commutes == (self.r_symmetric && self.xb_equals_br)
    }
}

pub fn verify_bchar(q: &SparseMatrix, b: &GramFactor, p: &Partition, tol: f64) -> Result<BcharReport> {
    dim_check(q.n_rows() == b.b.nrows() && p.len() == q.n_rows(), || {
        format!("q is {}x{}, factor has {} rows, partition has {}", q.n_rows(), q.n_cols(), b.b.nrows(), p.len())
    })?;
    let commutator = PartitionMatrixView::new(p.clone()).commutator_max(q)?;
    let r = compute_r(b, p)?;
    let r_asymmetry = (&r - r.transpose()).amax();
    let xb_br_residual = (average_rows(&b.b, p)? - &b.b * &r).amax();
    Ok(BcharReport {
        commutes: commutator <= tol,
        r_symmetric: r_asymmetry <= tol,
        xb_equals_br: xb_br_residual <= tol,
        commutator,
        r_asymmetry,
        xb_br_residual,
        rank: b.rank(),
    })
}
