use crate::error::{dim_check, Error, Result};
use crate::qpcore::ops::check_psd;
use crate::qpcore::SparseMatrix;

/// A convex QP `min xᵀQx + cᵀx  s.t.  Ax ≤ b`.
///
/// The objective carries no `½` factor. `Q` must be exactly symmetric; PSD-ness
/// is only checked on demand via [`QpInstance::check_psd`].
#[derive(Clone, Debug, PartialEq)]
pub struct QpInstance {
    q: SparseMatrix,
    c: Vec<f64>,
    a: SparseMatrix,
    b: Vec<f64>,
    variable_names: Option<Vec<String>>,
    constraint_names: Option<Vec<String>>,
}

impl QpInstance {
    pub fn new(q: SparseMatrix, c: Vec<f64>, a: SparseMatrix, b: Vec<f64>) -> Result<Self> {
        let n = c.len();
        let m = b.len();
        dim_check(q.n_rows() == n && q.n_cols() == n, || {
            format!("q is {}x{} but c has length {n}", q.n_rows(), q.n_cols())
        })?;
        dim_check(a.n_rows() == m && a.n_cols() == n, || {
            format!("a is {}x{} but expected {m}x{n}", a.n_rows(), a.n_cols())
        })?;
        if let Some((row, col)) = q.first_asymmetry() {
            return Err(Error::NotSymmetric { row, col });
        }
        if let Some(k) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("c[{k}] is not finite")));
        }
        if let Some(k) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("b[{k}] is not finite")));
        }
        Ok(QpInstance {
            q,
            c,
            a,
            b,
            variable_names: None,
            constraint_names: None,
        })
    }

    /// Unconstrained QP (`m = 0`).
    pub fn unconstrained(q: SparseMatrix, c: Vec<f64>) -> Result<Self> {
        let n = c.len();
        Self::new(q, c, SparseMatrix::zeros(0, n), Vec::new())
    }

    pub fn with_names(mut self, vars: Option<Vec<String>>, cons: Option<Vec<String>>) -> Result<Self> {
        if let Some(v) = &vars {
            dim_check(v.len() == self.n(), || format!("{} variable names for {} variables", v.len(), self.n()))?;
        }
        if let Some(v) = &cons {
            dim_check(v.len() == self.m(), || format!("{} constraint names for {} constraints", v.len(), self.m()))?;
        }
        self.variable_names = vars;
        self.constraint_names = cons;
        Ok(self)
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Number of constraints.
    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn q(&self) -> &SparseMatrix {
        &self.q
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn variable_names(&self) -> Option<&[String]> {
        self.variable_names.as_deref()
    }

    pub fn constraint_names(&self) -> Option<&[String]> {
        self.constraint_names.as_deref()
    }

    /// `J(x) = xᵀQx + cᵀx`
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let qx = self.q.mul_vec(x)?;
        Ok(dot(x, &qx) + dot(&self.c, x))
    }

    /// Largest positive entry of `Ax − b` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        let ax = self.a.mul_vec(x)?;
        Ok(ax.iter().zip(&self.b).fold(0.0f64, |m, (l, r)| m.max(l - r)))
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.max_violation(x)? <= tol)
    }

    pub fn check_psd(&self, tol: f64) -> Result<bool> {
        check_psd(&self.q, tol)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
