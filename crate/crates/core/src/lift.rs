//! Certification of lifting partitions, quotient construction and unlifting.

use serde::Serialize;

use crate::error::{dim_check, Error, Result};
use crate::qpcore::{
    average_over_partition, left_multiply_partition_matrix, right_multiply_partition_matrix, Partition,
    QpInstance, SparseMatrix,
};
use crate::refine::{refine_qp, RefineMode, RefinementResult};

/// Default certification tolerance.
pub const LIFT_TOL: f64 = 1e-8;

/// Max-norm deviations of the four lifting conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LiftResiduals {
    /// `‖X^P Q − Q X^P‖_max`
    pub q_commute: f64,
    /// `‖cᵀX^P − cᵀ‖_max`
    pub c_invariance: f64,
    /// `‖X^Q b − b‖_max`
    pub b_invariance: f64,
    /// `‖X^Q A − A X^P‖_max`
    pub a_coupling: f64,
}

impl LiftResiduals {
    pub fn max(&self) -> f64 {
        self.q_commute.max(self.c_invariance).max(self.b_invariance).max(self.a_coupling)
    }
}

/// A variable partition `P` with a constraint partition `Q`, checked against
/// the lifting conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftingPair {
    pub var_partition: Partition,
    pub con_partition: Partition,
    pub certified: bool,
    pub residuals: LiftResiduals,
}

fn vec_dev(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

pub fn certify(qp: &QpInstance, p: &Partition, q: &Partition, tol: f64) -> Result<LiftingPair> {
    dim_check(p.len() == qp.n(), || format!("variable partition of {} for {} variables", p.len(), qp.n()))?;
    dim_check(q.len() == qp.m(), || format!("constraint partition of {} for {} constraints", q.len(), qp.m()))?;
    let q_commute = left_multiply_partition_matrix(qp.q(), p)?.max_abs_diff(&right_multiply_partition_matrix(qp.q(), p)?)?;
    let c_invariance = vec_dev(&average_over_partition(qp.c(), p)?, qp.c());
    let b_invariance = vec_dev(&average_over_partition(qp.b(), q)?, qp.b());
    let a_coupling = left_multiply_partition_matrix(qp.a(), q)?.max_abs_diff(&right_multiply_partition_matrix(qp.a(), p)?)?;
    let residuals = LiftResiduals { q_commute, c_invariance, b_invariance, a_coupling };
    Ok(LiftingPair {
        var_partition: p.clone(),
        con_partition: q.clone(),
        certified: residuals.max() <= tol,
        residuals,
    })
}

/// The compressed QP together with the map back to ground variables.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientQp {
    pub qp: QpInstance,
    /// Ground variable index to lifted variable index.
    pub expansion: Vec<usize>,
    pub class_sizes: Vec<usize>,
    /// Ground row used for each lifted constraint.
    pub con_representatives: Vec<usize>,
}

impl QuotientQp {
    pub fn var_ratio(&self) -> f64 {
        ratio(self.qp.n(), self.expansion.len())
    }

    pub fn con_ratio(&self, ground_m: usize) -> f64 {
        ratio(self.qp.m(), ground_m)
    }
}

fn ratio(lifted: usize, ground: usize) -> f64 {
    if ground == 0 {
        1.0
    } else {
        lifted as f64 / ground as f64
    }
}

/// Substitutes `x = S y`, with `S` the class-indicator matrix of `P`:
/// `Q̂ = SᵀQS`, `ĉ = Sᵀc`, and one constraint per class of `Q`, taken from
/// that class's smallest row with columns summed per variable class.
pub fn build_quotient(qp: &QpInstance, pair: &LiftingPair) -> Result<QuotientQp> {
    if !pair.certified {
        return Err(Error::Uncertified);
    }
    let p = &pair.var_partition;
    let cp = &pair.con_partition;
    dim_check(p.len() == qp.n() && cp.len() == qp.m(), || "lifting pair does not match the QP".into())?;
    let np = p.num_classes();

    let qhat = SparseMatrix::from_triplets(np, np, qp.q().triplets().map(|(i, j, v)| (p.class_of(i), p.class_of(j), v)))?
        .symmetrized()?;
    let mut chat = vec![0.0; np];
    for (i, &v) in qp.c().iter().enumerate() {
        chat[p.class_of(i)] += v;
    }
    let reps: Vec<usize> = (0..cp.num_classes()).map(|l| cp.representative(l)).collect();
    let ahat = SparseMatrix::from_triplets(
        reps.len(),
        np,
        reps.iter()
            .enumerate()
            .flat_map(|(l, &row)| qp.a().row(row).map(move |(j, v)| (l, p.class_of(j), v))),
    )?;
    let bhat: Vec<f64> = reps.iter().map(|&r| qp.b()[r]).collect();

    let var_names = qp
        .variable_names()
        .map(|names| (0..np).map(|k| names[p.representative(k)].clone()).collect());
    let con_names = qp
        .constraint_names()
        .map(|names| reps.iter().map(|&r| names[r].clone()).collect());
    let lifted = QpInstance::new(qhat, chat, ahat, bhat)?.with_names(var_names, con_names)?;
    Ok(QuotientQp {
        qp: lifted,
        expansion: p.labels().to_vec(),
        class_sizes: p.class_sizes(),
        con_representatives: reps,
    })
}

/// Assigns each ground variable the value of its class.
pub fn unlift(y: &[f64], quotient: &QuotientQp) -> Result<Vec<f64>> {
    dim_check(y.len() == quotient.class_sizes.len(), || {
        format!("lifted vector of length {} for {} classes", y.len(), quotient.class_sizes.len())
    })?;
    Ok(quotient.expansion.iter().map(|&k| y[k]).collect())
}

/// Class values of a ground vector (mean per class; exact when `x` respects
/// the partition).
pub fn restrict(x: &[f64], quotient: &QuotientQp) -> Result<Vec<f64>> {
    dim_check(x.len() == quotient.expansion.len(), || {
        format!("ground vector of length {} for {} variables", x.len(), quotient.expansion.len())
    })?;
    let mut y = vec![0.0; quotient.class_sizes.len()];
    for (i, &k) in quotient.expansion.iter().enumerate() {
        y[k] += x[i];
    }
    for (v, &s) in y.iter_mut().zip(&quotient.class_sizes) {
        *v /= s as f64;
    }
    Ok(y)
}

/// Outcome of averaging a feasible point over the variable partition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragingReport {
    pub averaged: Vec<f64>,
    pub objective_before: f64,
    pub objective_after: f64,
    /// `max(A x′ − b)`, at most 0 when feasible.
    pub violation_after: f64,
    pub feasible_after: bool,
    pub objective_not_increased: bool,
}

impl AveragingReport {
    pub fn holds(&self) -> bool {
        self.feasible_after && self.objective_not_increased
    }
}

/// Averages a feasible `x` over `P` and reports whether `x′ = X^P x` is still
/// feasible with `J(x′) ≤ J(x)` (both within `tol`).
pub fn averaging_certificate(qp: &QpInstance, pair: &LiftingPair, x: &[f64], tol: f64) -> Result<AveragingReport> {
    dim_check(x.len() == qp.n(), || format!("point of length {} for {} variables", x.len(), qp.n()))?;
    let violation = qp.max_violation(x)?;
    if violation > tol {
        return Err(Error::Infeasible { violation });
    }
    let averaged = average_over_partition(x, &pair.var_partition)?;
    let objective_before = qp.objective(x)?;
    let objective_after = qp.objective(&averaged)?;
    let violation_after = qp.max_violation(&averaged)?;
    Ok(AveragingReport {
        averaged,
        objective_before,
        objective_after,
        violation_after,
        feasible_after: violation_after <= tol,
        objective_not_increased: objective_after <= objective_before + tol,
    })
}

/// Output of the refine → certify → quotient pipeline.
#[derive(Clone, Debug)]
pub struct Lifted {
    pub refinement: RefinementResult,
    pub pair: LiftingPair,
    pub quotient: QuotientQp,
}

/// Refines `qp`, certifies the result and builds its quotient.
pub fn lift(qp: &QpInstance, mode: RefineMode, color_tol: f64, lift_tol: f64) -> Result<Lifted> {
    let refinement = refine_qp(qp, mode, color_tol);
    let pair = certify(qp, &refinement.var_partition, &refinement.con_partition, lift_tol)?;
    let quotient = build_quotient(qp, &pair)?;
    Ok(Lifted { refinement, pair, quotient })
}
