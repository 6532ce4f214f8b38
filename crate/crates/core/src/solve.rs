//! Convex QP solver based on operator splitting (ADMM).
//!
//! Problems are handled in the form `min ½xᵀPx + qᵀx  s.t.  Ax = z, z ≤ b`
//! with `P = 2Q`, so reported objectives equal `xᵀQx + cᵀx`. Each iteration
//! solves the reduced KKT system `(P + σI + ρAᵀA) x = …` with a dense
//! Cholesky factor that is refreshed whenever `ρ` is adapted. Once the
//! residuals are small, the active set is guessed from the iterates and an
//! equality-constrained KKT solve ("polishing") recovers a high-accuracy
//! solution.
//!
//! Equality constraints have no separate type; encode `aᵀx = β` as the pair
//! `aᵀx ≤ β`, `−aᵀx ≤ −β`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::qpcore::{dot, QpInstance, SparseMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Initial penalty.
    pub rho: f64,
    pub adaptive_rho: bool,
    /// Iterations between penalty updates.
    pub adapt_interval: usize,
    /// Penalty is refreshed when the residual balance is off by this factor.
    pub adapt_ratio: f64,
    pub sigma: f64,
    /// Over-relaxation, in `(0, 2)`.
    pub alpha: f64,
    pub polish: bool,
    pub eps_infeasible: f64,
    /// Record best feasible objective at every penalty check.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 20_000,
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            rho: 1.0,
            adaptive_rho: true,
            adapt_interval: 25,
            adapt_ratio: 10.0,
            sigma: 1e-6,
            alpha: 1.6,
            polish: true,
            eps_infeasible: 1e-6,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0 && self.eps_infeasible > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.rho > 0.0 && self.sigma > 0.0) {
            return Err("rho and sigma must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err("alpha must lie in (0, 2)".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIters,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Multipliers of `Ax ≤ b` (nonnegative at optimality).
    pub duals: Vec<f64>,
    /// `xᵀQx + cᵀx`
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iters: usize,
    pub polished: bool,
    pub rho: f64,
    /// Best objective among primal-feasible iterates, if any was seen.
    pub best_feasible_objective: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Problem<'a> {
    qp: &'a QpInstance,
    at: SparseMatrix,
    /// `AᵀA`, dense.
    ata: DMatrix<f64>,
    p_dense: DMatrix<f64>,
}

impl<'a> Problem<'a> {
    fn new(qp: &'a QpInstance) -> Self {
        let n = qp.n();
        let mut ata = DMatrix::zeros(n, n);
        for l in 0..qp.m() {
            let row: Vec<(usize, f64)> = qp.a().row(l).collect();
            for &(i, vi) in &row {
                for &(j, vj) in &row {
                    ata[(i, j)] += vi * vj;
                }
            }
        }
        Problem {
            qp,
            at: qp.a().transpose(),
            ata,
            p_dense: qp.q().to_dense() * 2.0,
        }
    }

    fn px(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.qp.q().mul_vec(x).expect("dimension checked");
        v.iter_mut().for_each(|e| *e *= 2.0);
        v
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        self.qp.a().mul_vec(x).expect("dimension checked")
    }

    fn aty(&self, y: &[f64]) -> Vec<f64> {
        self.at.mul_vec(y).expect("dimension checked")
    }

    fn factor(&self, rho: f64, sigma: f64) -> Cholesky<f64, Dyn> {
        let n = self.qp.n();
        let k = &self.p_dense + &self.ata * rho + DMatrix::identity(n, n) * sigma;
        Cholesky::new(k).expect("P + σI + ρAᵀA is positive definite")
    }

    /// `(‖Ax − z‖∞, ‖Px + q + Aᵀy‖∞, eps_prim, eps_dual)`
    fn residuals(&self, x: &[f64], z: &[f64], y: &[f64], cfg: &SolverConfig) -> (f64, f64, f64, f64) {
        let ax = self.ax(x);
        let px = self.px(x);
        let aty = self.aty(y);
        let rp = ax.iter().zip(z).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let rd = (0..x.len()).fold(0.0f64, |m, i| m.max((px[i] + self.qp.c()[i] + aty[i]).abs()));
        let ep = cfg.eps_abs + cfg.eps_rel * norm_inf(&ax).max(norm_inf(z));
        let ed = cfg.eps_abs + cfg.eps_rel * norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(self.qp.c()));
        (rp, rd, ep, ed)
    }

    /// Primal infeasibility certificate from a dual step `dy`.
    fn primal_infeasible(&self, dy: &[f64], eps: f64) -> bool {
        let dy: Vec<f64> = dy.iter().map(|v| v.max(0.0)).collect();
        let norm = norm_inf(&dy);
        if norm < 1e-30 {
            return false;
        }
        norm_inf(&self.aty(&dy)) <= eps * norm && dot(self.qp.b(), &dy) < -eps * norm
    }

    /// Unboundedness certificate from a primal step `dx`.
    fn dual_infeasible(&self, dx: &[f64], eps: f64) -> bool {
        let norm = norm_inf(dx);
        if norm < 1e-30 {
            return false;
        }
        norm_inf(&self.px(dx)) <= eps * norm
            && dot(self.qp.c(), dx) < -eps * norm
            && self.ax(dx).iter().all(|&v| v <= eps * norm)
    }

    /// Solves the equality-constrained QP on the guessed active set.
    fn polish(&self, active: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.qp.n();
        let na = active.len();
        let delta = 1e-9;
        let mut kkt = DMatrix::zeros(n + na, n + na);
        kkt.view_mut((0, 0), (n, n)).copy_from(&self.p_dense);
        for (r, &l) in active.iter().enumerate() {
            for (j, v) in self.qp.a().row(l) {
                kkt[(n + r, j)] = v;
                kkt[(j, n + r)] = v;
            }
        }
        let mut reg = kkt.clone();
        for i in 0..n {
            reg[(i, i)] += delta;
        }
        for r in 0..na {
            reg[(n + r, n + r)] -= delta;
        }
        let lu = reg.lu();
        let mut rhs = DVector::zeros(n + na);
        for i in 0..n {
            rhs[i] = -self.qp.c()[i];
        }
        for (r, &l) in active.iter().enumerate() {
            rhs[n + r] = self.qp.b()[l];
        }
        let mut sol = lu.solve(&rhs)?;
        for _ in 0..10 {
            let res = &rhs - &kkt * &sol;
            if res.amax() <= 1e-14 * (1.0 + rhs.amax()) {
                break;
            }
            sol += lu.solve(&res)?;
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let x = sol.rows(0, n).iter().copied().collect();
        let mut y = vec![0.0; self.qp.m()];
        for (r, &l) in active.iter().enumerate() {
            y[l] = sol[n + r];
        }
        Some((x, y))
    }
}

/// Solves `min xᵀQx + cᵀx  s.t.  Ax ≤ b`. `Q` is trusted to be PSD.
pub fn solve(qp: &QpInstance, cfg: &SolverConfig) -> crate::Result<SolveReport> {
    cfg.validate().map_err(|msg| crate::Error::Invalid(format!("solver configuration: {msg}")))?;
    let n = qp.n();
    let m = qp.m();
    let prob = Problem::new(qp);
    let b = qp.b();
    let mut rho = cfg.rho;
    let mut chol = prob.factor(rho, cfg.sigma);

    let mut x = vec![0.0; n];
    let mut z = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut best_feasible: Option<f64> = None;
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64, f64)> = None;
    let mut last_active: Option<Vec<usize>> = None;
    let feas_tol = cfg.eps_abs * (1.0 + norm_inf(b));

    let finish = |status, x: Vec<f64>, y: Vec<f64>, rp, rd, iters, polished, rho, best_feasible, history| {
        let objective = qp.objective(&x).expect("dimension checked");
        SolveReport {
            status,
            x,
            duals: y,
            objective,
            primal_residual: rp,
            dual_residual: rd,
            iters,
            polished,
            rho,
            best_feasible_objective: best_feasible,
            history,
        }
    };

    for k in 1..=cfg.max_iters {
        let atv: Vec<f64> = prob.aty(&z.iter().zip(&y).map(|(zi, yi)| rho * zi - yi).collect::<Vec<_>>());
        let rhs = DVector::from_iterator(n, (0..n).map(|i| cfg.sigma * x[i] - qp.c()[i] + atv[i]));
        let xt: Vec<f64> = chol.solve(&rhs).iter().copied().collect();
        let zt = prob.ax(&xt);
        let x_new: Vec<f64> = (0..n).map(|i| cfg.alpha * xt[i] + (1.0 - cfg.alpha) * x[i]).collect();
        let z_relax: Vec<f64> = (0..m).map(|l| cfg.alpha * zt[l] + (1.0 - cfg.alpha) * z[l]).collect();
        let z_new: Vec<f64> = (0..m).map(|l| (z_relax[l] + y[l] / rho).min(b[l])).collect();
        let y_new: Vec<f64> = (0..m).map(|l| y[l] + rho * (z_relax[l] - z_new[l])).collect();
        let dx: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let dy: Vec<f64> = (0..m).map(|l| y_new[l] - y[l]).collect();
        x = x_new;
        z = z_new;
        y = y_new;

        let (rp, rd, ep, ed) = prob.residuals(&x, &z, &y, cfg);
        let violation = qp.max_violation(&x).expect("dimension checked");
        if violation <= feas_tol {
            let j = qp.objective(&x).expect("dimension checked");
            best_feasible = Some(best_feasible.map_or(j, |bj: f64| bj.min(j)));
        }
        let score = (rp / ep).max(rd / ed);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, x.clone(), y.clone(), rp, rd));
        }

        let converged = rp <= ep && rd <= ed;
        // polishing is cheap at these sizes, so any new active-set guess is tried
        if cfg.polish && (converged || k % cfg.adapt_interval == 0) {
            let active: Vec<usize> = (0..m).filter(|&l| b[l] - z[l] < y[l]).collect();
            if last_active.as_ref() != Some(&active) {
                if let Some((px, py)) = prob.polish(&active) {
                    let pz: Vec<f64> = prob.ax(&px).iter().zip(b).map(|(a, &bl)| a.min(bl)).collect();
                    let (prp, prd, pep, ped) = prob.residuals(&px, &pz, &py, cfg);
                    let pviol = qp.max_violation(&px).expect("dimension checked");
                    let duals_ok = py.iter().all(|&v| v >= -ped);
                    if prp <= pep && prd <= ped && pviol <= feas_tol && duals_ok {
                        let py: Vec<f64> = py.into_iter().map(|v| v.max(0.0)).collect();
                        let j = qp.objective(&px).expect("dimension checked");
                        best_feasible = Some(best_feasible.map_or(j, |bj: f64| bj.min(j)));
                        if cfg.record_history {
                            history.push(best_feasible.unwrap());
                        }
                        return Ok(finish(SolveStatus::Optimal, px, py, prp, prd, k, true, rho, best_feasible, history));
                    }
                }
                last_active = Some(active);
            }
        }
        if converged {
            return Ok(finish(SolveStatus::Optimal, x, y, rp, rd, k, false, rho, best_feasible, history));
        }

        if prob.primal_infeasible(&dy, cfg.eps_infeasible) {
            return Ok(finish(SolveStatus::PrimalInfeasible, x, dy, rp, rd, k, false, rho, best_feasible, history));
        }
        if prob.dual_infeasible(&dx, cfg.eps_infeasible) {
            return Ok(finish(SolveStatus::DualInfeasible, dx, y, rp, rd, k, false, rho, best_feasible, history));
        }

        if k % cfg.adapt_interval == 0 {
            if cfg.record_history {
                if let Some(bf) = best_feasible {
                    history.push(bf);
                }
            }
            if cfg.adaptive_rho && m > 0 {
                let ax = prob.ax(&x);
                let px = prob.px(&x);
                let aty = prob.aty(&y);
                let pn = rp / norm_inf(&ax).max(norm_inf(&z)).max(1e-30);
                let dn = rd / norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(qp.c())).max(1e-30);
                let new_rho = (rho * (pn / dn.max(1e-30)).sqrt()).clamp(1e-6, 1e6);
                if new_rho > rho * cfg.adapt_ratio || new_rho < rho / cfg.adapt_ratio {
                    rho = new_rho;
                    chol = prob.factor(rho, cfg.sigma);
                }
            }
        }
    }

    let (_, bx, by, rp, rd) = best.unwrap_or((0.0, x, y, f64::INFINITY, f64::INFINITY));
    Ok(finish(SolveStatus::MaxIters, bx, by, rp, rd, cfg.max_iters, false, rho, best_feasible, history))
}

/// KKT residuals of a primal-dual pair for `min xᵀQx + cᵀx  s.t.  Ax ≤ b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KktResiduals {
    /// `max(Ax − b)⁺`
    pub primal: f64,
    /// `max(−λ)⁺`
    pub dual_sign: f64,
    /// `max |λ_l (Ax − b)_l|`
    pub complementarity: f64,
    /// `‖2Qx + c + Aᵀλ‖∞`
    pub stationarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual_sign).max(self.complementarity).max(self.stationarity)
    }
}

pub fn kkt_residuals(qp: &QpInstance, x: &[f64], duals: &[f64]) -> crate::Result<KktResiduals> {
    crate::error::dim_check(x.len() == qp.n() && duals.len() == qp.m(), || {
        format!("kkt check with x of {} and duals of {}", x.len(), duals.len())
    })?;
    let ax = qp.a().mul_vec(x)?;
    let slack: Vec<f64> = ax.iter().zip(qp.b()).map(|(a, b)| a - b).collect();
    let qx = qp.q().mul_vec(x)?;
    let atl = qp.a().tr_mul_vec(duals)?;
    Ok(KktResiduals {
        primal: slack.iter().fold(0.0f64, |m, &s| m.max(s)),
        dual_sign: duals.iter().fold(0.0f64, |m, &l| m.max(-l)),
        complementarity: slack.iter().zip(duals).fold(0.0f64, |m, (s, l)| m.max((s * l).abs())),
        stationarity: (0..qp.n()).fold(0.0f64, |m, i| m.max((2.0 * qx[i] + qp.c()[i] + atl[i]).abs())),
    })
}

/// True iff every KKT residual is at most `tol`. Mismatched dimensions fail.
pub fn kkt_check(qp: &QpInstance, x: &[f64], duals: &[f64], tol: f64) -> bool {
    kkt_residuals(qp, x, duals).is_ok_and(|r| r.max() <= tol)
}
