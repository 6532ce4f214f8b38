//! The built-in ADMM solver on a small QP with a known optimum, followed by
//! an independent KKT check of the returned primal/dual pair.

use liftqp::solve::{kkt_residuals, solve, SolverConfig};
use liftqp::{QpInstance, SparseMatrix};

fn main() -> liftqp::Result<()> {
    // min x1² + x2² - 2x1 - 2x2  s.t.  x1 + x2 ≤ 1   (optimum (1/2, 1/2))
    let qp = QpInstance::new(
        SparseMatrix::identity(2),
        vec![-2.0, -2.0],
        SparseMatrix::from_rows(&[vec![1.0, 1.0]])?,
        vec![1.0],
    )?;
    let report = solve(&qp, &SolverConfig::default())?;
    println!("status {:?} after {} iterations (polished: {})", report.status, report.iters, report.polished);
    println!("x = {:?}", report.x);
    println!("duals = {:?}", report.duals);
    println!("objective = {}", report.objective);

    let kkt = kkt_residuals(&qp, &report.x, &report.duals)?;
    println!("{kkt:#?}");
    Ok(())
}
