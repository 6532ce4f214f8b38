//! The four-variable running example: refine, certify, solve the quotient
//! and lift the solution back.

use liftqp::lift::{build_quotient, certify, unlift, LIFT_TOL};
use liftqp::qpcore::running_example;
use liftqp::refine::{refine_qp, RefineMode, COLOR_TOL};
use liftqp::solve::{solve, SolverConfig};

fn main() -> liftqp::Result<()> {
    let qp = running_example();
    let r = refine_qp(&qp, RefineMode::Sum, COLOR_TOL);
    println!("variable classes:   {:?}", r.var_partition.classes());
    println!("constraint classes: {:?}", r.con_partition.classes());

    let pair = certify(&qp, &r.var_partition, &r.con_partition, LIFT_TOL)?;
    println!("certified: {}", pair.certified);
    let quotient = build_quotient(&qp, &pair)?;
    println!("quotient has {} variable(s), {} constraint(s)", quotient.qp.n(), quotient.qp.m());

    let report = solve(&quotient.qp, &SolverConfig::default())?;
    let x = unlift(&report.x, &quotient)?;
    println!("quotient optimum y = {:?}", report.x);
    println!("lifted x = {x:?}, objective {:.3e}", qp.objective(&x)?);

    // counting refinement keeps x1,x2 apart from x3,x4 and still lifts
    let c = refine_qp(&qp, RefineMode::Counting, COLOR_TOL);
    println!("counting mode: {:?}", c.var_partition.classes());
    Ok(())
}
