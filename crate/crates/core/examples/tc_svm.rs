//! A transductive-collective SVM on data with many duplicated unlabeled
//! instances. The lifted QP is much smaller and predicts the same labels.

use liftqp::lift::{lift, unlift, LIFT_TOL};
use liftqp::refine::{RefineMode, COLOR_TOL};
use liftqp::solve::{solve, SolverConfig};
use liftqp::svm::{build_svm_qp, make_duplicated_groups, predict, SvmBuildSpec};

fn main() -> liftqp::Result<()> {
    let ds = make_duplicated_groups(10, 6, 30, 4, 2, 1)?;
    let svm = build_svm_qp(&ds, &SvmBuildSpec::default())?;
    let l = lift(&svm.qp, RefineMode::Sum, COLOR_TOL, LIFT_TOL)?;
    println!("ground QP {} x {}, lifted {} x {}", svm.qp.n(), svm.qp.m(), l.quotient.qp.n(), l.quotient.qp.m());

    let cfg = SolverConfig::default();
    let ground = solve(&svm.qp, &cfg)?;
    let lifted = unlift(&solve(&l.quotient.qp, &cfg)?.x, &l.quotient)?;
    let p_ground = predict(svm.legend.weights(&ground.x), svm.legend.bias(&ground.x), &ds.features)?;
    let p_lifted = predict(svm.legend.weights(&lifted), svm.legend.bias(&lifted), &ds.features)?;
    let same = p_ground.iter().zip(&p_lifted).filter(|(a, b)| a == b).count();
    println!("objectives {:.6} / {:.6}", ground.objective, svm.qp.objective(&lifted)?);
    println!("predictions agree on {same}/{} instances", ds.n());
    Ok(())
}
