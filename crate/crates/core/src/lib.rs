//! Lifting convex quadratic programs with equitable partitions.
//!
//! A QP `min xᵀQx + cᵀx  s.t.  Ax ≤ b` whose data commutes with a pair of
//! partition matrices (`X^P Q = Q X^P`, `cᵀX^P = cᵀ`, `X^Q b = b`,
//! `X^Q A = A X^P`) always has an optimum that is constant on the classes of
//! `P`. This crate finds such partitions by color refinement ([`refine`]),
//! certifies them and builds the smaller quotient QP ([`lift`]), solves both
//! with a built-in ADMM solver ([`solve`]), and carries the supporting
//! machinery: Gram-factor geometry ([`geometry`]), kernel matrices
//! ([`kernels`]), approximate orbit detection for point sets ([`approxep`])
//! and a transductive-collective SVM workload ([`svm`]).
//!
//! ```
//! use liftqp::{lift, qpcore, refine, solve};
//!
//! let qp = qpcore::running_example();
//! let r = refine::refine_qp(&qp, refine::RefineMode::Sum, refine::COLOR_TOL);
//! let pair = lift::certify(&qp, &r.var_partition, &r.con_partition, lift::LIFT_TOL).unwrap();
//! let quotient = lift::build_quotient(&qp, &pair).unwrap();
//! assert_eq!(quotient.qp.n(), 1);
//! let report = solve::solve(&quotient.qp, &solve::SolverConfig::default()).unwrap();
//! let x = lift::unlift(&report.x, &quotient).unwrap();
//! assert!(qp.objective(&x).unwrap().abs() < 1e-6);
//! ```

pub mod approxep;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod lift;
pub mod qpcore;
pub mod refine;
pub mod solve;
pub mod svm;

pub use error::{Error, Result};
pub use qpcore::{Partition, QpInstance, SparseMatrix};
