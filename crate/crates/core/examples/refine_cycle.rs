//! Color refinement on a QP whose quadratic term is a ring. Each variable sees
//! two neighbours, so the whole ring collapses to a single class, while a
//! pendant chord breaks the symmetry.

use liftqp::lift::{lift, LIFT_TOL};
use liftqp::refine::{RefineMode, COLOR_TOL};
use liftqp::{QpInstance, SparseMatrix};

fn ring_qp(n: usize, chord: bool) -> liftqp::Result<QpInstance> {
    let mut t = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        t.push((i, i, 3.0));
        t.push((i, j, -1.0));
        t.push((j, i, -1.0));
    }
    if chord {
        t.push((0, n / 2, -0.5));
        t.push((n / 2, 0, -0.5));
    }
    let q = SparseMatrix::from_triplets(n, n, t)?;
    // box 0 ≤ x ≤ 1 written as two blocks of rows
    let a = SparseMatrix::from_triplets(2 * n, n, (0..n).flat_map(|i| [(i, i, 1.0), (n + i, i, -1.0)]))?;
    let b = [vec![1.0; n], vec![0.0; n]].concat();
    QpInstance::new(q, vec![-1.0; n], a, b)
}

fn main() -> liftqp::Result<()> {
    for chord in [false, true] {
        let qp = ring_qp(12, chord)?;
        let l = lift(&qp, RefineMode::Sum, COLOR_TOL, LIFT_TOL)?;
        println!(
            "chord={chord:<5} rounds={} classes={} sizes={:?} -> quotient {}x{}",
            l.refinement.rounds,
            l.refinement.var_partition.num_classes(),
            l.refinement.var_partition.class_sizes(),
            l.quotient.qp.n(),
            l.quotient.qp.m(),
        );
    }
    Ok(())
}
