//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use liftqp::approxep::{approx_orbits, exact_orbits, make_blobs, whiten, ApproxConfig, DIST_TOL};
use liftqp::geometry::{gram_factor, verify_bchar};
use liftqp::kernels::{kernel_matrix, KernelSpec};
use liftqp::lift::{averaging_certificate, build_quotient, certify, unlift, LIFT_TOL};
use liftqp::refine::{brute_force_coarsest_ep, is_counting, is_equitable, refine_qp, RefineMode, COLOR_TOL};
use liftqp::solve::{kkt_check, solve, SolveStatus, SolverConfig};
use liftqp::svm::{build_svm_qp, make_duplicated_groups, predict, SvmBuildSpec};
use liftqp::{Partition, QpInstance, SparseMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 200 block-symmetric QPs: ground and lifted optima agree; 1000 feasible
/// points stay feasible and do not get worse when averaged.
fn lifting_instances() -> Vec<common::BlockSymmetric> {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    (0..200).map(|_| common::block_symmetric(&mut rng, 60, 80)).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut compressed = 0;
    for (k, inst) in lifting_instances().iter().enumerate() {
        let qp = &inst.qp;
        let r = refine_qp(qp, RefineMode::Sum, COLOR_TOL);
        let pair = certify(qp, &r.var_partition, &r.con_partition, LIFT_TOL).unwrap();
        if !pair.certified {
            failures.push(format!("#{k} not certified ({:.2e})", pair.residuals.max()));
            continue;
        }
        let quotient = build_quotient(qp, &pair).unwrap();
        compressed += usize::from(quotient.qp.n() < qp.n());
        let ground = solve(qp, &cfg).unwrap();
        let lifted = solve(&quotient.qp, &cfg).unwrap();
        if ground.status != SolveStatus::Optimal || lifted.status != SolveStatus::Optimal {
            failures.push(format!("#{k} status {:?}/{:?}", ground.status, lifted.status));
            continue;
        }
        let j = qp.objective(&ground.x).unwrap();
        let jl = qp.objective(&unlift(&lifted.x, &quotient).unwrap()).unwrap();
        let rel = (j - jl).abs() / (1.0 + j.abs());
        worst = worst.max(rel);
        if rel > 1e-5 {
            failures.push(format!("#{k} gap {rel:.2e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "200 QPs, {compressed} compressed, worst relative gap {worst:.2e}, {secs:.1} s{}",
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
    );
    check(failures.is_empty() && secs <= 60.0, detail)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let mut violations = 0;
    let mut points = 0;
    for inst in lifting_instances() {
        let qp = &inst.qp;
        let r = refine_qp(qp, RefineMode::Sum, COLOR_TOL);
        let pair = certify(qp, &r.var_partition, &r.con_partition, LIFT_TOL).unwrap();
        for _ in 0..5 {
            let x = common::feasible_point(&mut rng, qp, &inst.x0);
            let rep = averaging_certificate(qp, &pair, &x, 1e-9).unwrap();
            points += 1;
            violations += usize::from(!rep.holds());
        }
    }
    check(violations == 0 && points == 1000, format!("{points} points, {violations} violations"))
}

fn random_symmetric(rng: &mut ChaCha8Rng) -> SparseMatrix {
    let n = rng.random_range(1..=7);
    // a small alphabet makes nontrivial equitable partitions common
    let alphabet: Vec<f64> = match rng.random_range(0..3) {
        0 => vec![0.0, 1.0],
        1 => vec![-1.0, 0.0, 1.0, 2.0],
        _ => vec![0.0, 0.5, 1.5],
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = alphabet[rng.random_range(0..alphabet.len())];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SparseMatrix::from_dense(&m).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut mismatches = 0;
    let mut nontrivial = 0;
    for _ in 0..100 {
        let m = random_symmetric(&mut rng);
        let qp = QpInstance::unconstrained(m.clone(), vec![0.0; m.n_rows()]).unwrap();
        let refined = refine_qp(&qp, RefineMode::Sum, COLOR_TOL).var_partition;
        let oracle = brute_force_coarsest_ep(&m, RefineMode::Sum, COLOR_TOL).unwrap();
        nontrivial += usize::from(!oracle.is_discrete() && oracle.num_classes() > 1);
        mismatches += usize::from(refined != oracle);
    }
    check(mismatches == 0, format!("100 matrices ({nontrivial} with nontrivial coarsest EP), {mismatches} mismatches"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let (mut worst, mut max_rank, mut nontrivial) = (0.0f64, 0, 0);
    let mut bad = 0;
    let mut control_min = f64::INFINITY;
    let mut controls = 0;
    let mut control_fail = 0;
    for _ in 0..100 {
        let k = rng.random_range(1..=10);
        let seeds = rng.random_range(1..=4);
        let pts = common::orbit_points(&mut rng, k, seeds, 60);
        let q = common::gram(&pts);
        let n = q.n_rows();
        let qp = QpInstance::unconstrained(q.clone(), vec![0.0; n]).unwrap();
        let p = refine_qp(&qp, RefineMode::Sum, COLOR_TOL).var_partition;
        nontrivial += usize::from(p.num_classes() < n);
        let f = gram_factor(&q, None).unwrap();
        max_rank = max_rank.max(f.rank());
        let rep = verify_bchar(&q, &f, &p, 1e-7).unwrap();
        worst = worst.max(rep.r_asymmetry).max(rep.xb_br_residual);
        bad += usize::from(!(rep.r_symmetric && rep.xb_equals_br));

        // control: a random partition that does not commute with Q
        if n >= 3 && f.rank() > 0 {
            for _ in 0..50 {
                let classes = rng.random_range(1..n);
                let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
                let c = Partition::from_labels(&labels);
                let rep = verify_bchar(&q, &f, &c, 1e-7).unwrap();
                if rep.commutator > 1e-3 {
                    controls += 1;
                    let gap = rep.r_asymmetry.max(rep.xb_br_residual);
                    control_min = control_min.min(gap);
                    control_fail += usize::from(gap <= 1e-3);
                    break;
                }
            }
        }
    }
    // top up controls on fresh random instances if some pairs had no
    // non-commuting partition (for instance when n < 3)
    while controls < 100 {
        let k = rng.random_range(2..=10);
        let rows = rng.random_range(4..=20);
        let b = DMatrix::from_fn(rows, k, |_, _| rng.random_range(-3i32..=3) as f64);
        let q = common::gram(&b);
        let n = q.n_rows();
        let f = gram_factor(&q, None).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n / 2)).collect();
        let rep = verify_bchar(&q, &f, &Partition::from_labels(&labels), 1e-7).unwrap();
        if rep.commutator > 1e-3 && f.rank() > 0 {
            controls += 1;
            let gap = rep.r_asymmetry.max(rep.xb_br_residual);
            control_min = control_min.min(gap);
            control_fail += usize::from(gap <= 1e-3);
        }
    }
    check(
        bad == 0 && control_fail == 0,
        format!(
            "100 pairs (max rank {max_rank}, {nontrivial} nontrivial), worst residual {worst:.2e}; \
             {controls} controls, smallest control residual {control_min:.2e}, {control_fail} controls passed"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    let kernels = [
        KernelSpec::Poly { degree: 1 },
        KernelSpec::Poly { degree: 2 },
        KernelSpec::Poly { degree: 3 },
        KernelSpec::Rbf { gamma: 0.5 },
        KernelSpec::Rbf { gamma: 1.0 },
        KernelSpec::Rbf { gamma: 2.0 },
    ];
    let mut failures = 0;
    let mut datasets = 0;
    let mut checks = 0;
    while datasets < 50 {
        let k = rng.random_range(2..=4);
        let seeds = rng.random_range(1..=3);
        let pts = common::orbit_points(&mut rng, k, seeds, 24);
        let q = common::gram(&pts);
        let n = q.n_rows();
        let qp = QpInstance::unconstrained(q.clone(), vec![0.0; n]).unwrap();
        let p = refine_qp(&qp, RefineMode::Counting, COLOR_TOL).var_partition;
        if p.num_classes() == n {
            continue;
        }
        datasets += 1;
        assert!(is_counting(&q, &p, 1e-9).unwrap());
        for spec in &kernels {
            let kmat = kernel_matrix(&pts, spec).unwrap();
            checks += 1;
            failures += usize::from(!is_counting(&kmat, &p, 1e-9).unwrap());
        }
    }
    // counterexample: one class is a sum-EP of Q but not of (Q + 1)²
    let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 2.0, 1.0, -2.0]);
    let one = Partition::single(3);
    let q = common::gram(&x);
    let k2 = kernel_matrix(&x, &KernelSpec::Poly { degree: 2 }).unwrap();
    let counterexample = is_equitable(&q, &one, 1e-9).unwrap() && !is_equitable(&k2, &one, 1e-9).unwrap();
    check(
        failures == 0 && counterexample,
        format!("{datasets} datasets x 6 kernels = {checks} checks, {failures} failures; sum-EP counterexample reproduced: {counterexample}"),
    )
}

fn criterion_6() -> Outcome {
    let sq = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 3.0, 0.0, -3.0]);
    let raw = exact_orbits(&sq, DIST_TOL).unwrap().num_classes();
    let white = exact_orbits(&whiten(&sq).points, DIST_TOL).unwrap().num_classes();
    let mut recovered = 0;
    for seed in 0..10 {
        let (pts, labels) = make_blobs(400, 20.0, seed);
        let cfg = ApproxConfig { n_anchors: 25, n_orbits: 2, seed, ..Default::default() };
        let r = approx_orbits(&pts, &cfg).unwrap();
        recovered += usize::from(r.partition == Partition::from_labels(&labels));
    }
    check(
        raw == 2 && white == 1 && recovered == 10,
        format!("square: {raw} classes raw, {white} whitened; blobs recovered for {recovered}/10 seeds"),
    )
}

fn criterion_7() -> Outcome {
    let ds = make_duplicated_groups(20, 5, 40, 5, 2, 7007).unwrap();
    let s = build_svm_qp(&ds, &SvmBuildSpec::default()).unwrap();
    let r = refine_qp(&s.qp, RefineMode::Sum, COLOR_TOL);
    let pair = certify(&s.qp, &r.var_partition, &r.con_partition, LIFT_TOL).unwrap();
    if !pair.certified {
        return Err(format!("refined pair not certified ({:.2e})", pair.residuals.max()));
    }
    let quotient = build_quotient(&s.qp, &pair).unwrap();
    let var_ratio = quotient.var_ratio();
    let con_ratio = quotient.con_ratio(s.qp.m());
    let cfg = SolverConfig::default();
    let ground = solve(&s.qp, &cfg).unwrap();
    let lifted = solve(&quotient.qp, &cfg).unwrap();
    let x = unlift(&lifted.x, &quotient).unwrap();
    let pg = predict(s.legend.weights(&ground.x), s.legend.bias(&ground.x), &ds.features).unwrap();
    let pl = predict(s.legend.weights(&x), s.legend.bias(&x), &ds.features).unwrap();
    let agree = pg.iter().zip(&pl).filter(|(a, b)| a == b).count();
    check(
        var_ratio <= 0.8 && con_ratio <= 0.8 && agree == ds.n(),
        format!(
            "ground ({}, {}) lifted ({}, {}), ratios {var_ratio:.3} / {con_ratio:.3}, predictions agree {agree}/{}",
            s.qp.n(),
            s.qp.m(),
            quotient.qp.n(),
            quotient.qp.m(),
            ds.n()
        ),
    )
}

fn random_kkt_instance(rng: &mut ChaCha8Rng) -> QpInstance {
    let n = rng.random_range(1..=12);
    let m = rng.random_range(0..=15);
    let rank = rng.random_range(0..=n);
    let f = DMatrix::from_fn(rank, n, |_, _| rng.random_range(-2.0..2.0));
    let q = SparseMatrix::from_dense(&(f.transpose() * &f)).unwrap().symmetrized().unwrap();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    // box rows keep every instance bounded
    let mut rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut b: Vec<f64> = rows.iter().map(|r| r.iter().zip(&x0).map(|(a, x)| a * x).sum::<f64>() + rng.random_range(0.0..1.0)).collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        rows.push(e.clone());
        b.push(4.0);
        e[i] = -1.0;
        rows.push(e);
        b.push(4.0);
    }
    QpInstance::new(q, c, SparseMatrix::from_rows(&rows).unwrap(), b).unwrap()
}

fn criterion_8() -> Outcome {
    let cfg = SolverConfig { max_iters: 5000, ..Default::default() };
    let parabola = QpInstance::unconstrained(SparseMatrix::identity(1), vec![-2.0]).unwrap();
    let bounded = QpInstance::new(
        SparseMatrix::identity(2),
        vec![0.0; 2],
        SparseMatrix::diagonal(&[-1.0, -1.0]),
        vec![-1.0, -1.0],
    )
    .unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for (qp, analytic) in [(&parabola, -1.0), (&bounded, 2.0)] {
        let r = solve(qp, &cfg).unwrap();
        let err = (r.objective - analytic).abs();
        ok &= r.status == SolveStatus::Optimal && err <= 1e-6;
        notes.push(format!("{:?} err {err:.1e} in {} iters", r.status, r.iters));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    let mut kkt_pass = 0;
    for _ in 0..50 {
        let qp = random_kkt_instance(&mut rng);
        let r = solve(&qp, &SolverConfig::default()).unwrap();
        kkt_pass += usize::from(r.status == SolveStatus::Optimal && kkt_check(&qp, &r.x, &r.duals, 1e-6));
    }
    check(ok && kkt_pass == 50, format!("closed forms: {}; KKT {kkt_pass}/50", notes.join(", ")))
}

fn criterion_9() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_liftqp"))
            .args(["svm-run", "--seed", "7", "--json"])
            .output()
            .expect("liftqp runs")
    };
    let (a, b) = (run(), run());
    let ok = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    check(ok, format!("{} bytes, identical: {}", a.stdout.len(), a.stdout == b.stdout))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("lifting correctness", criterion_1),
        ("averaging property", criterion_2),
        ("coarsest EP oracle", criterion_3),
        ("Gram-factor characterization", criterion_4),
        ("kernel transfer", criterion_5),
        ("approximate orbits", criterion_6),
        ("TC-SVM compression", criterion_7),
        ("solver sanity", criterion_8),
        ("determinism", criterion_9),
    ];
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if !args.is_empty() && !args.iter().any(|a| name.contains(a.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} ({name}): {tag} [{:.1} s] {detail}", k + 1, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
