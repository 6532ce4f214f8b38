//! The `liftqp` command line.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a
//! verification step rejects its input (an uncertified partition, a failed
//! characterization check, a kernel that loses a counting partition).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::approxep::{approx_orbits, exact_orbits, AnchorStrategy, ApproxConfig, DIST_TOL};
use crate::error::{Error, Result};
use crate::geometry::{gram_factor, verify_bchar, BcharReport};
use crate::kernels::{check_counting_transfer, gram_matrix, KernelSpec, TransferReport};
use crate::lift::{build_quotient, certify, unlift, LiftResiduals, LiftingPair, QuotientQp, LIFT_TOL};
use crate::qpcore::io::{
    qp_to_json, read_pairs_csv, read_partition_json, read_qp_json, read_real_csv, read_string_column, write_qp_json,
    PartitionFile,
};
use crate::qpcore::{Partition, QpInstance};
use crate::refine::{refine_qp, RefineMode, COLOR_TOL};
use crate::solve::{solve, SolveReport, SolveStatus, SolverConfig};
use crate::svm::{build_svm_qp, choose_labeled, make_two_moons, predict, Label, SvmBuildSpec, SvmDataset};

const EXIT_USAGE: i32 = 1;
const EXIT_REJECTED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "liftqp", version, about = "Lift convex QPs along equitable partitions")]
struct Cli {
    /// Print machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RefineOpts {
    /// `sum` (equitable) or `counting` (equal value multisets).
    #[arg(long, default_value = "sum")]
    mode: RefineMode,
    /// Grid width used to compare reals while coloring.
    #[arg(long, default_value_t = COLOR_TOL)]
    color_tol: f64,
}

#[derive(Args, Debug, Clone)]
struct SolverOpts {
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Skip the active-set polishing step.
    #[arg(long)]
    no_polish: bool,
}

impl SolverOpts {
    fn config(&self) -> SolverConfig {
        SolverConfig { max_iters: self.max_iters, eps_abs: self.eps, eps_rel: self.eps, polish: !self.no_polish, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelKind {
    Poly,
    Rbf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Color-refine a QP (JSON with fields n, m, q, c, a, b; matrices as [i, j, v] triplets).
    Refine {
        qp: PathBuf,
        #[command(flatten)]
        refine: RefineOpts,
        /// Write the partition pair as {"vars": [[..]], "cons": [[..]]}.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine, certify and write the quotient QP.
    Lift {
        qp: PathBuf,
        #[command(flatten)]
        refine: RefineOpts,
        #[arg(long, default_value_t = LIFT_TOL)]
        lift_tol: f64,
        /// Where to write the quotient QP.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a QP, optionally through its quotient.
    Solve {
        qp: PathBuf,
        /// Solve the quotient and unlift the solution.
        #[arg(long)]
        lift: bool,
        #[command(flatten)]
        refine: RefineOpts,
        #[command(flatten)]
        solver: SolverOpts,
        /// Write the solution vector as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a given partition pair against the lifting conditions.
    Verify {
        qp: PathBuf,
        /// Partition JSON; a missing "cons" field means the discrete partition.
        #[arg(long)]
        partition: PathBuf,
        #[arg(long, default_value_t = LIFT_TOL)]
        tol: f64,
    },
    /// Factor Q = BBᵀ and test XQ = QX against XB = BR with symmetric R.
    Geometry {
        qp: PathBuf,
        /// Variable partition to test; defaults to the refined one.
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Check that a kernel matrix keeps the counting partition of the Gram matrix.
    Kernel {
        /// Headerless CSV, one point per row.
        points: PathBuf,
        #[arg(long, value_enum, default_value = "poly")]
        kind: KernelKind,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Partition to test; defaults to the counting refinement of the Gram matrix.
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Detect (approximate) rotational orbits of a point set.
    #[command(name = "approx-ep")]
    ApproxEp {
        /// Headerless CSV, one point per row.
        points: PathBuf,
        /// Cluster budget.
        #[arg(long, default_value_t = 2)]
        orbits: usize,
        /// Number of anchors (0 = all points).
        #[arg(long, default_value_t = 0)]
        anchors: usize,
        /// Pick anchors by D² sampling instead of uniformly.
        #[arg(long)]
        spread_anchors: bool,
        #[arg(long)]
        whiten: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        /// Use sorted full distance rows without clustering.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = DIST_TOL)]
        dist_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the soft-margin SVM QP of a labeled data set.
    #[command(name = "svm-build")]
    SvmBuild {
        /// Headerless CSV of reals.
        features: PathBuf,
        /// One label per line: the positive class string, any other string, or `?` for unlabeled.
        labels: PathBuf,
        /// `i,j` pairs, 0-based.
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long, default_value = "1")]
        positive: String,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        #[arg(long)]
        transductive: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build, lift, solve both QPs, predict and compare.
    #[command(name = "svm-run")]
    SvmRun(SvmRunOpts),
}

#[derive(Args, Debug)]
struct SvmRunOpts {
    /// Features CSV; without it a two-moons data set is generated.
    #[arg(long, requires = "labels")]
    features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    labels: Option<PathBuf>,
    #[arg(long)]
    links: Option<PathBuf>,
    /// Labels of the unlabeled instances, for accuracy.
    #[arg(long)]
    heldout: Option<PathBuf>,
    #[arg(long, default_value = "1")]
    positive: String,
    /// Two-moons size.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 150)]
    noise_dim: usize,
    #[arg(long, default_value_t = 4)]
    knn: usize,
    /// Labeled instances kept in the generated data set.
    #[arg(long, default_value_t = 20)]
    labeled: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    /// Drop the link constraints.
    #[arg(long)]
    no_transductive: bool,
    #[command(flatten)]
    refine: RefineOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Include wall-clock times (makes the output run-dependent).
    #[arg(long)]
    timings: bool,
}

/// Outcome of a subcommand: text for the table, JSON, and the exit code.
struct Output {
    table: Vec<(String, String)>,
    json: serde_json::Value,
    code: i32,
}

impl Output {
    fn new<T: Serialize>(report: &T, table: Vec<(String, String)>, accepted: bool) -> Result<Output> {
        let json = serde_json::to_value(report).map_err(|e| Error::Invalid(e.to_string()))?;
        Ok(Output { table, json, code: if accepted { 0 } else { EXIT_REJECTED } })
    }
}

fn row(k: &str, v: impl std::fmt::Display) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Parses `args` (including the program name), runs the subcommand and
/// writes its report to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(o) => {
            let written = if cli.json {
                serde_json::to_string_pretty(&o.json).map(|s| writeln!(out, "{s}")).unwrap_or(Ok(()))
            } else {
                let w = o.table.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
                o.table.iter().try_for_each(|(k, v)| writeln!(out, "{k:<w$}  {v}"))
            };
            if let Err(e) = written {
                let _ = writeln!(err, "liftqp: {e}");
                return EXIT_USAGE;
            }
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "liftqp: {e}");
            EXIT_USAGE
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn dispatch(cmd: Command) -> Result<Output> {
    match cmd {
        Command::Refine { qp, refine, out } => cmd_refine(&qp, &refine, out.as_deref()),
        Command::Lift { qp, refine, lift_tol, out } => cmd_lift(&qp, &refine, lift_tol, out.as_deref()),
        Command::Solve { qp, lift, refine, solver, out } => cmd_solve(&qp, lift, &refine, &solver, out.as_deref()),
        Command::Verify { qp, partition, tol } => cmd_verify(&qp, &partition, tol),
        Command::Geometry { qp, partition, tol } => cmd_geometry(&qp, partition.as_deref(), tol),
        Command::Kernel { points, kind, degree, gamma, partition, tol } => {
            let spec = match kind {
                KernelKind::Poly => KernelSpec::Poly { degree },
                KernelKind::Rbf => KernelSpec::Rbf { gamma },
            };
            cmd_kernel(&points, spec, partition.as_deref(), tol)
        }
        Command::ApproxEp { points, orbits, anchors, spread_anchors, whiten, seed, iters, exact, dist_tol, out } => {
            let cfg = ApproxConfig {
                whiten,
                n_anchors: anchors,
                n_orbits: orbits,
                seed,
                cluster_iters: iters,
                anchors: if spread_anchors { AnchorStrategy::Spread } else { AnchorStrategy::Uniform },
            };
            cmd_approx(&points, &cfg, exact.then_some(dist_tol), out.as_deref())
        }
        Command::SvmBuild { features, labels, links, positive, c1, c2, transductive, out } => {
            let ds = read_dataset(&features, &labels, links.as_deref(), &positive)?;
            cmd_svm_build(&ds, &SvmBuildSpec { c1, c2, transductive }, &out)
        }
        Command::SvmRun(opts) => cmd_svm_run(&opts),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let rows = read_real_csv(path)?;
    let d = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

#[derive(Serialize)]
struct RefineReport {
    n: usize,
    m: usize,
    mode: RefineMode,
    rounds: usize,
    var_classes: usize,
    con_classes: usize,
    partition: PartitionFile,
}

fn cmd_refine(path: &Path, opts: &RefineOpts, out: Option<&Path>) -> Result<Output> {
    let qp = read_qp_json(path)?;
    let r = refine_qp(&qp, opts.mode, opts.color_tol);
    let report = RefineReport {
        n: qp.n(),
        m: qp.m(),
        mode: r.mode,
        rounds: r.rounds,
        var_classes: r.var_partition.num_classes(),
        con_classes: r.con_partition.num_classes(),
        partition: PartitionFile::new(&r.var_partition, Some(&r.con_partition)),
    };
    if let Some(out) = out {
        write_json(out, &report.partition)?;
    }
    let table = vec![
        row("variables", qp.n()),
        row("constraints", qp.m()),
        row("mode", format!("{:?}", r.mode).to_lowercase()),
        row("rounds", r.rounds),
        row("variable classes", r.var_partition.num_classes()),
        row("constraint classes", r.con_partition.num_classes()),
    ];
    Output::new(&report, table, true)
}

#[derive(Serialize)]
struct LiftReport {
    ground_n: usize,
    ground_m: usize,
    lifted_n: usize,
    lifted_m: usize,
    var_ratio: f64,
    con_ratio: f64,
    certified: bool,
    residuals: LiftResiduals,
}

fn lift_report(qp: &QpInstance, pair: &LiftingPair, quotient: Option<&QuotientQp>) -> LiftReport {
    let (p, r) = quotient.map_or((qp.n(), qp.m()), |q| (q.qp.n(), q.qp.m()));
    LiftReport {
        ground_n: qp.n(),
        ground_m: qp.m(),
        lifted_n: p,
        lifted_m: r,
        var_ratio: ratio(p, qp.n()),
        con_ratio: ratio(r, qp.m()),
        certified: pair.certified,
        residuals: pair.residuals,
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

fn lift_table(r: &LiftReport) -> Vec<(String, String)> {
    vec![
        row("ground (n, m)", format!("({}, {})", r.ground_n, r.ground_m)),
        row("lifted (p, r)", format!("({}, {})", r.lifted_n, r.lifted_m)),
        row("variable ratio", format!("{:.4}", r.var_ratio)),
        row("constraint ratio", format!("{:.4}", r.con_ratio)),
        row("certified", r.certified),
        row("max residual", format!("{:.3e}", r.residuals.max())),
    ]
}

fn cmd_lift(path: &Path, opts: &RefineOpts, tol: f64, out: Option<&Path>) -> Result<Output> {
    let qp = read_qp_json(path)?;
    let r = refine_qp(&qp, opts.mode, opts.color_tol);
    let pair = certify(&qp, &r.var_partition, &r.con_partition, tol)?;
    if !pair.certified {
        let report = lift_report(&qp, &pair, None);
        return Output::new(&report, lift_table(&report), false);
    }
    let quotient = build_quotient(&qp, &pair)?;
    if let Some(out) = out {
        write_qp_json(out, &quotient.qp)?;
    }
    let report = lift_report(&qp, &pair, Some(&quotient));
    Output::new(&report, lift_table(&report), true)
}

#[derive(Serialize)]
struct SolveSummary {
    status: SolveStatus,
    objective: f64,
    n: usize,
    m: usize,
    /// Dimensions actually solved.
    p: usize,
    r: usize,
    iters: usize,
    polished: bool,
    primal_residual: f64,
    dual_residual: f64,
    x: Vec<f64>,
}

fn cmd_solve(path: &Path, lifted: bool, opts: &RefineOpts, solver: &SolverOpts, out: Option<&Path>) -> Result<Output> {
    let qp = read_qp_json(path)?;
    let cfg = solver.config();
    let (rep, x, p, r): (SolveReport, Vec<f64>, usize, usize) = if lifted {
        let rf = refine_qp(&qp, opts.mode, opts.color_tol);
        let pair = certify(&qp, &rf.var_partition, &rf.con_partition, LIFT_TOL)?;
        if !pair.certified {
            return Err(Error::Uncertified);
        }
        let quotient = build_quotient(&qp, &pair)?;
        let rep = solve(&quotient.qp, &cfg)?;
        let x = unlift(&rep.x, &quotient)?;
        (rep, x, quotient.qp.n(), quotient.qp.m())
    } else {
        let rep = solve(&qp, &cfg)?;
        let x = rep.x.clone();
        (rep, x, qp.n(), qp.m())
    };
    let objective = if rep.status == SolveStatus::Optimal || rep.status == SolveStatus::MaxIters {
        qp.objective(&x)?
    } else {
        rep.objective
    };
    let summary = SolveSummary {
        status: rep.status,
        objective,
        n: qp.n(),
        m: qp.m(),
        p,
        r,
        iters: rep.iters,
        polished: rep.polished,
        primal_residual: rep.primal_residual,
        dual_residual: rep.dual_residual,
        x,
    };
    if let Some(out) = out {
        write_json(out, &summary.x)?;
    }
    let table = vec![
        row("status", format!("{:?}", summary.status)),
        row("objective", format!("{:.9}", summary.objective)),
        row("ground (n, m)", format!("({}, {})", summary.n, summary.m)),
        row("solved (p, r)", format!("({}, {})", summary.p, summary.r)),
        row("iterations", summary.iters),
        row("polished", summary.polished),
    ];
    Output::new(&summary, table, true)
}

fn cmd_verify(path: &Path, partition: &Path, tol: f64) -> Result<Output> {
    let qp = read_qp_json(path)?;
    let (p, q) = read_partition_json(partition)?
        .resolve(qp.n(), qp.m())
        .map_err(|message| Error::Parse { file: partition.display().to_string(), message })?;
    let pair = certify(&qp, &p, &q, tol)?;
    let r = pair.residuals;
    let table = vec![
        row("certified", pair.certified),
        row("variable classes", p.num_classes()),
        row("constraint classes", q.num_classes()),
        row("Q commutator", format!("{:.3e}", r.q_commute)),
        row("c invariance", format!("{:.3e}", r.c_invariance)),
        row("b invariance", format!("{:.3e}", r.b_invariance)),
        row("A coupling", format!("{:.3e}", r.a_coupling)),
    ];
    Output::new(&lift_report(&qp, &pair, None), table, pair.certified)
}

fn cmd_geometry(path: &Path, partition: Option<&Path>, tol: f64) -> Result<Output> {
    let qp = read_qp_json(path)?;
    let p = match partition {
        Some(file) => {
            read_partition_json(file)?
                .resolve(qp.n(), qp.m())
                .map_err(|message| Error::Parse { file: file.display().to_string(), message })?
                .0
        }
        None => refine_qp(&qp, RefineMode::Sum, COLOR_TOL).var_partition,
    };
    let factor = gram_factor(qp.q(), None)?;
    let rep: BcharReport = verify_bchar(qp.q(), &factor, &p, tol)?;
    let table = vec![
        row("rank", rep.rank),
        row("classes", p.num_classes()),
        row("XQ = QX", format!("{} ({:.3e})", rep.commutes, rep.commutator)),
        row("R symmetric", format!("{} ({:.3e})", rep.r_symmetric, rep.r_asymmetry)),
        row("XB = BR", format!("{} ({:.3e})", rep.xb_equals_br, rep.xb_br_residual)),
        row("consistent", rep.consistent()),
    ];
    let ok = rep.consistent();
    Output::new(&rep, table, ok)
}

#[derive(Serialize)]
struct KernelReport {
    kernel: KernelSpec,
    classes: usize,
    #[serde(flatten)]
    transfer: TransferReport,
    holds: bool,
}

fn cmd_kernel(path: &Path, spec: KernelSpec, partition: Option<&Path>, tol: f64) -> Result<Output> {
    let data = read_matrix(path)?;
    let p = match partition {
        Some(file) => Partition::from_classes(data.nrows(), read_partition_json(file)?.vars)?,
        None => {
            let q = gram_matrix(&data)?;
            let qp = QpInstance::unconstrained(q, vec![0.0; data.nrows()])?;
            refine_qp(&qp, RefineMode::Counting, COLOR_TOL).var_partition
        }
    };
    let transfer = check_counting_transfer(&data, &spec, &p, tol)?;
    let report = KernelReport { kernel: spec, classes: p.num_classes(), transfer, holds: transfer.holds() };
    let table = vec![
        row("kernel", format!("{spec:?}")),
        row("classes", report.classes),
        row("counting on Q", transfer.q_counting),
        row("counting on K", transfer.k_counting),
        row("transfer holds", report.holds),
    ];
    Output::new(&report, table, report.holds)
}

#[derive(Serialize)]
struct ApproxReport {
    n: usize,
    classes: usize,
    exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reseeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    short: Option<bool>,
    whitening_regularized: bool,
    partition: Vec<Vec<usize>>,
}

fn cmd_approx(path: &Path, cfg: &ApproxConfig, exact_tol: Option<f64>, out: Option<&Path>) -> Result<Output> {
    let data = read_matrix(path)?;
    let report = match exact_tol {
        Some(tol) => {
            let (pts, reg) = if cfg.whiten {
                let w = crate::approxep::whiten(&data);
                (w.points, w.regularized)
            } else {
                (data.clone(), false)
            };
            let p = exact_orbits(&pts, tol)?;
            ApproxReport {
                n: data.nrows(),
                classes: p.num_classes(),
                exact: true,
                reseeds: None,
                short: None,
                whitening_regularized: reg,
                partition: p.classes().to_vec(),
            }
        }
        None => {
            let r = approx_orbits(&data, cfg)?;
            ApproxReport {
                n: data.nrows(),
                classes: r.partition.num_classes(),
                exact: false,
                reseeds: Some(r.reseeds),
                short: Some(r.short),
                whitening_regularized: r.whitening_regularized,
                partition: r.partition.classes().to_vec(),
            }
        }
    };
    if let Some(out) = out {
        write_json(out, &PartitionFile { vars: report.partition.clone(), cons: None })?;
    }
    let mut table = vec![row("points", report.n), row("classes", report.classes)];
    if report.whitening_regularized {
        table.push(row("whitening", "regularized (singular covariance)"));
    }
    if report.short == Some(true) {
        table.push(row("note", "fewer clusters than the budget"));
    }
    Output::new(&report, table, true)
}

fn read_labels(path: &Path, positive: &str) -> Result<Vec<Label>> {
    Ok(read_string_column(path)?.iter().map(|s| Label::parse(s, positive)).collect())
}

fn read_dataset(features: &Path, labels: &Path, links: Option<&Path>, positive: &str) -> Result<SvmDataset> {
    let x = read_matrix(features)?;
    let labels = read_labels(labels, positive)?;
    let links = links.map(read_pairs_csv).transpose()?.unwrap_or_default();
    SvmDataset::new(x, labels, links)
}

fn cmd_svm_build(ds: &SvmDataset, spec: &SvmBuildSpec, out: &Path) -> Result<Output> {
    let s = build_svm_qp(ds, spec)?;
    std::fs::write(out, qp_to_json(&s.qp) + "\n")?;
    #[derive(Serialize)]
    struct BuildReport<'a> {
        n: usize,
        m: usize,
        features: usize,
        label_slacks: usize,
        link_slacks: usize,
        out: &'a Path,
    }
    let report = BuildReport {
        n: s.qp.n(),
        m: s.qp.m(),
        features: s.legend.d,
        label_slacks: s.legend.labeled.len(),
        link_slacks: s.legend.active_links.len(),
        out,
    };
    let table = vec![
        row("variables", report.n),
        row("constraints", report.m),
        row("label slacks", report.label_slacks),
        row("link slacks", report.link_slacks),
        row("written", out.display()),
    ];
    Output::new(&report, table, true)
}

/// The `svm-run` report. Wall times appear only when requested so that the
/// default output depends on the inputs and seed alone.
#[derive(Serialize)]
pub struct RunReport {
    pub instances: usize,
    pub labeled: usize,
    pub features: usize,
    pub ground_n: usize,
    pub ground_m: usize,
    pub lifted_p: usize,
    pub lifted_r: usize,
    pub var_ratio: f64,
    pub con_ratio: f64,
    pub certified: bool,
    pub residuals: LiftResiduals,
    pub ground_status: SolveStatus,
    pub lifted_status: SolveStatus,
    pub ground_objective: f64,
    pub lifted_objective: f64,
    pub prediction_agreement: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Serialize)]
pub struct Timings {
    pub build_s: f64,
    pub lift_s: f64,
    pub ground_solve_s: f64,
    pub lifted_solve_s: f64,
}

fn cmd_svm_run(o: &SvmRunOpts) -> Result<Output> {
    let (ds, truth) = match (&o.features, &o.labels) {
        (Some(f), Some(l)) => {
            let ds = read_dataset(f, l, o.links.as_deref(), &o.positive)?;
            let truth = o.heldout.as_deref().map(|h| read_labels(h, &o.positive)).transpose()?;
            (ds, truth)
        }
        _ => {
            let full = make_two_moons(o.n, o.noise_dim, o.knn, o.seed)?;
            let keep = choose_labeled(&full.labels, o.labeled, o.seed);
            (full.mask_labels(&keep), Some(full.labels))
        }
    };
    let spec = SvmBuildSpec { c1: o.c1, c2: o.c2, transductive: !o.no_transductive };
    let cfg = o.solver.config();

    let t0 = Instant::now();
    let s = build_svm_qp(&ds, &spec)?;
    let t1 = Instant::now();
    let rf = refine_qp(&s.qp, o.refine.mode, o.refine.color_tol);
    let pair = certify(&s.qp, &rf.var_partition, &rf.con_partition, LIFT_TOL)?;
    let quotient = if pair.certified { Some(build_quotient(&s.qp, &pair)?) } else { None };
    let t2 = Instant::now();
    let ground = solve(&s.qp, &cfg)?;
    let t3 = Instant::now();
    let (lifted_status, lifted_x) = match &quotient {
        Some(q) => {
            let r = solve(&q.qp, &cfg)?;
            (r.status, unlift(&r.x, q)?)
        }
        None => (ground.status, ground.x.clone()),
    };
    let t4 = Instant::now();

    let pg = predict(s.legend.weights(&ground.x), s.legend.bias(&ground.x), &ds.features)?;
    let pl = predict(s.legend.weights(&lifted_x), s.legend.bias(&lifted_x), &ds.features)?;
    let agree = pg.iter().zip(&pl).filter(|(a, b)| a == b).count();
    let accuracy = truth.map(|t| {
        let unl: Vec<usize> = (0..ds.n()).filter(|&i| ds.labels[i] == Label::Unlabeled && t[i] != Label::Unlabeled).collect();
        let hit = unl.iter().filter(|&&i| pl[i] == t[i]).count();
        ratio(hit, unl.len())
    });
    let (p, r) = quotient.as_ref().map_or((s.qp.n(), s.qp.m()), |q| (q.qp.n(), q.qp.m()));
    let secs = |a: Instant, b: Instant| (b - a).as_secs_f64();
    let report = RunReport {
        instances: ds.n(),
        labeled: ds.num_labeled(),
        features: ds.d(),
        ground_n: s.qp.n(),
        ground_m: s.qp.m(),
        lifted_p: p,
        lifted_r: r,
        var_ratio: ratio(p, s.qp.n()),
        con_ratio: ratio(r, s.qp.m()),
        certified: pair.certified,
        residuals: pair.residuals,
        ground_status: ground.status,
        lifted_status,
        ground_objective: s.qp.objective(&ground.x)?,
        lifted_objective: s.qp.objective(&lifted_x)?,
        prediction_agreement: ratio(agree, ds.n()),
        accuracy,
        timings: o.timings.then(|| Timings {
            build_s: secs(t0, t1),
            lift_s: secs(t1, t2),
            ground_solve_s: secs(t2, t3),
            lifted_solve_s: secs(t3, t4),
        }),
    };
    let mut table = vec![
        row("instances (labeled)", format!("{} ({})", report.instances, report.labeled)),
        row("ground (n, m)", format!("({}, {})", report.ground_n, report.ground_m)),
        row("lifted (p, r)", format!("({}, {})", report.lifted_p, report.lifted_r)),
        row("ratios (vars, cons)", format!("{:.4}, {:.4}", report.var_ratio, report.con_ratio)),
        row("certified", report.certified),
        row("status (ground, lifted)", format!("{:?}, {:?}", report.ground_status, report.lifted_status)),
        row("objective (ground)", format!("{:.9}", report.ground_objective)),
        row("objective (lifted)", format!("{:.9}", report.lifted_objective)),
        row("prediction agreement", format!("{:.4}", report.prediction_agreement)),
    ];
    if let Some(a) = report.accuracy {
        table.push(row("accuracy (unlabeled)", format!("{a:.4}")));
    }
    if let Some(t) = &report.timings {
        table.push(row("solve seconds (ground, lifted)", format!("{:.3}, {:.3}", t.ground_solve_s, t.lifted_solve_s)));
    }
    Output::new(&report, table, true)
}
