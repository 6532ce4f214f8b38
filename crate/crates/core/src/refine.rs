//! Color refinement on the colored-graph encoding of a QP.
//!
//! Variables and constraints are the two node kinds. Off-diagonal entries of
//! `Q` are weighted var–var edges, entries of `A` are weighted var–con edges,
//! and `c_i`, `Q_ii`, `b_l` seed the initial colors. Both sides are refined in
//! the same loop until neither changes, which yields the coarsest partition
//! pair satisfying `X^P Q = Q X^P`, `cᵀX^P = cᵀ`, `X^Q b = b` and
//! `X^Q A = A X^P` (sum mode) or their value-counting analogues.
//!
//! Floats are compared by rounding onto a grid of width `color_tol`. Rounding
//! is not transitive: two values straddling a grid boundary split even when
//! closer than `color_tol`.

use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::qpcore::{Partition, QpInstance, SparseMatrix};

/// Default grid width for color hashing.
pub const COLOR_TOL: f64 = 1e-9;
/// Largest size accepted by [`brute_force_coarsest_ep`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineMode {
    /// Class-to-class sums agree (equitable partition).
    Sum,
    /// Class-to-class value multisets agree, and so do diagonals.
    Counting,
}

impl std::str::FromStr for RefineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(RefineMode::Sum),
            "counting" => Ok(RefineMode::Counting),
            other => Err(Error::Invalid(format!("unknown refinement mode `{other}`"))),
        }
    }
}

/// Grid bucket of `v`. With `tol == 0` values are compared exactly.
fn bucket(v: f64, tol: f64) -> i64 {
    if tol > 0.0 {
        (v / tol).round() as i64
    } else if v == 0.0 {
        0
    } else {
        v.to_bits() as i64
    }
}

/// QP encoded as a two-sided weighted colored graph.
#[derive(Clone, Debug)]
pub struct ColoredQpGraph {
    var_colors: Vec<usize>,
    con_colors: Vec<usize>,
    /// `Q` with its diagonal (self-loop weights).
    qq: SparseMatrix,
    a: SparseMatrix,
    at: SparseMatrix,
    mode: RefineMode,
    tol: f64,
}

impl ColoredQpGraph {
    /// Initial colors: constraints by `b_l`; variables by `c_i`, plus `Q_ii`
    /// in counting mode. In sum mode the diagonal enters through the class
    /// sums instead, as `X^P Q = Q X^P` does not require equal diagonals.
    pub fn new(qp: &QpInstance, mode: RefineMode, tol: f64) -> Self {
        let var_keys: Vec<(i64, i64)> = (0..qp.n())
            .map(|i| {
                let diag = match mode {
                    RefineMode::Sum => 0,
                    RefineMode::Counting => bucket(qp.q().get(i, i), tol),
                };
                (bucket(qp.c()[i], tol), diag)
            })
            .collect();
        let con_keys: Vec<i64> = qp.b().iter().map(|&v| bucket(v, tol)).collect();
        ColoredQpGraph {
            var_colors: Partition::from_labels(&var_keys).labels().to_vec(),
            con_colors: Partition::from_labels(&con_keys).labels().to_vec(),
            qq: qp.q().clone(),
            a: qp.a().clone(),
            at: qp.a().transpose(),
            mode,
            tol,
        }
    }

    pub fn var_partition(&self) -> Partition {
        Partition::from_labels(&self.var_colors)
    }

    pub fn con_partition(&self) -> Partition {
        Partition::from_labels(&self.con_colors)
    }

    /// Neighborhood signature of one node. `tag` distinguishes which side the
    /// neighbors live on.
    fn signature<I>(&self, tag: u8, neighbors: I, colors: &[usize], out: &mut Vec<(u8, usize, i64)>)
    where
        I: Iterator<Item = (usize, f64)>,
    {
        match self.mode {
            RefineMode::Sum => {
                let mut raw: Vec<(usize, f64)> = neighbors.map(|(k, v)| (colors[k], v)).collect();
                raw.sort_by_key(|&(c, _)| c);
                let mut idx = 0;
                while idx < raw.len() {
                    let c = raw[idx].0;
                    let mut s = 0.0;
                    while idx < raw.len() && raw[idx].0 == c {
                        s += raw[idx].1;
                        idx += 1;
                    }
                    let bk = bucket(s, self.tol);
                    if bk != 0 {
                        out.push((tag, c, bk));
                    }
                }
            }
            RefineMode::Counting => {
                let start = out.len();
                out.extend(
                    neighbors
                        .map(|(k, v)| (tag, colors[k], bucket(v, self.tol)))
                        .filter(|&(_, _, bk)| bk != 0),
                );
                out[start..].sort_unstable();
            }
        }
    }

    /// One synchronous refinement round. Returns true if anything split.
    pub fn refine_round(&mut self) -> bool {
        let n = self.var_colors.len();
        let m = self.con_colors.len();
        let mut var_sigs = Vec::with_capacity(n);
        for i in 0..n {
            let mut sig = Vec::new();
            self.signature(0, self.qq.row(i), &self.var_colors, &mut sig);
            self.signature(1, self.at.row(i), &self.con_colors, &mut sig);
            var_sigs.push((self.var_colors[i], sig));
        }
        let mut con_sigs = Vec::with_capacity(m);
        for l in 0..m {
            let mut sig = Vec::new();
            self.signature(0, self.a.row(l), &self.var_colors, &mut sig);
            con_sigs.push((self.con_colors[l], sig));
        }
        let new_vars = Partition::from_labels(&var_sigs);
        let new_cons = Partition::from_labels(&con_sigs);
        let changed = new_vars.num_classes() != count_colors(&self.var_colors)
            || new_cons.num_classes() != count_colors(&self.con_colors);
        self.var_colors = new_vars.labels().to_vec();
        self.con_colors = new_cons.labels().to_vec();
        changed
    }
}

fn count_colors(colors: &[usize]) -> usize {
    colors.iter().max().map_or(0, |&c| c + 1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementResult {
    pub var_partition: Partition,
    pub con_partition: Partition,
    /// Rounds run, including the last one that confirmed stability.
    pub rounds: usize,
    pub mode: RefineMode,
}

/// Coarsest stable (var, con) partition pair of `qp`.
pub fn refine_qp(qp: &QpInstance, mode: RefineMode, color_tol: f64) -> RefinementResult {
    let mut graph = ColoredQpGraph::new(qp, mode, color_tol);
    let mut rounds = 0;
    loop {
        rounds += 1;
        if !graph.refine_round() {
            break;
        }
    }
    RefinementResult {
        var_partition: graph.var_partition(),
        con_partition: graph.con_partition(),
        rounds,
        mode,
    }
}

fn check_square_partition(m: &SparseMatrix, p: &Partition) -> Result<()> {
    dim_check(m.is_square() && m.n_rows() == p.len(), || {
        format!("{}x{} matrix with partition of {}", m.n_rows(), m.n_cols(), p.len())
    })
}

/// Sparse class sums of row `i`, ordered by class.
fn class_sums(m: &SparseMatrix, p: &Partition, i: usize) -> Vec<(usize, f64)> {
    let mut raw: Vec<(usize, f64)> = m.row(i).map(|(k, v)| (p.class_of(k), v)).collect();
    raw.sort_by_key(|&(c, _)| c);
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (c, v) in raw {
        match out.last_mut() {
            Some((lc, s)) if *lc == c => *s += v,
            _ => out.push((c, v)),
        }
    }
    out
}

fn sums_agree(x: &[(usize, f64)], y: &[(usize, f64)], tol: f64) -> bool {
    let (mut a, mut b) = (0, 0);
    while a < x.len() || b < y.len() {
        let d = match (x.get(a), y.get(b)) {
            (Some(&(ca, va)), Some(&(cb, vb))) if ca == cb => {
                a += 1;
                b += 1;
                va - vb
            }
            (Some(&(ca, va)), Some(&(cb, _))) if ca < cb => {
                a += 1;
                va
            }
            (Some(_), Some(&(_, vb))) | (None, Some(&(_, vb))) => {
                b += 1;
                vb
            }
            (Some(&(_, va)), None) => {
                a += 1;
                va
            }
            (None, None) => unreachable!(),
        };
        if d.abs() > tol {
            return false;
        }
    }
    true
}

/// True iff every class-to-class row sum of `m` agrees within `tol` across
/// the members of each class.
pub fn is_equitable(m: &SparseMatrix, p: &Partition, tol: f64) -> Result<bool> {
    check_square_partition(m, p)?;
    Ok(p.classes().iter().all(|class| {
        let rep = class_sums(m, p, class[0]);
        class[1..].iter().all(|&i| sums_agree(&rep, &class_sums(m, p, i), tol))
    }))
}

/// True iff diagonals agree within classes and every row holds the same
/// multiset of (grid-bucketed) values in each class.
pub fn is_counting(m: &SparseMatrix, p: &Partition, tol: f64) -> Result<bool> {
    check_square_partition(m, p)?;
    let row_multiset = |i: usize| {
        let mut v: Vec<(usize, i64)> = m
            .row(i)
            .map(|(k, x)| (p.class_of(k), bucket(x, tol)))
            .filter(|&(_, b)| b != 0)
            .collect();
        v.sort_unstable();
        v
    };
    Ok(p.classes().iter().all(|class| {
        let d0 = bucket(m.get(class[0], class[0]), tol);
        let rep = row_multiset(class[0]);
        class[1..]
            .iter()
            .all(|&i| bucket(m.get(i, i), tol) == d0 && row_multiset(i) == rep)
    }))
}

/// Exhaustive coarsest partition passing [`is_equitable`] (sum) or
/// [`is_counting`] (counting). Test oracle for small `n`.
pub fn brute_force_coarsest_ep(m: &SparseMatrix, mode: RefineMode, tol: f64) -> Result<Partition> {
    let n = m.n_rows();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    dim_check(m.is_square(), || "brute force on a non-square matrix".into())?;
    let accept = |p: &Partition| -> bool {
        match mode {
            RefineMode::Sum => is_equitable(m, p, tol).unwrap_or(false),
            RefineMode::Counting => is_counting(m, p, tol).unwrap_or(false),
        }
    };
    let mut best: Option<Partition> = None;
    let mut tie = false;
    // restricted growth strings enumerate each set partition exactly once
    let mut rgs = vec![0usize; n];
    loop {
        let p = Partition::from_labels(&rgs);
        if accept(&p) {
            match &best {
                Some(b) if b.num_classes() < p.num_classes() => {}
                Some(b) if b.num_classes() == p.num_classes() => tie = true,
                _ => {
                    best = Some(p);
                    tie = false;
                }
            }
        }
        if !next_rgs(&mut rgs) {
            break;
        }
    }
    if tie {
        return Err(Error::Invalid("no unique coarsest partition (tolerance too loose?)".into()));
    }
    Ok(best.unwrap_or_else(|| Partition::discrete(n)))
}

fn next_rgs(rgs: &mut [usize]) -> bool {
    let n = rgs.len();
    for i in (1..n).rev() {
        let max_prefix = rgs[..i].iter().copied().max().unwrap_or(0);
        if rgs[i] <= max_prefix {
            rgs[i] += 1;
            for r in rgs.iter_mut().skip(i + 1) {
                *r = 0;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpcore::{left_multiply_partition_matrix, right_multiply_partition_matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sym(rows: &[Vec<f64>]) -> SparseMatrix {
        SparseMatrix::from_rows(rows).unwrap()
    }

    fn path3() -> SparseMatrix {
        sym(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]])
    }

    fn part(n: usize, classes: &[&[usize]]) -> Partition {
        Partition::from_classes(n, classes.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    #[test]
    fn bell_numbers_from_rgs() {
        for (n, bell) in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (6, 203)] {
            let mut rgs = vec![0; n];
            let mut count = 1;
            while next_rgs(&mut rgs) {
                count += 1;
            }
            assert_eq!(count, bell);
        }
    }

    #[test]
    fn refine_examples() {
        let full = sym(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        let r = refine_qp(&QpInstance::unconstrained(full, vec![0.0; 3]).unwrap(), RefineMode::Sum, COLOR_TOL);
        assert_eq!(r.var_partition, Partition::single(3));

        let r = refine_qp(&QpInstance::unconstrained(path3(), vec![0.0; 3]).unwrap(), RefineMode::Sum, COLOR_TOL);
        assert_eq!(r.var_partition, part(3, &[&[0, 2], &[1]]));

        let qp = QpInstance::unconstrained(SparseMatrix::zeros(3, 3), vec![1.0, 2.0, 1.0]).unwrap();
        let r = refine_qp(&qp, RefineMode::Counting, COLOR_TOL);
        assert_eq!(r.var_partition, part(3, &[&[0, 2], &[1]]));
    }

    #[test]
    fn running_example_sum_vs_counting() {
        let qp = crate::qpcore::running_example();
        let sum = refine_qp(&qp, RefineMode::Sum, COLOR_TOL);
        assert_eq!(sum.var_partition, Partition::single(4));
        assert_eq!(sum.con_partition, Partition::single(4));
        let counting = refine_qp(&qp, RefineMode::Counting, COLOR_TOL);
        assert_eq!(counting.var_partition, part(4, &[&[0, 2], &[1, 3]]));
        assert!(counting.var_partition.refines(&sum.var_partition));
    }

    #[test]
    fn equitable_examples() {
        let m = path3();
        assert!(is_equitable(&m, &Partition::discrete(3), 0.0).unwrap());
        assert!(is_equitable(&m, &part(3, &[&[0, 2], &[1]]), 0.0).unwrap());
        assert!(!is_equitable(&m, &part(3, &[&[0, 1], &[2]]), 0.0).unwrap());
        assert!(is_equitable(&m, &Partition::single(2), 0.0).is_err());
    }

    #[test]
    fn equitable_matches_commutator() {
        let m = path3();
        for labels in [[0, 1, 0], [0, 0, 1], [0, 0, 0], [0, 1, 2]] {
            let p = Partition::from_labels(&labels);
            let comm = left_multiply_partition_matrix(&m, &p)
                .unwrap()
                .max_abs_diff(&right_multiply_partition_matrix(&m, &p).unwrap())
                .unwrap();
            assert_eq!(is_equitable(&m, &p, 1e-12).unwrap(), comm <= 1e-12, "{labels:?}");
        }
    }

    #[test]
    fn counting_examples() {
        assert!(is_counting(&path3(), &Partition::discrete(3), 0.0).unwrap());
        let circ = sym(&[
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 0.0, 1.0, 2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 2.0, 1.0, 0.0],
        ]);
        assert!(is_counting(&circ, &Partition::single(4), 0.0).unwrap());
        let m = sym(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]]);
        assert!(is_counting(&m, &part(3, &[&[0, 1], &[2]]), 0.0).unwrap());
        // class sums differ, and so do the multisets
        let m = sym(&[vec![0.0, 2.0, 2.0, 0.0], vec![2.0, 0.0, 1.0, 1.0], vec![2.0, 1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]]);
        let p = part(4, &[&[0, 1, 2], &[3]]);
        assert!(!is_counting(&m, &p, 0.0).unwrap());
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(
            brute_force_coarsest_ep(&SparseMatrix::identity(2), RefineMode::Sum, 0.0).unwrap(),
            Partition::single(2)
        );
        assert_eq!(
            brute_force_coarsest_ep(&path3(), RefineMode::Sum, 0.0).unwrap(),
            part(3, &[&[0, 2], &[1]])
        );
        // Asymmetric graph on 6 vertices: 0-1, 1-2, 2-3, 3-4, 2-4, 4-5 plus
        // the weight 2 on 0-1 removes the remaining path reflection.
        let edges = [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (2, 4, 1.0), (4, 5, 1.0)];
        let m = SparseMatrix::from_triplets(6, 6, edges.iter().flat_map(|&(i, j, v)| [(i, j, v), (j, i, v)])).unwrap();
        assert!(brute_force_coarsest_ep(&m, RefineMode::Sum, 0.0).unwrap().is_discrete());
        assert!(brute_force_coarsest_ep(&SparseMatrix::identity(9), RefineMode::Sum, 0.0).is_err());
    }

    #[test]
    fn seeded_random_asymmetric_instance_is_discrete() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 7;
        let mut trips = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.random_range(1..6) as f64;
                trips.push((i, j, v));
                trips.push((j, i, v));
            }
        }
        let m = SparseMatrix::from_triplets(n, n, trips).unwrap();
        let oracle = brute_force_coarsest_ep(&m, RefineMode::Sum, 0.0).unwrap();
        assert!(oracle.is_discrete());
        let r = refine_qp(&QpInstance::unconstrained(m, vec![0.0; n]).unwrap(), RefineMode::Sum, COLOR_TOL);
        assert_eq!(r.var_partition, oracle);
    }

    #[test]
    fn result_is_stable_and_couples_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 6;
            let m = 4;
            let block: Vec<(usize, usize, f64)> = (0..8)
                .map(|_| (rng.random_range(0..m), rng.random_range(0..n), rng.random_range(1..3) as f64))
                .collect();
            let a = SparseMatrix::from_triplets(m, n, block).unwrap();
            let qp = QpInstance::new(SparseMatrix::identity(n), vec![0.0; n], a.clone(), vec![1.0; m]).unwrap();
            let r = refine_qp(&qp, RefineMode::Sum, COLOR_TOL);
            let mut g = ColoredQpGraph::new(&qp, RefineMode::Sum, COLOR_TOL);
            g.var_colors = r.var_partition.labels().to_vec();
            g.con_colors = r.con_partition.labels().to_vec();
            assert!(!g.refine_round());
            let lhs = left_multiply_partition_matrix(&a, &r.con_partition).unwrap();
            let rhs = right_multiply_partition_matrix(&a, &r.var_partition).unwrap();
            assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn counting_classes_sit_inside_sum_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = 7;
            let mut trips = Vec::new();
            for i in 0..n {
                for j in i..n {
                    if rng.random_bool(0.4) {
                        let v = rng.random_range(1..3) as f64;
                        trips.push((i, j, v));
                        if i != j {
                            trips.push((j, i, v));
                        }
                    }
                }
            }
            let qp = QpInstance::unconstrained(SparseMatrix::from_triplets(n, n, trips).unwrap(), vec![0.0; n]).unwrap();
            let s = refine_qp(&qp, RefineMode::Sum, COLOR_TOL);
            let c = refine_qp(&qp, RefineMode::Counting, COLOR_TOL);
            assert!(c.var_partition.refines(&s.var_partition));
            assert!(is_counting(qp.q(), &c.var_partition, COLOR_TOL).unwrap());
            assert_eq!(c.var_partition, brute_force_coarsest_ep(qp.q(), RefineMode::Counting, 0.0).unwrap());
        }
    }

    #[test]
    fn deterministic() {
        let qp = crate::qpcore::running_example();
        assert_eq!(refine_qp(&qp, RefineMode::Sum, COLOR_TOL), refine_qp(&qp, RefineMode::Sum, COLOR_TOL));
    }
}
