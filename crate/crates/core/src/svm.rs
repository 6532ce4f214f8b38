//! Soft-margin linear SVMs as QPs, with optional transductive link
//! constraints, plus synthetic data generators.
//!
//! Variables are laid out as `[w (d), bias, ξ per labeled instance, ξ per
//! active link]`. The objective is `‖w‖² + c1 Σ ξ_label + c2 Σ ξ_link`, so `Q`
//! is the identity on the `w` block and zero elsewhere. A link `{i, j}` is
//! active when exactly one endpoint is labeled; it asks the unlabeled
//! endpoint to receive the label of the labeled one.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::error::{dim_check, Error, Result};
use crate::qpcore::{QpInstance, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
    Unlabeled,
}

impl Label {
    pub fn sign(self) -> Option<f64> {
        match self {
            Label::Positive => Some(1.0),
            Label::Negative => Some(-1.0),
            Label::Unlabeled => None,
        }
    }

    pub fn from_sign(s: f64) -> Label {
        if s >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// `positive` maps to +1, an empty field or `?` to unlabeled, anything
    /// else to −1.
    pub fn parse(field: &str, positive: &str) -> Label {
        let f = field.trim();
        if f.is_empty() || f == "?" {
            Label::Unlabeled
        } else if f == positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmDataset {
    /// One instance per row.
    pub features: DMatrix<f64>,
    pub labels: Vec<Label>,
    /// Unordered pairs.
    pub links: Vec<(usize, usize)>,
}

impl SvmDataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<Label>, links: Vec<(usize, usize)>) -> Result<Self> {
        let n = features.nrows();
        dim_check(labels.len() == n, || format!("{} labels for {n} instances", labels.len()))?;
        if let Some(&(i, j)) = links.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(Error::Invalid(format!("link ({i}, {j}) out of range for {n} instances")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("features contain non-finite values".into()));
        }
        Ok(SvmDataset { features, labels, links })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_labeled(&self) -> usize {
        self.labels.iter().filter(|l| **l != Label::Unlabeled).count()
    }

    /// Copy with only the instances in `keep` labeled.
    pub fn mask_labels(&self, keep: &[usize]) -> SvmDataset {
        let keep: BTreeSet<usize> = keep.iter().copied().collect();
        let labels = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| if keep.contains(&i) { l } else { Label::Unlabeled })
            .collect();
        SvmDataset { features: self.features.clone(), labels, links: self.links.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SvmBuildSpec {
    pub c1: f64,
    pub c2: f64,
    pub transductive: bool,
}

impl Default for SvmBuildSpec {
    fn default() -> Self {
        SvmBuildSpec { c1: 1.0, c2: 1.0, transductive: true }
    }
}

/// Where each block of the variable vector lives.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SvmLegend {
    pub d: usize,
    /// Instance behind each label slack, in order.
    pub labeled: Vec<usize>,
    /// `(labeled, unlabeled)` behind each link slack, in order.
    pub active_links: Vec<(usize, usize)>,
}

impl SvmLegend {
    pub fn bias_index(&self) -> usize {
        self.d
    }

    pub fn label_slack(&self, k: usize) -> usize {
        self.d + 1 + k
    }

    pub fn link_slack(&self, k: usize) -> usize {
        self.d + 1 + self.labeled.len() + k
    }

    pub fn n_vars(&self) -> usize {
        self.d + 1 + self.labeled.len() + self.active_links.len()
    }

    pub fn weights<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.d]
    }

    pub fn bias(&self, x: &[f64]) -> f64 {
        x[self.d]
    }
}

#[derive(Clone, Debug)]
pub struct SvmQp {
    pub qp: QpInstance,
    pub legend: SvmLegend,
}

fn active_links(ds: &SvmDataset) -> Vec<(usize, usize)> {
    let mut seen = BTreeSet::new();
    for &(i, j) in &ds.links {
        let (li, lj) = (ds.labels[i] != Label::Unlabeled, ds.labels[j] != Label::Unlabeled);
        let oriented = match (li, lj) {
            (true, false) => (i, j),
            (false, true) => (j, i),
            _ => continue,
        };
        seen.insert(oriented);
    }
    seen.into_iter().collect()
}

pub fn build_svm_qp(ds: &SvmDataset, spec: &SvmBuildSpec) -> Result<SvmQp> {
    if !(spec.c1 > 0.0 && spec.c2 > 0.0 && spec.c1.is_finite() && spec.c2.is_finite()) {
        return Err(Error::Invalid("slack penalties must be positive".into()));
    }
    let labeled: Vec<usize> = (0..ds.n()).filter(|&i| ds.labels[i] != Label::Unlabeled).collect();
    if labeled.is_empty() {
        return Err(Error::Invalid("the dataset has no labeled instances".into()));
    }
    let links = if spec.transductive { active_links(ds) } else { Vec::new() };
    let legend = SvmLegend { d: ds.d(), labeled, active_links: links };
    let (d, nl, nk) = (legend.d, legend.labeled.len(), legend.active_links.len());
    let n = legend.n_vars();

    let mut c = vec![0.0; n];
    c[d + 1..d + 1 + nl].iter_mut().for_each(|v| *v = spec.c1);
    c[d + 1 + nl..].iter_mut().for_each(|v| *v = spec.c2);
    let q = SparseMatrix::from_triplets(n, n, (0..d).map(|k| (k, k, 1.0)))?;

    // −y (w·x + bias) − ξ ≤ −1, then −ξ ≤ 0, for labels and then for links
    let mut trip = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let margin = |trip: &mut Vec<(usize, usize, f64)>, b: &mut Vec<f64>, y: f64, x: usize, slack: usize| {
        let row = b.len();
        for k in 0..d {
            trip.push((row, k, -y * ds.features[(x, k)]));
        }
        trip.push((row, d, -y));
        trip.push((row, slack, -1.0));
        b.push(-1.0);
    };
    let nonneg = |trip: &mut Vec<(usize, usize, f64)>, b: &mut Vec<f64>, slack: usize| {
        trip.push((b.len(), slack, -1.0));
        b.push(0.0);
    };
    for (k, &i) in legend.labeled.iter().enumerate() {
        margin(&mut trip, &mut b, ds.labels[i].sign().unwrap_or(1.0), i, legend.label_slack(k));
    }
    for k in 0..nl {
        nonneg(&mut trip, &mut b, legend.label_slack(k));
    }
    for (k, &(i, j)) in legend.active_links.iter().enumerate() {
        margin(&mut trip, &mut b, ds.labels[i].sign().unwrap_or(1.0), j, legend.link_slack(k));
    }
    for k in 0..nk {
        nonneg(&mut trip, &mut b, legend.link_slack(k));
    }
    let a = SparseMatrix::from_triplets(b.len(), n, trip)?;
    let mut vars: Vec<String> = (0..d).map(|k| format!("w{k}")).collect();
    vars.push("bias".into());
    vars.extend(legend.labeled.iter().map(|i| format!("slack{i}")));
    vars.extend(legend.active_links.iter().map(|(i, j)| format!("coslack{i}_{j}")));
    let qp = QpInstance::new(q, c, a, b)?.with_names(Some(vars), None)?;
    Ok(SvmQp { qp, legend })
}

/// `sign(w·x + bias)` per row, with `sign(0) = +1`.
pub fn predict(w: &[f64], bias: f64, features: &DMatrix<f64>) -> Result<Vec<Label>> {
    dim_check(w.len() == features.ncols(), || format!("{} weights for {} features", w.len(), features.ncols()))?;
    Ok(features
        .row_iter()
        .map(|r| Label::from_sign(r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + bias))
        .collect())
}

/// Symmetric k-nearest-neighbour pairs `(i, j)` with `i < j`; ties go to the
/// lower index.
pub fn knn_links(features: &DMatrix<f64>, k: usize) -> Vec<(usize, usize)> {
    let n = features.nrows();
    let mut pairs = BTreeSet::new();
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((features.row(i) - features.row(j)).norm_squared(), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in d.iter().take(k) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    pairs.into_iter().collect()
}

/// Two interleaved half circles in the first two coordinates (noise 0.1),
/// followed by `noise_dim` standard Gaussian features, all instances labeled
/// (upper moon +1) and linked by the symmetric `k_nn` graph.
pub fn make_two_moons(n: usize, noise_dim: usize, k_nn: usize, seed: u64) -> Result<SvmDataset> {
    if !n.is_multiple_of(2) {
        return Err(Error::Invalid(format!("two moons needs an even number of points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, 0.1).map_err(|e| Error::Invalid(e.to_string()))?;
    let half = n / 2;
    let mut features = DMatrix::zeros(n, 2 + noise_dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % half.max(1);
        let t = if half > 1 { std::f64::consts::PI * k as f64 / (half - 1) as f64 } else { 0.0 };
        let (x, y, l) = if i < half {
            (t.cos(), t.sin(), Label::Positive)
        } else {
            (1.0 - t.cos(), 0.5 - t.sin(), Label::Negative)
        };
        features[(i, 0)] = x + jitter.sample(&mut rng);
        features[(i, 1)] = y + jitter.sample(&mut rng);
        for f in 0..noise_dim {
            features[(i, 2 + f)] = StandardNormal.sample(&mut rng);
        }
        labels.push(l);
    }
    let links = knn_links(&features, k_nn);
    SvmDataset::new(features, labels, links)
}

/// Picks `count` instances to keep labeled, at least one of each class when
/// both occur and `count ≥ 2`.
pub fn choose_labeled(labels: &[Label], count: usize, seed: u64) -> Vec<usize> {
    let n = labels.len();
    let count = count.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick: Vec<usize> = sample(&mut rng, n, count).into_vec();
    if count >= 2 {
        for class in [Label::Positive, Label::Negative] {
            if !pick.iter().any(|&i| labels[i] == class) {
                if let Some(i) = (0..n).find(|&i| labels[i] == class) {
                    let slot = pick.iter().position(|&p| pick.iter().filter(|&&q| labels[q] == labels[p]).count() > 1);
                    if let Some(s) = slot {
                        pick[s] = i;
                    }
                }
            }
        }
    }
    pick.sort_unstable();
    pick
}

/// Labeled instances from two Gaussian classes plus `groups` unlabeled
/// prototypes, each repeated `duplicates` times. Every copy of a prototype
/// gets the same features and is linked to the same `links_per_group`
/// labeled instances.
pub fn make_duplicated_groups(
    groups: usize,
    duplicates: usize,
    n_labeled: usize,
    d: usize,
    links_per_group: usize,
    seed: u64,
) -> Result<SvmDataset> {
    if n_labeled == 0 || d == 0 {
        return Err(Error::Invalid("need labeled instances and at least one feature".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_labeled + groups * duplicates;
    let mut features = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n_labeled {
        let l = if i % 2 == 0 { Label::Positive } else { Label::Negative };
        let shift = l.sign().unwrap_or(1.0) * 1.5;
        for f in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            features[(i, f)] = z + if f == 0 { shift } else { 0.0 };
        }
        labels.push(l);
    }
    let mut links = Vec::new();
    let mut row = n_labeled;
    for _ in 0..groups {
        let proto: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let neighbours = sample(&mut rng, n_labeled, links_per_group.min(n_labeled)).into_vec();
        for _ in 0..duplicates {
            for (f, &v) in proto.iter().enumerate() {
                features[(row, f)] = v;
            }
            labels.push(Label::Unlabeled);
            links.extend(neighbours.iter().map(|&l| (l, row)));
            row += 1;
        }
    }
    SvmDataset::new(features, labels, links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::{build_quotient, certify, unlift, LIFT_TOL};
    use crate::refine::{refine_qp, RefineMode, COLOR_TOL};
    use crate::solve::{solve, SolveStatus, SolverConfig};

    fn tiny() -> SvmDataset {
        let x = DMatrix::from_row_slice(2, 1, &[2.0, -2.0]);
        SvmDataset::new(x, vec![Label::Positive, Label::Negative], vec![]).unwrap()
    }

    #[test]
    fn counts_from_construction() {
        let ds = SvmDataset::new(
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, -1.0]),
            vec![Label::Positive, Label::Negative],
            vec![],
        )
        .unwrap();
        let s = build_svm_qp(&ds, &SvmBuildSpec { transductive: false, ..Default::default() }).unwrap();
        assert_eq!((s.qp.n(), s.qp.m()), (3 + 1 + 2, 4));
    }

    #[test]
    fn separable_pair_has_closed_form_separator() {
        let s = build_svm_qp(&tiny(), &SvmBuildSpec { c1: 1e3, ..Default::default() }).unwrap();
        let r = solve(&s.qp, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((s.legend.weights(&r.x)[0] - 0.5).abs() < 1e-6);
        assert!(s.legend.bias(&r.x).abs() < 1e-6);
        let margins = s.qp.a().mul_vec(&r.x).unwrap();
        assert!((margins[0] + 1.0).abs() < 1e-6 && (margins[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn predict_examples() {
        let x = DMatrix::from_row_slice(3, 1, &[2.0, -2.0, 0.0]);
        let p = predict(&[1.0], 0.0, &x).unwrap();
        assert_eq!(p, vec![Label::Positive, Label::Negative, Label::Positive]);
        assert!(predict(&[1.0, 2.0], 0.0, &x).is_err());
    }

    #[test]
    fn invalid_inputs() {
        let unl = tiny().mask_labels(&[]);
        assert!(build_svm_qp(&unl, &SvmBuildSpec::default()).is_err());
        assert!(build_svm_qp(&tiny(), &SvmBuildSpec { c1: 0.0, ..Default::default() }).is_err());
        assert!(SvmDataset::new(DMatrix::zeros(2, 1), vec![Label::Positive; 2], vec![(0, 2)]).is_err());
    }

    #[test]
    fn only_labeled_to_unlabeled_links_are_active() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0, -1.0, 0.5, 0.3]);
        let labels = vec![Label::Positive, Label::Negative, Label::Unlabeled, Label::Unlabeled];
        let ds = SvmDataset::new(x, labels, vec![(0, 1), (2, 3), (2, 0), (0, 2), (1, 3)]).unwrap();
        let s = build_svm_qp(&ds, &SvmBuildSpec::default()).unwrap();
        assert_eq!(s.legend.active_links, vec![(0, 2), (1, 3)]);
        assert_eq!(s.qp.m(), 2 * 2 + 2 * 2);
        let off = build_svm_qp(&ds, &SvmBuildSpec { transductive: false, ..Default::default() }).unwrap();
        assert!(off.legend.active_links.is_empty());
    }

    #[test]
    fn two_moons_shape_and_determinism() {
        let ds = make_two_moons(8, 0, 1, 3).unwrap();
        assert_eq!(ds.n(), 8);
        assert!(ds.links.len() >= 4);
        assert_eq!(make_two_moons(8, 5, 2, 3).unwrap(), make_two_moons(8, 5, 2, 3).unwrap());
        assert!(make_two_moons(7, 0, 1, 0).is_err());
        let big = make_two_moons(200, 150, 4, 0).unwrap();
        assert_eq!(big.d(), 152);
        assert!(big.links.len() >= 400);
    }

    #[test]
    fn choose_labeled_covers_both_classes() {
        let labels: Vec<Label> = (0..50).map(|i| if i < 48 { Label::Positive } else { Label::Negative }).collect();
        for seed in 0..5 {
            let pick = choose_labeled(&labels, 3, seed);
            assert_eq!(pick.len(), 3);
            assert!(pick.iter().any(|&i| labels[i] == Label::Negative));
        }
    }

    fn lifted_ratio(ds: &SvmDataset) -> f64 {
        let s = build_svm_qp(ds, &SvmBuildSpec::default()).unwrap();
        let r = refine_qp(&s.qp, RefineMode::Sum, COLOR_TOL);
        r.var_partition.num_classes() as f64 / s.qp.n() as f64
    }

    #[test]
    fn duplicated_unlabeled_instances_compress() {
        let ds = make_duplicated_groups(3, 1, 6, 3, 2, 1).unwrap();
        let base = lifted_ratio(&ds);
        let dup = make_duplicated_groups(3, 4, 6, 3, 2, 1).unwrap();
        let r = lifted_ratio(&dup);
        assert!(r < base && r < 1.0, "{r} vs {base}");

        let s = build_svm_qp(&dup, &SvmBuildSpec::default()).unwrap();
        let rf = refine_qp(&s.qp, RefineMode::Sum, COLOR_TOL);
        let pair = certify(&s.qp, &rf.var_partition, &rf.con_partition, LIFT_TOL).unwrap();
        assert!(pair.certified);
        let quotient = build_quotient(&s.qp, &pair).unwrap();
        let cfg = SolverConfig::default();
        let ground = solve(&s.qp, &cfg).unwrap();
        let lifted = solve(&quotient.qp, &cfg).unwrap();
        let x = unlift(&lifted.x, &quotient).unwrap();
        assert!((ground.objective - lifted.objective).abs() <= 1e-5 * (1.0 + ground.objective.abs()));
        let pg = predict(s.legend.weights(&ground.x), s.legend.bias(&ground.x), &dup.features).unwrap();
        let pl = predict(s.legend.weights(&x), s.legend.bias(&x), &dup.features).unwrap();
        assert_eq!(pg, pl);
    }

    #[test]
    fn generic_features_without_links_stay_discrete() {
        let ds = make_two_moons(20, 3, 2, 5).unwrap();
        let masked = ds.mask_labels(&choose_labeled(&ds.labels, 10, 5));
        let s = build_svm_qp(&masked, &SvmBuildSpec { transductive: false, ..Default::default() }).unwrap();
        let r = refine_qp(&s.qp, RefineMode::Sum, COLOR_TOL);
        assert!(r.var_partition.is_discrete());
    }
}
