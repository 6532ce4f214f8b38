//! Orbit detection for Euclidean point sets.
//!
//! Two points lie in the same exact class when their sorted distance
//! vectors to all other points agree. The approximate variant optionally
//! whitens the data, measures distances to a subset of anchor points, sorts
//! each row and clusters the rows with k-means.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qpcore::Partition;

pub const DIST_TOL: f64 = 1e-9;
/// Largest point set accepted by [`exact_orbits`].
pub const EXACT_LIMIT: usize = 5000;
const MAX_RESEEDS: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorStrategy {
    /// Uniform random subset drawn from the seed.
    #[default]
    Uniform,
    /// k-means++ style D² sampling over the (possibly whitened) points.
    Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub whiten: bool,
    /// Number of anchors; 0 uses every point.
    pub n_anchors: usize,
    /// Cluster budget `k`.
    pub n_orbits: usize,
    pub seed: u64,
    pub cluster_iters: usize,
    pub anchors: AnchorStrategy,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig { whiten: false, n_anchors: 0, n_orbits: 2, seed: 0, cluster_iters: 100, anchors: AnchorStrategy::Uniform }
    }
}

impl ApproxConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n_orbits == 0 {
            return Err(Error::Invalid("n_orbits must be at least 1".into()));
        }
        if self.n_anchors > n {
            return Err(Error::Invalid(format!("{} anchors requested for {n} points", self.n_anchors)));
        }
        Ok(())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn point_rows(points: &DMatrix<f64>) -> Vec<Vec<f64>> {
    points.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn sorted_signature(p: &[f64], anchors: &[&[f64]]) -> Vec<f64> {
    let mut row: Vec<f64> = anchors.iter().map(|a| dist(p, a)).collect();
    row.sort_by(f64::total_cmp);
    row
}

/// Groups signatures that agree entrywise within `tol`. Rows are visited in
/// lexicographic order and each is compared with the leaders of the classes
/// whose first entry is within reach.
fn group_signatures(sigs: &[Vec<f64>], tol: f64) -> Partition {
    let n = sigs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        sigs[i]
            .iter()
            .zip(&sigs[j])
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let first = |i: usize| sigs[i].first().copied().unwrap_or(0.0);
    let mut leaders: Vec<usize> = Vec::new();
    let mut label = vec![0usize; n];
    for &i in &order {
        let hit = leaders.iter().enumerate().rev().take_while(|(_, &l)| first(l) >= first(i) - tol).find(|(_, &l)| {
            sigs[l].iter().zip(&sigs[i]).all(|(a, b)| (a - b).abs() <= tol)
        });
        match hit {
            Some((c, _)) => label[i] = c,
            None => {
                label[i] = leaders.len();
                leaders.push(i);
            }
        }
    }
    Partition::from_labels(&label)
}

/// Partition of the rows of `points` by their sorted distances to all other
/// points.
pub fn exact_orbits(points: &DMatrix<f64>, dist_tol: f64) -> Result<Partition> {
    let n = points.nrows();
    if n > EXACT_LIMIT {
        return Err(Error::TooLarge { n, limit: EXACT_LIMIT });
    }
    let rows = point_rows(points);
    let sigs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let others: Vec<&[f64]> = (0..n).filter(|&j| j != i).map(|j| rows[j].as_slice()).collect();
            sorted_signature(&rows[i], &others)
        })
        .collect();
    Ok(group_signatures(&sigs, dist_tol))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Whitened {
    pub points: DMatrix<f64>,
    /// Set when the covariance was singular (or `n ≤ d`) and a ridge was added.
    pub regularized: bool,
}

/// ZCA whitening with the population covariance `(1/n) Σ (x − μ)(x − μ)ᵀ`.
pub fn whiten(points: &DMatrix<f64>) -> Whitened {
    let (n, d) = points.shape();
    if n == 0 || d == 0 {
        return Whitened { points: points.clone(), regularized: false };
    }
    let mean = points.row_mean();
    let mut centered = points.clone();
    for mut r in centered.row_iter_mut() {
        r -= &mean;
    }
    let mut cov = centered.transpose() * &centered / n as f64;
    let trace = cov.trace();
    if trace <= 0.0 {
        // every point coincides with the mean
        return Whitened { points: centered, regularized: true };
    }
    let eig = SymmetricEigen::new(cov.clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let regularized = n <= d || lmin <= 1e-12 * lmax;
    let eig = if regularized {
        cov += DMatrix::identity(d, d) * (1e-8 * trace / d as f64);
        SymmetricEigen::new(cov)
    } else {
        eig
    };
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let w = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    Whitened { points: centered * w, regularized }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxOrbits {
    pub partition: Partition,
    pub anchors: Vec<usize>,
    pub iterations: usize,
    pub reseeds: usize,
    /// Fewer than `n_orbits` clusters survived.
    pub short: bool,
    pub whitening_regularized: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// D² sampling; stops early once every remaining row sits on a center.
fn kmeans_pp(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = rows.len();
    let scale = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
    let zero = 1e-24 * scale.max(1.0);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &rows[chosen[0]])).collect();
    while chosen.len() < k {
        let weights: Vec<f64> = d2.iter().map(|&d| if d <= zero { 0.0 } else { d }).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut t = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                pick = i;
                if t < w {
                    break;
                }
                t -= w;
            }
        }
        chosen.push(pick);
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &rows[pick]));
        }
    }
    chosen
}

fn nearest(row: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(row, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

struct Clustering {
    assign: Vec<usize>,
    iterations: usize,
    reseeds: usize,
    short: bool,
}

fn lloyd(rows: &[Vec<f64>], k: usize, iters: usize, rng: &mut ChaCha8Rng) -> Clustering {
    let dim = rows[0].len();
    let mut centers: Vec<Vec<f64>> = kmeans_pp(rows, k, rng).into_iter().map(|i| rows[i].clone()).collect();
    let short_init = centers.len() < k;
    let mut assign: Vec<usize> = rows.iter().map(|r| nearest(r, &centers).0).collect();
    let mut reseeds = 0;
    let mut short = short_init;
    let mut iterations = 0;
    while iterations < iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (r, &a) in rows.iter().zip(&assign) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(r) {
                *s += v;
            }
        }
        let empty: Vec<usize> = (0..centers.len()).filter(|&c| counts[c] == 0).collect();
        if !empty.is_empty() {
            if reseeds + empty.len() <= MAX_RESEEDS {
                // move each empty center onto the row farthest from its own center
                for &c in &empty {
                    let far = (0..rows.len())
                        .max_by(|&i, &j| {
                            let di = sq_dist(&rows[i], &centers[assign[i]]);
                            let dj = sq_dist(&rows[j], &centers[assign[j]]);
                            di.total_cmp(&dj).then(j.cmp(&i))
                        })
                        .unwrap_or(0);
                    centers[c] = rows[far].clone();
                    assign[far] = c;
                    reseeds += 1;
                }
            } else {
                for &c in empty.iter().rev() {
                    centers.remove(c);
                }
                short = true;
            }
            assign = rows.iter().map(|r| nearest(r, &centers).0).collect();
            continue;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            for (x, s) in center.iter_mut().zip(&sums[c]) {
                *x = s / counts[c] as f64;
            }
        }
        let next: Vec<usize> = rows.iter().map(|r| nearest(r, &centers).0).collect();
        let done = next == assign;
        assign = next;
        if done {
            break;
        }
    }
    Clustering { assign, iterations, reseeds, short }
}

pub fn approx_orbits(points: &DMatrix<f64>, cfg: &ApproxConfig) -> Result<ApproxOrbits> {
    let n = points.nrows();
    cfg.validate(n)?;
    if n == 0 {
        return Ok(ApproxOrbits {
            partition: Partition::discrete(0),
            anchors: vec![],
            iterations: 0,
            reseeds: 0,
            short: false,
            whitening_regularized: false,
        });
    }
    let (data, whitening_regularized) = if cfg.whiten {
        let w = whiten(points);
        (w.points, w.regularized)
    } else {
        (points.clone(), false)
    };
    let rows = point_rows(&data);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let anchors: Vec<usize> = if cfg.n_anchors == 0 {
        (0..n).collect()
    } else {
        let mut a = match cfg.anchors {
            AnchorStrategy::Uniform => sample(&mut rng, n, cfg.n_anchors).into_vec(),
            AnchorStrategy::Spread => {
                let mut a = kmeans_pp(&rows, cfg.n_anchors, &mut rng);
                // coincident points cannot be told apart; fill up uniformly
                let mut rest: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
                while a.len() < cfg.n_anchors {
                    a.push(rest.remove(rng.random_range(0..rest.len())));
                }
                a
            }
        };
        a.sort_unstable();
        a
    };
    let anchor_rows: Vec<&[f64]> = anchors.iter().map(|&a| rows[a].as_slice()).collect();
    let sigs: Vec<Vec<f64>> = rows.iter().map(|r| sorted_signature(r, &anchor_rows)).collect();
    let k = cfg.n_orbits.min(n);
    let cl = lloyd(&sigs, k, cfg.cluster_iters, &mut rng);
    Ok(ApproxOrbits {
        partition: Partition::from_labels(&cl.assign),
        anchors,
        iterations: cl.iterations,
        reseeds: cl.reseeds,
        short: cl.short,
        whitening_regularized,
    })
}

/// Two isotropic Gaussian blobs of `n / 2` points each in the plane, centered
/// at `(0, 0)` and `(separation, 0)`; returns the points and blob labels.
pub fn make_blobs(n: usize, separation: f64, seed: u64) -> (DMatrix<f64>, Vec<usize>) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    let mut pts = DMatrix::zeros(n, 2);
    for (i, &l) in labels.iter().enumerate() {
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        pts[(i, 0)] = x + separation * l as f64;
        pts[(i, 1)] = y;
    }
    (pts, labels)
}
