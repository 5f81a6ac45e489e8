//! k-means partitions: Lloyd iterations with k-means++ seeding.
//!
//! The fitted [`PartitionModel`] is the allocation rule used for every
//! subset evaluation. It is computed once on the full data and never refit.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Labeling};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::SeedStream;

/// Nearest-center allocation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionModel {
    centers: Vec<Vec<f64>>,
    inertia: f64,
}

impl PartitionModel {
    pub fn new(centers: Vec<Vec<f64>>, inertia: f64) -> Result<Self> {
        let dim = centers.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        if dim == 0 {
            return Err(Error::EmptyInput);
        }
        for c in &centers {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite center".into()));
            }
        }
        Ok(Self { centers, inertia })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Total within-cluster squared distance of the data the model was fit on.
    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Label of the nearest center; the lowest label wins ties.
    pub fn assign(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(self.nearest(point))
    }

    /// [`assign`](Self::assign) without the dimension check.
    #[inline]
    pub fn nearest(&self, point: &[f64]) -> usize {
        nearest_center(&self.centers, point).0
    }

    pub fn label_all(&self, data: &DataMatrix) -> Result<Labeling> {
        if data.p() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.p(),
            });
        }
        Labeling::new(self.k(), data.rows().map(|r| self.nearest(r)).collect())
    }

    /// Reorder centers so that old label `l` becomes `perm[l]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut centers = self.centers.clone();
        for (old, &new) in perm.iter().enumerate() {
            centers[new] = self.centers[old].clone();
        }
        Self {
            centers,
            inertia: self.inertia,
        }
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(centers: &[Vec<f64>], point: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    (best, best_d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            restarts: 10,
            max_iter: 300,
            tol: 1e-9,
            seed,
        }
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::KTooLarge { k: self.k, n });
        }
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "restarts and max_iter must be at least 1".into(),
            ));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidParameter("tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of one seeded Lloyd run.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub centers: Vec<Vec<f64>>,
    /// Labels indexed by original row.
    pub labels: Vec<usize>,
    /// Inertia after the initial assignment and after every iteration.
    pub inertia_history: Vec<f64>,
    pub converged: bool,
}

impl LloydRun {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().expect("history is never empty")
    }
}

/// Row indices sorted by row content, so that fits do not depend on the
/// order in which rows were supplied. Signed zeros compare equal.
fn canonical_order(data: &DataMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.sort_by(|&a, &b| {
        data.row(a)
            .iter()
            .zip(data.row(b))
            .map(|(x, y)| (x + 0.0).total_cmp(&(y + 0.0)))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn distinct_rows(data: &DataMatrix, order: &[usize]) -> usize {
    if order.is_empty() {
        return 0;
    }
    1 + order
        .windows(2)
        .filter(|w| data.row(w[0]).iter().zip(data.row(w[1])).any(|(a, b)| a != b))
        .count()
}

/// Fit k-means, keeping the restart with the smallest inertia (lowest
/// restart index on ties).
pub fn kmeans_fit(data: &DataMatrix, cfg: &KMeansConfig) -> Result<(PartitionModel, Labeling)> {
    cfg.validate(data.n())?;
    let order = canonical_order(data);
    let distinct = distinct_rows(data, &order);
    if distinct < cfg.k {
        return Err(Error::DegenerateData { distinct, k: cfg.k });
    }
    let runs = par::map_range(cfg.restarts, |r| lloyd(data, &order, cfg, r));
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.inertia().total_cmp(&b.inertia()).then(ia.cmp(ib)))
        .map(|(_, run)| run)
        .expect("restarts >= 1");
    let inertia = best.inertia();
    let labeling = Labeling::new(cfg.k, best.labels)?;
    Ok((PartitionModel::new(best.centers, inertia)?, labeling))
}

/// A single restart, exposed for diagnostics and tests.
pub fn lloyd_restart(data: &DataMatrix, cfg: &KMeansConfig, restart: usize) -> Result<LloydRun> {
    cfg.validate(data.n())?;
    let order = canonical_order(data);
    let distinct = distinct_rows(data, &order);
    if distinct < cfg.k {
        return Err(Error::DegenerateData { distinct, k: cfg.k });
    }
    Ok(lloyd(data, &order, cfg, restart))
}

fn plus_plus_init(points: &[&[f64]], k: usize, seed: SeedStream) -> Vec<Vec<f64>> {
    let mut rng = seed.rng();
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].to_vec()];
    let mut min_d: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = min_d.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (j, &d) in min_d.iter().enumerate() {
            if d > 0.0 {
                acc += d;
                pick = Some(j);
                if acc > target {
                    break;
                }
            }
        }
        let pick = pick.expect("at least k distinct rows");
        centers.push(points[pick].to_vec());
        let c = centers.last().unwrap();
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, c));
        }
    }
    centers
}

fn assign_points(points: &[&[f64]], centers: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (l, p) in labels.iter_mut().zip(points) {
        let (k, d) = nearest_center(centers, p);
        *l = k;
        inertia += d;
    }
    inertia
}

/// Give each empty cluster the point farthest from its own center, taken
/// from clusters that can spare one.
fn repair_empty(points: &[&[f64]], centers: &mut [Vec<f64>], labels: &mut [usize]) {
    let k = centers.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (j, p) in points.iter().enumerate() {
            let l = labels[j];
            if sizes[l] < 2 {
                continue;
            }
            let d = squared_distance(p, &centers[l]);
            if d > far_d {
                far_d = d;
                far = Some(j);
            }
        }
        let Some(j) = far else { return };
        sizes[labels[j]] -= 1;
        sizes[c] += 1;
        labels[j] = c;
        centers[c] = points[j].to_vec();
    }
}

fn cluster_means(points: &[&[f64]], labels: &[usize], k: usize, dim: usize, prev: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    sums.iter_mut()
        .zip(&counts)
        .zip(prev)
        .map(|((s, &c), old)| {
            if c == 0 {
                old.clone()
            } else {
                s.iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

fn lloyd(data: &DataMatrix, order: &[usize], cfg: &KMeansConfig, restart: usize) -> LloydRun {
    let points: Vec<&[f64]> = order.iter().map(|&j| data.row(j)).collect();
    let dim = data.p();
    let mut centers = plus_plus_init(&points, cfg.k, SeedStream::new(cfg.seed).child(restart as u64));
    let mut labels = vec![0usize; points.len()];
    let mut history = vec![assign_points(&points, &centers, &mut labels)];
    let mut converged = false;
    let mut next = labels.clone();
    for _ in 0..cfg.max_iter {
        repair_empty(&points, &mut centers, &mut labels);
        let updated = cluster_means(&points, &labels, cfg.k, dim, &centers);
        let shift = centers
            .iter()
            .zip(&updated)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = updated;
        history.push(assign_points(&points, &centers, &mut next));
        let unchanged = next == labels;
        std::mem::swap(&mut labels, &mut next);
        let mut sizes = vec![0usize; cfg.k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        if sizes.contains(&0) {
            continue;
        }
        if unchanged || shift < cfg.tol {
            converged = true;
            break;
        }
    }
    let mut by_row = vec![0usize; points.len()];
    for (pos, &j) in order.iter().enumerate() {
        by_row[j] = labels[pos];
    }
    LloydRun {
        centers,
        labels: by_row,
        inertia_history: history,
        converged,
    }
}
