//! Consistency probe: how often the best subset of a given size picks the
//! population-optimal variables as the sample grows.
//!
//! Only the Case I design is supported. There the third variable is
//! independent noise and the first two are exchangeable, so the optimal
//! families are known without estimation.

use serde::{Deserialize, Serialize};

use crate::blinding::{Location, Strategy};
use crate::data::IndexSubset;
use crate::error::{Error, Result};
use crate::kmeans::{kmeans_fit, KMeansConfig};
use crate::objective::Evaluator;
use crate::par;
use crate::rng::SeedStream;
use crate::simgen::gen_case1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProbeStrategy {
    Marginal {
        location: Location,
    },
    /// Neighbour count scheduled as `r(n) = ceil(n^exponent)`.
    Conditional {
        location: Location,
        exponent: f64,
    },
}

impl ProbeStrategy {
    pub fn conditional_mean() -> Self {
        Self::Conditional {
            location: Location::Mean,
            exponent: 0.6,
        }
    }

    pub fn strategy_for(&self, n: usize) -> Strategy {
        match *self {
            Self::Marginal { location } => Strategy::marginal(location),
            Self::Conditional { location, exponent } => {
                let r = ((n as f64).powf(exponent).ceil() as usize).clamp(1, n);
                Strategy::conditional(location, r)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub sigma: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub d: usize,
    pub strategy: ProbeStrategy,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(sigma: f64, n_grid: Vec<usize>, reps: usize, d: usize, strategy: ProbeStrategy, seed: u64) -> Self {
        Self {
            sigma,
            n_grid,
            reps,
            d,
            strategy,
            k: 3,
            restarts: 10,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub n: usize,
    pub r: Option<usize>,
    pub successes: usize,
    pub reps: usize,
    pub fraction: f64,
    /// Replications where r was not below the smallest cluster.
    pub neighbor_warnings: usize,
}

/// Population-optimal subsets of size `d` for Case I (0-based).
pub fn case1_reference_family(d: usize) -> Result<Vec<IndexSubset>> {
    let sets: Vec<Vec<usize>> = match d {
        1 => vec![vec![0], vec![1]],
        2 => vec![vec![0, 1]],
        3 => vec![vec![0, 1, 2]],
        _ => return Err(Error::InvalidParameter(format!("d = {d} outside 1..=3"))),
    };
    sets.into_iter().map(|s| IndexSubset::new(3, s)).collect()
}

fn subsets_of_size(p: usize, d: usize) -> Vec<IndexSubset> {
    (0u32..1 << p)
        .filter(|m| m.count_ones() as usize == d)
        .map(|m| IndexSubset::new(p, (0..p).filter(|i| (m >> i) & 1 == 1)).expect("in range"))
        .collect()
}

/// A replication succeeds when every maximiser of h_n over size-`d`
/// subsets belongs to the reference family.
pub fn consistency_probe(cfg: &ProbeConfig) -> Result<Vec<ProbeRow>> {
    if cfg.reps == 0 || cfg.n_grid.is_empty() {
        return Err(Error::InvalidParameter("need reps >= 1 and a non-empty n grid".into()));
    }
    let family = case1_reference_family(cfg.d)?;
    let candidates = subsets_of_size(3, cfg.d);
    let stream = SeedStream::new(cfg.seed);
    cfg.n_grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let strategy = cfg.strategy.strategy_for(n);
            let outcomes = par::map_range(cfg.reps, |rep| -> Result<(bool, bool)> {
                let s = stream.child(g as u64).child(rep as u64);
                let sample = gen_case1(n, cfg.sigma, s.child(0).seed())?;
                let km = KMeansConfig::new(cfg.k, s.child(1).seed()).restarts(cfg.restarts);
                let (model, labels) = kmeans_fit(&sample.data, &km)?;
                let ev = Evaluator::new(&sample.data, &model, &labels, strategy)?;
                let effs: Vec<usize> = candidates.iter().map(|c| ev.evaluate(c).matches).collect();
                let best = *effs.iter().max().expect("non-empty");
                let ok = candidates
                    .iter()
                    .zip(&effs)
                    .filter(|(_, &e)| e == best)
                    .all(|(c, _)| family.contains(c));
                Ok((ok, !ev.warnings().is_empty()))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let successes = outcomes.iter().filter(|o| o.0).count();
            Ok(ProbeRow {
                n,
                r: strategy.neighbors(),
                successes,
                reps: cfg.reps,
                fraction: successes as f64 / cfg.reps as f64,
                neighbor_warnings: outcomes.iter().filter(|o| o.1).count(),
            })
        })
        .collect()
}
