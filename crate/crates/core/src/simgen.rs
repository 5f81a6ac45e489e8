//! Synthetic designs and the Monte Carlo driver that tallies minimal
//! subset sizes over replications.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::blinding::{Location, Strategy};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::kmeans::{kmeans_fit, KMeansConfig};
use crate::objective::{Evaluator, Threshold};
use crate::par;
use crate::rng::SeedStream;
use crate::search::{exhaustive_with, SearchConfig};

/// Diagonal-covariance normal component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    weights: Vec<f64>,
    components: Vec<Component>,
}

/// Generated data together with the component each row was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub data: DataMatrix,
    /// 0-based component index per row.
    pub components: Vec<usize>,
}

impl MixtureSpec {
    pub fn new(weights: Vec<f64>, components: Vec<Component>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidParameter("need one positive weight per component".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("weights must be positive and sum to 1".into()));
        }
        let dim = components[0].means.len();
        for c in &components {
            if c.means.len() != dim || c.sds.len() != dim || dim == 0 {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.means.len().max(c.sds.len()),
                });
            }
            if c.sds.iter().any(|&s| !(s > 0.0 && s.is_finite())) || c.means.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidParameter(
                    "standard deviations must be positive and finite".into(),
                ));
            }
        }
        Ok(Self { weights, components })
    }

    pub fn dim(&self) -> usize {
        self.components[0].means.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Draw `n` rows. Row `j` uses its own child stream, so the first `m`
    /// rows of a larger sample equal a sample of size `m`.
    pub fn sample(&self, n: usize, stream: SeedStream) -> Result<Sample> {
        let dim = self.dim();
        let mut values = Vec::with_capacity(n * dim);
        let mut components = Vec::with_capacity(n);
        for j in 0..n {
            let mut rng = stream.child(j as u64).rng();
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut c = self.weights.len() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    c = i;
                    break;
                }
            }
            let comp = &self.components[c];
            for (m, s) in comp.means.iter().zip(&comp.sds) {
                let z: f64 = rng.sample(StandardNormal);
                values.push(m + s * z);
            }
            components.push(c);
        }
        Ok(Sample {
            data: DataMatrix::from_row_major(n, dim, values)?,
            components,
        })
    }
}

/// How the second argument of `N(mu, 0.2)` in the three-component designs
/// is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleConvention {
    #[default]
    StdDev,
    Variance,
}

impl ScaleConvention {
    fn sd(self, scale: f64) -> f64 {
        match self {
            Self::StdDev => scale,
            Self::Variance => scale.sqrt(),
        }
    }
}

const CASE_WEIGHTS: [f64; 3] = [0.35, 0.35, 0.30];
const CASE_X1_MEANS: [f64; 3] = [0.0, 0.1, 0.9];
const CASE_X2_MEANS: [f64; 3] = [0.0, 0.9, 0.1];
const CASE_SCALE: f64 = 0.2;

fn case_mixture(noise_sd: Option<f64>, convention: ScaleConvention) -> Result<MixtureSpec> {
    let sd = convention.sd(CASE_SCALE);
    let comps = (0..3)
        .map(|c| {
            let mut means = vec![CASE_X1_MEANS[c], CASE_X2_MEANS[c]];
            let mut sds = vec![sd, sd];
            if let Some(s) = noise_sd {
                means.push(0.0);
                sds.push(s);
            }
            Component { means, sds }
        })
        .collect();
    MixtureSpec::new(CASE_WEIGHTS.to_vec(), comps)
}

/// Three informative-pair clusters plus an independent `N(0, sigma)` noise
/// column (sigma is a standard deviation).
pub fn gen_case1(n: usize, sigma: f64, seed: u64) -> Result<Sample> {
    gen_case1_with(n, sigma, ScaleConvention::default(), seed)
}

pub fn gen_case1_with(n: usize, sigma: f64, convention: ScaleConvention, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    case_mixture(Some(sigma), convention)?.sample(n, SeedStream::new(seed))
}

/// Same informative pair; the third column is `(x1 + x2) / sqrt(2)`.
pub fn gen_case2(n: usize, seed: u64) -> Result<Sample> {
    gen_case2_with(n, ScaleConvention::default(), seed)
}

pub fn gen_case2_with(n: usize, convention: ScaleConvention, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let base = case_mixture(None, convention)?.sample(n, SeedStream::new(seed))?;
    let values = base
        .data
        .rows()
        .flat_map(|r| [r[0], r[1], (r[0] + r[1]) / std::f64::consts::SQRT_2])
        .collect();
    Ok(Sample {
        data: DataMatrix::from_row_major(n, 3, values)?,
        components: base.components,
    })
}

/// Group sizes, means and variances of the 15-row design.
pub const TSV05_GROUPS: [(usize, f64, f64); 4] = [(4, 5.0, 1.5), (3, 2.0, 0.1), (6, -3.0, 0.5), (2, -6.0, 2.0)];

/// 15 rows in four fixed groups, each coordinate drawn independently from
/// the group's normal; `extra_noise_dims` standard-normal columns follow.
/// Signal columns do not depend on `extra_noise_dims`.
pub fn gen_tsv05(seed: u64, dims: usize, extra_noise_dims: usize) -> Result<Sample> {
    if dims == 0 {
        return Err(Error::InvalidParameter("dims must be at least 1".into()));
    }
    let stream = SeedStream::new(seed);
    let p = dims + extra_noise_dims;
    let mut values = Vec::with_capacity(15 * p);
    let mut components = Vec::with_capacity(15);
    let mut row = 0u64;
    for (g, &(count, mean, var)) in TSV05_GROUPS.iter().enumerate() {
        let sd = var.sqrt();
        for _ in 0..count {
            let mut signal = stream.child(0).child(row).rng();
            let mut noise = stream.child(1).child(row).rng();
            for _ in 0..dims {
                let z: f64 = signal.sample(StandardNormal);
                values.push(mean + sd * z);
            }
            for _ in 0..extra_noise_dims {
                values.push(noise.sample(StandardNormal));
            }
            components.push(g);
            row += 1;
        }
    }
    Ok(Sample {
        data: DataMatrix::from_row_major(15, p, values)?,
        components,
    })
}

/// Two groups of smooth profiles over `dims` grid points that differ only
/// inside a few short windows, plus N(0, 0.15) measurement noise. Profiles
/// are normalised to a maximum of one.
pub fn gen_two_cluster_curves(n: usize, dims: usize, seed: u64) -> Result<Sample> {
    if n < 2 || dims < 8 {
        return Err(Error::InvalidParameter("need n >= 2 and dims >= 8".into()));
    }
    let stream = SeedStream::new(seed);
    let windows = [(0.30, 0.42, 0.12), (0.62, 0.78, 0.15), (0.88, 0.98, -0.1)];
    let base = |t: f64| 0.6 + 0.3 * (2.0 * std::f64::consts::PI * t).sin();
    let mut values = Vec::with_capacity(n * dims);
    let mut components = Vec::with_capacity(n);
    for j in 0..n {
        let mut rng = stream.child(j as u64).rng();
        let group = usize::from(rng.random::<f64>() < 0.4);
        let level: f64 = 1.0 + 0.1 * rng.sample::<f64, _>(StandardNormal);
        let curve: Vec<f64> = (0..dims)
            .map(|i| {
                let t = i as f64 / dims as f64;
                let bump: f64 = windows
                    .iter()
                    .filter(|&&(a, b, _)| group == 1 && t >= a && t < b)
                    .map(|w| w.2)
                    .sum();
                let z: f64 = rng.sample(StandardNormal);
                (level * (base(t) + bump) + 0.15 * z).max(0.0)
            })
            .collect();
        let max = curve.iter().copied().fold(f64::MIN, f64::max).max(1e-9);
        values.extend(curve.iter().map(|v| v / max));
        components.push(group);
    }
    Ok(Sample {
        data: DataMatrix::from_row_major(n, dims, values)?,
        components,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Design {
    Case1 { sigma: f64 },
    Case2,
    Tsv05,
}

impl Design {
    pub fn default_n(&self) -> usize {
        match self {
            Self::Tsv05 => 15,
            _ => 100,
        }
    }

    pub fn default_k(&self) -> usize {
        match self {
            Self::Tsv05 => 4,
            _ => 3,
        }
    }

    pub fn p(&self) -> usize {
        3
    }

    pub fn generate(&self, n: usize, convention: ScaleConvention, seed: u64) -> Result<Sample> {
        match *self {
            Self::Case1 { sigma } => gen_case1_with(n, sigma, convention, seed),
            Self::Case2 => gen_case2_with(n, convention, seed),
            Self::Tsv05 => gen_tsv05(seed, 3, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub design: Design,
    pub reps: usize,
    pub n: usize,
    pub k: usize,
    pub restarts: usize,
    pub thresholds: Vec<Threshold>,
    pub strategy: Strategy,
    pub convention: ScaleConvention,
    pub seed: u64,
}

impl MonteCarloConfig {
    /// Defaults: n and k from the design, 10 restarts, thresholds 100%,
    /// 95% and 90%, marginal mean blinding.
    pub fn new(design: Design, reps: usize, seed: u64) -> Self {
        Self {
            design,
            reps,
            n: design.default_n(),
            k: design.default_k(),
            restarts: 10,
            thresholds: ["1.0", "0.95", "0.9"]
                .iter()
                .map(|t| t.parse().expect("valid threshold"))
                .collect(),
            strategy: Strategy::marginal(Location::Mean),
            convention: ScaleConvention::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardinalityRow {
    pub threshold: Threshold,
    /// `counts[d - 1]` replications had minimal cardinality `d`.
    pub counts: Vec<usize>,
    pub proportions: Vec<f64>,
}

impl CardinalityRow {
    pub fn proportion(&self, d: usize) -> f64 {
        self.proportions[d - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTable {
    pub config: MonteCarloConfig,
    pub p: usize,
    pub rows: Vec<CardinalityRow>,
    /// Replications where conditional blinding used r >= smallest cluster.
    pub neighbor_warnings: usize,
}

/// Minimal cardinality per threshold for one seeded replication.
pub fn replicate(cfg: &MonteCarloConfig, rep: usize) -> Result<(Vec<usize>, bool)> {
    let stream = SeedStream::new(cfg.seed).child(rep as u64);
    let sample = cfg.design.generate(cfg.n, cfg.convention, stream.child(0).seed())?;
    let km = KMeansConfig::new(cfg.k, stream.child(1).seed()).restarts(cfg.restarts);
    let (model, labels) = kmeans_fit(&sample.data, &km)?;
    let ev = Evaluator::new(&sample.data, &model, &labels, cfg.strategy)?;
    let cards = cfg
        .thresholds
        .iter()
        .map(|&t| exhaustive_with(&ev, &SearchConfig::exhaustive(t, cfg.strategy)).map(|r| r.minimal_cardinality))
        .collect::<Result<_>>()?;
    Ok((cards, !ev.warnings().is_empty()))
}

pub fn monte_carlo(cfg: &MonteCarloConfig) -> Result<MonteCarloTable> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    if cfg.thresholds.is_empty() {
        return Err(Error::InvalidParameter("need at least one threshold".into()));
    }
    let p = cfg.design.p();
    let results = par::map_range(cfg.reps, |rep| replicate(cfg, rep))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rows = cfg
        .thresholds
        .iter()
        .enumerate()
        .map(|(t, &threshold)| {
            let mut counts = vec![0usize; p];
            for (cards, _) in &results {
                counts[cards[t] - 1] += 1;
            }
            let proportions = counts.iter().map(|&c| c as f64 / cfg.reps as f64).collect();
            CardinalityRow {
                threshold,
                counts,
                proportions,
            }
        })
        .collect();
    Ok(MonteCarloTable {
        config: cfg.clone(),
        p,
        rows,
        neighbor_warnings: results.iter().filter(|(_, w)| *w).count(),
    })
}
