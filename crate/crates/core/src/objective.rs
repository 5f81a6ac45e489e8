//! Empirical objective: the fraction of observations whose allocation
//! survives blinding.
//!
//! The partition model and the original labels are fit once on the full
//! data; blinded rows are pushed through the same frozen model.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::blinding::{location_of, neighbor_warnings, BlindedMatrix, Blinder, BlindingWarning, Scratch, Strategy};
use crate::data::{DataMatrix, IndexSubset, Labeling};
use crate::error::{Error, Result};
use crate::kmeans::PartitionModel;

/// `matches / n` kept as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Efficiency {
    pub matches: usize,
    pub n: usize,
}

impl Efficiency {
    pub fn value(&self) -> f64 {
        self.matches as f64 / self.n as f64
    }
}

impl std::fmt::Display for Efficiency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{} ({:.2}%)", self.matches, self.n, 100.0 * self.value())
    }
}

/// Target efficiency held as a reduced fraction, so that decimal inputs
/// like 0.95 compare exactly against `matches / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Threshold {
    num: u64,
    den: u64,
}

const THRESHOLD_SCALE: u64 = 1_000_000_000;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Threshold {
    /// From a fraction in (0, 1], snapped to nine decimal places.
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value <= 1.0) {
            return Err(Error::InvalidParameter(format!("threshold {value} outside (0, 1]")));
        }
        let num = (value * THRESHOLD_SCALE as f64).round() as u64;
        Self::from_ratio(num, THRESHOLD_SCALE)
    }

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::InvalidParameter(format!("threshold {num}/{den} outside (0, 1]")));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Smallest match count out of `n` that meets the threshold.
    pub fn required_matches(&self, n: usize) -> usize {
        let n = n as u128;
        let (num, den) = (self.num as u128, self.den as u128);
        ((num * n).div_ceil(den)) as usize
    }

    pub fn is_met(&self, eff: Efficiency) -> bool {
        eff.matches >= self.required_matches(eff.n)
    }
}

impl std::str::FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse threshold '{s}'")))?;
        Self::new(v)
    }
}

fn check_shapes(model: &PartitionModel, labels: &Labeling, n: usize, p: usize) -> Result<()> {
    if model.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: p,
        });
    }
    if labels.n() != n {
        return Err(Error::DimensionMismatch {
            expected: labels.n(),
            got: n,
        });
    }
    Ok(())
}

/// Per-row flag: does blinded row `j` keep its original label?
pub fn allocation_mask(model: &PartitionModel, labels: &Labeling, blinded: &BlindedMatrix) -> Result<Vec<bool>> {
    check_shapes(model, labels, blinded.values.n(), blinded.values.p())?;
    Ok(blinded
        .values
        .rows()
        .zip(labels.labels())
        .map(|(row, &l)| model.nearest(row) == l)
        .collect())
}

pub fn efficiency(model: &PartitionModel, labels: &Labeling, blinded: &BlindedMatrix) -> Result<Efficiency> {
    let mask = allocation_mask(model, labels, blinded)?;
    Ok(Efficiency {
        matches: mask.iter().filter(|&&m| m).count(),
        n: mask.len(),
    })
}

/// Memoised subset evaluation for one data set, model and strategy.
///
/// Safe to share between workers: every writer computes the same value for
/// a key, so concurrent inserts are interchangeable.
#[derive(Debug)]
pub struct Evaluator<'a> {
    data: &'a DataMatrix,
    model: &'a PartitionModel,
    labels: &'a Labeling,
    strategy: Strategy,
    marginal: Vec<f64>,
    warnings: Vec<BlindingWarning>,
    cache: RwLock<HashMap<IndexSubset, usize>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        data: &'a DataMatrix,
        model: &'a PartitionModel,
        labels: &'a Labeling,
        strategy: Strategy,
    ) -> Result<Self> {
        check_shapes(model, labels, data.n(), data.p())?;
        let warnings = match strategy.neighbors() {
            Some(0) => return Err(Error::InvalidParameter("r must be at least 1".into())),
            Some(r) if r > data.n() => return Err(Error::RTooLarge { r, n: data.n() }),
            Some(r) => neighbor_warnings(r, labels.smallest_cluster()),
            None => Vec::new(),
        };
        let location = strategy.location();
        let marginal = (0..data.p()).map(|i| location_of(&data.column(i), location)).collect();
        Ok(Self {
            data,
            model,
            labels,
            strategy,
            marginal,
            warnings,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn data(&self) -> &DataMatrix {
        self.data
    }

    pub fn model(&self) -> &PartitionModel {
        self.model
    }

    pub fn labels(&self) -> &Labeling {
        self.labels
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn warnings(&self) -> &[BlindingWarning] {
        &self.warnings
    }

    /// Number of distinct subsets evaluated so far.
    pub fn distinct_evaluated(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    /// Efficiency of `subset`, computed at most once per distinct subset
    /// (modulo concurrent first requests).
    pub fn evaluate(&self, subset: &IndexSubset) -> Efficiency {
        assert_eq!(subset.p(), self.p(), "subset built for a different p");
        let n = self.n();
        if let Some(&matches) = self.cache.read().expect("cache lock").get(subset) {
            return Efficiency { matches, n };
        }
        let matches = self.count_matches(subset);
        self.cache.write().expect("cache lock").insert(subset.clone(), matches);
        Efficiency { matches, n }
    }

    fn count_matches(&self, subset: &IndexSubset) -> usize {
        let blinder =
            Blinder::new(self.data, subset, self.strategy, Some(&self.marginal)).expect("validated at construction");
        let mut row = vec![0.0; self.p()];
        let mut scratch = Scratch::default();
        let labels = self.labels.labels();
        (0..self.n())
            .filter(|&j| {
                blinder.fill_row(j, &mut row, &mut scratch);
                self.model.nearest(&row) == labels[j]
            })
            .count()
    }
}

/// One-shot evaluation without a cache.
pub fn evaluate_subset(
    data: &DataMatrix,
    model: &PartitionModel,
    labels: &Labeling,
    subset: &IndexSubset,
    strategy: Strategy,
) -> Result<Efficiency> {
    if subset.p() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            got: subset.p(),
        });
    }
    Ok(Evaluator::new(data, model, labels, strategy)?.evaluate(subset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blinding::{blind_marginal, Location};
    use crate::data::validate_matrix;

    fn four_point_setup() -> (DataMatrix, PartitionModel, Labeling) {
        let data = validate_matrix(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]).unwrap();
        let model = PartitionModel::new(vec![vec![0.0, 0.5], vec![10.0, 0.5]], 1.0).unwrap();
        let labels = model.label_all(&data).unwrap();
        (data, model, labels)
    }

    #[test]
    fn four_point_efficiencies() {
        let (data, model, labels) = four_point_setup();
        let full = blind_marginal(&data, &IndexSubset::full(2), Location::Mean).unwrap();
        assert_eq!(
            efficiency(&model, &labels, &full).unwrap(),
            Efficiency { matches: 4, n: 4 }
        );
        let keep_x = blind_marginal(&data, &IndexSubset::new(2, [0]).unwrap(), Location::Mean).unwrap();
        assert_eq!(efficiency(&model, &labels, &keep_x).unwrap().matches, 4);
        // every row becomes (5, y): equidistant, so all go to cluster 1
        let keep_y = blind_marginal(&data, &IndexSubset::new(2, [1]).unwrap(), Location::Mean).unwrap();
        assert_eq!(efficiency(&model, &labels, &keep_y).unwrap().value(), 0.5);
        assert_eq!(
            allocation_mask(&model, &labels, &keep_y).unwrap(),
            vec![true, true, false, false]
        );
    }

    #[test]
    fn evaluator_matches_one_shot_and_caches() {
        let (data, model, labels) = four_point_setup();
        let ev = Evaluator::new(&data, &model, &labels, Strategy::MarginalMean).unwrap();
        let s = IndexSubset::new(2, [1]).unwrap();
        assert_eq!(ev.evaluate(&s).matches, 2);
        assert_eq!(ev.evaluate(&s).matches, 2);
        assert_eq!(ev.distinct_evaluated(), 1);
        assert_eq!(
            evaluate_subset(&data, &model, &labels, &s, Strategy::MarginalMean)
                .unwrap()
                .matches,
            2
        );
        let ev = Evaluator::new(&data, &model, &labels, Strategy::ConditionalMean(2)).unwrap();
        assert_eq!(ev.evaluate(&IndexSubset::new(2, [0]).unwrap()).matches, 4);
        assert_eq!(ev.warnings().len(), 1);
    }

    #[test]
    fn shape_errors() {
        let (data, model, labels) = four_point_setup();
        let other = validate_matrix(&[[0.0, 0.0, 1.0]]).unwrap();
        assert!(Evaluator::new(&other, &model, &labels, Strategy::MarginalMean).is_err());
        assert!(Evaluator::new(&data, &model, &labels, Strategy::ConditionalMean(9)).is_err());
        assert!(evaluate_subset(&data, &model, &labels, &IndexSubset::full(3), Strategy::MarginalMean).is_err());
    }

    #[test]
    fn threshold_arithmetic() {
        let t: Threshold = "0.95".parse().unwrap();
        assert_eq!(t.required_matches(100), 95);
        assert_eq!(t.required_matches(15), 15);
        assert_eq!(Threshold::new(0.9).unwrap().required_matches(10), 9);
        assert_eq!(Threshold::new(0.9).unwrap().required_matches(15), 14);
        assert_eq!(Threshold::new(1.0).unwrap().required_matches(7), 7);
        assert!(Threshold::new(0.0).is_err());
        assert!(Threshold::new(1.01).is_err());
        assert!(Threshold::new(f64::NAN).is_err());
        assert!(Threshold::new(0.9).unwrap().is_met(Efficiency { matches: 90, n: 100 }));
        assert!(!Threshold::new(0.9).unwrap().is_met(Efficiency { matches: 89, n: 100 }));
    }
}
