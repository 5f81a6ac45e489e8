//! Report files written by `select` and `simulate`.
//!
//! JSON reports carry `schema_version` 1 and the manifest of the run that
//! produced them. Efficiencies are exact integer ratios.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use clustersift::blinding::Strategy;
use clustersift::data::Labeling;
use clustersift::kmeans::PartitionModel;
use clustersift::search::{SearchMode, SelectionReport, TraceStep};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON Schema for `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

pub fn fingerprint(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectParams {
    pub input: String,
    pub has_header: bool,
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub thresholds: Vec<f64>,
    pub strategy: String,
    pub r: Option<usize>,
    pub mode: String,
    pub permutations: usize,
    pub max_subset_size: Option<usize>,
}

impl SelectParams {
    pub fn strategy(&self) -> Result<Strategy, String> {
        parse_strategy(&self.strategy, self.r)
    }
}

pub fn parse_strategy(name: &str, r: Option<usize>) -> Result<Strategy, String> {
    let need_r = || r.ok_or_else(|| format!("strategy {name} requires --r"));
    match name {
        "mean" => Ok(Strategy::MarginalMean),
        "median" => Ok(Strategy::MarginalMedian),
        "cond-mean" => Ok(Strategy::ConditionalMean(need_r()?)),
        "cond-median" => Ok(Strategy::ConditionalMedian(need_r()?)),
        other => Err(format!("unknown strategy '{other}'")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub input_fingerprint: Option<String>,
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansSection {
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
    pub cluster_sizes: Vec<usize>,
}

impl KMeansSection {
    pub fn new(model: &PartitionModel, labels: &Labeling) -> Self {
        Self {
            centers: model.centers().to_vec(),
            inertia: model.inertia(),
            cluster_sizes: labels.cluster_sizes().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionEntry {
    /// 1-based variable indices.
    pub indices: Vec<usize>,
    pub efficiency_numerator: usize,
    pub efficiency_denominator: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSummary {
    pub evaluations: u64,
    pub runs: usize,
    pub successful_runs: usize,
    pub trace_entries: usize,
    pub swaps: usize,
    pub removals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub threshold: f64,
    /// "ok", "threshold_unreachable" or "too_many_subsets".
    pub status: String,
    pub minimal_cardinality: Option<usize>,
    pub solutions: Vec<SolutionEntry>,
    pub trace_summary: Option<TraceSummary>,
}

impl SelectionSection {
    pub fn from_report(rep: &SelectionReport) -> Self {
        let runs = match rep.mode {
            SearchMode::Exhaustive => 1,
            SearchMode::ForwardBackward { permutations } => permutations,
        };
        let count = |f: fn(&TraceStep) -> bool| rep.trace.iter().filter(|t| f(&t.step)).count();
        Self {
            threshold: rep.threshold.value(),
            status: "ok".into(),
            minimal_cardinality: Some(rep.minimal_cardinality),
            solutions: rep
                .solutions
                .iter()
                .map(|s| SolutionEntry {
                    indices: s.subset.one_based(),
                    efficiency_numerator: s.efficiency.matches,
                    efficiency_denominator: s.efficiency.n,
                })
                .collect(),
            trace_summary: Some(TraceSummary {
                evaluations: rep.evaluations,
                runs,
                successful_runs: rep.successful_runs,
                trace_entries: rep.trace.len(),
                swaps: count(|s| matches!(s, TraceStep::Swap { .. })),
                removals: count(|s| matches!(s, TraceStep::Remove { .. })),
            }),
        }
    }

    pub fn failed(threshold: f64, status: &str) -> Self {
        Self {
            threshold,
            status: status.into(),
            minimal_cardinality: None,
            solutions: Vec::new(),
            trace_summary: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub manifest: Manifest,
    pub kmeans: KMeansSection,
    pub selections: Vec<SelectionSection>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn select_params(&self) -> Result<SelectParams, serde_json::Error> {
        serde_json::from_value(self.manifest.parameters.clone())
    }

    /// One row per solution.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "threshold,status,minimal_cardinality,solution,indices,efficiency_numerator,efficiency_denominator,efficiency\n",
        );
        for sel in &self.selections {
            let card = sel.minimal_cardinality.map(|c| c.to_string()).unwrap_or_default();
            if sel.solutions.is_empty() {
                let _ = writeln!(out, "{},{},{card},,,,,", sel.threshold, sel.status);
            }
            for (i, s) in sel.solutions.iter().enumerate() {
                let idx: Vec<String> = s.indices.iter().map(usize::to_string).collect();
                let _ = writeln!(
                    out,
                    "{},{},{card},{},{},{},{},{:.6}",
                    sel.threshold,
                    sel.status,
                    i + 1,
                    idx.join(" "),
                    s.efficiency_numerator,
                    s.efficiency_denominator,
                    s.efficiency_numerator as f64 / s.efficiency_denominator as f64
                );
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "k-means: k = {}, inertia = {:.6}, cluster sizes = {:?}",
            self.kmeans.centers.len(),
            self.kmeans.inertia,
            self.kmeans.cluster_sizes
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for sel in &self.selections {
            let _ = writeln!(out);
            match sel.minimal_cardinality {
                Some(d) => {
                    let _ = writeln!(
                        out,
                        "threshold {:>6.2}%  minimal size {d}  ({} solution{})",
                        100.0 * sel.threshold,
                        sel.solutions.len(),
                        if sel.solutions.len() == 1 { "" } else { "s" }
                    );
                }
                None => {
                    let _ = writeln!(out, "threshold {:>6.2}%  {}", 100.0 * sel.threshold, sel.status);
                }
            }
            for s in &sel.solutions {
                let idx: Vec<String> = s.indices.iter().map(|i| format!("X{i}")).collect();
                let _ = writeln!(
                    out,
                    "  {:<40} {}/{} ({:.2}%)",
                    idx.join(", "),
                    s.efficiency_numerator,
                    s.efficiency_denominator,
                    100.0 * s.efficiency_numerator as f64 / s.efficiency_denominator as f64
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_is_sha256_hex() {
        assert_eq!(
            fingerprint(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn strategy_names() {
        assert_eq!(parse_strategy("mean", None).unwrap(), Strategy::MarginalMean);
        assert_eq!(
            parse_strategy("cond-median", Some(3)).unwrap(),
            Strategy::ConditionalMedian(3)
        );
        assert!(parse_strategy("cond-mean", None).is_err());
        assert!(parse_strategy("mode", None).is_err());
    }
}
