//! Minimal-subset search: exhaustive enumeration by cardinality and the
//! forward–backward heuristic with variable-order restarts.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::blinding::Strategy;
use crate::data::{DataMatrix, IndexSubset, Labeling};
use crate::error::{Error, Result};
use crate::kmeans::PartitionModel;
use crate::objective::{Efficiency, Evaluator, Threshold};
use crate::par;
use crate::rng::SeedStream;

/// Upper bound on subsets an exhaustive search may evaluate.
pub const MAX_EXHAUSTIVE_EVALUATIONS: u64 = 10_000_000;

const LEVEL_CHUNK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    ForwardBackward { permutations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub threshold: Threshold,
    pub strategy: Strategy,
    pub mode: SearchMode,
    pub seed: u64,
    pub max_subset_size: Option<usize>,
}

impl SearchConfig {
    pub fn exhaustive(threshold: Threshold, strategy: Strategy) -> Self {
        Self {
            threshold,
            strategy,
            mode: SearchMode::Exhaustive,
            seed: 0,
            max_subset_size: None,
        }
    }

    /// Forward–backward search over `permutations` variable orders.
    pub fn forward_backward(threshold: Threshold, strategy: Strategy, permutations: usize, seed: u64) -> Self {
        Self {
            threshold,
            strategy,
            mode: SearchMode::ForwardBackward { permutations },
            seed,
            max_subset_size: None,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.max_subset_size = Some(cap);
        self
    }

    fn cap(&self, p: usize) -> Result<usize> {
        match self.max_subset_size {
            None => Ok(p),
            Some(0) => Err(Error::InvalidParameter("max subset size must be at least 1".into())),
            Some(c) if c > p => Err(Error::InvalidParameter(format!("max subset size {c} exceeds p = {p}"))),
            Some(c) => Ok(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub subset: IndexSubset,
    pub efficiency: Efficiency,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TraceStep {
    /// Best subset of one cardinality in an exhaustive sweep.
    Level {
        evaluated: u64,
    },
    /// Most influential variable.
    Seed,
    Add {
        variable: usize,
    },
    Swap {
        removed: usize,
        added: usize,
    },
    Remove {
        variable: usize,
    },
    /// The run hit the size cap without reaching the threshold.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub run: usize,
    pub step: TraceStep,
    pub subset: IndexSubset,
    pub efficiency: Efficiency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub threshold: Threshold,
    pub strategy: Strategy,
    pub mode: SearchMode,
    pub seed: u64,
    pub minimal_cardinality: usize,
    /// Every minimal subset found, sorted.
    pub solutions: Vec<Solution>,
    pub trace: Vec<TraceEntry>,
    /// Objective evaluations requested by the search (cache hits included).
    pub evaluations: u64,
    /// Runs that reached the threshold (always 1 for exhaustive search).
    pub successful_runs: usize,
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Advance `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
        return false;
    };
    idx[pos] += 1;
    for i in pos + 1..k {
        idx[i] = idx[i - 1] + 1;
    }
    true
}

fn check_strategy(ev: &Evaluator<'_>, cfg: &SearchConfig) -> Result<()> {
    if ev.strategy() != cfg.strategy {
        return Err(Error::InvalidParameter(
            "evaluator and search config use different strategies".into(),
        ));
    }
    Ok(())
}

pub fn exhaustive_search(
    data: &DataMatrix,
    model: &PartitionModel,
    labels: &Labeling,
    cfg: &SearchConfig,
) -> Result<SelectionReport> {
    let ev = Evaluator::new(data, model, labels, cfg.strategy)?;
    exhaustive_with(&ev, cfg)
}

/// Exhaustive search against a shared evaluator.
pub fn exhaustive_with(ev: &Evaluator<'_>, cfg: &SearchConfig) -> Result<SelectionReport> {
    check_strategy(ev, cfg)?;
    let p = ev.p();
    let n = ev.n();
    let cap = cfg.cap(p)?;
    let total: u128 = (1..=cap).map(|d| binomial(p as u64, d as u64)).sum();
    if total > MAX_EXHAUSTIVE_EVALUATIONS as u128 {
        return Err(Error::TooManySubsets {
            limit: MAX_EXHAUSTIVE_EVALUATIONS,
        });
    }
    let need = cfg.threshold.required_matches(n);
    let mut trace = Vec::new();
    let mut evaluations = 0u64;
    let mut best_overall = 0;
    for d in 1..=cap {
        let mut idx: Vec<usize> = (0..d).collect();
        let mut more = true;
        let mut hits = Vec::new();
        let mut level_best: Option<Solution> = None;
        let mut level_count = 0u64;
        while more {
            let mut chunk = Vec::with_capacity(LEVEL_CHUNK);
            while more && chunk.len() < LEVEL_CHUNK {
                chunk.push(IndexSubset::new(p, idx.iter().copied()).expect("in range"));
                more = next_combination(&mut idx, p);
            }
            let effs = par::map(&chunk, |s| ev.evaluate(s));
            level_count += chunk.len() as u64;
            for (subset, eff) in chunk.into_iter().zip(effs) {
                if level_best.as_ref().is_none_or(|b| eff.matches > b.efficiency.matches) {
                    level_best = Some(Solution {
                        subset: subset.clone(),
                        efficiency: eff,
                    });
                }
                if eff.matches >= need {
                    hits.push(Solution {
                        subset,
                        efficiency: eff,
                    });
                }
            }
        }
        evaluations += level_count;
        let best = level_best.expect("every level has at least one subset");
        best_overall = best_overall.max(best.efficiency.matches);
        trace.push(TraceEntry {
            run: 0,
            step: TraceStep::Level { evaluated: level_count },
            subset: best.subset,
            efficiency: best.efficiency,
        });
        if !hits.is_empty() {
            hits.sort_by(|a, b| a.subset.cmp(&b.subset));
            return Ok(SelectionReport {
                threshold: cfg.threshold,
                strategy: cfg.strategy,
                mode: SearchMode::Exhaustive,
                seed: cfg.seed,
                minimal_cardinality: d,
                solutions: hits,
                trace,
                evaluations,
                successful_runs: 1,
            });
        }
    }
    Err(Error::ThresholdUnreachable {
        cap,
        best_matches: best_overall,
        n,
    })
}

/// Variable whose blinding (all others kept) loses the most allocations;
/// the lowest index wins ties. Returns a 0-based index.
pub fn influential_variable(
    data: &DataMatrix,
    model: &PartitionModel,
    labels: &Labeling,
    strategy: Strategy,
) -> Result<usize> {
    let ev = Evaluator::new(data, model, labels, strategy)?;
    let order: Vec<usize> = (0..ev.p()).collect();
    Ok(most_influential(&ev, &order, &mut 0).0)
}

/// Argmin over `order` of h(all but v); earlier entries of `order` win ties.
fn most_influential(ev: &Evaluator<'_>, order: &[usize], requests: &mut u64) -> (usize, Efficiency) {
    let full = IndexSubset::full(ev.p());
    let effs = par::map(order, |&v| ev.evaluate(&full.without(v)));
    *requests += order.len() as u64;
    let (pos, eff) = effs
        .iter()
        .enumerate()
        .min_by_key(|(pos, e)| (e.matches, *pos))
        .expect("p >= 1");
    (order[pos], *eff)
}

struct RunOutcome {
    solution: Option<Solution>,
    best_matches: usize,
    trace: Vec<TraceEntry>,
    requests: u64,
}

struct Run<'e, 'a> {
    ev: &'e Evaluator<'a>,
    order: &'e [usize],
    need: usize,
    cap: usize,
    index: usize,
    requests: u64,
    trace: Vec<TraceEntry>,
}

impl Run<'_, '_> {
    fn eval(&mut self, s: &IndexSubset) -> Efficiency {
        self.requests += 1;
        self.ev.evaluate(s)
    }

    fn log(&mut self, step: TraceStep, subset: &IndexSubset, efficiency: Efficiency) {
        self.trace.push(TraceEntry {
            run: self.index,
            step,
            subset: subset.clone(),
            efficiency,
        });
    }

    /// Best `base ∪ {v}` over `v` outside `exclude`, in permutation order.
    fn best_extension(
        &mut self,
        base: &IndexSubset,
        exclude: &IndexSubset,
    ) -> Option<(usize, IndexSubset, Efficiency)> {
        let mut best: Option<(usize, IndexSubset, Efficiency)> = None;
        for &v in self.order {
            if exclude.contains(v) {
                continue;
            }
            let cand = base.with(v);
            let eff = self.eval(&cand);
            if best.as_ref().is_none_or(|b| eff.matches > b.2.matches) {
                best = Some((v, cand, eff));
            }
        }
        best
    }

    fn execute(mut self) -> RunOutcome {
        // Part 1
        let (seed_var, _) = most_influential(self.ev, self.order, &mut self.requests);
        let mut members = vec![seed_var];
        let mut set = IndexSubset::new(self.ev.p(), [seed_var]).expect("in range");
        let mut cur = self.eval(&set);
        self.log(TraceStep::Seed, &set, cur);

        // Part 2: forward additions, each followed by replacement sweeps
        while cur.matches < self.need && members.len() < self.cap {
            let Some((v, next, eff)) = self.best_extension(&set, &set) else {
                break;
            };
            members.push(v);
            set = next;
            cur = eff;
            self.log(TraceStep::Add { variable: v }, &set, cur);
            loop {
                let mut improved = false;
                for slot in members.iter_mut() {
                    let out = *slot;
                    let base = set.without(out);
                    if let Some((v, next, eff)) = self.best_extension(&base, &set) {
                        if eff.matches > cur.matches {
                            *slot = v;
                            set = next;
                            cur = eff;
                            improved = true;
                            self.log(TraceStep::Swap { removed: out, added: v }, &set, cur);
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        if cur.matches < self.need {
            self.log(TraceStep::Exhausted, &set, cur);
            return RunOutcome {
                solution: None,
                best_matches: cur.matches,
                trace: self.trace,
                requests: self.requests,
            };
        }

        // Part 3: backward pruning in reverse insertion order
        loop {
            let mut removed = false;
            for pos in (0..members.len()).rev() {
                if members.len() <= 1 {
                    break;
                }
                let v = members[pos];
                let cand = set.without(v);
                let eff = self.eval(&cand);
                if eff.matches >= self.need {
                    members.remove(pos);
                    set = cand;
                    cur = eff;
                    removed = true;
                    self.log(TraceStep::Remove { variable: v }, &set, cur);
                }
            }
            if !removed {
                break;
            }
        }
        RunOutcome {
            solution: Some(Solution {
                subset: set,
                efficiency: cur,
            }),
            best_matches: cur.matches,
            trace: self.trace,
            requests: self.requests,
        }
    }
}

/// Variable orders explored by the forward–backward search: the identity
/// first, then seeded shuffles.
pub fn variable_orders(p: usize, permutations: usize, seed: u64) -> Vec<Vec<usize>> {
    let stream = SeedStream::new(seed);
    (0..permutations)
        .map(|i| {
            let mut order: Vec<usize> = (0..p).collect();
            if i > 0 {
                order.shuffle(&mut stream.child(i as u64).rng());
            }
            order
        })
        .collect()
}

pub fn forward_backward_search(
    data: &DataMatrix,
    model: &PartitionModel,
    labels: &Labeling,
    cfg: &SearchConfig,
) -> Result<SelectionReport> {
    let ev = Evaluator::new(data, model, labels, cfg.strategy)?;
    forward_backward_with(&ev, cfg)
}

/// Forward–backward search against a shared evaluator.
pub fn forward_backward_with(ev: &Evaluator<'_>, cfg: &SearchConfig) -> Result<SelectionReport> {
    check_strategy(ev, cfg)?;
    let SearchMode::ForwardBackward { permutations } = cfg.mode else {
        return Err(Error::InvalidParameter("config is not in forward-backward mode".into()));
    };
    if permutations == 0 {
        return Err(Error::InvalidParameter("permutations must be at least 1".into()));
    }
    let p = ev.p();
    let cap = cfg.cap(p)?;
    let need = cfg.threshold.required_matches(ev.n());
    let orders = variable_orders(p, permutations, cfg.seed);
    let outcomes = par::map_range(permutations, |i| {
        Run {
            ev,
            order: &orders[i],
            need,
            cap,
            index: i,
            requests: 0,
            trace: Vec::new(),
        }
        .execute()
    });

    let mut trace = Vec::new();
    let mut evaluations = 0;
    let mut best_matches = 0;
    let mut found = Vec::new();
    for out in outcomes {
        trace.extend(out.trace);
        evaluations += out.requests;
        best_matches = best_matches.max(out.best_matches);
        found.extend(out.solution);
    }
    let successful_runs = found.len();
    let Some(minimal) = found.iter().map(|s| s.subset.len()).min() else {
        return Err(Error::ThresholdUnreachable {
            cap,
            best_matches,
            n: ev.n(),
        });
    };
    found.retain(|s| s.subset.len() == minimal);
    found.sort_by(|a, b| a.subset.cmp(&b.subset));
    found.dedup_by(|a, b| a.subset == b.subset);
    Ok(SelectionReport {
        threshold: cfg.threshold,
        strategy: cfg.strategy,
        mode: cfg.mode,
        seed: cfg.seed,
        minimal_cardinality: minimal,
        solutions: found,
        trace,
        evaluations,
        successful_runs,
    })
}

/// Dispatch on `cfg.mode`.
pub fn search_with(ev: &Evaluator<'_>, cfg: &SearchConfig) -> Result<SelectionReport> {
    match cfg.mode {
        SearchMode::Exhaustive => exhaustive_with(ev, cfg),
        SearchMode::ForwardBackward { .. } => forward_backward_with(ev, cfg),
    }
}
