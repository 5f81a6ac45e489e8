//! Blinded observations.
//!
//! Retained columns are copied verbatim. Every other column is replaced by
//! a location estimate: either the column-wide mean/median (marginal
//! blinding) or the mean/median over the `r` nearest rows measured in the
//! retained coordinates (conditional blinding).

use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, IndexSubset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Mean,
    Median,
}

/// How blinded columns are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    MarginalMean,
    MarginalMedian,
    /// Local mean over `r` nearest neighbours.
    ConditionalMean(usize),
    /// Local median over `r` nearest neighbours.
    ConditionalMedian(usize),
}

impl Strategy {
    pub fn marginal(location: Location) -> Self {
        match location {
            Location::Mean => Self::MarginalMean,
            Location::Median => Self::MarginalMedian,
        }
    }

    pub fn conditional(location: Location, r: usize) -> Self {
        match location {
            Location::Mean => Self::ConditionalMean(r),
            Location::Median => Self::ConditionalMedian(r),
        }
    }

    pub fn location(&self) -> Location {
        match self {
            Self::MarginalMean | Self::ConditionalMean(_) => Location::Mean,
            Self::MarginalMedian | Self::ConditionalMedian(_) => Location::Median,
        }
    }

    /// Neighbour count for conditional strategies.
    pub fn neighbors(&self) -> Option<usize> {
        match *self {
            Self::ConditionalMean(r) | Self::ConditionalMedian(r) => Some(r),
            _ => None,
        }
    }

    /// Command-line name.
    pub fn name(&self) -> &'static str {
        match self {
            Self::MarginalMean => "mean",
            Self::MarginalMedian => "median",
            Self::ConditionalMean(_) => "cond-mean",
            Self::ConditionalMedian(_) => "cond-median",
        }
    }
}

/// Mean or median of `values`, exact on constant input.
///
/// The mean is accumulated as a shift from the first value, so the result
/// depends on the order of `values`; callers pass them in row order.
pub fn location_of(values: &[f64], location: Location) -> f64 {
    assert!(!values.is_empty(), "location of an empty sample");
    match location {
        Location::Mean => {
            let base = values[0];
            let dev: f64 = values.iter().map(|v| v - base).sum();
            if dev == 0.0 {
                // keeps the sign of zero
                base
            } else {
                base + dev / values.len() as f64
            }
        }
        Location::Median => {
            let mut sorted = values.to_vec();
            sorted.sort_unstable_by(f64::total_cmp);
            let mid = sorted.len() / 2;
            if sorted.len() % 2 == 1 {
                sorted[mid]
            } else {
                let (a, b) = (sorted[mid - 1], sorted[mid]);
                a + (b - a) / 2.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlindedMatrix {
    pub subset: IndexSubset,
    pub strategy: Strategy,
    pub values: DataMatrix,
}

/// Rows that make up the neighbourhood `C_j` of a query row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSet {
    pub query_row: usize,
    /// Ascending row indices.
    pub member_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlindingWarning {
    /// `r` is not below the smallest cluster size, so neighbourhoods
    /// necessarily straddle clusters.
    NeighborsExceedSmallestCluster { r: usize, smallest_cluster: usize },
}

impl std::fmt::Display for BlindingWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NeighborsExceedSmallestCluster { r, smallest_cluster } => {
                write!(f, "r = {r} is not below the smallest cluster size {smallest_cluster}")
            }
        }
    }
}

/// Reusable buffers for neighbour search.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    dist: Vec<(f64, bool, usize)>,
    members: Vec<usize>,
    column: Vec<f64>,
}

fn check_subset(data: &DataMatrix, subset: &IndexSubset) -> Result<()> {
    if subset.p() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            got: subset.p(),
        });
    }
    Ok(())
}

fn check_r(data: &DataMatrix, r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidParameter("r must be at least 1".into()));
    }
    if r > data.n() {
        return Err(Error::RTooLarge { r, n: data.n() });
    }
    Ok(())
}

/// Fills blinded rows one at a time.
#[derive(Debug)]
pub(crate) struct Blinder<'a> {
    data: &'a DataMatrix,
    subset: &'a IndexSubset,
    blinded_cols: Vec<usize>,
    location: Location,
    /// `Some(r)` for conditional blinding with a non-empty subset.
    neighbors: Option<usize>,
    marginal: Vec<f64>,
}

impl<'a> Blinder<'a> {
    pub(crate) fn new(
        data: &'a DataMatrix,
        subset: &'a IndexSubset,
        strategy: Strategy,
        marginal_locations: Option<&[f64]>,
    ) -> Result<Self> {
        check_subset(data, subset)?;
        if let Some(r) = strategy.neighbors() {
            check_r(data, r)?;
        }
        let location = strategy.location();
        let blinded_cols = subset.complement();
        let neighbors = strategy.neighbors().filter(|_| !subset.is_empty());
        let marginal = match (neighbors, marginal_locations) {
            (Some(_), _) => Vec::new(),
            (None, Some(all)) => blinded_cols.iter().map(|&i| all[i]).collect(),
            (None, None) => blinded_cols
                .iter()
                .map(|&i| location_of(&data.column(i), location))
                .collect(),
        };
        Ok(Self {
            data,
            subset,
            blinded_cols,
            location,
            neighbors,
            marginal,
        })
    }

    /// Write blinded row `j` into `out` (length p).
    pub(crate) fn fill_row(&self, j: usize, out: &mut [f64], scratch: &mut Scratch) {
        out.copy_from_slice(self.data.row(j));
        match self.neighbors {
            None => {
                for (&i, &v) in self.blinded_cols.iter().zip(&self.marginal) {
                    out[i] = v;
                }
            }
            Some(r) => {
                neighbor_rows(self.data, self.subset, j, r, scratch);
                let Scratch { members, column, .. } = scratch;
                for &i in &self.blinded_cols {
                    column.clear();
                    column.extend(members.iter().map(|&m| self.data.get(m, i)));
                    out[i] = location_of(column, self.location);
                }
            }
        }
    }

    fn materialize(&self, strategy: Strategy) -> BlindedMatrix {
        let (n, p) = (self.data.n(), self.data.p());
        let mut values = vec![0.0; n * p];
        let mut scratch = Scratch::default();
        for (j, row) in values.chunks_exact_mut(p).enumerate() {
            self.fill_row(j, row, &mut scratch);
        }
        BlindedMatrix {
            subset: self.subset.clone(),
            strategy,
            values: DataMatrix::from_row_major(n, p, values).expect("blinded values stay finite"),
        }
    }
}

/// Select the `r` nearest rows to `query` into `scratch.members` (sorted).
/// Ties go to the query row first, then to lower row indices.
fn neighbor_rows(data: &DataMatrix, subset: &IndexSubset, query: usize, r: usize, scratch: &mut Scratch) {
    let q = data.row(query);
    let idx = subset.indices();
    scratch.dist.clear();
    scratch.dist.extend(data.rows().enumerate().map(|(m, row)| {
        let d: f64 = idx.iter().map(|&i| (row[i] - q[i]) * (row[i] - q[i])).sum();
        (d, m != query, m)
    }));
    let cmp =
        |a: &(f64, bool, usize), b: &(f64, bool, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2));
    if r < scratch.dist.len() {
        scratch.dist.select_nth_unstable_by(r - 1, cmp);
    }
    scratch.members.clear();
    scratch.members.extend(scratch.dist[..r].iter().map(|t| t.2));
    scratch.members.sort_unstable();
}

pub fn nearest_neighbors(data: &DataMatrix, subset: &IndexSubset, query_row: usize, r: usize) -> Result<NeighborSet> {
    check_subset(data, subset)?;
    check_r(data, r)?;
    if query_row >= data.n() {
        return Err(Error::InvalidParameter(format!(
            "query row {} outside 1..={}",
            query_row + 1,
            data.n()
        )));
    }
    let mut scratch = Scratch::default();
    neighbor_rows(data, subset, query_row, r, &mut scratch);
    Ok(NeighborSet {
        query_row,
        member_rows: scratch.members,
    })
}

pub fn blind_marginal(data: &DataMatrix, subset: &IndexSubset, location: Location) -> Result<BlindedMatrix> {
    let strategy = Strategy::marginal(location);
    Ok(Blinder::new(data, subset, strategy, None)?.materialize(strategy))
}

/// Conditional blinding. An empty subset conditions on nothing and reduces
/// to marginal blinding.
pub fn blind_conditional(
    data: &DataMatrix,
    subset: &IndexSubset,
    r: usize,
    location: Location,
    smallest_cluster: usize,
) -> Result<(BlindedMatrix, Vec<BlindingWarning>)> {
    let strategy = Strategy::conditional(location, r);
    let blinded = Blinder::new(data, subset, strategy, None)?.materialize(strategy);
    Ok((blinded, neighbor_warnings(r, smallest_cluster)))
}

/// Dispatch on `strategy`.
pub fn blind(
    data: &DataMatrix,
    subset: &IndexSubset,
    strategy: Strategy,
    smallest_cluster: usize,
) -> Result<(BlindedMatrix, Vec<BlindingWarning>)> {
    match strategy.neighbors() {
        None => Ok((blind_marginal(data, subset, strategy.location())?, Vec::new())),
        Some(r) => blind_conditional(data, subset, r, strategy.location(), smallest_cluster),
    }
}

pub(crate) fn neighbor_warnings(r: usize, smallest_cluster: usize) -> Vec<BlindingWarning> {
    if r >= smallest_cluster {
        vec![BlindingWarning::NeighborsExceedSmallestCluster { r, smallest_cluster }]
    } else {
        Vec::new()
    }
}
