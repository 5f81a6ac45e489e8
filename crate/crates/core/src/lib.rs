//! Variable selection for clustering partitions by blinding.
//!
//! A partition is fit once on the full data. For a candidate subset of
//! variables the remaining columns are "blinded" (replaced by a marginal or
//! nearest-neighbour location estimate) and the frozen partition is applied
//! again; the fraction of observations that keep their cluster is the
//! subset's efficiency. [`search`] finds the smallest subsets reaching a
//! target efficiency.
//!
//! ```
//! use clustersift::{blinding::Strategy, data::validate_matrix, kmeans, objective::Threshold, search};
//!
//! let data = validate_matrix(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]).unwrap();
//! let (model, labels) = kmeans::kmeans_fit(&data, &kmeans::KMeansConfig::new(2, 7)).unwrap();
//! let cfg = search::SearchConfig::exhaustive(Threshold::new(1.0).unwrap(), Strategy::MarginalMean);
//! let report = search::exhaustive_search(&data, &model, &labels, &cfg).unwrap();
//! assert_eq!(report.solutions[0].subset.one_based(), vec![1]);
//! ```

pub mod blinding;
pub mod convergence;
pub mod data;
pub mod error;
pub mod kmeans;
pub mod objective;
pub mod par;
pub mod rng;
pub mod search;
pub mod simgen;

pub use error::{Error, Result};
