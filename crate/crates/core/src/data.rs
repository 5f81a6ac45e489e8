//! Observation matrix, variable subsets and cluster labelings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense n×p matrix of finite observations, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Check a table of rows and turn it into a [`DataMatrix`].
pub fn validate_matrix<R: AsRef<[f64]>>(raw: &[R]) -> Result<DataMatrix> {
    let first = raw.first().ok_or(Error::EmptyInput)?;
    let cols = first.as_ref().len();
    if cols == 0 {
        return Err(Error::EmptyInput);
    }
    let mut values = Vec::with_capacity(raw.len() * cols);
    for (j, row) in raw.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != cols {
            return Err(Error::NonRectangular {
                row: j + 1,
                expected: cols,
                got: row.len(),
            });
        }
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry { row: j + 1, col: i + 1 });
        }
        values.extend_from_slice(row);
    }
    Ok(DataMatrix {
        rows: raw.len(),
        cols,
        values,
    })
}

impl DataMatrix {
    /// Build from row-major values.
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput);
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: pos / cols + 1,
                col: pos % cols + 1,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn n(&self) -> usize {
        self.rows
    }

    pub fn p(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.cols + i]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Keep only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::IndexOutOfRange {
                index: bad + 1,
                p: self.cols,
            });
        }
        let values = self.rows().flat_map(|r| cols.iter().map(move |&c| r[c])).collect();
        Self::from_row_major(self.rows, cols.len(), values)
    }
}

/// Canonical set of retained variables, stored 0-based and strictly
/// increasing. Reports print indices 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexSubset {
    indices: Vec<usize>,
    p: usize,
}

impl IndexSubset {
    /// From 0-based indices in any order; duplicates are dropped.
    pub fn new(p: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        if let Some(&bad) = indices.iter().find(|&&i| i >= p) {
            return Err(Error::IndexOutOfRange { index: bad + 1, p });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices, p })
    }

    /// From 1-based indices as written by users.
    pub fn from_one_based(p: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let zero: Vec<usize> = indices
            .into_iter()
            .map(|i| i.checked_sub(1).ok_or(Error::IndexOutOfRange { index: 0, p }))
            .collect::<Result<_>>()?;
        Self::new(p, zero)
    }

    pub fn full(p: usize) -> Self {
        Self {
            indices: (0..p).collect(),
            p,
        }
    }

    pub fn empty(p: usize) -> Self {
        Self { indices: Vec::new(), p }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Membership mask of length p.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.p];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.p).filter(|&i| !self.contains(i)).collect()
    }

    /// Copy with `i` added. `i` must be below p.
    pub fn with(&self, i: usize) -> Self {
        assert!(i < self.p, "variable {i} out of range");
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&i) {
            indices.insert(pos, i);
        }
        Self { indices, p: self.p }
    }

    pub fn without(&self, i: usize) -> Self {
        let mut indices = self.indices.clone();
        if let Ok(pos) = indices.binary_search(&i) {
            indices.remove(pos);
        }
        Self { indices, p: self.p }
    }
}

impl std::fmt::Display for IndexSubset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.indices.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Cluster allocation of every observation. Labels are 0-based internally.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Labeling {
    pub fn new(k: usize, labels: Vec<usize>) -> Result<Self> {
        let mut sizes = vec![0; k];
        for &l in &labels {
            if l >= k {
                return Err(Error::InvalidParameter(format!("label {} outside 1..={k}", l + 1)));
            }
            sizes[l] += 1;
        }
        Ok(Self { labels, sizes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Size of the smallest cluster, the bound on useful neighbour counts.
    pub fn smallest_cluster(&self) -> usize {
        self.sizes.iter().copied().min().unwrap_or(0)
    }

    /// Relabel clusters with `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(self.k(), self.labels.iter().map(|&l| perm[l]).collect())
    }
}
