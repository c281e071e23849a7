//! Dense row-major matrices whose columns are channels, and channel index sets.

use std::fmt;

use crate::error::{Error, Result};

/// A dense, immutable `rows × cols` matrix of finite `f64` values stored row-major.
///
/// Rows are tokens and columns are channels. The same type holds both the
/// observed queries and the cached keys.
#[derive(Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ChannelMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::arg(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::arg(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from token rows. All rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::arg(format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix from channel columns. All columns must have the same length.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        for (j, c) in columns.iter().enumerate() {
            if c.as_ref().len() != rows {
                return Err(Error::arg(format!(
                    "column {j} has {} values, expected {rows}",
                    c.as_ref().len()
                )));
            }
        }
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (r, &v) in c.as_ref().iter().enumerate() {
                data[r * cols + j] = v;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copies out channel `j`. Panics if `j >= cols`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        assert!(j < self.cols, "column {j} out of range for {} cols", self.cols);
        (0..self.rows).map(|r| self.get(r, j)).collect()
    }

    /// Euclidean norm of every channel.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (acc, &v) in sq.iter_mut().zip(self.row(r)) {
                *acc += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// The `cols × cols` Gram matrix `MᵀM`, row-major, mirrored so it is exactly symmetric.
    pub fn gram(&self) -> Vec<f64> {
        let d = self.cols;
        let mut g = vec![0.0; d * d];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..d {
                let vi = row[i];
                for j in i..d {
                    g[i * d + j] += vi * row[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                g[i * d + j] = g[j * d + i];
            }
        }
        g
    }

    /// Returns a copy with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.data.iter().map(|v| v * c).collect())
    }

    /// Returns a copy with channels reordered so that new channel `j` is old channel `perm[j]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.cols)?;
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(perm.iter().map(|&p| row[p]));
        }
        Self::new(self.rows, self.cols, data)
    }

    /// Returns a copy with token rows reordered so that new row `i` is old row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.rows)?;
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Self::new(self.rows, self.cols, data)
    }

    pub(crate) fn check_channel(&self, j: usize) -> Result<()> {
        if j >= self.cols {
            return Err(Error::arg(format!(
                "channel {j} out of range for width {}",
                self.cols
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for ChannelMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::arg(format!("permutation of length {} for size {n}", perm.len())));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::arg(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// Inner product of channels `i` and `j` of `m`.
pub fn column_dot(m: &ChannelMatrix, i: usize, j: usize) -> Result<f64> {
    m.check_channel(i)?;
    m.check_channel(j)?;
    Ok((0..m.rows()).map(|r| m.get(r, i) * m.get(r, j)).sum())
}

/// An ordered list of distinct channel indices.
///
/// Insertion order is preserved (selectors record the order channels were chosen in);
/// use [`IndexSet::sorted`] for set comparisons.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates that `indices` are distinct and all below `dim`.
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &i in &indices {
            if i >= dim {
                return Err(Error::arg(format!("index {i} out of range for width {dim}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::arg(format!("duplicate index {i}")));
            }
        }
        Ok(Self { indices })
    }

    pub fn full(dim: usize) -> Self {
        Self {
            indices: (0..dim).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v
    }

    /// Membership mask of length `dim`.
    pub fn mask(&self, dim: usize) -> Vec<bool> {
        let mut m = vec![false; dim];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }

    /// Checks that every index is valid for matrices of width `dim`.
    pub fn check_width(&self, dim: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= dim) {
            Some(i) => Err(Error::arg(format!("index {i} out of range for width {dim}"))),
            None => Ok(()),
        }
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.indices.iter().all(|&i| !other.contains(i))
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Self {
        s.indices
    }
}
