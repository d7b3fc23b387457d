//! Numeric containers shared by every other module.
//!
//! All standard deviations in the crate use the population convention
//! (divide by `n`), computed by [`mean_std`].

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense `rows × cols` table of finite reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::validation(format!(
                "matrix must have at least one row and one column, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::validation(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::validation(format!(
                    "row {i} has {} columns, expected {d}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(n, d, values)
    }

    /// Builds a matrix from a closure evaluated at every `(row, col)`.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.rows,
            self.cols,
            self.values.iter().map(|v| v * alpha).collect(),
        )
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::param(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.cols, values)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for r in self.row_iter() {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Copy of the matrix with column means subtracted.
    pub fn centered(&self) -> Self {
        let means = self.column_means();
        let values = self
            .row_iter()
            .flat_map(|r| r.iter().zip(&means).map(|(v, m)| v - m))
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }
}

/// Per-point class assignment with `class_count` non-empty classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPartition {
    assignments: Vec<usize>,
    class_count: usize,
}

impl LabelPartition {
    pub fn new(assignments: Vec<usize>, class_count: usize) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::validation("label assignment is empty"));
        }
        let mut sizes = vec![0usize; class_count];
        for (i, &c) in assignments.iter().enumerate() {
            if c >= class_count {
                return Err(Error::validation(format!(
                    "point {i} has class id {c}, outside [0, {class_count})"
                )));
            }
            sizes[c] += 1;
        }
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::validation(format!("class {c} has no points")));
        }
        Ok(Self {
            assignments,
            class_count,
        })
    }

    /// Partition with `class_count` inferred as `max id + 1`.
    pub fn from_assignments(assignments: Vec<usize>) -> Result<Self> {
        let k = assignments.iter().max().map(|m| m + 1).unwrap_or(0);
        Self::new(assignments, k)
    }

    /// Maps arbitrary integer labels onto `0..k` in order of first appearance.
    pub fn from_raw_labels(raw: &[i64]) -> Result<Self> {
        let mut seen: Vec<i64> = Vec::new();
        let assignments = raw
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(p) => p,
                None => {
                    seen.push(*l);
                    seen.len() - 1
                }
            })
            .collect();
        Self::new(assignments, seen.len())
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.assignments[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    /// Indices of the points in `class`, ascending.
    pub fn members(&self, class: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Relabels classes through `perm` (`new id = perm[old id]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.class_count {
            return Err(Error::param("permutation length differs from class count"));
        }
        Self::new(
            self.assignments.iter().map(|&c| perm[c]).collect(),
            self.class_count,
        )
    }
}

/// Data matrix and labels of equal length, every class holding at least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    data: DataMatrix,
    labels: LabelPartition,
}

impl LabeledDataset {
    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn labels(&self) -> &LabelPartition {
        &self.labels
    }

    pub fn into_parts(self) -> (DataMatrix, LabelPartition) {
        (self.data, self.labels)
    }

    /// Points of classes `a` and `b` only, relabeled to `0` and `1`.
    pub fn class_pair(&self, a: usize, b: usize) -> Result<LabeledDataset> {
        let (data, labels) = restrict_to_pair(&self.data, &self.labels, a, b)?;
        validate_labeled(data, labels)
    }
}

/// Bundles `data` and `labels`, checking lengths and class sizes.
pub fn validate_labeled(data: DataMatrix, labels: LabelPartition) -> Result<LabeledDataset> {
    if data.rows() != labels.len() {
        return Err(Error::validation(format!(
            "{} data rows but {} labels",
            data.rows(),
            labels.len()
        )));
    }
    for (class, &size) in labels.sizes().iter().enumerate() {
        if size < 2 {
            return Err(Error::ClassTooSmall {
                class,
                size,
                min: 2,
            });
        }
    }
    Ok(LabeledDataset { data, labels })
}

/// Rows of classes `a` and `b`, relabeled `a → 0`, `b → 1`.
pub(crate) fn restrict_to_pair(
    data: &DataMatrix,
    labels: &LabelPartition,
    a: usize,
    b: usize,
) -> Result<(DataMatrix, LabelPartition)> {
    let k = labels.class_count();
    if a >= k || b >= k || a == b {
        return Err(Error::param(format!(
            "invalid class pair ({a}, {b}) for {k} classes"
        )));
    }
    let mut idx = Vec::new();
    let mut assign = Vec::new();
    for (i, &c) in labels.assignments().iter().enumerate() {
        if c == a || c == b {
            idx.push(i);
            assign.push(usize::from(c == b));
        }
    }
    Ok((data.select_rows(&idx)?, LabelPartition::new(assign, 2)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    Euclidean,
    SquaredEuclidean,
}

/// Symmetric `n × n` matrix of nonnegative distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
    kind: DistanceKind,
}

impl DistanceMatrix {
    /// Wraps a precomputed dense matrix after checking the invariants.
    pub fn from_values(n: usize, values: Vec<f64>, kind: DistanceKind) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::validation(format!(
                "distance matrix needs {} entries, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                let w = values[j * n + i];
                if (v - w).abs() > 1e-12 * v.abs().max(w.abs()).max(1.0) {
                    return Err(Error::validation(format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, values, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries `(i, j)` with `i < j`, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.row(i)[i + 1..]);
        }
        out
    }

    /// Elementwise map that must preserve the matrix invariants (used for
    /// monotone-transform checks).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(
            self.n,
            self.values.iter().map(|&v| f(v)).collect(),
            self.kind,
        )
    }
}

/// Squared Euclidean distance. Four interleaved partial sums combined in a
/// fixed order: deterministic, and lets the compiler vectorize.
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// All pairwise (squared) Euclidean distances between the rows of `x`.
///
/// Rows are computed in parallel; each entry is a sequential sum over
/// columns, so the result does not depend on the thread count.
pub fn pairwise_distances(x: &DataMatrix, kind: DistanceKind) -> DistanceMatrix {
    let n = x.rows();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = x.row(i);
            (i + 1..n)
                .map(|j| {
                    let d2 = squared_distance(ri, x.row(j));
                    match kind {
                        DistanceKind::Euclidean => d2.sqrt(),
                        DistanceKind::SquaredEuclidean => d2,
                    }
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix { n, values, kind }
}

/// Mean and population standard deviation, two-pass, sequential order.
/// Mean that does not depend on the order of `values`: summed in sorted
/// order, so relabeling the items it averages cannot change the last bit.
pub(crate) fn order_free_mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
