//! Clustering-validity measures used to estimate how well class labels form
//! clusters: the Calinski–Harabasz index, its adjusted class-pairwise form,
//! and the centroid distance-consistency score.
//!
//! The adjusted index is computed per pair of classes over the union of the
//! two classes' points. For a pair with global centroid `c`, class centroids
//! `c_i`, and `σ` the population standard deviation of `{d²(x, c)}`:
//!
//! ```text
//! ch3 = exp((Σ d²(x,c) - Σ_i Σ_{x∈C_i} d²(x,c_i)) / (σ n)) · Σ_i |C_i| d²(c_i,c) / (σ n (|C|-1))
//! ch4 = 1 / (1 + exp(-g · ch3))
//! ch5 = (ch4 - 1/2) / (1 - 1/2)
//! ```
//!
//! The worst-case `ch4` under random labels is taken as exactly 1/2, so no
//! Monte-Carlo estimate is needed and the score is deterministic.

use serde::{Deserialize, Serialize};

use crate::data::{
    mean_std, order_free_mean, restrict_to_pair, squared_distance, DataMatrix, LabelPartition,
    LabeledDataset,
};
use crate::error::{Error, Result};

/// Largest `f64` strictly below one. Saturated adjusted scores are reported
/// as this value so that the half-open range `[0, 1)` holds in floating point.
pub const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvmKind {
    ChAdjusted,
    Dsc,
}

impl CvmKind {
    pub fn name(self) -> &'static str {
        match self {
            CvmKind::ChAdjusted => "ch_adjusted",
            CvmKind::Dsc => "dsc",
        }
    }
}

impl std::str::FromStr for CvmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ch_adjusted" | "ch_a" | "cha" => Ok(CvmKind::ChAdjusted),
            "dsc" => Ok(CvmKind::Dsc),
            other => Err(Error::param(format!("unknown cvm kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvmConfig {
    /// Growth rate of the logistic squashing applied to `ch3`.
    pub growth_rate: f64,
    pub kind: CvmKind,
}

impl Default for CvmConfig {
    fn default() -> Self {
        Self {
            growth_rate: 1.0,
            kind: CvmKind::ChAdjusted,
        }
    }
}

impl CvmConfig {
    pub fn new(kind: CvmKind, growth_rate: f64) -> Result<Self> {
        let cfg = Self { growth_rate, kind };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dsc() -> Self {
        Self {
            kind: CvmKind::Dsc,
            ..Self::default()
        }
    }

    pub fn ch_adjusted() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.growth_rate.is_finite() && self.growth_rate > 0.0) {
            return Err(Error::param(format!(
                "growth rate must be a positive finite number, got {}",
                self.growth_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub value: f64,
    pub kind: CvmKind,
}

/// Intermediate quantities of the adjusted index for one class pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChPairTerms {
    pub sigma: f64,
    pub ch3: f64,
    pub ch4: f64,
    pub ch5: f64,
}

struct Scatter {
    n: usize,
    class_sizes: Vec<usize>,
    // Σ_x d²(x, c)
    total: f64,
    // Σ_i Σ_{x∈C_i} d²(x, c_i)
    within: f64,
    // Σ_i |C_i| d²(c_i, c)
    between: f64,
    // d²(x, c) per point
    to_global: Vec<f64>,
}

fn centroids(data: &DataMatrix, labels: &LabelPartition) -> Vec<Vec<f64>> {
    let d = data.cols();
    let k = labels.class_count();
    let mut sums = vec![vec![0.0; d]; k];
    let sizes = labels.sizes();
    for (row, &c) in data.row_iter().zip(labels.assignments()) {
        for (s, v) in sums[c].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (s, &size) in sums.iter_mut().zip(&sizes) {
        s.iter_mut().for_each(|v| *v /= size as f64);
    }
    sums
}

fn scatter(data: &DataMatrix, labels: &LabelPartition) -> Scatter {
    let global = data.column_means();
    let cents = centroids(data, labels);
    let class_sizes = labels.sizes();
    let to_global: Vec<f64> = data
        .row_iter()
        .map(|r| squared_distance(r, &global))
        .collect();
    let total = to_global.iter().sum();
    let within = data
        .row_iter()
        .zip(labels.assignments())
        .map(|(r, &c)| squared_distance(r, &cents[c]))
        .sum();
    let between = cents
        .iter()
        .zip(&class_sizes)
        .map(|(ci, &size)| size as f64 * squared_distance(ci, &global))
        .sum();
    Scatter {
        n: data.rows(),
        class_sizes,
        total,
        within,
        between,
        to_global,
    }
}

/// Standard Calinski–Harabasz index with squared Euclidean distances.
pub fn ch_index(l: &LabeledDataset) -> Result<f64> {
    let k = l.labels().class_count();
    if k < 2 {
        return Err(Error::param("Calinski-Harabasz needs at least two classes"));
    }
    let s = scatter(l.data(), l.labels());
    if s.within <= 0.0 {
        return Err(Error::degenerate(
            "zero within-class scatter (every class is a point mass)",
        ));
    }
    let n = s.n as f64;
    let kf = k as f64;
    Ok((n - kf) / (kf - 1.0) * s.between / s.within)
}

fn ch_terms_raw(
    data: &DataMatrix,
    labels: &LabelPartition,
    growth_rate: f64,
) -> Result<ChPairTerms> {
    let s = scatter(data, labels);
    let (_, sigma) = mean_std(&s.to_global);
    // also rejects NaN
    if sigma.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::degenerate(
            "squared distances to the centroid have zero spread",
        ));
    }
    let n = s.n as f64;
    let classes = s.class_sizes.len() as f64;
    let norm = sigma * n;
    let ch3 = ((s.total - s.within) / norm).exp() * (s.between / (norm * (classes - 1.0)));
    let x = growth_rate * ch3;
    let ch4 = 1.0 / (1.0 + (-x).exp());
    // (ch4 - 1/2) / (1/2) == tanh(x / 2), evaluated without cancellation
    let ch5 = (x / 2.0).tanh().clamp(0.0, BELOW_ONE);
    Ok(ChPairTerms {
        sigma,
        ch3,
        ch4,
        ch5,
    })
}

fn require_pair(labels: &LabelPartition) -> Result<()> {
    if labels.class_count() != 2 {
        return Err(Error::param(format!(
            "pair score needs exactly two classes, got {}",
            labels.class_count()
        )));
    }
    Ok(())
}

/// All intermediate terms of the adjusted index for a two-class dataset.
pub fn ch_pair_terms(l2: &LabeledDataset, growth_rate: f64) -> Result<ChPairTerms> {
    require_pair(l2.labels())?;
    ch_terms_raw(l2.data(), l2.labels(), growth_rate)
}

pub fn ch_adjusted_pair(l2: &LabeledDataset, cfg: &CvmConfig) -> Result<PairScore> {
    cfg.validate()?;
    let t = ch_pair_terms(l2, cfg.growth_rate)?;
    Ok(PairScore {
        value: t.ch5,
        kind: CvmKind::ChAdjusted,
    })
}

/// Adjusted Calinski–Harabasz: mean of the pair score over all unordered
/// class pairs.
pub fn ch_adjusted(l: &LabeledDataset, cfg: &CvmConfig) -> Result<f64> {
    cfg.validate()?;
    let k = l.labels().class_count();
    if k < 2 {
        return Err(Error::param(
            "adjusted Calinski-Harabasz needs at least two classes",
        ));
    }
    let mut scores = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let (data, labels) = restrict_to_pair(l.data(), l.labels(), a, b)?;
            let t = ch_terms_raw(&data, &labels, cfg.growth_rate).map_err(|e| Error::Pair {
                a,
                b,
                source: Box::new(e),
            })?;
            scores.push(t.ch5);
        }
    }
    Ok(order_free_mean(&scores))
}

/// Centroid distance consistency for two classes, oriented so that 1 means
/// every point is nearer its own centroid and 0 means fully mixed.
///
/// With `m` the fraction of points strictly closer to the other class's
/// centroid (ties count as own), returns `clamp(1 - 2m, 0, 1)`.
pub fn dsc_pair_score(data: &DataMatrix, labels: &LabelPartition) -> Result<f64> {
    require_pair(labels)?;
    if data.rows() != labels.len() {
        return Err(Error::validation(format!(
            "{} data rows but {} labels",
            data.rows(),
            labels.len()
        )));
    }
    let cents = centroids(data, labels);
    let defectors = data
        .row_iter()
        .zip(labels.assignments())
        .filter(|(r, &c)| squared_distance(r, &cents[1 - c]) < squared_distance(r, &cents[c]))
        .count();
    let m = defectors as f64 / data.rows() as f64;
    Ok((1.0 - 2.0 * m).clamp(0.0, 1.0))
}

/// Pair score of the configured kind on a two-class dataset.
pub(crate) fn pair_score(
    data: &DataMatrix,
    labels: &LabelPartition,
    cfg: &CvmConfig,
) -> Result<f64> {
    match cfg.kind {
        CvmKind::Dsc => dsc_pair_score(data, labels),
        CvmKind::ChAdjusted => {
            require_pair(labels)?;
            for (class, &size) in labels.sizes().iter().enumerate() {
                if size < 2 {
                    return Err(Error::ClassTooSmall {
                        class,
                        size,
                        min: 2,
                    });
                }
            }
            Ok(ch_terms_raw(data, labels, cfg.growth_rate)?.ch5)
        }
    }
}
