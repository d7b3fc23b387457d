//! Small regressors mapping complexity features to the best score a
//! technique can reach, and k-fold R² for choosing between them.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::squared_distance;
use crate::error::{Error, Result};

const RIDGE: f64 = 1e-8;
const DEFAULT_KNN_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionKind {
    Linear,
    Poly2,
    Knn,
}

impl RegressionKind {
    /// Selection order; earlier wins ties.
    pub const ALL: [RegressionKind; 3] = [
        RegressionKind::Linear,
        RegressionKind::Poly2,
        RegressionKind::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegressionKind::Linear => "linear",
            RegressionKind::Poly2 => "poly2",
            RegressionKind::Knn => "knn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelBody {
    /// Intercept followed by one coefficient per (expanded) feature.
    Coefficients(Vec<f64>),
    Neighbors {
        k: usize,
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
    },
    /// Mean predictor used when features carry no information.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub kind: RegressionKind,
    pub feature_dim: usize,
    /// Clamp predictions to `[0, 1]`.
    pub unit_bounded: bool,
    pub body: ModelBody,
}

impl RegressionModel {
    pub fn with_unit_clamp(mut self, bounded: bool) -> Self {
        self.unit_bounded = bounded;
        self
    }

    /// Model that always predicts `value`.
    pub fn constant(kind: RegressionKind, feature_dim: usize, value: f64) -> Self {
        Self {
            kind,
            feature_dim,
            unit_bounded: false,
            body: ModelBody::Constant(value),
        }
    }

    pub fn predict(&self, feature: &[f64]) -> Result<f64> {
        if feature.len() != self.feature_dim {
            return Err(Error::param(format!(
                "feature vector has length {}, model expects {}",
                feature.len(),
                self.feature_dim
            )));
        }
        let raw = match &self.body {
            ModelBody::Constant(v) => *v,
            ModelBody::Coefficients(beta) => {
                let row = design_row(self.kind, feature);
                row.iter().zip(beta).map(|(a, b)| a * b).sum()
            }
            ModelBody::Neighbors {
                k,
                features,
                targets,
            } => {
                let mut idx: Vec<usize> = (0..features.len()).collect();
                let dist: Vec<f64> = features
                    .iter()
                    .map(|f| squared_distance(f, feature))
                    .collect();
                idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
                idx[..*k].iter().map(|&i| targets[i]).sum::<f64>() / *k as f64
            }
        };
        Ok(if self.unit_bounded {
            raw.clamp(0.0, 1.0)
        } else {
            raw
        })
    }
}

/// `[1, x]` for linear, `[1, x, x_i x_j (i <= j)]` for poly2.
fn design_row(kind: RegressionKind, x: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(1 + x.len() * (x.len() + 3) / 2);
    row.push(1.0);
    row.extend_from_slice(x);
    if kind == RegressionKind::Poly2 {
        for i in 0..x.len() {
            for j in i..x.len() {
                row.push(x[i] * x[j]);
            }
        }
    }
    row
}

fn design_width(kind: RegressionKind, p: usize) -> usize {
    match kind {
        RegressionKind::Linear => 1 + p,
        RegressionKind::Poly2 => 1 + p + p * (p + 1) / 2,
        RegressionKind::Knn => 0,
    }
}

fn check_inputs(features: &[Vec<f64>], targets: &[f64]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::Fit("no training samples".into()));
    }
    if features.len() != targets.len() {
        return Err(Error::Fit(format!(
            "{} feature vectors but {} targets",
            features.len(),
            targets.len()
        )));
    }
    let p = features[0].len();
    if features.iter().any(|f| f.len() != p) {
        return Err(Error::Fit("feature vectors differ in length".into()));
    }
    if features
        .iter()
        .flatten()
        .chain(targets)
        .any(|v| !v.is_finite())
    {
        return Err(Error::Fit("non-finite training value".into()));
    }
    Ok(p)
}

fn least_squares(kind: RegressionKind, features: &[Vec<f64>], targets: &[f64]) -> Result<Vec<f64>> {
    let p = features[0].len();
    let width = design_width(kind, p);
    if features.len() < width {
        return Err(Error::Fit(format!(
            "{} regression on {p} features needs at least {width} samples, got {}",
            kind.name(),
            features.len()
        )));
    }
    let rows: Vec<f64> = features.iter().flat_map(|f| design_row(kind, f)).collect();
    let x = DMatrix::from_row_slice(features.len(), width, &rows);
    let y = DVector::from_column_slice(targets);
    let mut gram = x.transpose() * &x;
    for i in 0..width {
        gram[(i, i)] += RIDGE;
    }
    let rhs = x.transpose() * y;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Fit("normal equations are singular".into()))?;
    let beta = chol.solve(&rhs);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Fit("least-squares solution is not finite".into()));
    }
    Ok(beta.iter().copied().collect())
}

/// kNN regressor with an explicit neighborhood size.
pub fn fit_knn(features: &[Vec<f64>], targets: &[f64], k: usize) -> Result<RegressionModel> {
    let p = check_inputs(features, targets)?;
    if k == 0 || k > features.len() {
        return Err(Error::Fit(format!(
            "knn size {k} invalid for {} samples",
            features.len()
        )));
    }
    Ok(RegressionModel {
        kind: RegressionKind::Knn,
        feature_dim: p,
        unit_bounded: false,
        body: ModelBody::Neighbors {
            k,
            features: features.to_vec(),
            targets: targets.to_vec(),
        },
    })
}

/// Fits a model of `kind`. Linear and poly2 use ordinary least squares with
/// an intercept; knn keeps the training set with `k = min(5, samples)`.
pub fn fit(
    kind: RegressionKind,
    features: &[Vec<f64>],
    targets: &[f64],
) -> Result<RegressionModel> {
    let p = check_inputs(features, targets)?;
    match kind {
        RegressionKind::Knn => fit_knn(features, targets, DEFAULT_KNN_K.min(features.len())),
        _ => Ok(RegressionModel {
            kind,
            feature_dim: p,
            unit_bounded: false,
            body: ModelBody::Coefficients(least_squares(kind, features, targets)?),
        }),
    }
}

/// Mean out-of-fold R² over a seeded shuffle split into contiguous folds.
/// Folds whose held-out targets have zero variance are skipped.
pub fn kfold_r2(
    kind: RegressionKind,
    features: &[Vec<f64>],
    targets: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    check_inputs(features, targets)?;
    let n = features.len();
    if folds < 2 || n < folds {
        return Err(Error::param(format!(
            "{folds} folds invalid for {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut scores = Vec::with_capacity(folds);
    for f in 0..folds {
        let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
        let held = &order[lo..hi];
        let test_y: Vec<f64> = held.iter().map(|&i| targets[i]).collect();
        let mean = test_y.iter().sum::<f64>() / test_y.len() as f64;
        let ss_tot: f64 = test_y.iter().map(|y| (y - mean) * (y - mean)).sum();
        if ss_tot <= 0.0 {
            warn!("fold {f} has zero target variance; skipped");
            continue;
        }
        let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let train_x: Vec<Vec<f64>> = train.iter().map(|&i| features[i].clone()).collect();
        let train_y: Vec<f64> = train.iter().map(|&i| targets[i]).collect();
        let model = fit(kind, &train_x, &train_y)?;
        let mut ss_res = 0.0;
        for (&i, y) in held.iter().zip(&test_y) {
            let e = y - model.predict(&features[i])?;
            ss_res += e * e;
        }
        scores.push(1.0 - ss_res / ss_tot);
    }
    if scores.is_empty() {
        return Err(Error::Fit("every fold had zero target variance".into()));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
