//! Structural-complexity measures computed from the data alone.
//!
//! * PDS (pairwise distance shift): `ln(σ / μ)` of all pairwise Euclidean
//!   distances. Lower values mean distances have concentrated, i.e. a
//!   harder, more high-dimensional dataset.
//! * MNC (mutual neighbor consistency): mean row cosine between the kNN and
//!   SNN weight matrices at a neighborhood size `k`.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::{mean_std, pairwise_distances, DataMatrix, DistanceKind, DistanceMatrix};
use crate::error::{Error, Result};
use crate::neighbors::{
    knn_weight_matrix, mean_row_cosine, rank_matrix, snn_weight_matrix, RankMatrix,
};

pub const DEFAULT_MNC_KS: [usize; 3] = [25, 50, 75];

/// PDS together with MNC at each retained `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityFeatures {
    pub pds: f64,
    pub mnc_by_k: BTreeMap<usize, f64>,
    /// Retained neighborhood sizes, ascending.
    pub ks: Vec<usize>,
    /// Requested sizes dropped because they exceed `N - 1`.
    #[serde(default)]
    pub dropped_ks: Vec<usize>,
}

impl ComplexityFeatures {
    /// `[pds, mnc(k_1), mnc(k_2), ...]` in ascending `k` order.
    pub fn to_vector(&self) -> Vec<f64> {
        std::iter::once(self.pds)
            .chain(self.ks.iter().map(|k| self.mnc_by_k[k]))
            .collect()
    }
}

fn pds_from_distances(d: &DistanceMatrix) -> Result<f64> {
    let (mean, std) = mean_std(&d.upper_triangle());
    if !(mean > 0.0 && std > 0.0) {
        return Err(Error::degenerate(
            "pairwise distances have zero mean or zero spread",
        ));
    }
    Ok((std / mean).ln())
}

fn check_pds_size(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::param(format!(
            "PDS needs at least 3 points, got {n}"
        )));
    }
    Ok(())
}

/// Natural log of the coefficient of variation of all pairwise distances.
pub fn pds(x: &DataMatrix) -> Result<f64> {
    check_pds_size(x.rows())?;
    pds_from_distances(&pairwise_distances(x, DistanceKind::Euclidean))
}

fn mnc_from_ranks(r: &RankMatrix, k: usize) -> Result<f64> {
    let knn = knn_weight_matrix(r, k)?;
    let snn = snn_weight_matrix(r, k)?;
    mean_row_cosine(&knn, &snn)
}

pub fn mnc(x: &DataMatrix, k: usize) -> Result<f64> {
    if k == 0 || k >= x.rows() {
        return Err(Error::param(format!(
            "MNC neighborhood k={k} must satisfy 1 <= k <= N-1 (N={})",
            x.rows()
        )));
    }
    mnc_from_ranks(
        &rank_matrix(&pairwise_distances(x, DistanceKind::Euclidean)),
        k,
    )
}

/// PDS plus MNC at every `k` in `ks` that is valid for the dataset size.
/// Invalid sizes are dropped with a warning; an empty result is an error.
pub fn complexity_features(x: &DataMatrix, ks: &[usize]) -> Result<ComplexityFeatures> {
    let n = x.rows();
    check_pds_size(n)?;
    let mut kept: Vec<usize> = ks.iter().copied().filter(|&k| k >= 1 && k < n).collect();
    kept.sort_unstable();
    kept.dedup();
    let dropped: Vec<usize> = ks.iter().copied().filter(|k| !kept.contains(k)).collect();
    if kept.is_empty() {
        return Err(Error::param(format!(
            "no valid MNC neighborhood size in {ks:?} for N={n}"
        )));
    }
    if !dropped.is_empty() {
        warn!(
            "MNC sizes {dropped:?} exceed N-1={} and were dropped",
            n - 1
        );
    }
    let d = pairwise_distances(x, DistanceKind::Euclidean);
    let pds = pds_from_distances(&d)?;
    let r = rank_matrix(&d);
    let mut mnc_by_k = BTreeMap::new();
    for &k in &kept {
        mnc_by_k.insert(k, mnc_from_ranks(&r, k)?);
    }
    Ok(ComplexityFeatures {
        pds,
        mnc_by_k,
        ks: kept,
        dropped_ks: dropped,
    })
}
