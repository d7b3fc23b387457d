//! Neighbor ranks and the kNN / shared-nearest-neighbor weight matrices.

use rayon::prelude::*;

use crate::data::DistanceMatrix;
use crate::error::{Error, Result};

/// 1-based neighbor ranks: `rank(i, j)` is the position of `j` in `i`'s
/// distance ordering, ties broken by smaller point index.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    n: usize,
    ranks: Vec<u32>,
    // order[i * (n - 1) + r - 1] = r-th nearest neighbor of i
    order: Vec<u32>,
}

impl RankMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Rank of `j` as a neighbor of `i`; 0 on the diagonal.
    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.ranks[i * self.n + j] as usize
    }

    /// The `r`-th nearest neighbor of `i` (`r` is 1-based).
    pub fn neighbor(&self, i: usize, r: usize) -> usize {
        self.order[i * (self.n - 1) + r - 1] as usize
    }

    /// Neighbors of `i` ordered by rank.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        let m = self.n - 1;
        &self.order[i * m..(i + 1) * m]
    }

    /// First `k` neighbors of `i`.
    pub fn knn(&self, i: usize, k: usize) -> &[u32] {
        &self.neighbors(i)[..k]
    }
}

pub fn rank_matrix(d: &DistanceMatrix) -> RankMatrix {
    let n = d.n();
    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = d.row(i);
            let mut idx: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
            idx.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut ranks = vec![0u32; n * n];
    let mut order = Vec::with_capacity(n * n.saturating_sub(1));
    for (i, row) in rows.into_iter().enumerate() {
        for (r, &j) in row.iter().enumerate() {
            ranks[i * n + j as usize] = r as u32 + 1;
        }
        order.extend(row);
    }
    RankMatrix { n, ranks, order }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Knn,
    Snn,
}

/// Nonnegative integer weights stored sparsely by row (columns ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    k: usize,
    kind: WeightKind,
    rows: Vec<Vec<(u32, u64)>>,
}

impl WeightMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// Nonzero entries of row `i` as `(column, weight)`, columns ascending.
    pub fn row(&self, i: usize) -> &[(u32, u64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&(j as u32), |&(c, _)| c)
            .map(|p| row[p].1)
            .unwrap_or(0)
    }

    pub fn dense_row(&self, i: usize) -> Vec<u64> {
        let mut out = vec![0; self.n];
        for &(j, w) in &self.rows[i] {
            out[j as usize] = w;
        }
        out
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k + 1 > n {
        return Err(Error::param(format!(
            "neighborhood size k={k} must satisfy 1 <= k <= N-1 (N={n})"
        )));
    }
    Ok(())
}

/// `w(i, j) = max(0, k - rank(i, j) + 1)` off the diagonal.
pub fn knn_weight_matrix(r: &RankMatrix, k: usize) -> Result<WeightMatrix> {
    check_k(r.n(), k)?;
    let rows = (0..r.n())
        .map(|i| {
            let mut row: Vec<(u32, u64)> = r
                .knn(i, k)
                .iter()
                .enumerate()
                .map(|(pos, &j)| (j, (k - pos) as u64))
                .collect();
            row.sort_unstable_by_key(|&(j, _)| j);
            row
        })
        .collect();
    Ok(WeightMatrix {
        n: r.n(),
        k,
        kind: WeightKind::Knn,
        rows,
    })
}

/// Shared-nearest-neighbor weights: for every neighbor shared between the
/// kNN lists of `i` and `j`, held at rank `m` by `i` and rank `l` by `j`,
/// accumulate `(k + 1 - m) * (k + 1 - l)`.
pub fn snn_weight_matrix(r: &RankMatrix, k: usize) -> Result<WeightMatrix> {
    check_k(r.n(), k)?;
    let n = r.n();
    // reverse[m] = (i, rank of m in i's list) for every i holding m among its kNN
    let mut reverse: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (pos, &m) in r.knn(i, k).iter().enumerate() {
            reverse[m as usize].push((i as u32, pos as u32 + 1));
        }
    }
    let kp1 = k as u64 + 1;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0u64; n];
            let mut touched: Vec<u32> = Vec::new();
            for (pos, &m) in r.knn(i, k).iter().enumerate() {
                let wi = kp1 - (pos as u64 + 1);
                for &(j, rank_j) in &reverse[m as usize] {
                    if j as usize == i {
                        continue;
                    }
                    let slot = &mut acc[j as usize];
                    if *slot == 0 {
                        touched.push(j);
                    }
                    *slot += wi * (kp1 - rank_j as u64);
                }
            }
            touched.sort_unstable();
            touched
                .into_iter()
                .map(|j| (j, acc[j as usize]))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(WeightMatrix {
        n,
        k,
        kind: WeightKind::Snn,
        rows,
    })
}

fn sparse_row_cosine(a: &[(u32, u64)], b: &[(u32, u64)]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let norm = |r: &[(u32, u64)]| {
        r.iter()
            .map(|&(_, w)| (w as f64) * (w as f64))
            .sum::<f64>()
            .sqrt()
    };
    let (mut p, mut q, mut dot) = (0, 0, 0.0);
    while p < a.len() && q < b.len() {
        match a[p].0.cmp(&b[q].0) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                dot += a[p].1 as f64 * b[q].1 as f64;
                p += 1;
                q += 1;
            }
        }
    }
    dot / (norm(a) * norm(b))
}

/// Mean over rows of the cosine similarity between matching rows of `a`
/// and `b`. A row pair where either side is all zeros contributes 0.
pub fn mean_row_cosine(a: &WeightMatrix, b: &WeightMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::param(format!(
            "weight matrices differ in size: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let total: f64 = (0..a.n())
        .map(|i| sparse_row_cosine(a.row(i), b.row(i)))
        .sum();
    Ok(total / a.n() as f64)
}
