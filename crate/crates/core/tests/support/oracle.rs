//! Definition-level reference implementations, written for clarity only.
#![allow(dead_code, clippy::needless_range_loop)]

use drtk::cvm::ch_pair_terms;
use drtk::data::{
    pairwise_distances, validate_labeled, DataMatrix, DistanceKind, DistanceMatrix, LabelPartition,
};
use drtk::drquality;
use drtk::neighbors::{rank_matrix, snn_weight_matrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

pub fn dist_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| dist(a, b)).collect())
        .collect()
}

/// Rank of `j` in `i`'s ordering: one plus the number of points that come
/// strictly before it (closer, or equally close with a smaller index).
pub fn rank(d: &[Vec<f64>], i: usize, j: usize) -> usize {
    let mut r = 1;
    for l in 0..d.len() {
        if l == i || l == j {
            continue;
        }
        if d[i][l] < d[i][j] || (d[i][l] == d[i][j] && l < j) {
            r += 1;
        }
    }
    r
}

pub fn knn_set(d: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    (0..d.len())
        .filter(|&j| j != i && rank(d, i, j) <= k)
        .collect()
}

pub fn trust_cont(dx: &[Vec<f64>], dz: &[Vec<f64>], k: usize) -> (f64, f64) {
    let n = dx.len();
    let mut t = 0.0;
    let mut c = 0.0;
    for i in 0..n {
        let kx = knn_set(dx, i, k);
        let kz = knn_set(dz, i, k);
        for &j in &kz {
            if !kx.contains(&j) {
                t += rank(dx, i, j) as f64 - k as f64;
            }
        }
        for &j in &kx {
            if !kz.contains(&j) {
                c += rank(dz, i, j) as f64 - k as f64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let norm = 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0));
    (
        (1.0 - norm * t).clamp(0.0, 1.0),
        (1.0 - norm * c).clamp(0.0, 1.0),
    )
}

pub fn mrre(dx: &[Vec<f64>], dz: &[Vec<f64>], k: usize) -> (f64, f64) {
    let n = dx.len();
    let mut missing = 0.0;
    let mut false_ = 0.0;
    for i in 0..n {
        for j in knn_set(dz, i, k) {
            let (a, b) = (rank(dx, i, j) as f64, rank(dz, i, j) as f64);
            false_ += (a - b).abs() / b;
        }
        for j in knn_set(dx, i, k) {
            let (a, b) = (rank(dx, i, j) as f64, rank(dz, i, j) as f64);
            missing += (a - b).abs() / a;
        }
    }
    let mut h = 0.0;
    for l in 1..=k {
        h += (n as f64 - 2.0 * l as f64 + 1.0).abs() / l as f64;
    }
    h *= n as f64;
    (1.0 - missing / h, 1.0 - false_ / h)
}

fn upper(d: &[Vec<f64>]) -> Vec<f64> {
    let mut v = Vec::new();
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            v.push(d[i][j]);
        }
    }
    v
}

/// Average rank: strictly smaller count plus the mid position among ties.
fn avg_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn global_corr(dx: &[Vec<f64>], dz: &[Vec<f64>]) -> (f64, f64) {
    let (a, b) = (upper(dx), upper(dz));
    (pearson(&avg_ranks(&a), &avg_ranks(&b)), pearson(&a, &b))
}

/// Shared-neighbor weight: sum over (m, n) with the m-th neighbor of `i`
/// equal to the n-th neighbor of `j`.
pub fn snn(d: &[Vec<f64>], k: usize) -> Vec<Vec<u64>> {
    let n = d.len();
    let nth = |i: usize, r: usize| (0..n).find(|&j| j != i && rank(d, i, j) == r).unwrap();
    let mut w = vec![vec![0u64; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for m in 1..=k {
                for l in 1..=k {
                    if nth(i, m) == nth(j, l) {
                        w[i][j] += ((k + 1 - m) * (k + 1 - l)) as u64;
                    }
                }
            }
        }
    }
    w
}

/// Random small point set: continuous coordinates, or coarse integer grid
/// coordinates that produce distance ties.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let grid = rng.random_bool(0.3);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if grid {
                        rng.random_range(0..4) as f64
                    } else {
                        rng.random_range(-5.0..5.0)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest k accepted by the rank metrics for `n` points.
pub fn max_rank_k(n: usize) -> usize {
    (1..n).filter(|&k| 3 * k + 1 < 2 * n).max().unwrap_or(0)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn to_matrix(points: &[Vec<f64>]) -> DataMatrix {
    DataMatrix::from_rows(points).unwrap()
}

/// Compares the library against the reference implementations on
/// `instances` random point sets of 3 to 8 points. Returns the number of
/// comparisons made, or a description of the first disagreement.
pub fn check_against_library(instances: usize, seed: u64, tol: f64) -> Result<usize, String> {
    let mut rng = rng(seed);
    let mut checks = 0;
    for case in 0..instances {
        let n = rng.random_range(3..=8);
        let dim = rng.random_range(1..=3);
        let px = random_points(&mut rng, n, dim);
        let zdim = rng.random_range(1..=2);
        let pz = random_points(&mut rng, n, zdim);
        let (ox, oz) = (dist_matrix(&px), dist_matrix(&pz));
        let (x, z) = (to_matrix(&px), to_matrix(&pz));
        let (dx, dz): (DistanceMatrix, DistanceMatrix) = (
            pairwise_distances(&x, DistanceKind::Euclidean),
            pairwise_distances(&z, DistanceKind::Euclidean),
        );
        let fail = |what: &str, got: String, want: String| {
            Err(format!(
                "case {case} (N={n}): {what}: library {got}, oracle {want}"
            ))
        };

        for i in 0..n {
            for j in 0..n {
                checks += 1;
                if !close(dx.get(i, j), ox[i][j], tol) {
                    return fail(
                        "pairwise distance",
                        dx.get(i, j).to_string(),
                        ox[i][j].to_string(),
                    );
                }
            }
        }

        let kmax = max_rank_k(n);
        if kmax >= 1 {
            let k = rng.random_range(1..=kmax);
            let got = drquality::trust_cont(&dx, &dz, k).map_err(|e| e.to_string())?;
            let want = trust_cont(&ox, &oz, k);
            checks += 1;
            if !(close(got.0, want.0, tol) && close(got.1, want.1, tol)) {
                return fail("trust_cont", format!("{got:?}"), format!("{want:?}"));
            }
            let got = drquality::mrre(&dx, &dz, k).map_err(|e| e.to_string())?;
            let want = mrre(&ox, &oz, k);
            checks += 1;
            if !(close(got.0, want.0, tol) && close(got.1, want.1, tol)) {
                return fail("mrre", format!("{got:?}"), format!("{want:?}"));
            }
        }

        // grid instances can make either distance vector constant
        let (a, b) = (dx.upper_triangle(), dz.upper_triangle());
        let varies = |v: &[f64]| v.iter().any(|&t| t != v[0]);
        if varies(&a) && varies(&b) {
            let got = drquality::global_corr(&dx, &dz).map_err(|e| e.to_string())?;
            let want = global_corr(&ox, &oz);
            checks += 1;
            if !(close(got.0, want.0, tol) && close(got.1, want.1, tol)) {
                return fail("global_corr", format!("{got:?}"), format!("{want:?}"));
            }
        }

        let k = rng.random_range(1..n);
        let w = snn_weight_matrix(&rank_matrix(&dx), k).map_err(|e| e.to_string())?;
        let want = snn(&ox, k);
        for i in 0..n {
            checks += 1;
            if w.dense_row(i) != want[i] {
                return fail(
                    "snn row",
                    format!("{:?}", w.dense_row(i)),
                    format!("{:?}", want[i]),
                );
            }
        }
    }
    Ok(checks)
}

/// Mean CH4 over class pairs and `shuffles` label shuffles (class sizes kept).
pub fn random_label_ch4(x: &DataMatrix, p: &LabelPartition, shuffles: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = p.assignments().to_vec();
    let mut sum = 0.0;
    let mut count = 0;
    for _ in 0..shuffles {
        labels.shuffle(&mut rng);
        let q = LabelPartition::new(labels.clone(), p.class_count()).unwrap();
        let l = validate_labeled(x.clone(), q).unwrap();
        for a in 0..p.class_count() {
            for b in a + 1..p.class_count() {
                sum += ch_pair_terms(&l.class_pair(a, b).unwrap(), 1.0)
                    .unwrap()
                    .ch4;
                count += 1;
            }
        }
    }
    sum / count as f64
}
