//! Exact t-SNE.
//!
//! Bandwidths are found per point by bisection on the Gaussian precision so
//! that the conditional distribution reaches the target perplexity. The
//! layout is optimized by gradient descent with momentum (0.5, then 0.8 from
//! iteration 250), per-coordinate adaptive gains, and early exaggeration of
//! 12 during the first 100 iterations.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::HyperParams;
use crate::data::{pairwise_distances, DataMatrix, DistanceKind};
use crate::error::{Error, Result};

const PERPLEXITY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;
const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 100;
const MOMENTUM_SWITCH: usize = 250;
const INIT_SCALE: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            learning_rate: 200.0,
            iterations: 500,
            seed: 0,
        }
    }
}

impl TsneParams {
    /// Largest perplexity the bandwidth search can reach for `n` points.
    pub fn max_perplexity(n: usize) -> f64 {
        (n as f64 - 1.0) / 3.0
    }

    pub fn from_hyperparams(hp: &HyperParams) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            perplexity: hp.get("perplexity").unwrap_or(d.perplexity),
            learning_rate: hp.get("learning_rate").unwrap_or(d.learning_rate),
            iterations: hp
                .get("iterations")
                .map(|v| v as usize)
                .unwrap_or(d.iterations),
            seed: hp.get("seed").map(|v| v as u64).unwrap_or(d.seed),
        })
    }

    pub fn to_hyperparams(&self) -> HyperParams {
        HyperParams::new()
            .with("perplexity", self.perplexity)
            .with("learning_rate", self.learning_rate)
            .with("iterations", self.iterations as f64)
            .with("seed", self.seed as f64)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.perplexity.is_finite() && self.perplexity >= 1.0) {
            return Err(Error::param(format!(
                "perplexity must be at least 1, got {}",
                self.perplexity
            )));
        }
        if self.perplexity > Self::max_perplexity(n) {
            return Err(Error::param(format!(
                "perplexity {} exceeds (N-1)/3 = {:.3} for N={n}",
                self.perplexity,
                Self::max_perplexity(n)
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::param("learning rate must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::param("iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Conditional affinities `p(j|i)` row by row. Returns the number of rows
/// whose bisection did not reach the tolerance.
fn conditional_affinities(d2: &[f64], n: usize, perplexity: f64) -> (Vec<f64>, usize) {
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    let mut unconverged = 0;
    let mut row = vec![0.0; n];
    for i in 0..n {
        let di = &d2[i * n..(i + 1) * n];
        let dmin = (0..n)
            .filter(|&j| j != i)
            .map(|j| di[j])
            .fold(f64::INFINITY, f64::min);
        let (mut beta, mut lo, mut hi) = (1.0f64, 0.0f64, f64::INFINITY);
        let mut converged = false;
        for _ in 0..MAX_BISECTIONS {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                if j == i {
                    row[j] = 0.0;
                    continue;
                }
                let shifted = di[j] - dmin;
                let v = (-beta * shifted).exp();
                row[j] = v;
                sum += v;
                weighted += shifted * v;
            }
            // entropy of the normalized row (shift-invariant form)
            let h = sum.ln() + beta * weighted / sum;
            let diff = h - target;
            if diff.abs() < PERPLEXITY_TOL {
                converged = true;
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() {
                    (beta + hi) / 2.0
                } else {
                    beta * 2.0
                };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        if !converged {
            unconverged += 1;
        }
        let sum: f64 = row.iter().sum();
        for j in 0..n {
            p[i * n + j] = row[j] / sum;
        }
    }
    (p, unconverged)
}

/// Embeds `x` into `d` dimensions.
pub fn tsne_project(x: &DataMatrix, d: usize, params: &TsneParams) -> Result<DataMatrix> {
    let n = x.rows();
    params.validate(n)?;
    if d == 0 {
        return Err(Error::param("embedding dimension must be at least 1"));
    }
    let d2 = pairwise_distances(x, DistanceKind::SquaredEuclidean);
    let (cond, unconverged) = conditional_affinities(d2.values(), n, params.perplexity);
    if unconverged > 0 {
        warn!(
            "perplexity search did not converge for {unconverged} of {n} points; using the last bracket value"
        );
    }
    let mut p = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / denom).max(1e-12);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut y: Vec<f64> = (0..n * d)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            INIT_SCALE * g
        })
        .collect();
    let mut velocity = vec![0.0; n * d];
    let mut gains = vec![1.0f64; n * d];
    let mut attract = vec![0.0; n * d];
    let mut repulse = vec![0.0; n * d];
    let mut grad = vec![0.0; n * d];
    let (mut xs, mut ys, mut w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut packed = vec![[0.0; 4]; n];

    for iter in 0..params.iterations {
        let exaggeration = if iter < EXAGGERATION_ITERS {
            EXAGGERATION
        } else {
            1.0
        };
        let momentum = if iter < MOMENTUM_SWITCH { 0.5 } else { 0.8 };

        // with v = 1/(1+|yi-yj|^2) and q = v/Z the gradient is
        // 4 * sum_j (exag*p*v - v^2/Z) (yi - yj)
        let z = if d == 2 {
            forces_2d(
                &y,
                &p,
                n,
                &mut attract,
                &mut repulse,
                &mut xs,
                &mut ys,
                &mut w,
                &mut packed,
            )
        } else {
            forces(&y, &p, n, d, &mut attract, &mut repulse)
        };
        let inv_z = 1.0 / z;
        for ((g, a), r) in grad.iter_mut().zip(&attract).zip(&repulse) {
            *g = 4.0 * (exaggeration * a - r * inv_z);
        }

        for ((g, v), gain) in grad.iter().zip(velocity.iter_mut()).zip(gains.iter_mut()) {
            *gain = if (*g > 0.0) != (*v > 0.0) {
                *gain + 0.2
            } else {
                (*gain * 0.8).max(MIN_GAIN)
            };
            *v = momentum * *v - params.learning_rate * *gain * g;
        }
        for (yv, v) in y.iter_mut().zip(&velocity) {
            *yv += v;
        }
        for c in 0..d {
            let mean = (0..n).map(|i| y[i * d + c]).sum::<f64>() / n as f64;
            for i in 0..n {
                y[i * d + c] -= mean;
            }
        }
    }
    DataMatrix::new(n, d, y)
}

/// Attractive and repulsive sums per point, any dimension. Returns Z.
fn forces(
    y: &[f64],
    p: &[f64],
    n: usize,
    d: usize,
    attract: &mut [f64],
    repulse: &mut [f64],
) -> f64 {
    attract.iter_mut().for_each(|a| *a = 0.0);
    repulse.iter_mut().for_each(|r| *r = 0.0);
    let mut diff = vec![0.0; d];
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let mut dist = 0.0;
            for c in 0..d {
                diff[c] = y[i * d + c] - y[j * d + c];
                dist += diff[c] * diff[c];
            }
            let v = 1.0 / (1.0 + dist);
            z += 2.0 * v;
            let pa = p[i * n + j] * v;
            let rv = v * v;
            for c in 0..d {
                attract[i * d + c] += pa * diff[c];
                attract[j * d + c] -= pa * diff[c];
                repulse[i * d + c] += rv * diff[c];
                repulse[j * d + c] -= rv * diff[c];
            }
        }
    }
    z
}

/// Planar case. Each unordered pair is visited once, with `p` symmetric:
/// the kernel values of a row segment are computed first in a plain map,
/// which vectorizes, then accumulated for `i` and mirrored onto `j`.
/// Forces are gathered per point as `[ax, ay, rx, ry]` in `packed`, so the
/// mirrored updates touch one cache line. `xs`, `ys`, `w` and `packed` are
/// scratch of length `n`. Returns Z.
#[allow(clippy::too_many_arguments)]
fn forces_2d(
    y: &[f64],
    p: &[f64],
    n: usize,
    attract: &mut [f64],
    repulse: &mut [f64],
    xs: &mut [f64],
    ys: &mut [f64],
    w: &mut [f64],
    packed: &mut [[f64; 4]],
) -> f64 {
    for i in 0..n {
        xs[i] = y[2 * i];
        ys[i] = y[2 * i + 1];
    }
    packed.iter_mut().for_each(|g| *g = [0.0; 4]);
    let mut z = 0.0;
    for i in 0..n {
        let (xi, yi) = (xs[i], ys[i]);
        let (xt, yt) = (&xs[i + 1..n], &ys[i + 1..n]);
        let w = &mut w[i + 1..n];
        for ((wv, &xj), &yj) in w.iter_mut().zip(xt).zip(yt) {
            let dx = xi - xj;
            let dy = yi - yj;
            *wv = 1.0 / (1.0 + dx * dx + dy * dy);
        }
        let prow = &p[i * n + i + 1..(i + 1) * n];
        let (gi, rest) = packed[i..n].split_first_mut().expect("row in range");
        let mut acc = [0.0; 4];
        for ((((&v, &pij), gj), &xj), &yj) in w.iter().zip(prow).zip(rest).zip(xt).zip(yt) {
            let dx = xi - xj;
            let dy = yi - yj;
            z += v;
            let pa = pij * v;
            let rv = v * v;
            let f = [pa * dx, pa * dy, rv * dx, rv * dy];
            for c in 0..4 {
                acc[c] += f[c];
                gj[c] -= f[c];
            }
        }
        for c in 0..4 {
            gi[c] += acc[c];
        }
    }
    for (i, g) in packed.iter().enumerate() {
        attract[2 * i] = g[0];
        attract[2 * i + 1] = g[1];
        repulse[2 * i] = g[2];
        repulse[2 * i + 1] = g[3];
    }
    2.0 * z
}
