use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// `d` orthonormal vectors in `R^source_dim`, from a seeded Gaussian matrix
/// orthogonalized by modified Gram–Schmidt. Returned column-wise.
pub fn random_frame(source_dim: usize, d: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d == 0 || d > source_dim {
        return Err(Error::param(format!(
            "frame of {d} vectors does not fit in dimension {source_dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d);
    while frame.len() < d {
        let mut v: Vec<f64> = (0..source_dim)
            .map(|_| -> f64 { StandardNormal.sample(&mut rng) })
            .collect();
        for u in &frame {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        // a draw nearly inside the current span is discarded and redrawn
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            frame.push(v);
        }
    }
    Ok(frame)
}

/// Projects centered `x` onto a uniformly random `d`-frame.
pub fn random_orthogonal_project(x: &DataMatrix, d: usize, seed: u64) -> Result<DataMatrix> {
    if d == 0 || d >= x.cols() {
        return Err(Error::param(format!(
            "projection dimension {d} must be in [1, {})",
            x.cols()
        )));
    }
    let frame = random_frame(x.cols(), d, seed)?;
    let centered = x.centered();
    let mut out = Vec::with_capacity(x.rows() * d);
    for r in centered.row_iter() {
        for u in &frame {
            out.push(r.iter().zip(u).map(|(a, b)| a * b).sum());
        }
    }
    DataMatrix::new(x.rows(), d, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pairwise_distances, DistanceKind};

    #[test]
    fn frame_is_orthonormal() {
        let f = random_frame(7, 3, 42).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = f[a].iter().zip(&f[b]).map(|(x, y)| x * y).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_and_non_expansive() {
        let x = DataMatrix::from_fn(20, 5, |i, j| ((i * 31 + j * 17) % 23) as f64 * 0.3).unwrap();
        let a = random_orthogonal_project(&x, 2, 9).unwrap();
        let b = random_orthogonal_project(&x, 2, 9).unwrap();
        assert_eq!(a, b);
        let dx = pairwise_distances(&x, DistanceKind::Euclidean);
        let dz = pairwise_distances(&a, DistanceKind::Euclidean);
        for (hi, lo) in dx.values().iter().zip(dz.values()) {
            assert!(*lo <= hi + 1e-9);
        }
        assert_ne!(a, random_orthogonal_project(&x, 2, 10).unwrap());
    }
}
