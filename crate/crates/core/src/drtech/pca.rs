use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Principal axes of a dataset, sorted by descending eigenvalue.
///
/// Each axis is sign-normalized so its largest-magnitude coordinate is
/// positive (first such coordinate on ties).
#[derive(Debug, Clone)]
pub struct PcaBasis {
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    // axes[c] is the c-th principal axis (length D)
    axes: Vec<Vec<f64>>,
}

impl PcaBasis {
    pub fn fit(x: &DataMatrix) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        if n < 2 {
            return Err(Error::param("PCA needs at least 2 points"));
        }
        let mean = x.column_means();
        let centered = x.centered();
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for r in centered.row_iter() {
            for a in 0..d {
                let ra = r[a];
                for b in a..d {
                    cov[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = cov[(a, b)] / n as f64;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .total_cmp(&eig.eigenvalues[i])
                .then(i.cmp(&j))
        });
        let mut eigenvalues = Vec::with_capacity(d);
        let mut axes = Vec::with_capacity(d);
        for &c in &order {
            let mut axis: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let lead = axis
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, v)| {
                    if v.abs() > best.1 {
                        (i, v.abs())
                    } else {
                        best
                    }
                })
                .0;
            if axis[lead] < 0.0 {
                axis.iter_mut().for_each(|v| *v = -*v);
            }
            eigenvalues.push(eig.eigenvalues[c].max(0.0));
            axes.push(axis);
        }
        Ok(Self {
            mean,
            eigenvalues,
            axes,
        })
    }

    /// Covariance eigenvalues (population convention), descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn axis(&self, c: usize) -> &[f64] {
        &self.axes[c]
    }

    /// Coordinates on components `first..first + count` (0-based). Axes
    /// whose eigenvalue is numerically zero produce zero coordinates.
    pub fn project(&self, x: &DataMatrix, first: usize, count: usize) -> Result<DataMatrix> {
        let d = self.mean.len();
        if x.cols() != d {
            return Err(Error::param(format!(
                "expected {d} columns, got {}",
                x.cols()
            )));
        }
        if count == 0 || first + count > d {
            return Err(Error::param(format!(
                "component window {}..{} outside 1..={d}",
                first + 1,
                first + count
            )));
        }
        let top = self.eigenvalues[0];
        let tol = top * 1e-12 * d as f64;
        let deficient: Vec<usize> = (first..first + count)
            .filter(|&c| self.eigenvalues[c] <= tol)
            .collect();
        if !deficient.is_empty() {
            warn!(
                "data rank too low for {count} components; components {:?} set to zero",
                deficient.iter().map(|c| c + 1).collect::<Vec<_>>()
            );
        }
        let mut out = Vec::with_capacity(x.rows() * count);
        for r in x.row_iter() {
            for c in first..first + count {
                if deficient.contains(&c) {
                    out.push(0.0);
                    continue;
                }
                let v: f64 = r
                    .iter()
                    .zip(&self.mean)
                    .zip(&self.axes[c])
                    .map(|((v, m), a)| (v - m) * a)
                    .sum();
                out.push(v);
            }
        }
        DataMatrix::new(x.rows(), count, out)
    }
}

/// Centered projection onto the top `d` principal components.
pub fn pca_project(x: &DataMatrix, d: usize) -> Result<DataMatrix> {
    if d == 0 || d >= x.cols() {
        return Err(Error::param(format!(
            "PCA target dimension {d} must be in [1, {})",
            x.cols()
        )));
    }
    PcaBasis::fit(x)?.project(x, 0, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pairwise_distances, DistanceKind};

    #[test]
    fn collinear_points_second_axis_zero() {
        let x =
            DataMatrix::from_rows(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap();
        let z = pca_project(&x, 2).unwrap();
        for i in 0..3 {
            assert!(z.get(i, 1).abs() < 1e-9);
        }
        assert!((z.get(2, 0) - z.get(0, 0)).abs() > 1.0);
    }

    #[test]
    fn full_rank_window_preserves_distances() {
        let x = DataMatrix::from_rows(&[
            [0.0, 1.0, 0.5],
            [2.0, 0.3, 1.0],
            [3.0, 3.0, -1.0],
            [1.0, 4.0, 2.0],
            [5.0, 0.0, 0.0],
        ])
        .unwrap();
        let b = PcaBasis::fit(&x).unwrap();
        let z = b.project(&x, 0, 3).unwrap();
        let (dx, dz) = (
            pairwise_distances(&x, DistanceKind::Euclidean),
            pairwise_distances(&z, DistanceKind::Euclidean),
        );
        for (a, b) in dx.values().iter().zip(dz.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn sign_convention() {
        let x =
            DataMatrix::from_rows(&[[0.0, 0.0], [-1.0, -0.1], [-2.0, 0.1], [-3.0, 0.0]]).unwrap();
        let b = PcaBasis::fit(&x).unwrap();
        let a = b.axis(0);
        assert!(a[0] > 0.0 && a[0].abs() > a[1].abs());
    }

    #[test]
    fn bad_dimension() {
        let x = DataMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(pca_project(&x, 2).is_err());
        assert!(pca_project(&x, 0).is_err());
    }
}
