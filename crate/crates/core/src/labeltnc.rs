//! Label-Trustworthiness and Label-Continuity.
//!
//! Both spaces are summarized by a class-pairwise cluster-label-matching
//! (CLM) matrix. Where the projection shows better class separation than the
//! original data the difference is a False Groups distortion (penalized by
//! Label-T); where it shows worse separation it is a Missing Groups
//! distortion (penalized by Label-C).

use crate::cvm::{pair_score, CvmConfig};
use crate::data::{order_free_mean, restrict_to_pair, DataMatrix, LabelPartition};
use crate::error::{Error, Result};

/// Symmetric class-by-class matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ClmMatrix {
    k: usize,
    cells: Vec<f64>,
}

impl ClmMatrix {
    fn zeros(k: usize) -> Self {
        Self {
            k,
            cells: vec![0.0; k * k],
        }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.cells[i * self.k + j] = v;
        self.cells[j * self.k + i] = v;
    }

    pub fn class_count(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.k + j]
    }

    /// Cells `(i, j)` with `i < j`, row by row.
    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.k * (self.k - 1) / 2);
        for i in 0..self.k {
            for j in i + 1..self.k {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Mean over the `k(k-1)/2` unordered pairs.
    pub fn upper_mean(&self) -> f64 {
        order_free_mean(&self.upper())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelTncResult {
    pub label_t: f64,
    pub label_c: f64,
    /// `max(M(X) - M(Z), 0)` per class pair.
    pub fg_matrix: ClmMatrix,
    /// `max(M(Z) - M(X), 0)` per class pair.
    pub mg_matrix: ClmMatrix,
}

/// Pairwise CVM score of every class pair within `s`.
pub fn clm_matrix(s: &DataMatrix, p: &LabelPartition, cfg: &CvmConfig) -> Result<ClmMatrix> {
    cfg.validate()?;
    if s.rows() != p.len() {
        return Err(Error::validation(format!(
            "{} data rows but {} labels",
            s.rows(),
            p.len()
        )));
    }
    let k = p.class_count();
    if k < 2 {
        return Err(Error::param("CLM matrix needs at least two classes"));
    }
    let mut m = ClmMatrix::zeros(k);
    for a in 0..k {
        for b in a + 1..k {
            let (data, labels) = restrict_to_pair(s, p, a, b)?;
            let v = pair_score(&data, &labels, cfg).map_err(|e| Error::Pair {
                a,
                b,
                source: Box::new(e),
            })?;
            m.set(a, b, v);
        }
    }
    Ok(m)
}

/// Compares class-pairwise CLM between original data `x` and projection `z`.
pub fn label_tnc(
    x: &DataMatrix,
    z: &DataMatrix,
    p: &LabelPartition,
    cfg: &CvmConfig,
) -> Result<LabelTncResult> {
    if x.rows() != z.rows() {
        return Err(Error::validation(format!(
            "original data has {} points but projection has {}",
            x.rows(),
            z.rows()
        )));
    }
    let mx = clm_matrix(x, p, cfg)?;
    let mz = clm_matrix(z, p, cfg)?;
    let k = p.class_count();
    let mut fg = ClmMatrix::zeros(k);
    let mut mg = ClmMatrix::zeros(k);
    for i in 0..k {
        for j in i + 1..k {
            let diff = mx.get(i, j) - mz.get(i, j);
            fg.set(i, j, diff.max(0.0));
            mg.set(i, j, (-diff).max(0.0));
        }
    }
    Ok(LabelTncResult {
        label_t: 1.0 - fg.upper_mean(),
        label_c: 1.0 - mg.upper_mean(),
        fg_matrix: fg,
        mg_matrix: mg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DataMatrix {
        let rows: Vec<[f64; 1]> = points.iter().map(|&p| [p]).collect();
        DataMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn two_classes_one_cell() {
        let s = line(&[0.0, 1.0, 10.0, 11.0]);
        let p = LabelPartition::new(vec![0, 0, 1, 1], 2).unwrap();
        let m = clm_matrix(&s, &p, &CvmConfig::dsc()).unwrap();
        assert_eq!(m.class_count(), 2);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn three_separated_classes_dsc() {
        let s = line(&[0.0, 1.0, 10.0, 11.0, 20.0, 21.0]);
        let p = LabelPartition::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let m = clm_matrix(&s, &p, &CvmConfig::dsc()).unwrap();
        assert_eq!(m.upper(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn overlapping_classes_drop_below_half() {
        // classes 1 and 2 interleave over the same range
        let s = line(&[0.0, 1.0, 10.0, 13.0, 11.0, 14.0]);
        let p = LabelPartition::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let m = clm_matrix(&s, &p, &CvmConfig::dsc()).unwrap();
        assert!(m.get(1, 2) < 0.5);
        assert_eq!(m.get(0, 1), 1.0);
    }

    #[test]
    fn identity_projection_is_perfect() {
        let x = DataMatrix::from_rows(&[
            [0.0, 0.0],
            [1.0, 0.5],
            [5.0, 5.0],
            [6.0, 5.5],
            [0.0, 9.0],
            [1.0, 8.0],
        ])
        .unwrap();
        let p = LabelPartition::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        for cfg in [CvmConfig::dsc(), CvmConfig::ch_adjusted()] {
            let r = label_tnc(&x, &x, &p, &cfg).unwrap();
            assert_eq!(r.label_t, 1.0);
            assert_eq!(r.label_c, 1.0);
        }
    }

    #[test]
    fn pure_false_and_missing_groups() {
        let x = line(&[0.0, 1.0, 10.0, 11.0]);
        let z = line(&[0.0, 1.0, 0.5, 1.5]);
        let p = LabelPartition::new(vec![0, 0, 1, 1], 2).unwrap();
        let cfg = CvmConfig::dsc();
        let r = label_tnc(&x, &z, &p, &cfg).unwrap();
        assert_eq!((r.label_t, r.label_c), (0.0, 1.0));
        let swapped = label_tnc(&z, &x, &p, &cfg).unwrap();
        assert_eq!((swapped.label_t, swapped.label_c), (1.0, 0.0));
    }

    #[test]
    fn size_mismatch() {
        let x = line(&[0.0, 1.0, 10.0, 11.0]);
        let z = line(&[0.0, 1.0, 10.0]);
        let p = LabelPartition::new(vec![0, 0, 1, 1], 2).unwrap();
        assert!(matches!(
            label_tnc(&x, &z, &p, &CvmConfig::dsc()),
            Err(Error::Validation(_))
        ));
    }
}
