//! Projection-quality metrics: Trustworthiness & Continuity, the MRRE pair,
//! global distance correlations, and the [`MetricSpec`] dispatcher used by
//! the workflows.

use serde::{Deserialize, Serialize};

use crate::cvm::CvmConfig;
use crate::data::{
    mean_std, pairwise_distances, DataMatrix, DistanceKind, DistanceMatrix, LabelPartition,
};
use crate::error::{Error, Result};
use crate::labeltnc::label_tnc;
use crate::neighbors::{rank_matrix, RankMatrix};

pub const DEFAULT_K_LIST: [usize; 5] = [5, 10, 15, 20, 25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Tnc,
    Mrre,
    LabelTnc,
    Spearman,
    Pearson,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Tnc => "tnc",
            MetricKind::Mrre => "mrre",
            MetricKind::LabelTnc => "label_tnc",
            MetricKind::Spearman => "spearman",
            MetricKind::Pearson => "pearson",
        }
    }

    /// Names of the two component scores of paired metrics.
    pub fn component_names(self) -> Option<(&'static str, &'static str)> {
        match self {
            MetricKind::Tnc => Some(("trustworthiness", "continuity")),
            MetricKind::Mrre => Some(("mrre_missing", "mrre_false")),
            MetricKind::LabelTnc => Some(("label_t", "label_c")),
            MetricKind::Spearman | MetricKind::Pearson => None,
        }
    }

    /// Whether scores are confined to `[0, 1]`.
    pub fn is_unit_bounded(self) -> bool {
        !matches!(self, MetricKind::Spearman | MetricKind::Pearson)
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tnc" => Ok(MetricKind::Tnc),
            "mrre" => Ok(MetricKind::Mrre),
            "label_tnc" => Ok(MetricKind::LabelTnc),
            "spearman" => Ok(MetricKind::Spearman),
            "pearson" => Ok(MetricKind::Pearson),
            other => Err(Error::param(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    #[default]
    F1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub k_list: Vec<usize>,
    pub combine: Combine,
    pub cvm: CvmConfig,
}

impl MetricSpec {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            k_list: DEFAULT_K_LIST.to_vec(),
            combine: Combine::F1,
            cvm: CvmConfig::default(),
        }
    }

    pub fn with_k_list(mut self, k_list: Vec<usize>) -> Self {
        self.k_list = k_list;
        self
    }

    pub fn with_cvm(mut self, cvm: CvmConfig) -> Self {
        self.cvm = cvm;
        self
    }

    /// Stable display name, e.g. `tnc` or `label_tnc[dsc]`.
    pub fn name(&self) -> String {
        match self.kind {
            MetricKind::LabelTnc => format!("label_tnc[{}]", self.cvm.kind.name()),
            k => k.name().to_string(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if matches!(self.kind, MetricKind::Tnc | MetricKind::Mrre) {
            if self.k_list.is_empty() {
                return Err(Error::param("k list is empty"));
            }
            for &k in &self.k_list {
                check_rank_k(n, k)?;
            }
        }
        if self.kind == MetricKind::LabelTnc {
            self.cvm.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScore {
    pub value: f64,
    pub components: Option<(f64, f64)>,
}

/// Harmonic mean `2ab / (a + b)`; 0 when either side is 0.
pub fn f1(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

fn check_rank_k(n: usize, k: usize) -> Result<()> {
    let normalizer = n as i64 * k as i64 * (2 * n as i64 - 3 * k as i64 - 1);
    if k == 0 || k >= n || normalizer <= 0 {
        return Err(Error::param(format!(
            "k={k} out of range for N={n}: need 1 <= k <= N-1 and 3k < 2N-1"
        )));
    }
    Ok(())
}

fn check_same_n(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::validation(format!(
            "point counts differ: {a} vs {b}"
        )));
    }
    Ok(())
}

/// Trustworthiness and Continuity from precomputed rank matrices.
pub fn trust_cont_ranks(rx: &RankMatrix, rz: &RankMatrix, k: usize) -> Result<(f64, f64)> {
    check_same_n(rx.n(), rz.n())?;
    let n = rx.n();
    check_rank_k(n, k)?;
    let mut t_sum = 0.0;
    let mut c_sum = 0.0;
    for i in 0..n {
        for &j in rz.knn(i, k) {
            let r = rx.rank(i, j as usize);
            if r > k {
                t_sum += (r - k) as f64;
            }
        }
        for &j in rx.knn(i, k) {
            let r = rz.rank(i, j as usize);
            if r > k {
                c_sum += (r - k) as f64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let scale = 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0));
    Ok((
        (1.0 - scale * t_sum).clamp(0.0, 1.0),
        (1.0 - scale * c_sum).clamp(0.0, 1.0),
    ))
}

/// Trustworthiness `T` (penalizes false neighbors) and Continuity `C`
/// (penalizes missing neighbors) at neighborhood size `k`.
pub fn trust_cont(dx: &DistanceMatrix, dz: &DistanceMatrix, k: usize) -> Result<(f64, f64)> {
    check_same_n(dx.n(), dz.n())?;
    trust_cont_ranks(&rank_matrix(dx), &rank_matrix(dz), k)
}

fn mrre_normalizer(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    nf * (1..=k)
        .map(|l| (nf - 2.0 * l as f64 + 1.0).abs() / l as f64)
        .sum::<f64>()
}

/// MRRE pair from precomputed ranks; returns `(missing, false)`.
pub fn mrre_ranks(rx: &RankMatrix, rz: &RankMatrix, k: usize) -> Result<(f64, f64)> {
    check_same_n(rx.n(), rz.n())?;
    let n = rx.n();
    check_rank_k(n, k)?;
    let mut raw_false = 0.0;
    let mut raw_missing = 0.0;
    for i in 0..n {
        for &j in rz.knn(i, k) {
            let (a, b) = (rx.rank(i, j as usize) as f64, rz.rank(i, j as usize) as f64);
            raw_false += (a - b).abs() / b;
        }
        for &j in rx.knn(i, k) {
            let (a, b) = (rx.rank(i, j as usize) as f64, rz.rank(i, j as usize) as f64);
            raw_missing += (a - b).abs() / a;
        }
    }
    let h = mrre_normalizer(n, k);
    Ok((1.0 - raw_missing / h, 1.0 - raw_false / h))
}

/// Mean relative rank errors, oriented so that 1 is perfect. Returns
/// `(missing, false)`: the data-side and projection-side neighborhoods.
pub fn mrre(dx: &DistanceMatrix, dz: &DistanceMatrix, k: usize) -> Result<(f64, f64)> {
    check_same_n(dx.n(), dz.n())?;
    mrre_ranks(&rank_matrix(dx), &rank_matrix(dz), k)
}

/// Average ranks (1-based), ties share the mean of their positions.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &p in &idx[start..end] {
            ranks[p] = avg;
        }
        start = end;
    }
    ranks
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    if !(sa > 0.0 && sb > 0.0) {
        return Err(Error::degenerate("correlation of a constant vector"));
    }
    let cov = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / a.len() as f64;
    Ok((cov / (sa * sb)).clamp(-1.0, 1.0))
}

pub(crate) fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Spearman and Pearson correlation between the upper-triangle distances.
pub fn global_corr(dx: &DistanceMatrix, dz: &DistanceMatrix) -> Result<(f64, f64)> {
    check_same_n(dx.n(), dz.n())?;
    if dx.n() < 3 {
        return Err(Error::param("global correlations need at least 3 points"));
    }
    let a = dx.upper_triangle();
    let b = dz.upper_triangle();
    Ok((spearman(&a, &b)?, pearson(&a, &b)?))
}

/// Original-space side of a metric computed once and reused across
/// projections.
#[derive(Debug, Clone)]
pub struct PreparedMetric {
    spec: MetricSpec,
    x: DataMatrix,
    labels: Option<LabelPartition>,
    dx: Option<DistanceMatrix>,
    rx: Option<RankMatrix>,
}

impl PreparedMetric {
    pub fn new(x: &DataMatrix, labels: Option<&LabelPartition>, spec: &MetricSpec) -> Result<Self> {
        spec.validate(x.rows())?;
        if spec.kind == MetricKind::LabelTnc && labels.is_none() {
            return Err(Error::param("label_tnc needs class labels"));
        }
        if let Some(p) = labels {
            check_same_n(x.rows(), p.len())?;
        }
        let (dx, rx) = match spec.kind {
            MetricKind::Tnc | MetricKind::Mrre => {
                let d = pairwise_distances(x, DistanceKind::Euclidean);
                let r = rank_matrix(&d);
                (None, Some(r))
            }
            MetricKind::Spearman | MetricKind::Pearson => {
                (Some(pairwise_distances(x, DistanceKind::Euclidean)), None)
            }
            MetricKind::LabelTnc => (None, None),
        };
        Ok(Self {
            spec: spec.clone(),
            x: x.clone(),
            labels: labels.cloned(),
            dx,
            rx,
        })
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn data(&self) -> &DataMatrix {
        &self.x
    }

    pub fn eval(&self, z: &DataMatrix) -> Result<QualityScore> {
        check_same_n(self.x.rows(), z.rows())?;
        match self.spec.kind {
            MetricKind::Tnc | MetricKind::Mrre => {
                let rx = self.rx.as_ref().expect("ranks prepared for rank metrics");
                let rz = rank_matrix(&pairwise_distances(z, DistanceKind::Euclidean));
                let (mut a, mut b) = (0.0, 0.0);
                for &k in &self.spec.k_list {
                    let (p, q) = if self.spec.kind == MetricKind::Tnc {
                        trust_cont_ranks(rx, &rz, k)?
                    } else {
                        mrre_ranks(rx, &rz, k)?
                    };
                    a += p;
                    b += q;
                }
                let m = self.spec.k_list.len() as f64;
                let (a, b) = (a / m, b / m);
                Ok(QualityScore {
                    value: f1(a, b),
                    components: Some((a, b)),
                })
            }
            MetricKind::LabelTnc => {
                let p = self
                    .labels
                    .as_ref()
                    .expect("labels checked at construction");
                let r = label_tnc(&self.x, z, p, &self.spec.cvm)?;
                Ok(QualityScore {
                    value: f1(r.label_t, r.label_c),
                    components: Some((r.label_t, r.label_c)),
                })
            }
            MetricKind::Spearman | MetricKind::Pearson => {
                let dx = self
                    .dx
                    .as_ref()
                    .expect("distances prepared for correlations");
                let dz = pairwise_distances(z, DistanceKind::Euclidean);
                let (s, p) = global_corr(dx, &dz)?;
                let value = if self.spec.kind == MetricKind::Spearman {
                    s
                } else {
                    p
                };
                Ok(QualityScore {
                    value,
                    components: None,
                })
            }
        }
    }
}

/// Evaluates `spec` on projection `z` of `x`. Rank metrics are averaged over
/// the k list first, then combined by F1.
pub fn metric_eval(
    x: &DataMatrix,
    z: &DataMatrix,
    labels: Option<&LabelPartition>,
    spec: &MetricSpec,
) -> Result<QualityScore> {
    PreparedMetric::new(x, labels, spec)?.eval(z)
}
