//! Synthetic datasets and projections for sensitivity experiments, plus the
//! i.i.d. Gaussian checks of the complexity measures.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{mnc, pds};
use crate::data::{DataMatrix, LabelPartition};
use crate::drquality::{MetricSpec, PreparedMetric};
use crate::drtech::PcaBasis;
use crate::error::{Error, Result};

pub const BALL_DIM: usize = 100;
pub const BALL_RADIUS: f64 = 5.0;
pub const BALL_CENTER_NORM: f64 = 10.0;
pub const DISC_RADIUS: f64 = 1.5;
pub const DISC_CENTER_NORM: f64 = 4.0;
pub const BALL_COUNT: usize = 6;
pub const DEFAULT_POINTS_PER_BALL: usize = 300;
const SWEEP_STEPS: usize = 25;
// steps as fractions so that sweep values are the nearest doubles
const ANGLE_STEP: (f64, f64) = (24.0, 10.0);
const DISTANCE_STEP: (f64, f64) = (16.0, 100.0);
const PLACEMENT_TRIES: usize = 1000;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `n_clusters` isotropic Gaussian blobs of `per_cluster` points each. Centers
/// lie at norm `separation` in random directions and are redrawn until every
/// pair is at least `separation` apart.
pub fn gaussian_blobs(
    n_clusters: usize,
    per_cluster: usize,
    dim: usize,
    spread: f64,
    separation: f64,
    seed: u64,
) -> Result<(DataMatrix, LabelPartition)> {
    if n_clusters == 0 || per_cluster == 0 || dim == 0 {
        return Err(Error::param(
            "cluster count, cluster size and dimension must be at least 1",
        ));
    }
    if !(spread.is_finite() && spread > 0.0) {
        return Err(Error::param(format!(
            "spread must be positive, got {spread}"
        )));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::param(format!(
            "separation must be non-negative, got {separation}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(n_clusters);
    while centers.len() < n_clusters {
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            let c = random_direction(&mut rng, dim)
                .into_iter()
                .map(|v| v * separation)
                .collect::<Vec<_>>();
            let far_enough = centers.iter().all(|o| {
                let d2: f64 = o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                // relative slack so that exact hexagon-like layouts are accepted
                d2.sqrt() >= separation * (1.0 - 1e-12)
            });
            if far_enough {
                centers.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not place {n_clusters} centers {separation} apart in {dim} dimensions \
                 after {PLACEMENT_TRIES} tries; use a larger dimension or a smaller separation"
            )));
        }
    }
    let n = n_clusters * per_cluster;
    let mut values = Vec::with_capacity(n * dim);
    let mut assignments = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            for &m in center {
                values.push(m + spread * gaussian(&mut rng));
            }
            assignments.push(c);
        }
    }
    Ok((
        DataMatrix::new(n, dim, values)?,
        LabelPartition::new(assignments, n_clusters)?,
    ))
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// `count` labeled blob datasets of `points` points each with varied
/// structure: dimension grows linearly from 5 to 100, the cluster count
/// cycles through 3..=6 and the separation through 2..=11.
pub fn blob_corpus(
    count: usize,
    points: usize,
    seed: u64,
) -> Result<Vec<(DataMatrix, LabelPartition)>> {
    if count == 0 {
        return Err(Error::param("corpus must hold at least one dataset"));
    }
    (0..count)
        .map(|i| {
            let clusters = 3 + i % 4;
            let per = points / clusters;
            if per < 2 {
                return Err(Error::param(format!(
                    "{points} points cannot form {clusters} clusters"
                )));
            }
            let dim = if count == 1 {
                5
            } else {
                5 + (95 * i + (count - 1) / 2) / (count - 1)
            };
            let separation = 2.0 + ((i * 7) % 10) as f64;
            gaussian_blobs(
                clusters,
                per,
                dim,
                1.0,
                separation,
                seed.wrapping_add(i as u64),
            )
        })
        .collect()
}

/// `n x d` matrix of independent standard normal entries.
pub fn iid_gaussian(n: usize, d: usize, seed: u64) -> Result<DataMatrix> {
    if n < 2 || d == 0 {
        return Err(Error::param(format!(
            "need N >= 2 and d >= 1, got N={n}, d={d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * d).map(|_| gaussian(&mut rng)).collect();
    DataMatrix::new(n, d, values)
}

/// Uniform sample from the `dim`-ball of radius `radius` around the origin.
fn ball_offsets(rng: &mut ChaCha8Rng, count: usize, dim: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / dim as f64);
            random_direction(rng, dim)
                .into_iter()
                .map(|v| v * r)
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BallDiscMode {
    /// Three pairs of adjacent discs close their pair angle.
    B1,
    /// All discs move toward the origin.
    B2,
    /// Discs stay put; the hyperballs move toward the origin.
    E,
}

impl BallDiscMode {
    /// Sweep values in run order: pair angles in degrees for B1, center
    /// distances otherwise. The unmodified start value is not part of the
    /// sweep; the last value is full overlap.
    pub fn sweep_values(self) -> Vec<f64> {
        let step = match self {
            BallDiscMode::B1 => ANGLE_STEP,
            BallDiscMode::B2 | BallDiscMode::E => DISTANCE_STEP,
        };
        (1..=SWEEP_STEPS)
            .map(|i| (SWEEP_STEPS - i) as f64 * step.0 / step.1)
            .collect()
    }

    fn range(self) -> (f64, f64) {
        let step = match self {
            BallDiscMode::B1 => ANGLE_STEP,
            BallDiscMode::B2 | BallDiscMode::E => DISTANCE_STEP,
        };
        (0.0, SWEEP_STEPS as f64 * step.0 / step.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallDiscParams {
    pub mode: BallDiscMode,
    pub value: f64,
    pub points_per_ball: usize,
    pub seed: u64,
}

impl BallDiscParams {
    pub fn new(mode: BallDiscMode, value: f64, seed: u64) -> Self {
        Self {
            mode,
            value,
            points_per_ball: DEFAULT_POINTS_PER_BALL,
            seed,
        }
    }
}

/// Fixed interior samples shared by every sweep value, so that the sweep
/// moves the groups rigidly.
struct BallDiscSample {
    balls: Vec<Vec<f64>>,
    discs: Vec<[f64; 2]>,
    per: usize,
}

impl BallDiscSample {
    fn draw(per: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let balls = ball_offsets(&mut rng, per * BALL_COUNT, BALL_DIM, BALL_RADIUS);
        let discs = ball_offsets(&mut rng, per * BALL_COUNT, 2, DISC_RADIUS)
            .into_iter()
            .map(|v| [v[0], v[1]])
            .collect();
        Self { balls, discs, per }
    }

    fn labels(&self) -> Result<LabelPartition> {
        LabelPartition::new(
            (0..self.per * BALL_COUNT).map(|i| i / self.per).collect(),
            BALL_COUNT,
        )
    }

    fn balls_at(&self, norm: f64) -> Result<DataMatrix> {
        let n = self.per * BALL_COUNT;
        DataMatrix::from_fn(n, BALL_DIM, |i, j| {
            let g = i / self.per;
            self.balls[i][j] + if j == g { norm } else { 0.0 }
        })
    }

    fn discs_at(&self, angles_deg: &[f64; BALL_COUNT], norm: f64) -> Result<DataMatrix> {
        let n = self.per * BALL_COUNT;
        DataMatrix::from_fn(n, 2, |i, j| {
            let a = angles_deg[i / self.per].to_radians();
            let c = if j == 0 { a.cos() } else { a.sin() };
            self.discs[i][j] + norm * c
        })
    }
}

fn hexagon_angles() -> [f64; BALL_COUNT] {
    std::array::from_fn(|g| 60.0 * g as f64)
}

fn paired_angles(theta: f64) -> [f64; BALL_COUNT] {
    std::array::from_fn(|g| {
        let bisector = 30.0 + 120.0 * (g / 2) as f64;
        if g % 2 == 0 {
            bisector - theta / 2.0
        } else {
            bisector + theta / 2.0
        }
    })
}

/// Six 100-D hyperballs and six 2-D discs sharing labels, arranged for the
/// requested sweep value. Returns `(X, Z, labels)`.
pub fn ball_disc_config(
    params: &BallDiscParams,
) -> Result<(DataMatrix, DataMatrix, LabelPartition)> {
    if params.points_per_ball < 2 {
        return Err(Error::param("need at least 2 points per ball"));
    }
    let sample = BallDiscSample::draw(params.points_per_ball, params.seed);
    ball_disc_from_sample(&sample, params.mode, params.value)
}

fn ball_disc_from_sample(
    sample: &BallDiscSample,
    mode: BallDiscMode,
    value: f64,
) -> Result<(DataMatrix, DataMatrix, LabelPartition)> {
    let (lo, hi) = mode.range();
    if !(value.is_finite() && value >= lo && value <= hi + 1e-9) {
        return Err(Error::param(format!(
            "sweep value {value} outside [{lo}, {hi}] for mode {mode:?}"
        )));
    }
    let (x, z) = match mode {
        BallDiscMode::B1 => (
            sample.balls_at(BALL_CENTER_NORM)?,
            sample.discs_at(&paired_angles(value), DISC_CENTER_NORM)?,
        ),
        BallDiscMode::B2 => (
            sample.balls_at(BALL_CENTER_NORM)?,
            sample.discs_at(&hexagon_angles(), value)?,
        ),
        BallDiscMode::E => (
            sample.balls_at(value)?,
            sample.discs_at(&hexagon_angles(), DISC_CENTER_NORM)?,
        ),
    };
    Ok((x, z, sample.labels()?))
}

/// Moves each point with probability `prob`; the moved rows are permuted
/// among themselves. Selection draws come first, so for a fixed seed the
/// selected set grows with `prob`.
pub fn randomize_positions(m: &DataMatrix, prob: f64, seed: u64) -> Result<DataMatrix> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::param(format!(
            "probability must be in [0, 1], got {prob}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..m.rows()).map(|_| rng.random::<f64>()).collect();
    let selected: Vec<usize> = (0..m.rows()).filter(|&i| draws[i] < prob).collect();
    let mut source = selected.clone();
    source.shuffle(&mut rng);
    let mut order: Vec<usize> = (0..m.rows()).collect();
    for (&dst, &src) in selected.iter().zip(&source) {
        order[dst] = src;
    }
    m.select_rows(&order)
}

/// Coordinates on principal components `start..start+count-1` (1-based).
pub fn pca_slice(x: &DataMatrix, start: usize, count: usize) -> Result<DataMatrix> {
    check_window(x.cols(), start, count)?;
    PcaBasis::fit(x)?.project(x, start - 1, count)
}

fn check_window(dim: usize, start: usize, count: usize) -> Result<()> {
    if start == 0 || count == 0 || start + count - 1 > dim {
        return Err(Error::param(format!(
            "component window {start}..{} does not fit in {dim} dimensions",
            start + count.max(1) - 1
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    A,
    B1,
    B2,
    C,
    D,
    E,
    F,
    TheoremPds,
    TheoremMnc,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::A,
        ExperimentId::B1,
        ExperimentId::B2,
        ExperimentId::C,
        ExperimentId::D,
        ExperimentId::E,
        ExperimentId::F,
        ExperimentId::TheoremPds,
        ExperimentId::TheoremMnc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::A => "A",
            ExperimentId::B1 => "B1",
            ExperimentId::B2 => "B2",
            ExperimentId::C => "C",
            ExperimentId::D => "D",
            ExperimentId::E => "E",
            ExperimentId::F => "F",
            ExperimentId::TheoremPds => "theorem_pds",
            ExperimentId::TheoremMnc => "theorem_mnc",
        }
    }

    /// Name of the swept parameter.
    pub fn parameter(self) -> &'static str {
        match self {
            ExperimentId::A | ExperimentId::D => "prob",
            ExperimentId::B1 => "angle",
            ExperimentId::B2 | ExperimentId::E => "distance",
            ExperimentId::C => "components",
            ExperimentId::F => "start",
            ExperimentId::TheoremPds | ExperimentId::TheoremMnc => "dim",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown experiment '{s}'")))
    }
}

/// Settings for [`run_experiment`]. Unset fields take per-experiment defaults.
#[derive(Debug, Clone, Default)]
pub struct ExperimentParams {
    /// Labeled base dataset for A, C, D and F; generated blobs when absent.
    pub base: Option<(DataMatrix, LabelPartition)>,
    pub clusters: Option<usize>,
    pub per_cluster: Option<usize>,
    pub dim: Option<usize>,
    pub spread: Option<f64>,
    pub separation: Option<f64>,
    pub points_per_ball: Option<usize>,
    /// Point count for the theorem checks.
    pub points: Option<usize>,
    /// Dimensions swept by the theorem checks.
    pub dims: Option<Vec<usize>>,
    /// Neighborhood sizes for `theorem_mnc`.
    pub mnc_ks: Option<Vec<usize>>,
    /// Independent datasets averaged per dimension in the theorem checks.
    pub repeats: Option<usize>,
}

pub const DEFAULT_THEOREM_DIMS: [usize; 10] = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

impl ExperimentParams {
    fn blob_defaults(&self, id: ExperimentId) -> (usize, usize, usize, f64, f64) {
        let dim = match id {
            ExperimentId::C => 20,
            ExperimentId::F => 40,
            _ => 10,
        };
        (
            self.clusters.unwrap_or(3),
            self.per_cluster.unwrap_or(100),
            self.dim.unwrap_or(dim),
            self.spread.unwrap_or(1.0),
            self.separation.unwrap_or(4.0),
        )
    }

    fn base_dataset(&self, id: ExperimentId, seed: u64) -> Result<(DataMatrix, LabelPartition)> {
        if let Some(b) = &self.base {
            return Ok(b.clone());
        }
        let (c, per, dim, spread, sep) = self.blob_defaults(id);
        gaussian_blobs(c, per, dim, spread, sep, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value(f64),
    Missing(String),
}

impl Cell {
    /// Missing cell; separators in the reason are replaced so the CSV form
    /// stays one field.
    pub fn missing(reason: impl AsRef<str>) -> Self {
        Cell::Missing(
            reason
                .as_ref()
                .chars()
                .map(|c| {
                    if matches!(c, ',' | '\n' | '\r' | ')') {
                        ';'
                    } else {
                        c
                    }
                })
                .collect(),
        )
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            Cell::Missing(_) => None,
        }
    }
}

/// Metric scores along a parameter sweep, one row per sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCurve {
    pub experiment: String,
    pub parameter: String,
    pub values: Vec<f64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ExperimentCurve {
    pub fn new(
        experiment: &str,
        parameter: &str,
        values: Vec<f64>,
        columns: Vec<String>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self> {
        let curve = Self {
            experiment: experiment.to_string(),
            parameter: parameter.to_string(),
            values,
            columns,
            rows,
        };
        curve.validate()?;
        Ok(curve)
    }

    fn validate(&self) -> Result<()> {
        if self.rows.len() != self.values.len() {
            return Err(Error::validation(format!(
                "{} rows for {} sweep values",
                self.rows.len(),
                self.values.len()
            )));
        }
        if let Some(r) = self.rows.iter().position(|r| r.len() != self.columns.len()) {
            return Err(Error::validation(format!(
                "row {r} has the wrong number of cells"
            )));
        }
        let up = self.values.windows(2).all(|w| w[0] < w[1]);
        let down = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(Error::validation("sweep values are not strictly monotone"));
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column values in sweep order; `None` for missing cells.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let c = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[c].value()).collect())
    }

    /// CSV form: a `# experiment=<id>` line, the header, then one row per
    /// sweep value. Missing cells are written as `NA(<reason>)`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# experiment={}\n{}", self.experiment, self.parameter);
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (v, row) in self.values.iter().zip(&self.rows) {
            out.push_str(&format_float(*v));
            for cell in row {
                out.push(',');
                match cell {
                    Cell::Value(x) => out.push_str(&format_float(*x)),
                    Cell::Missing(reason) => {
                        out.push_str("NA(");
                        out.push_str(reason);
                        out.push(')');
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| Error::validation("empty curve file"))?;
        let experiment = first
            .strip_prefix("# experiment=")
            .ok_or_else(|| Error::validation("line 1: expected '# experiment=<id>'"))?
            .to_string();
        let header = lines
            .next()
            .ok_or_else(|| Error::validation("line 2: missing header"))?;
        let mut names = header.split(',').map(str::to_string);
        let parameter = names.next().unwrap_or_default();
        let columns: Vec<String> = names.collect();
        let mut values = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 3;
            let mut fields = line.split(',');
            let v = parse_float(fields.next().unwrap_or(""), lineno, 1)?;
            let mut row = Vec::with_capacity(columns.len());
            for (c, f) in fields.enumerate() {
                let cell = match f.strip_prefix("NA(").and_then(|s| s.strip_suffix(')')) {
                    Some(reason) => Cell::Missing(reason.to_string()),
                    None => Cell::Value(parse_float(f, lineno, c + 2)?),
                };
                row.push(cell);
            }
            values.push(v);
            rows.push(row);
        }
        Self::new(&experiment, &parameter, values, columns, rows)
    }
}

fn format_float(v: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{v:?}")
}

fn parse_float(s: &str, line: usize, col: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::validation(format!("line {line}, column {col}: '{s}' is not a number")))
}

/// Column names produced for a metric.
pub fn metric_columns(spec: &MetricSpec) -> Vec<String> {
    let name = spec.name();
    match spec.kind.component_names() {
        Some((a, b)) => vec![format!("{name}.{a}"), format!("{name}.{b}"), name],
        None => vec![name],
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::param("slope needs two or more paired values"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::degenerate("slope over a constant abscissa"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

enum Side {
    /// X is fixed, the projection varies.
    FixedData(DataMatrix),
    /// The projection is fixed, X varies.
    FixedProjection(DataMatrix),
}

fn evaluate_row(
    prepared: Option<&[PreparedMetric]>,
    metrics: &[MetricSpec],
    x: &DataMatrix,
    z: &DataMatrix,
    labels: &LabelPartition,
) -> Vec<Cell> {
    let mut cells = Vec::new();
    for (m, spec) in metrics.iter().enumerate() {
        let width = metric_columns(spec).len();
        let score = match prepared {
            Some(p) => p[m].eval(z),
            None => PreparedMetric::new(x, Some(labels), spec).and_then(|p| p.eval(z)),
        };
        match score {
            Ok(s) => {
                if let Some((a, b)) = s.components {
                    cells.push(Cell::Value(a));
                    cells.push(Cell::Value(b));
                }
                cells.push(Cell::Value(s.value));
            }
            Err(e) => cells.extend((0..width).map(|_| Cell::missing(e.to_string()))),
        }
    }
    cells
}

fn labeled_sweep<F>(
    id: ExperimentId,
    values: Vec<f64>,
    metrics: &[MetricSpec],
    labels: &LabelPartition,
    fixed: Side,
    variant: F,
) -> Result<ExperimentCurve>
where
    F: Fn(f64) -> Result<DataMatrix> + Sync,
{
    let columns: Vec<String> = metrics.iter().flat_map(metric_columns).collect();
    let prepared = match &fixed {
        Side::FixedData(x) => Some(
            metrics
                .iter()
                .map(|s| PreparedMetric::new(x, Some(labels), s))
                .collect::<Result<Vec<_>>>(),
        ),
        Side::FixedProjection(_) => None,
    };
    let rows: Vec<Vec<Cell>> = values
        .par_iter()
        .map(|&v| {
            let moving = match variant(v) {
                Ok(m) => m,
                Err(e) => return vec![Cell::missing(e.to_string()); columns.len()],
            };
            match &fixed {
                Side::FixedData(x) => match &prepared {
                    Some(Ok(p)) => evaluate_row(Some(p), metrics, x, &moving, labels),
                    _ => evaluate_row(None, metrics, x, &moving, labels),
                },
                Side::FixedProjection(z) => evaluate_row(None, metrics, &moving, z, labels),
            }
        })
        .collect();
    ExperimentCurve::new(id.name(), id.parameter(), values, columns, rows)
}

fn probability_sweep() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// Runs one experiment and scores every metric at every sweep value. A
/// metric that fails at a sweep value leaves missing cells with the reason.
pub fn run_experiment(
    id: ExperimentId,
    params: &ExperimentParams,
    metrics: &[MetricSpec],
    seed: u64,
) -> Result<ExperimentCurve> {
    let needs_metrics = !matches!(id, ExperimentId::TheoremPds | ExperimentId::TheoremMnc);
    if needs_metrics && metrics.is_empty() {
        return Err(Error::param(format!(
            "experiment {id} needs at least one metric"
        )));
    }
    match id {
        ExperimentId::A | ExperimentId::D => {
            let (x, labels) = params.base_dataset(id, seed)?;
            let z = pca_slice(&x, 1, 2)?;
            let perm_seed = seed.wrapping_add(1);
            if id == ExperimentId::A {
                labeled_sweep(
                    id,
                    probability_sweep(),
                    metrics,
                    &labels,
                    Side::FixedData(x),
                    |p| randomize_positions(&z, p, perm_seed),
                )
            } else {
                labeled_sweep(
                    id,
                    probability_sweep(),
                    metrics,
                    &labels,
                    Side::FixedProjection(z),
                    |p| randomize_positions(&x, p, perm_seed),
                )
            }
        }
        ExperimentId::B1 | ExperimentId::B2 | ExperimentId::E => {
            let mode = match id {
                ExperimentId::B1 => BallDiscMode::B1,
                ExperimentId::B2 => BallDiscMode::B2,
                _ => BallDiscMode::E,
            };
            let per = params.points_per_ball.unwrap_or(DEFAULT_POINTS_PER_BALL);
            if per < 2 {
                return Err(Error::param("need at least 2 points per ball"));
            }
            let sample = BallDiscSample::draw(per, seed);
            let labels = sample.labels()?;
            // any sweep value gives the fixed side
            let (x0, z0, _) = ball_disc_from_sample(&sample, mode, 0.0)?;
            let fixed = if mode == BallDiscMode::E {
                Side::FixedProjection(z0)
            } else {
                Side::FixedData(x0)
            };
            labeled_sweep(id, mode.sweep_values(), metrics, &labels, fixed, |v| {
                let (x, z, _) = ball_disc_from_sample(&sample, mode, v)?;
                Ok(if mode == BallDiscMode::E { x } else { z })
            })
        }
        ExperimentId::C => {
            let (x, labels) = params.base_dataset(id, seed)?;
            let top = x.cols().min(10);
            if top < 2 {
                return Err(Error::param(
                    "experiment C needs data with at least 2 dimensions",
                ));
            }
            let basis = PcaBasis::fit(&x)?;
            let values: Vec<f64> = (1..=top).rev().map(|c| c as f64).collect();
            labeled_sweep(
                id,
                values,
                metrics,
                &labels,
                Side::FixedData(x.clone()),
                |c| basis.project(&x, 0, c as usize),
            )
        }
        ExperimentId::F => {
            let (x, labels) = params.base_dataset(id, seed)?;
            let width = 20;
            if x.cols() < width + 9 {
                return Err(Error::param(format!(
                    "experiment F slices 20 components at starts 1..10 and needs at least 29 dimensions, got {}",
                    x.cols()
                )));
            }
            let basis = PcaBasis::fit(&x)?;
            let z = basis.project(&x, 0, 2)?;
            let values: Vec<f64> = (1..=10).map(|s| s as f64).collect();
            labeled_sweep(
                id,
                values,
                metrics,
                &labels,
                Side::FixedProjection(z),
                |s| basis.project(&x, s as usize - 1, width),
            )
        }
        ExperimentId::TheoremPds | ExperimentId::TheoremMnc => theorem_curve(id, params, seed),
    }
}

fn theorem_curve(
    id: ExperimentId,
    params: &ExperimentParams,
    seed: u64,
) -> Result<ExperimentCurve> {
    let n = params.points.unwrap_or(if id == ExperimentId::TheoremPds {
        2000
    } else {
        1000
    });
    let dims = params
        .dims
        .clone()
        .unwrap_or_else(|| DEFAULT_THEOREM_DIMS.to_vec());
    let repeats = params.repeats.unwrap_or(1).max(1);
    let ks = params.mnc_ks.clone().unwrap_or_else(|| vec![5, 10, 20]);
    let columns: Vec<String> = if id == ExperimentId::TheoremPds {
        vec!["pds".to_string()]
    } else {
        ks.iter().map(|k| format!("mnc_k{k}")).collect()
    };
    let rows: Vec<Vec<Cell>> = dims
        .iter()
        .map(|&d| {
            let mut sums = vec![Ok(0.0); columns.len()];
            for r in 0..repeats {
                let x = iid_gaussian(n, d, seed.wrapping_add(r as u64));
                for (c, sum) in sums.iter_mut().enumerate() {
                    let v = x.as_ref().map_err(Clone::clone).and_then(|x| {
                        if id == ExperimentId::TheoremPds {
                            pds(x)
                        } else {
                            mnc(x, ks[c])
                        }
                    });
                    *sum = match (sum.clone(), v) {
                        (Ok(s), Ok(v)) => Ok(s + v),
                        (Err(e), _) | (_, Err(e)) => Err(e),
                    };
                }
            }
            sums.into_iter()
                .map(|s| match s {
                    Ok(s) => Cell::Value(s / repeats as f64),
                    Err(e) => Cell::missing(e.to_string()),
                })
                .collect()
        })
        .collect();
    let values = dims.iter().map(|&d| d as f64).collect();
    ExperimentCurve::new(id.name(), id.parameter(), values, columns, rows)
}
