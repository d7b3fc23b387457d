//! Subcommand arguments and implementations.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, ValueEnum};
use serde::{Deserialize, Serialize};

use drtk::complexity::{complexity_features, DEFAULT_MNC_KS};
use drtk::cvm::{CvmConfig, CvmKind};
use drtk::drquality::{metric_eval, MetricKind, MetricSpec, DEFAULT_K_LIST};
use drtk::drtech::{Technique, TechniqueId};
use drtk::optimize::{
    adaptive_workflow, conventional_workflow, pretrain, AdaptiveModelSet, TrainingDataset,
    WorkflowResult, DEFAULT_BUDGET,
};
use drtk::synthlab::{
    ball_disc_config, blob_corpus, gaussian_blobs, iid_gaussian, ols_slope, run_experiment,
    BallDiscMode, BallDiscParams, ExperimentId, ExperimentParams, DEFAULT_POINTS_PER_BALL,
};
use drtk::{DataMatrix, LabelPartition};

use crate::failure::{CliResult, Failure};
use crate::io::{matrix_csv, read_labels, read_table, sha256_hex, write_atomic, Table};
use crate::report::Report;

/// What a command hands back for the run report.
pub struct Outcome {
    pub report: Report,
    pub seed: Option<u64>,
}

fn describe_input(t: &Table, path: &Path) -> String {
    format!(
        "{} sha256={} rows={} cols={}",
        path.display(),
        t.digest,
        t.data.rows(),
        t.data.cols()
    )
}

/// Writes `text` to `path` and records its digest under `key`.
fn emit(report: &mut Report, key: &str, path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, text.as_bytes())?;
    report.field(
        key,
        format!("{} sha256={}", path.display(), sha256_hex(text.as_bytes())),
    );
    Ok(())
}

#[derive(Args, Debug, Clone)]
pub struct MetricOptions {
    /// Neighborhood sizes of the rank metrics (comma separated)
    #[arg(long = "k", value_delimiter = ',', default_values_t = DEFAULT_K_LIST)]
    pub k: Vec<usize>,
    /// Clustering validity measure behind label_tnc: ch_adjusted or dsc
    #[arg(long, default_value = "ch_adjusted")]
    pub cvm: CvmKind,
    /// Growth rate of the CH squashing
    #[arg(long, default_value_t = 1.0)]
    pub growth_rate: f64,
}

impl MetricOptions {
    fn spec(&self, kind: MetricKind) -> CliResult<MetricSpec> {
        Ok(MetricSpec::new(kind)
            .with_k_list(self.k.clone())
            .with_cvm(CvmConfig::new(self.cvm, self.growth_rate)?))
    }
}

fn score_lines(report: &mut Report, spec: &MetricSpec, value: f64, components: Option<(f64, f64)>) {
    let name = spec.name();
    report.number(format!("score.{name}"), value);
    if let (Some((a, b)), Some((na, nb))) = (components, spec.kind.component_names()) {
        report.number(format!("score.{name}.{na}"), a);
        report.number(format!("score.{name}.{nb}"), b);
    }
}

/// Labels from an explicit file, else from the first table carrying a label
/// column.
fn resolve_labels(
    report: &mut Report,
    file: Option<&PathBuf>,
    tables: &[(&Table, &Path)],
    n: usize,
) -> CliResult<Option<LabelPartition>> {
    let (labels, source) = match file {
        Some(p) => {
            let (l, digest) = read_labels(p)?;
            (Some(l), format!("{} sha256={digest}", p.display()))
        }
        None => match tables.iter().find(|(t, _)| t.labels.is_some()) {
            Some((t, p)) => (t.labels.clone(), format!("label column of {}", p.display())),
            None => (None, "none".into()),
        },
    };
    if let Some(l) = &labels {
        if l.len() != n {
            return Err(Failure::input(format!("{} labels for {n} points", l.len())));
        }
        report.field(
            "input.labels",
            format!("{source} classes={}", l.class_count()),
        );
    } else {
        report.field("input.labels", source);
    }
    Ok(labels)
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Original data (CSV)
    #[arg(long)]
    pub data: PathBuf,
    /// Projection of the same points (CSV)
    #[arg(long)]
    pub proj: PathBuf,
    /// One-column label file; otherwise a trailing `label` column is used
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Metric to report: tnc, mrre, label_tnc, spearman or pearson (repeatable)
    #[arg(long = "metric", default_value = "tnc")]
    pub metrics: Vec<MetricKind>,
    #[command(flatten)]
    pub options: MetricOptions,
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult<Outcome> {
    let mut report = Report::new();
    let x = read_table(&a.data)?;
    let z = read_table(&a.proj)?;
    report.field("input.data", describe_input(&x, &a.data));
    report.field("input.proj", describe_input(&z, &a.proj));
    if x.data.rows() != z.data.rows() {
        return Err(Failure::input(format!(
            "data has {} rows but the projection has {}",
            x.data.rows(),
            z.data.rows()
        )));
    }
    let labels = resolve_labels(
        &mut report,
        a.labels.as_ref(),
        &[(&x, &a.data), (&z, &a.proj)],
        x.data.rows(),
    )?;
    let start = Instant::now();
    for &kind in &a.metrics {
        let spec = a.options.spec(kind)?;
        let s = metric_eval(&x.data, &z.data, labels.as_ref(), &spec)
            .map_err(|e| Failure::from(e).context(format!("metric {}", spec.name())))?;
        score_lines(&mut report, &spec, s.value, s.components);
    }
    report.timing("metrics", start.elapsed());
    Ok(Outcome { report, seed: None })
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    /// Dataset (CSV)
    #[arg(long)]
    pub data: PathBuf,
    /// Neighborhood sizes of the MNC features (comma separated)
    #[arg(long = "mnc-k", value_delimiter = ',', default_values_t = DEFAULT_MNC_KS)]
    pub mnc_k: Vec<usize>,
}

pub fn complexity(a: &ComplexityArgs) -> CliResult<Outcome> {
    let mut report = Report::new();
    let x = read_table(&a.data)?;
    report.field("input.data", describe_input(&x, &a.data));
    let start = Instant::now();
    let f = complexity_features(&x.data, &a.mnc_k)?;
    report.timing("features", start.elapsed());
    report.number("feature.pds", f.pds);
    for k in &f.ks {
        report.number(format!("feature.mnc_k{k}"), f.mnc_by_k[k]);
    }
    if !f.dropped_ks.is_empty() {
        report.field(
            "dropped_ks",
            f.dropped_ks
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    Ok(Outcome { report, seed: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Conventional,
    Adaptive,
}

/// Model set plus the settings it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub budget: usize,
    pub seed: u64,
    /// (file name, sha256) of every training dataset.
    pub corpus: Vec<(String, String)>,
    pub models: AdaptiveModelSet,
}

const MODEL_FORMAT: &str = "drtk-models-1";

fn techniques(ids: &[TechniqueId], dim: usize) -> Vec<Technique> {
    ids.iter()
        .map(|&id| Technique {
            id,
            target_dim: dim,
        })
        .collect()
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Dataset (CSV)
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "conventional")]
    pub mode: Mode,
    /// Model file written by `pretrain` (adaptive mode)
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Techniques to search in conventional mode (comma separated)
    #[arg(long, value_delimiter = ',', default_values = ["pca", "random_proj", "tsne"])]
    pub techniques: Vec<TechniqueId>,
    /// Projection dimension in conventional mode
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Techniques kept by the adaptive ranking
    #[arg(long, default_value_t = 1)]
    pub top_m: usize,
    /// Trials per technique
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long)]
    pub seed: u64,
    /// Quality metric maximized in conventional mode
    #[arg(long, default_value = "tnc")]
    pub metric: MetricKind,
    #[command(flatten)]
    pub options: MetricOptions,
    /// Where to write the best projection (CSV)
    #[arg(long)]
    pub out: PathBuf,
}

fn workflow_lines(report: &mut Report, r: &WorkflowResult) {
    report.field("result.technique", r.technique.id);
    report.field(
        "result.params",
        if r.best_params.is_empty() {
            "none".to_string()
        } else {
            r.best_params.describe()
        },
    );
    report.number("result.score", r.best_score);
    report.field("result.evaluations", r.total_evaluations);
    for (id, p) in &r.predictions {
        report.number(format!("prediction.{id}"), *p);
    }
    for t in &r.traces {
        let id = t.technique.id;
        report.field(format!("trace.{id}.evaluations"), t.evaluations_used);
        report.number(format!("trace.{id}.best_score"), t.best_score);
        report.field(format!("trace.{id}.terminated_early"), t.terminated_early);
        let failed = t.trials.iter().filter(|t| t.error.is_some()).count();
        if failed > 0 {
            report.field(format!("trace.{id}.failed_trials"), failed);
        }
    }
}

fn read_model_file(path: &Path) -> CliResult<(ModelFile, String)> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let m: ModelFile = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    if m.format != MODEL_FORMAT {
        return Err(Failure::input(format!(
            "{}: unsupported model format '{}'",
            path.display(),
            m.format
        )));
    }
    Ok((m, sha256_hex(&bytes)))
}

pub fn optimize(a: &OptimizeArgs) -> CliResult<Outcome> {
    let mut report = Report::new();
    let x = read_table(&a.data)?;
    report.field("input.data", describe_input(&x, &a.data));
    let labels = resolve_labels(
        &mut report,
        a.labels.as_ref(),
        &[(&x, &a.data)],
        x.data.rows(),
    )?;
    report.field("mode", format!("{:?}", a.mode).to_lowercase());
    report.field("budget", a.budget);
    let start = Instant::now();
    let result = match a.mode {
        Mode::Conventional => {
            let spec = a.options.spec(a.metric)?;
            report.field("metric", spec.name());
            conventional_workflow(
                &x.data,
                labels.as_ref(),
                &techniques(&a.techniques, a.dim),
                &spec,
                a.budget,
                a.seed,
            )?
        }
        Mode::Adaptive => {
            let path = a.models.as_ref().ok_or_else(|| {
                Failure::domain("adaptive mode needs --models from `drtk pretrain`")
            })?;
            let (file, digest) = read_model_file(path)?;
            report.field(
                "input.models",
                format!("{} sha256={digest}", path.display()),
            );
            report.field("metric", file.models.metric.name());
            report.field("top_m", a.top_m);
            adaptive_workflow(
                &x.data,
                labels.as_ref(),
                &file.models,
                a.top_m,
                a.budget,
                a.seed,
            )?
        }
    };
    report.timing("search", start.elapsed());
    workflow_lines(&mut report, &result);
    let csv = matrix_csv(&result.projection, labels.as_ref(), "z");
    emit(&mut report, "output.projection", &a.out, &csv)?;
    Ok(Outcome {
        report,
        seed: Some(a.seed),
    })
}

#[derive(Args, Debug)]
pub struct PretrainArgs {
    /// Directory of training datasets (*.csv, read in name order)
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_values = ["pca", "random_proj", "tsne"])]
    pub techniques: Vec<TechniqueId>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "tnc")]
    pub metric: MetricKind,
    #[command(flatten)]
    pub options: MetricOptions,
    /// Neighborhood sizes of the MNC features (comma separated)
    #[arg(long = "mnc-k", value_delimiter = ',', default_values_t = DEFAULT_MNC_KS)]
    pub mnc_k: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long)]
    pub seed: u64,
    /// Where to write the model file (JSON)
    #[arg(long)]
    pub out: PathBuf,
}

fn corpus_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| Failure::input(format!("cannot list {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e
            .map_err(|e| Failure::input(format!("cannot list {}: {e}", dir.display())))?
            .path();
        if p.is_file() && p.extension().is_some_and(|x| x == "csv") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

pub fn pretrain_cmd(a: &PretrainArgs) -> CliResult<Outcome> {
    let mut report = Report::new();
    let files = corpus_files(&a.corpus)?;
    let mut tables = Vec::with_capacity(files.len());
    let mut corpus = Vec::with_capacity(files.len());
    for f in &files {
        let t = read_table(f)?;
        let name = f
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        report.field(format!("input.corpus.{name}"), describe_input(&t, f));
        corpus.push((name, t.digest.clone()));
        tables.push(t);
    }
    report.field("corpus.datasets", tables.len());
    let spec = a.options.spec(a.metric)?;
    report.field("metric", spec.name());
    report.field("budget", a.budget);
    let datasets: Vec<_> = tables
        .iter()
        .map(|t| TrainingDataset {
            data: &t.data,
            labels: t.labels.as_ref(),
        })
        .collect();
    let start = Instant::now();
    let models = pretrain(
        &datasets,
        &techniques(&a.techniques, a.dim),
        &spec,
        &a.mnc_k,
        a.budget,
        a.seed,
    )?;
    report.timing("pretrain", start.elapsed());
    report.field(
        "features.mnc_ks",
        models
            .ks
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    for m in &models.models {
        let id = m.technique.id;
        report.field(format!("model.{id}.kind"), m.kind.name());
        match m.r2 {
            Some(r) => report.number(format!("model.{id}.r2"), r),
            None => report.field(format!("model.{id}.r2"), "undefined"),
        };
        report.field(format!("model.{id}.constant_fallback"), m.constant_fallback);
        for (kind, r2) in &m.candidates {
            match r2 {
                Some(r) => report.number(format!("model.{id}.cv.{}", kind.name()), *r),
                None => report.field(format!("model.{id}.cv.{}", kind.name()), "undefined"),
            };
        }
    }
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        budget: a.budget,
        seed: a.seed,
        corpus,
        models,
    };
    let mut json =
        serde_json::to_string_pretty(&file).map_err(|e| Failure::Internal(e.to_string()))?;
    json.push('\n');
    emit(&mut report, "output.models", &a.out, &json)?;
    Ok(Outcome {
        report,
        seed: Some(a.seed),
    })
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// A, B1, B2, C, D, E, F, theorem_pds or theorem_mnc
    #[arg(long)]
    pub id: ExperimentId,
    /// Metric columns (repeatable)
    #[arg(long = "metric", default_value = "label_tnc")]
    pub metrics: Vec<MetricKind>,
    /// Validity measures for label_tnc columns (comma separated)
    #[arg(long = "cvm", value_delimiter = ',', default_value = "ch_adjusted")]
    pub cvms: Vec<CvmKind>,
    #[arg(long = "k", value_delimiter = ',', default_values_t = DEFAULT_K_LIST)]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub growth_rate: f64,
    /// Labeled base dataset for A, C, D and F instead of generated blobs
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub per_cluster: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub points_per_ball: Option<usize>,
    /// Points per dataset in the theorem checks
    #[arg(long)]
    pub points: Option<usize>,
    /// Dimensions of the theorem checks (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Neighborhood sizes of theorem_mnc (comma separated)
    #[arg(long = "mnc-k", value_delimiter = ',')]
    pub mnc_k: Option<Vec<usize>>,
    /// Datasets averaged per dimension in the theorem checks
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Where to write the curve (CSV)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn experiment(a: &ExperimentArgs) -> CliResult<Outcome> {
    let mut report = Report::new();
    report.field("experiment", a.id);
    let base = match &a.data {
        Some(path) => {
            let t = read_table(path)?;
            report.field("input.data", describe_input(&t, path));
            let labels =
                resolve_labels(&mut report, a.labels.as_ref(), &[(&t, path)], t.data.rows())?
                    .ok_or_else(|| Failure::domain("a base dataset needs class labels"))?;
            Some((t.data, labels))
        }
        None => None,
    };
    let params = ExperimentParams {
        base,
        clusters: a.clusters,
        per_cluster: a.per_cluster,
        dim: a.dim,
        spread: a.spread,
        separation: a.separation,
        points_per_ball: a.points_per_ball,
        points: a.points,
        dims: a.dims.clone(),
        mnc_ks: a.mnc_k.clone(),
        repeats: a.repeats,
    };
    let mut specs = Vec::new();
    for &kind in &a.metrics {
        if kind == MetricKind::LabelTnc {
            for &cvm in &a.cvms {
                specs.push(MetricSpec::new(kind).with_cvm(CvmConfig::new(cvm, a.growth_rate)?));
            }
        } else {
            specs.push(MetricSpec::new(kind).with_k_list(a.k.clone()));
        }
    }
    let start = Instant::now();
    let curve = run_experiment(a.id, &params, &specs, a.seed)?;
    report.timing("experiment", start.elapsed());
    report.field("curve.parameter", &curve.parameter);
    report.field("curve.rows", curve.rows.len());
    report.field("curve.columns", curve.columns.join(","));
    if a.id == ExperimentId::TheoremPds {
        let pds: Vec<Option<f64>> = curve.column("pds").unwrap_or_default();
        let pairs: Vec<(f64, f64)> = curve
            .values
            .iter()
            .zip(&pds)
            .filter_map(|(d, p)| p.map(|p| (d.ln(), p)))
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(s) = ols_slope(&xs, &ys) {
            report.number("summary.pds_slope_vs_ln_dim", s);
        }
    }
    let csv = curve.to_csv();
    emit(&mut report, "output.curve", &a.out, &csv)?;
    report.block("curve", csv);
    Ok(Outcome {
        report,
        seed: Some(a.seed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BallsMode {
    B1,
    B2,
    E,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("generator").required(true).args(["blobs", "iid", "balls", "corpus"])))]
pub struct GenerateArgs {
    /// Gaussian blobs with this many clusters
    #[arg(long)]
    pub blobs: Option<usize>,
    /// Independent standard normal entries
    #[arg(long)]
    pub iid: bool,
    /// Hyperball/disc configuration of the given sweep
    #[arg(long, value_enum)]
    pub balls: Option<BallsMode>,
    /// Directory corpus of this many blob datasets
    #[arg(long)]
    pub corpus: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub per_cluster: usize,
    /// Dimension (blobs: 10, iid: 10)
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    /// Point count (iid: 1000, corpus datasets: 300)
    #[arg(long)]
    pub points: Option<usize>,
    /// Sweep value of the ball/disc configuration
    #[arg(long)]
    pub value: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_POINTS_PER_BALL)]
    pub points_per_ball: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output file (directory for --corpus)
    #[arg(long)]
    pub out: PathBuf,
    /// Output file of the 2-D discs (--balls)
    #[arg(long)]
    pub out_proj: Option<PathBuf>,
}

fn write_dataset(
    report: &mut Report,
    key: &str,
    path: &Path,
    x: &DataMatrix,
    labels: Option<&LabelPartition>,
) -> CliResult<()> {
    report.field(format!("{key}.shape"), format!("{}x{}", x.rows(), x.cols()));
    emit(report, key, path, &matrix_csv(x, labels, "x"))
}

pub fn generate(a: &GenerateArgs) -> CliResult<Outcome> {
    let mut report = Report::new();
    if let Some(c) = a.blobs {
        report.field("generator", "blobs");
        let (x, p) = gaussian_blobs(
            c,
            a.per_cluster,
            a.dim.unwrap_or(10),
            a.spread,
            a.separation,
            a.seed,
        )?;
        write_dataset(&mut report, "output.data", &a.out, &x, Some(&p))?;
    } else if a.iid {
        report.field("generator", "iid");
        let x = iid_gaussian(a.points.unwrap_or(1000), a.dim.unwrap_or(10), a.seed)?;
        write_dataset(&mut report, "output.data", &a.out, &x, None)?;
    } else if let Some(mode) = a.balls {
        report.field("generator", "balls");
        let mode = match mode {
            BallsMode::B1 => BallDiscMode::B1,
            BallsMode::B2 => BallDiscMode::B2,
            BallsMode::E => BallDiscMode::E,
        };
        let value = a
            .value
            .ok_or_else(|| Failure::domain("--balls needs --value"))?;
        let proj = a
            .out_proj
            .as_ref()
            .ok_or_else(|| Failure::domain("--balls needs --out-proj for the discs"))?;
        let params = BallDiscParams {
            points_per_ball: a.points_per_ball,
            ..BallDiscParams::new(mode, value, a.seed)
        };
        let (x, z, p) = ball_disc_config(&params)?;
        write_dataset(&mut report, "output.data", &a.out, &x, Some(&p))?;
        write_dataset(&mut report, "output.proj", proj, &z, Some(&p))?;
    } else if let Some(count) = a.corpus {
        report.field("generator", "corpus");
        let sets = blob_corpus(count, a.points.unwrap_or(300), a.seed)?;
        fs::create_dir_all(&a.out)
            .map_err(|e| Failure::Internal(format!("cannot create {}: {e}", a.out.display())))?;
        for (i, (x, p)) in sets.iter().enumerate() {
            let name = format!("dataset_{i:03}.csv");
            write_dataset(
                &mut report,
                &format!("output.{name}"),
                &a.out.join(&name),
                x,
                Some(p),
            )?;
        }
    }
    Ok(Outcome {
        report,
        seed: Some(a.seed),
    })
}
