//! Hyperparameter search over techniques: the conventional workflow that
//! exhausts a fixed budget for every technique, and the dataset-adaptive
//! workflow that predicts each technique's best reachable score from
//! complexity features, searches only the most promising techniques, and
//! stops a search as soon as the prediction is reached.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complexity::complexity_features;
use crate::data::{DataMatrix, LabelPartition};
use crate::drquality::{MetricSpec, PreparedMetric};
use crate::drtech::{hp_space, project, HyperParams, SearchSpace, Technique, TechniqueId};
use crate::error::{Error, Result};
use crate::regress::{fit, kfold_r2, RegressionKind, RegressionModel};

pub const DEFAULT_BUDGET: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub params: HyperParams,
    /// `-inf` when the trial failed.
    pub score: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchTrace {
    pub technique: Technique,
    pub trials: Vec<Trial>,
    pub best_score: f64,
    pub best_index: Option<usize>,
    pub best_projection: Option<DataMatrix>,
    pub evaluations_used: usize,
    pub terminated_early: bool,
    pub stop_at: Option<f64>,
}

impl SearchTrace {
    pub fn best_params(&self) -> Option<&HyperParams> {
        self.best_index.map(|i| &self.trials[i].params)
    }

    /// Running maximum of the trial scores.
    pub fn running_best(&self) -> Vec<f64> {
        self.trials
            .iter()
            .scan(f64::NEG_INFINITY, |best, t| {
                *best = best.max(t.score);
                Some(*best)
            })
            .collect()
    }
}

/// Source of hyperparameter proposals. Implementations may consult the
/// trial history (e.g. a surrogate-model strategy).
pub trait Proposer {
    fn propose(&mut self, space: &SearchSpace, history: &[Trial]) -> HyperParams;
}

/// Independent seeded draws from the search space.
#[derive(Debug, Clone)]
pub struct RandomProposer {
    rng: ChaCha8Rng,
}

impl RandomProposer {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Proposer for RandomProposer {
    fn propose(&mut self, space: &SearchSpace, _history: &[Trial]) -> HyperParams {
        space.sample(&mut self.rng)
    }
}

/// Seed of the search stream for `technique` under a workflow seed. Depends
/// only on the technique, so every workflow replays the same stream for it.
pub fn technique_seed(seed: u64, technique: TechniqueId) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (technique as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type TrialKey = (TechniqueId, usize, Vec<(String, u64)>);
type Memo = Mutex<HashMap<TrialKey, Result<(DataMatrix, f64)>>>;

/// Projects a fixed dataset and scores the result under a fixed metric.
/// With a memo, repeated (technique, hyperparameter) pairs are answered from
/// earlier evaluations; the trial counts of a search are unaffected.
#[derive(Debug)]
pub struct Evaluator {
    metric: PreparedMetric,
    memo: Option<Memo>,
}

impl Evaluator {
    pub fn new(x: &DataMatrix, labels: Option<&LabelPartition>, spec: &MetricSpec) -> Result<Self> {
        Ok(Self {
            metric: PreparedMetric::new(x, labels, spec)?,
            memo: None,
        })
    }

    pub fn with_memo(mut self) -> Self {
        self.memo = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn data(&self) -> &DataMatrix {
        self.metric.data()
    }

    pub fn spec(&self) -> &MetricSpec {
        self.metric.spec()
    }

    /// Projection and score of one trial.
    pub fn evaluate(
        &self,
        technique: &Technique,
        params: &HyperParams,
    ) -> Result<(DataMatrix, f64)> {
        let run = || {
            let z = project(self.metric.data(), technique, params)?;
            let s = self.metric.eval(&z)?;
            Ok((z, s.value))
        };
        let Some(memo) = &self.memo else {
            return run();
        };
        let key: TrialKey = (
            technique.id,
            technique.target_dim,
            params
                .0
                .iter()
                .map(|(k, v)| (k.clone(), v.to_bits()))
                .collect(),
        );
        if let Some(hit) = memo.lock().expect("memo lock").get(&key) {
            return hit.clone();
        }
        let out = run();
        memo.lock().expect("memo lock").insert(key, out.clone());
        out
    }
}

/// Sequential search for one technique with an arbitrary proposer.
pub fn optimize_with(
    evaluator: &Evaluator,
    technique: &Technique,
    budget: usize,
    proposer: &mut dyn Proposer,
    stop_at: Option<f64>,
) -> Result<SearchTrace> {
    if budget == 0 {
        return Err(Error::param("search budget must be at least 1"));
    }
    let x = evaluator.data();
    technique.validate(x.cols())?;
    let space = hp_space(technique, x.rows());
    let budget = if space.is_degenerate() { 1 } else { budget };
    let mut trace = SearchTrace {
        technique: *technique,
        trials: Vec::with_capacity(budget),
        best_score: f64::NEG_INFINITY,
        best_index: None,
        best_projection: None,
        evaluations_used: 0,
        terminated_early: false,
        stop_at,
    };
    for _ in 0..budget {
        let params = proposer.propose(&space, &trace.trials);
        let trial = match evaluator.evaluate(technique, &params) {
            Ok((z, score)) => {
                if score > trace.best_score || trace.best_index.is_none() {
                    trace.best_score = score;
                    trace.best_index = Some(trace.trials.len());
                    trace.best_projection = Some(z);
                }
                Trial {
                    params,
                    score,
                    error: None,
                }
            }
            Err(e) => {
                warn!("{} trial {} failed: {e}", technique.id, trace.trials.len());
                Trial {
                    params,
                    score: f64::NEG_INFINITY,
                    error: Some(e.to_string()),
                }
            }
        };
        trace.trials.push(trial);
        trace.evaluations_used += 1;
        if let Some(threshold) = stop_at {
            if trace.best_score >= threshold {
                trace.terminated_early = true;
                break;
            }
        }
    }
    Ok(trace)
}

/// Seeded random search for one technique, stopping once the running best
/// reaches `stop_at`.
pub fn optimize_technique(
    x: &DataMatrix,
    labels: Option<&LabelPartition>,
    technique: &Technique,
    spec: &MetricSpec,
    budget: usize,
    seed: u64,
    stop_at: Option<f64>,
) -> Result<SearchTrace> {
    let evaluator = Evaluator::new(x, labels, spec)?;
    let mut proposer = RandomProposer::new(seed);
    optimize_with(&evaluator, technique, budget, &mut proposer, stop_at)
}

#[derive(Debug, Clone)]
pub struct WorkflowResult {
    pub technique: Technique,
    pub best_params: HyperParams,
    pub projection: DataMatrix,
    pub best_score: f64,
    pub total_evaluations: usize,
    pub wall_time: Duration,
    pub traces: Vec<SearchTrace>,
    /// Predicted best score per ranked technique (adaptive workflow only).
    pub predictions: Vec<(TechniqueId, f64)>,
}

/// Searches each technique in order with its own threshold and returns the
/// overall best; ties go to the earlier technique.
pub fn search_techniques(
    evaluator: &Evaluator,
    plan: &[(Technique, Option<f64>)],
    budget_per_technique: usize,
    seed: u64,
) -> Result<WorkflowResult> {
    if plan.is_empty() {
        return Err(Error::param("no techniques to search"));
    }
    let start = Instant::now();
    let mut traces = Vec::with_capacity(plan.len());
    for (t, stop_at) in plan {
        let mut proposer = RandomProposer::new(technique_seed(seed, t.id));
        traces.push(optimize_with(
            evaluator,
            t,
            budget_per_technique,
            &mut proposer,
            *stop_at,
        )?);
    }
    let total_evaluations = traces.iter().map(|t| t.evaluations_used).sum();
    let mut winner: Option<&SearchTrace> = None;
    for t in &traces {
        if t.best_index.is_some()
            && t.best_score.is_finite()
            && winner.is_none_or(|w| t.best_score > w.best_score)
        {
            winner = Some(t);
        }
    }
    let w = winner.ok_or_else(|| Error::Workflow("every technique failed".into()))?;
    Ok(WorkflowResult {
        technique: w.technique,
        best_params: w.best_params().cloned().unwrap_or_default(),
        projection: w
            .best_projection
            .clone()
            .expect("best trial keeps its projection"),
        best_score: w.best_score,
        total_evaluations,
        wall_time: start.elapsed(),
        traces,
        predictions: Vec::new(),
    })
}

/// Exhausts `budget_per_technique` trials for every technique and keeps the
/// best projection.
pub fn conventional_workflow(
    x: &DataMatrix,
    labels: Option<&LabelPartition>,
    techniques: &[Technique],
    spec: &MetricSpec,
    budget_per_technique: usize,
    seed: u64,
) -> Result<WorkflowResult> {
    let evaluator = Evaluator::new(x, labels, spec)?;
    conventional_workflow_with(&evaluator, techniques, budget_per_technique, seed)
}

/// [`conventional_workflow`] on a prepared evaluator.
pub fn conventional_workflow_with(
    evaluator: &Evaluator,
    techniques: &[Technique],
    budget_per_technique: usize,
    seed: u64,
) -> Result<WorkflowResult> {
    let plan: Vec<_> = techniques.iter().map(|t| (*t, None)).collect();
    search_techniques(evaluator, &plan, budget_per_technique, seed)
}

/// Predictor of one technique's best reachable score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueModel {
    pub technique: Technique,
    pub kind: RegressionKind,
    /// Cross-validated R² of the chosen kind; `None` when undefined.
    pub r2: Option<f64>,
    /// R² of every kind that could be evaluated, in selection order.
    pub candidates: Vec<(RegressionKind, Option<f64>)>,
    /// Set when features or targets were degenerate and the model predicts
    /// the training mean.
    pub constant_fallback: bool,
    pub model: RegressionModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveModelSet {
    pub models: Vec<TechniqueModel>,
    pub ks: Vec<usize>,
    pub metric: MetricSpec,
    pub training_datasets: usize,
}

impl AdaptiveModelSet {
    pub fn get(&self, id: TechniqueId) -> Option<&TechniqueModel> {
        self.models.iter().find(|m| m.technique.id == id)
    }

    pub fn techniques(&self) -> Vec<Technique> {
        self.models.iter().map(|m| m.technique).collect()
    }

    /// Predicted best score per technique for `x`, in model order.
    pub fn predict(&self, x: &DataMatrix) -> Result<Vec<(Technique, f64)>> {
        let feats = complexity_features(x, &self.ks)?;
        if feats.ks != self.ks {
            return Err(Error::param(format!(
                "dataset of {} points cannot provide MNC at k={:?}",
                x.rows(),
                self.ks
            )));
        }
        let v = feats.to_vector();
        self.models
            .iter()
            .map(|m| Ok((m.technique, m.model.predict(&v)?)))
            .collect()
    }
}

/// Best regressor with its R², and every candidate's R² (None when undefined).
pub type ModelSelection = (
    Option<(RegressionKind, f64)>,
    Vec<(RegressionKind, Option<f64>)>,
);

/// Cross-validates every regressor kind and returns the best (ties go to
/// the earlier kind) with all candidate scores.
pub fn select_model(
    features: &[Vec<f64>],
    targets: &[f64],
    folds: usize,
    seed: u64,
) -> ModelSelection {
    let mut best: Option<(RegressionKind, f64)> = None;
    let mut candidates = Vec::new();
    for kind in RegressionKind::ALL {
        let r2 = kfold_r2(kind, features, targets, folds, seed).ok();
        candidates.push((kind, r2));
        if let Some(r) = r2 {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((kind, r));
            }
        }
    }
    (best, candidates)
}

pub struct TrainingDataset<'a> {
    pub data: &'a DataMatrix,
    pub labels: Option<&'a LabelPartition>,
}

/// Learns, per technique, a regressor from complexity features to the best
/// score a budgeted search reaches.
pub fn pretrain(
    datasets: &[TrainingDataset<'_>],
    techniques: &[Technique],
    spec: &MetricSpec,
    ks: &[usize],
    budget: usize,
    seed: u64,
) -> Result<AdaptiveModelSet> {
    if datasets.len() < 4 {
        return Err(Error::param(format!(
            "pretraining needs at least 4 datasets, got {}",
            datasets.len()
        )));
    }
    if techniques.is_empty() {
        return Err(Error::param("no techniques to pretrain"));
    }
    let mut features = Vec::with_capacity(datasets.len());
    let mut best = vec![Vec::with_capacity(datasets.len()); techniques.len()];
    let mut used_ks: Option<Vec<usize>> = None;
    for (di, ds) in datasets.iter().enumerate() {
        let f = complexity_features(ds.data, ks)?;
        match &used_ks {
            None => used_ks = Some(f.ks.clone()),
            Some(prev) if *prev != f.ks => {
                return Err(Error::param(format!(
                    "dataset {di} supports MNC sizes {:?}, others {:?}",
                    f.ks, prev
                )))
            }
            _ => {}
        }
        features.push(f.to_vector());
        let dataset_seed = seed.wrapping_add(di as u64);
        let result =
            conventional_workflow(ds.data, ds.labels, techniques, spec, budget, dataset_seed)?;
        for (ti, trace) in result.traces.iter().enumerate() {
            if !trace.best_score.is_finite() {
                return Err(Error::Workflow(format!(
                    "technique {} failed on training dataset {di}",
                    trace.technique.id
                )));
            }
            best[ti].push(trace.best_score);
        }
    }
    let folds = datasets.len().min(5);
    let bounded = spec.kind.is_unit_bounded();
    let feature_dim = features[0].len();
    let constant_features = features.iter().all(|f| *f == features[0]);
    let mut models = Vec::with_capacity(techniques.len());
    for (t, targets) in techniques.iter().zip(&best) {
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let constant_targets = targets.iter().all(|v| *v == targets[0]);
        let fallback = |candidates| TechniqueModel {
            technique: *t,
            kind: RegressionKind::Linear,
            r2: None,
            candidates,
            constant_fallback: true,
            model: RegressionModel::constant(RegressionKind::Linear, feature_dim, mean)
                .with_unit_clamp(bounded),
        };
        if constant_features || constant_targets {
            warn!("degenerate training data for {}; predicting the mean", t.id);
            models.push(fallback(Vec::new()));
            continue;
        }
        let (chosen, candidates) = select_model(&features, targets, folds, seed);
        let entry = match chosen {
            Some((kind, r2)) => match fit(kind, &features, targets) {
                Ok(m) => TechniqueModel {
                    technique: *t,
                    kind,
                    r2: Some(r2),
                    candidates,
                    constant_fallback: false,
                    model: m.with_unit_clamp(bounded),
                },
                Err(e) => {
                    warn!(
                        "refit of {} model for {} failed ({e}); predicting the mean",
                        kind.name(),
                        t.id
                    );
                    fallback(candidates)
                }
            },
            None => {
                warn!(
                    "no regressor could be cross-validated for {}; predicting the mean",
                    t.id
                );
                fallback(candidates)
            }
        };
        models.push(entry);
    }
    Ok(AdaptiveModelSet {
        models,
        ks: used_ks.unwrap_or_default(),
        metric: spec.clone(),
        training_datasets: datasets.len(),
    })
}

/// Ranks techniques by predicted best score, searches the top `top_m`
/// (ties keep model order), and stops each search at its prediction.
pub fn adaptive_workflow(
    x: &DataMatrix,
    labels: Option<&LabelPartition>,
    models: &AdaptiveModelSet,
    top_m: usize,
    budget_per_technique: usize,
    seed: u64,
) -> Result<WorkflowResult> {
    let evaluator = Evaluator::new(x, labels, &models.metric)?;
    adaptive_workflow_with(&evaluator, models, top_m, budget_per_technique, seed)
}

/// [`adaptive_workflow`] on a prepared evaluator, whose metric must be the
/// one the models were trained for.
pub fn adaptive_workflow_with(
    evaluator: &Evaluator,
    models: &AdaptiveModelSet,
    top_m: usize,
    budget_per_technique: usize,
    seed: u64,
) -> Result<WorkflowResult> {
    if top_m == 0 {
        return Err(Error::param("top_m must be at least 1"));
    }
    if *evaluator.spec() != models.metric {
        return Err(Error::param(format!(
            "models were trained for {}, the evaluator scores {}",
            models.metric.name(),
            evaluator.spec().name()
        )));
    }
    let start = Instant::now();
    let mut ranked = models.predict(evaluator.data())?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked.truncate(top_m);
    let plan: Vec<_> = ranked.iter().map(|(t, p)| (*t, Some(*p))).collect();
    let mut result = search_techniques(evaluator, &plan, budget_per_technique, seed)?;
    result.predictions = ranked.iter().map(|(t, p)| (t.id, *p)).collect();
    result.wall_time = start.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drquality::MetricKind;

    fn blobs() -> DataMatrix {
        DataMatrix::from_fn(40, 4, |i, j| {
            let c = (i % 2) as f64 * 8.0;
            c + (((i * 37 + j * 11) % 13) as f64 - 6.0) * 0.15 + if j == 0 { c } else { 0.0 }
        })
        .unwrap()
    }

    #[test]
    fn pca_evaluated_once() {
        let x = blobs();
        let tr = optimize_technique(
            &x,
            None,
            &Technique::new(TechniqueId::Pca),
            &MetricSpec::new(MetricKind::Tnc),
            20,
            0,
            None,
        )
        .unwrap();
        assert_eq!(tr.evaluations_used, 1);
        assert!(!tr.terminated_early);
    }

    #[test]
    fn minus_infinity_threshold_stops_after_one() {
        let x = blobs();
        let tr = optimize_technique(
            &x,
            None,
            &Technique::new(TechniqueId::RandomProj),
            &MetricSpec::new(MetricKind::Tnc),
            20,
            0,
            Some(f64::NEG_INFINITY),
        )
        .unwrap();
        assert_eq!(tr.evaluations_used, 1);
        assert!(tr.terminated_early);
    }

    #[test]
    fn running_best_monotone_and_consistent() {
        let x = blobs();
        let tr = optimize_technique(
            &x,
            None,
            &Technique::new(TechniqueId::RandomProj),
            &MetricSpec::new(MetricKind::Tnc),
            15,
            4,
            None,
        )
        .unwrap();
        let rb = tr.running_best();
        assert!(rb.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*rb.last().unwrap(), tr.best_score);
        assert_eq!(tr.evaluations_used, tr.trials.len());
    }

    #[test]
    fn zero_budget_rejected() {
        let x = blobs();
        assert!(optimize_technique(
            &x,
            None,
            &Technique::new(TechniqueId::Pca),
            &MetricSpec::new(MetricKind::Tnc),
            0,
            0,
            None
        )
        .is_err());
    }

    #[test]
    fn too_few_training_sets() {
        let x = blobs();
        let ds: Vec<_> = (0..3)
            .map(|_| TrainingDataset {
                data: &x,
                labels: None,
            })
            .collect();
        let r = pretrain(
            &ds,
            &[Technique::new(TechniqueId::Pca)],
            &MetricSpec::new(MetricKind::Tnc),
            &[5],
            1,
            0,
        );
        assert!(matches!(r, Err(Error::Parameter(_))));
    }

    #[test]
    fn memo_does_not_change_results() {
        let x = blobs();
        let spec = MetricSpec::new(MetricKind::Tnc).with_k_list(vec![5]);
        let techniques = [
            Technique::new(TechniqueId::Pca),
            Technique::new(TechniqueId::RandomProj),
        ];
        let plain = conventional_workflow(&x, None, &techniques, &spec, 6, 2).unwrap();
        let ev = Evaluator::new(&x, None, &spec).unwrap().with_memo();
        let first = conventional_workflow_with(&ev, &techniques, 6, 2).unwrap();
        let again = conventional_workflow_with(&ev, &techniques, 6, 2).unwrap();
        for r in [&first, &again] {
            assert_eq!(r.best_score, plain.best_score);
            assert_eq!(r.total_evaluations, plain.total_evaluations);
            assert_eq!(r.projection, plain.projection);
        }
    }

    #[test]
    fn seeds_differ_per_technique() {
        assert_ne!(
            technique_seed(1, TechniqueId::Tsne),
            technique_seed(1, TechniqueId::RandomProj)
        );
        assert_eq!(
            technique_seed(1, TechniqueId::Tsne),
            technique_seed(1, TechniqueId::Tsne)
        );
    }
}
