//! The retrieve / reuse / revise / retain cycle.
//!
//! Retrieval scores every stored case against a query with a weighted mean of
//! per-attribute local similarities, computed on min-max scaled values.
//! Reuse copies the target of the best-scoring case. Revise is a recorded
//! no-op for binary targets. Retain appends the solved query to the raw case
//! base and re-fits the scaling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, CaseRecord, Confusion, EvaluationReport};
use crate::case::{validate_case, Case, FeatureVector, Target, ValidationMode, NUM_ATTRIBUTES};
use crate::dataset::{CaseBase, CaseId};
use crate::error::{Error, Result};
use crate::preprocess::{fit_minmax, NormalizationParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Among equal scores the earliest stored case wins.
    #[default]
    LowestCaseId,
}

/// Attribute weights and retrieval options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    weights: [f64; NUM_ATTRIBUTES],
    pub tie_break: TieBreak,
    /// Retain each test case (with its predicted target) before predicting
    /// the next one during [`evaluate`].
    pub incremental_retain: bool,
    /// Keep only this many entries in [`Prediction::ranked`]; `None` keeps all.
    pub ranked_limit: Option<usize>,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            weights: [1.0; NUM_ATTRIBUTES],
            tie_break: TieBreak::LowestCaseId,
            incremental_retain: false,
            ranked_limit: None,
        }
    }
}

impl SimilarityConfig {
    /// Weights must be finite, non-negative and not all zero. They need not
    /// sum to one: the global score divides by their sum.
    pub fn new(weights: [f64; NUM_ATTRIBUTES]) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidWeights(format!(
                "weight {} for `{}` must be finite and non-negative",
                w,
                crate::case::ATTRIBUTE_NAMES[i]
            )));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::InvalidWeights("weights must not all be zero".into()));
        }
        Ok(Self {
            weights,
            ..Self::default()
        })
    }

    pub fn from_slice(weights: &[f64]) -> Result<Self> {
        let w: [f64; NUM_ATTRIBUTES] = weights.try_into().map_err(|_| {
            Error::InvalidWeights(format!(
                "expected {NUM_ATTRIBUTES} weights, got {}",
                weights.len()
            ))
        })?;
        Self::new(w)
    }

    pub fn with_incremental_retain(mut self, on: bool) -> Self {
        self.incremental_retain = on;
        self
    }

    pub fn with_ranked_limit(mut self, limit: Option<usize>) -> Self {
        self.ranked_limit = limit;
        self
    }

    pub fn weights(&self) -> &[f64; NUM_ATTRIBUTES] {
        &self.weights
    }
}

/// Similarity of two scaled attribute values.
///
/// Non-degenerate attributes score `max(0, 1 - |a - b| / range)`; a degenerate
/// (zero-range) attribute scores 1 on exact equality and 0 otherwise.
pub fn local_similarity(a: f64, b: f64, range: f64, degenerate: bool) -> f64 {
    if degenerate || range == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (1.0 - (a - b).abs() / range).clamp(0.0, 1.0)
}

/// Weighted mean of the 13 local similarities between two scaled vectors.
///
/// After scaling, every non-degenerate attribute has range 1 over the
/// training data.
pub fn global_similarity(
    query: &FeatureVector,
    case: &FeatureVector,
    cfg: &SimilarityConfig,
    params: &NormalizationParams,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..NUM_ATTRIBUTES {
        let w = cfg.weights[i];
        let degenerate = params.is_degenerate(i);
        let range = if degenerate { 0.0 } else { 1.0 };
        num += w * local_similarity(query.0[i], case.0[i], range, degenerate);
        den += w;
    }
    num / den
}

/// One scored entry of a retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedCase {
    pub case_id: CaseId,
    pub score: f64,
    pub target: Target,
}

/// Scaled snapshot of a case base for repeated retrieval.
#[derive(Debug, Clone)]
pub struct ScaledIndex {
    ids: Vec<CaseId>,
    targets: Vec<Target>,
    vectors: Vec<FeatureVector>,
    params: NormalizationParams,
}

impl ScaledIndex {
    pub fn build(cb: &CaseBase, params: &NormalizationParams) -> Self {
        let mut ids = Vec::with_capacity(cb.len());
        let mut targets = Vec::with_capacity(cb.len());
        let mut vectors = Vec::with_capacity(cb.len());
        for e in cb.iter() {
            ids.push(e.id);
            targets.push(e.target());
            vectors.push(params.normalize(&e.case.to_feature_vector()));
        }
        Self {
            ids,
            targets,
            vectors,
            params: *params,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Scores every stored case, best first; equal scores keep ascending id.
    pub fn retrieve(&self, query: &Case, cfg: &SimilarityConfig) -> Result<Vec<RankedCase>> {
        if self.is_empty() {
            return Err(Error::Empty("case base is empty"));
        }
        let q = self.params.normalize(&query.to_feature_vector());
        let mut ranked: Vec<RankedCase> = self
            .vectors
            .iter()
            .zip(&self.ids)
            .zip(&self.targets)
            .map(|((v, &case_id), &target)| RankedCase {
                case_id,
                score: global_similarity(&q, v, cfg, &self.params),
                target,
            })
            .collect();
        // ids are stored ascending, so a stable sort on score alone keeps the
        // lowest id first among ties
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
        Ok(ranked)
    }

    pub fn predict(&self, query: &Case, cfg: &SimilarityConfig) -> Result<Prediction> {
        let mut ranked = self.retrieve(query, cfg)?;
        let best = best_entry(&ranked)?;
        if let Some(limit) = cfg.ranked_limit {
            ranked.truncate(limit.max(1));
        }
        Ok(Prediction {
            predicted_target: best.target,
            best_case_id: best.case_id,
            best_global_similarity: best.score,
            ranked,
        })
    }
}

/// Ranks all stored cases against `query`.
pub fn retrieve(
    query: &Case,
    cb: &CaseBase,
    cfg: &SimilarityConfig,
    params: &NormalizationParams,
) -> Result<Vec<RankedCase>> {
    ScaledIndex::build(cb, params).retrieve(query, cfg)
}

fn best_entry(ranked: &[RankedCase]) -> Result<RankedCase> {
    let mut iter = ranked.iter();
    let mut best = *iter.next().ok_or(Error::Empty("ranked list is empty"))?;
    for r in iter {
        if r.score > best.score || (r.score == best.score && r.case_id < best.case_id) {
            best = *r;
        }
    }
    Ok(best)
}

/// Copies the solution of the highest-scoring case, lowest id on ties.
pub fn reuse(ranked: &[RankedCase]) -> Result<Target> {
    best_entry(ranked).map(|b| b.target)
}

/// Outcome of retrieve + reuse for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted_target: Target,
    pub best_case_id: CaseId,
    pub best_global_similarity: f64,
    pub ranked: Vec<RankedCase>,
}

/// Retrieve then reuse. The query is not retained.
pub fn predict(
    query: &Case,
    cb: &CaseBase,
    cfg: &SimilarityConfig,
    params: &NormalizationParams,
) -> Result<Prediction> {
    ScaledIndex::build(cb, params).predict(query, cfg)
}

/// Appends the raw query with its solved target and re-fits the scaling on
/// the enlarged base. Returns the new id and the refreshed parameters.
pub fn retain(
    query: &Case,
    solved_target: Target,
    cb: &mut CaseBase,
) -> Result<(CaseId, NormalizationParams)> {
    let raw = query
        .to_fields()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let mut case = validate_case(&raw, ValidationMode::Lenient)?.case;
    case.target = Some(solved_target);
    let id = cb.push(case)?;
    let params = fit_minmax(cb)?;
    Ok((id, params))
}

/// Audit record of one pass through the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum CycleEvent {
    Retrieve {
        candidates: usize,
        best_case_id: CaseId,
        best_score: f64,
    },
    Reuse {
        from_case_id: CaseId,
        target: Target,
    },
    /// Binary solutions need no adaptation; recorded for completeness.
    Revise { applied: bool },
    Retain {
        case_id: Option<CaseId>,
        case_base_size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleOutcome {
    pub prediction: Prediction,
    pub events: Vec<CycleEvent>,
}

/// Runs the full cycle for one query, optionally retaining it.
///
/// When `retain_query` is set the case base grows by one and `params` is
/// replaced by the re-fitted scaling.
pub fn run_cycle(
    query: &Case,
    cb: &mut CaseBase,
    params: &mut NormalizationParams,
    cfg: &SimilarityConfig,
    retain_query: bool,
) -> Result<CycleOutcome> {
    let prediction = predict(query, cb, cfg, params)?;
    let mut events = vec![
        CycleEvent::Retrieve {
            candidates: cb.len(),
            best_case_id: prediction.best_case_id,
            best_score: prediction.best_global_similarity,
        },
        CycleEvent::Reuse {
            from_case_id: prediction.best_case_id,
            target: prediction.predicted_target,
        },
        CycleEvent::Revise { applied: false },
    ];
    let retained = if retain_query {
        let (id, refit) = retain(query, prediction.predicted_target, cb)?;
        *params = refit;
        Some(id)
    } else {
        None
    };
    events.push(CycleEvent::Retain {
        case_id: retained,
        case_base_size: cb.len(),
    });
    Ok(CycleOutcome { prediction, events })
}

/// Predicts every test case in order and scores the predictions.
///
/// Training cases are also scored by self-retrieval against the frozen base
/// so that an accuracy over train and test together can be reported. With
/// `cfg.incremental_retain`, each test case is retained with its predicted
/// target before the next prediction.
pub fn evaluate(
    test: &[Case],
    cb: &CaseBase,
    cfg: &SimilarityConfig,
    params: &NormalizationParams,
) -> Result<EvaluationReport> {
    evaluate_with(test, cb, cfg, params, false)
}

/// As [`evaluate`], fanning predictions over the rayon pool when the case
/// base is frozen. Output is identical to the sequential path.
pub fn evaluate_parallel(
    test: &[Case],
    cb: &CaseBase,
    cfg: &SimilarityConfig,
    params: &NormalizationParams,
) -> Result<EvaluationReport> {
    evaluate_with(test, cb, cfg, params, true)
}

fn predict_all(
    index: &ScaledIndex,
    queries: &[Case],
    cfg: &SimilarityConfig,
    parallel: bool,
) -> Result<Vec<Prediction>> {
    let cfg = cfg.clone().with_ranked_limit(Some(1));
    if parallel {
        queries.par_iter().map(|q| index.predict(q, &cfg)).collect()
    } else {
        queries.iter().map(|q| index.predict(q, &cfg)).collect()
    }
}

fn evaluate_with(
    test: &[Case],
    cb: &CaseBase,
    cfg: &SimilarityConfig,
    params: &NormalizationParams,
    parallel: bool,
) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::Empty("test set is empty"));
    }
    if cb.is_empty() {
        return Err(Error::Empty("case base is empty"));
    }
    let truths: Vec<Target> = test
        .iter()
        .enumerate()
        .map(|(i, c)| c.target.ok_or(Error::MissingTarget(i)))
        .collect::<Result<_>>()?;

    let frozen = ScaledIndex::build(cb, params);
    let train_cases: Vec<Case> = cb.cases().cloned().collect();
    let train_predictions = predict_all(&frozen, &train_cases, cfg, parallel)?;

    let test_predictions = if cfg.incremental_retain {
        let single = cfg.clone().with_ranked_limit(Some(1));
        let mut growing = cb.clone();
        let mut current = *params;
        let mut out = Vec::with_capacity(test.len());
        for q in test {
            let outcome = run_cycle(q, &mut growing, &mut current, &single, true)?;
            out.push(outcome.prediction);
        }
        out
    } else {
        predict_all(&frozen, test, cfg, parallel)?
    };

    let records: Vec<CaseRecord> = test_predictions
        .iter()
        .zip(&truths)
        .enumerate()
        .map(|(index, (p, &t))| CaseRecord {
            index,
            true_target: t,
            predicted_target: p.predicted_target,
            best_similarity: p.best_global_similarity,
            best_case_id: p.best_case_id,
        })
        .collect();

    let predicted: Vec<Target> = records.iter().map(|r| r.predicted_target).collect();
    let confusion = Confusion::from_labels(&predicted, &truths)?;
    let test_accuracy = analytics::accuracy(&predicted, &truths)?;

    let train_truths: Vec<Target> = cb.iter().map(|e| e.target()).collect();
    let train_predicted: Vec<Target> =
        train_predictions.iter().map(|p| p.predicted_target).collect();
    let train_correct = train_predicted
        .iter()
        .zip(&train_truths)
        .filter(|(p, t)| p == t)
        .count();
    let test_correct = confusion.tp + confusion.tn;
    let total = cb.len() + test.len();
    let merged_accuracy = (train_correct + test_correct) as f64 / total as f64;
    let train_self_accuracy = train_correct as f64 / cb.len() as f64;

    let merged_cases: Vec<Case> = train_cases.iter().chain(test).cloned().collect();
    let merged_labels: Vec<Target> = train_predicted.iter().chain(&predicted).copied().collect();
    let stats = analytics::dataset_stats(&merged_cases, &merged_labels)?;

    Ok(EvaluationReport {
        train_size: cb.len(),
        test_size: test.len(),
        weights: cfg.weights.to_vec(),
        incremental_retain: cfg.incremental_retain,
        test_accuracy,
        train_self_accuracy,
        merged_accuracy,
        merged_correct: train_correct + test_correct,
        merged_total: total,
        confusion,
        records,
        stats,
    })
}
