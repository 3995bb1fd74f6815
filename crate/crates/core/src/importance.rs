//! Feature importance scores for a fitted ensemble.
//!
//! Three measures are provided: selection frequency (split counts),
//! split-based relative influence (summed squared-error improvements,
//! averaged over trees) and permutation importance (mean increase in an
//! error metric when one column is shuffled). Every report is rescaled so
//! the top feature scores 100.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, FeatureMatrix};
use crate::gbm::{GbmError, GbmModel};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImportanceError {
    #[error("the model contains no splits")]
    NoSplitsInModel,
    #[error("n_shuffles must be at least 1")]
    NoShuffles,
    #[error(transparent)]
    Model(#[from] GbmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceMethod {
    Frequency,
    Split,
    Permutation,
}

impl ImportanceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ImportanceMethod::Frequency => "frequency",
            ImportanceMethod::Split => "split",
            ImportanceMethod::Permutation => "permutation",
        }
    }
}

/// Error metric for permutation importance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Mse,
    Rmse,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Rmse => "rmse",
        }
    }

    pub fn evaluate(self, y: &[f64], predictions: &[f64]) -> f64 {
        let mse = y
            .iter()
            .zip(predictions)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / y.len() as f64;
        match self {
            Metric::Mse => mse,
            Metric::Rmse => libm::sqrt(mse),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    pub raw: f64,
    pub scaled: f64,
}

/// Per-feature scores in model feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: ImportanceMethod,
    pub metric: Option<Metric>,
    pub n_shuffles: Option<usize>,
    pub seed: Option<u64>,
    pub scores: Vec<FeatureScore>,
}

impl ImportanceReport {
    fn from_raw(method: ImportanceMethod, names: &[String], raw: Vec<f64>) -> Self {
        let scaled = rescale(&raw);
        ImportanceReport {
            method,
            metric: None,
            n_shuffles: None,
            seed: None,
            scores: names
                .iter()
                .zip(raw.into_iter().zip(scaled))
                .map(|(f, (raw, scaled))| FeatureScore {
                    feature: f.clone(),
                    raw,
                    scaled,
                })
                .collect(),
        }
    }

    pub fn score(&self, feature: &str) -> Option<&FeatureScore> {
        self.scores.iter().find(|s| s.feature == feature)
    }

    /// Scores sorted by scaled value (descending, stable on feature order)
    /// paired with competition ranks: ties share the lower rank number.
    pub fn ranked(&self) -> Vec<(usize, &FeatureScore)> {
        let mut sorted: Vec<&FeatureScore> = self.scores.iter().collect();
        sorted.sort_by(|a, b| b.scaled.total_cmp(&a.scaled));
        let mut out: Vec<(usize, &FeatureScore)> = Vec::with_capacity(sorted.len());
        for (i, s) in sorted.into_iter().enumerate() {
            let rank = match out.last() {
                Some(&(r, prev)) if prev.scaled == s.scaled => r,
                _ => i + 1,
            };
            out.push((rank, s));
        }
        out
    }

    /// Rank (1-based, ties share the lower number) of `feature`.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.ranked()
            .into_iter()
            .find(|(_, s)| s.feature == feature)
            .map(|(r, _)| r)
    }
}

/// `100 * raw / max(raw)`; all zeros when no score is positive.
pub fn rescale(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        raw.iter().map(|&r| 100.0 * (r.max(0.0) / max)).collect()
    } else {
        alloc::vec![0.0; raw.len()]
    }
}

/// Number of splits on each feature across all trees.
pub fn selection_frequency(model: &GbmModel) -> Result<ImportanceReport, ImportanceError> {
    let mut counts = alloc::vec![0.0; model.n_features()];
    for split in model.trees.iter().flat_map(|t| t.splits()) {
        counts[split.feature] += 1.0;
    }
    if counts.iter().all(|&c| c == 0.0) {
        return Err(ImportanceError::NoSplitsInModel);
    }
    Ok(ImportanceReport::from_raw(
        ImportanceMethod::Frequency,
        &model.feature_names,
        counts,
    ))
}

/// Sum of split improvements per feature, divided by the number of trees.
pub fn split_importance(model: &GbmModel) -> Result<ImportanceReport, ImportanceError> {
    let mut totals = alloc::vec![0.0; model.n_features()];
    let mut any = false;
    for split in model.trees.iter().flat_map(|t| t.splits()) {
        debug_assert!(split.improvement > 0.0);
        totals[split.feature] += split.improvement;
        any = true;
    }
    if !any {
        return Err(ImportanceError::NoSplitsInModel);
    }
    let m = model.trees.len() as f64;
    for t in &mut totals {
        *t /= m;
    }
    Ok(ImportanceReport::from_raw(
        ImportanceMethod::Split,
        &model.feature_names,
        totals,
    ))
}

/// Mean increase of `metric` over `n_shuffles` random permutations of each
/// feature column, clipped at zero.
///
/// Missing cells move with the permutation like any other value. Each
/// (feature, shuffle) pair draws from its own stream of `seed`.
pub fn permutation_importance(
    model: &GbmModel,
    dataset: &Dataset,
    metric: Metric,
    n_shuffles: usize,
    seed: u64,
) -> Result<ImportanceReport, ImportanceError> {
    if n_shuffles == 0 {
        return Err(ImportanceError::NoShuffles);
    }
    let features = model.matching_features(dataset)?;
    let y = dataset.response();
    let base = metric.evaluate(&y, &model.predict_all(&features));

    let raw = (0..features.n_features())
        .map(|f| {
            let total: f64 = (0..n_shuffles)
                .map(|s| {
                    let shuffled = permuted(&features, f, &mut rng::permutation_stream(seed, f, s));
                    metric.evaluate(&y, &model.predict_all(&shuffled))
                })
                .sum();
            let shuffled_mean = total / n_shuffles as f64;
            (-(base - shuffled_mean)).max(0.0)
        })
        .collect();

    let mut report =
        ImportanceReport::from_raw(ImportanceMethod::Permutation, &model.feature_names, raw);
    report.metric = Some(metric);
    report.n_shuffles = Some(n_shuffles);
    report.seed = Some(seed);
    Ok(report)
}

fn permuted<R: rand::Rng>(features: &FeatureMatrix, feature: usize, rng: &mut R) -> FeatureMatrix {
    let mut out = features.clone();
    rng::shuffle(rng, out.column_mut(feature));
    out
}
