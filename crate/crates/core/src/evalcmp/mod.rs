//! Cross-validated model comparison and the skill-component verdict.

mod compare;
mod cv;
mod pipeline;
mod report;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logreg::LogRegError;
use crate::stats::{mean, sample_std};
use crate::trueskill::TrueSkillError;

pub use compare::{
    paired_ttest, significant, verdict, Components, Conjunction, Evidence, Hypothesis,
    SignificanceMode, TTest, Verdict, VerdictOptions,
};
pub use cv::{
    cross_validate, cross_validate_with_folds, majority_baseline, majority_baseline_with_folds,
    nested_cross_validate, CvOptions,
};
pub use pipeline::{fit_full, run_comparison, ComparisonConfig, GridSpec, ModelKind};
pub use report::{ComparisonReport, PairwiseEntry, SCHEMA_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{z} matches cannot be split into {folds} folds")]
    TooFewMatches { z: usize, folds: usize },
    #[error("bad C grid: {0}")]
    BadRange(String),
    #[error("results cover different folds ({a} vs {b})")]
    FoldMismatch { a: usize, b: usize },
    #[error("verdict needs result for {0}")]
    MissingModel(String),
    #[error("unknown model name {0:?}")]
    UnknownModel(String),
    #[error(transparent)]
    LogReg(#[from] LogRegError),
    #[error(transparent)]
    TrueSkill(#[from] TrueSkillError),
}

/// How a result's accuracies were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    CrossValidation,
    /// One chronological train/test cut; `std` is a bootstrap estimate over test matches.
    ChronologicalHoldout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub model_name: String,
    pub protocol: Protocol,
    pub per_fold_accuracy: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    #[serde(rename = "best_C", skip_serializing_if = "Option::is_none", default)]
    pub best_c: Option<f64>,
}

impl CvResult {
    /// Cross-validation result; mean and sample std come from the fold list.
    pub fn from_folds(model_name: impl Into<String>, per_fold_accuracy: Vec<f64>, best_c: Option<f64>) -> Self {
        Self {
            model_name: model_name.into(),
            protocol: Protocol::CrossValidation,
            mean: mean(&per_fold_accuracy),
            std: sample_std(&per_fold_accuracy),
            per_fold_accuracy,
            best_c,
        }
    }

    /// A result known only by its summary statistics, e.g. a published table row.
    pub fn from_summary(model_name: impl Into<String>, mean: f64, std: f64) -> Self {
        Self {
            model_name: model_name.into(),
            protocol: Protocol::CrossValidation,
            per_fold_accuracy: Vec::new(),
            mean,
            std,
            best_c: None,
        }
    }
}

/// Seeded permutation of `0..z` cut into `folds` parts; the first `z % folds` get one extra.
pub fn kfold_indices(z: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if folds < 2 || z < folds {
        return Err(EvalError::TooFewMatches { z, folds });
    }
    let mut order: Vec<usize> = (0..z).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (z / folds, z % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let mut fold = order[start..start + size].to_vec();
        fold.sort_unstable();
        out.push(fold);
        start += size;
    }
    Ok(out)
}

/// `exp(linspace(ln low, ln high, points))` with both endpoints exact.
pub fn grid_c(low: f64, high: f64, points: usize) -> Result<Vec<f64>, EvalError> {
    if !(low > 0.0 && low < high && high.is_finite()) {
        return Err(EvalError::BadRange(format!("need 0 < low < high, got [{low}, {high}]")));
    }
    if points < 2 {
        return Err(EvalError::BadRange(format!("need at least 2 points, got {points}")));
    }
    let (a, b) = (low.ln(), high.ln());
    let last = points - 1;
    Ok((0..points)
        .map(|k| match k {
            0 => low,
            k if k == last => high,
            k => (a + (b - a) * k as f64 / last as f64).exp(),
        })
        .collect())
}
