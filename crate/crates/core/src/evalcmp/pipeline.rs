use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::compare::{paired_ttest, significant, verdict, Conjunction, SignificanceMode, VerdictOptions};
use super::cv::{cross_validate_with_folds, majority_baseline_with_folds, nested_cross_validate, CvOptions};
use super::report::{ComparisonReport, PairwiseEntry, SCHEMA_VERSION};
use super::{grid_c, kfold_indices, CvResult, EvalError, Protocol};
use crate::dataset::IndexedDataset;
use crate::features::{EncodingScheme, Scheme};
use crate::logreg::{train, LabeledSet, OptimizerConfig, TrainedModel};
use crate::trueskill::{evaluate_chronological, TrueSkillParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Lr(Scheme),
    TrueSkill,
    Majority,
}

impl ModelKind {
    pub const DEFAULT: [ModelKind; 6] = [
        ModelKind::Lr(Scheme::Player),
        ModelKind::Lr(Scheme::Champion),
        ModelKind::Lr(Scheme::PlayerChampion),
        ModelKind::Lr(Scheme::Full),
        ModelKind::TrueSkill,
        ModelKind::Majority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr(s) => s.model_name(),
            ModelKind::TrueSkill => "TrueSkill",
            ModelKind::Majority => "BL-MC",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "trueskill" => Ok(ModelKind::TrueSkill),
            "bl-mc" | "bl_mc" | "majority" => Ok(ModelKind::Majority),
            _ => s
                .parse::<Scheme>()
                .map(ModelKind::Lr)
                .map_err(|_| EvalError::UnknownModel(s.into())),
        }
    }
}

impl Serialize for ModelKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub low: f64,
    pub high: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            low: 0.001,
            high: 1000.0,
            points: 7,
        }
    }
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, EvalError> {
        grid_c(self.low, self.high, self.points)
    }
}

/// Everything that determines a comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComparisonConfig {
    pub folds: usize,
    pub seed: u64,
    pub grid: GridSpec,
    pub models: Vec<ModelKind>,
    pub trueskill: TrueSkillParams,
    /// Share of chronologically earliest matches the rating baseline learns from.
    pub train_fraction: f64,
    /// Bootstrap resamples for the rating baseline's accuracy spread.
    pub bootstrap_resamples: usize,
    pub significance: SignificanceMode,
    pub conjunction: Conjunction,
    pub alpha: f64,
    /// Choose C by an inner search of this many folds instead of on the scored folds.
    pub nested_inner_folds: Option<usize>,
    pub optimizer: OptimizerConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            seed: 0,
            grid: GridSpec::default(),
            models: ModelKind::DEFAULT.to_vec(),
            trueskill: TrueSkillParams::default(),
            train_fraction: 0.9,
            bootstrap_resamples: 1000,
            significance: SignificanceMode::Rule,
            conjunction: Conjunction::And,
            alpha: 0.05,
            nested_inner_folds: None,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl ComparisonConfig {
    pub fn verdict_options(&self) -> VerdictOptions {
        VerdictOptions {
            mode: self.significance,
            conjunction: self.conjunction,
            alpha: self.alpha,
        }
    }
}

fn run_model(
    dataset: &IndexedDataset,
    kind: ModelKind,
    folds: &[Vec<usize>],
    grid: &[f64],
    config: &ComparisonConfig,
) -> Result<CvResult, EvalError> {
    let options = CvOptions {
        optimizer: config.optimizer,
    };
    match kind {
        ModelKind::Lr(scheme) => {
            let scheme = EncodingScheme::for_dataset(scheme, dataset);
            let set = LabeledSet::from_dataset(dataset, &scheme)?;
            match config.nested_inner_folds {
                Some(inner) => {
                    nested_cross_validate(&set, scheme, grid, folds, inner, config.seed, &options)
                }
                None => cross_validate_with_folds(&set, scheme, grid, folds, &options),
            }
        }
        ModelKind::Majority => {
            let labels: Vec<bool> = dataset.matches().iter().map(|m| m.red_won()).collect();
            Ok(majority_baseline_with_folds(&labels, folds))
        }
        ModelKind::TrueSkill => {
            let report = evaluate_chronological(dataset, &config.trueskill, config.train_fraction)?;
            Ok(CvResult {
                model_name: kind.name().into(),
                protocol: Protocol::ChronologicalHoldout,
                per_fold_accuracy: vec![report.accuracy],
                mean: report.accuracy,
                std: report.bootstrap_std(config.bootstrap_resamples, config.seed),
                best_c: None,
            })
        }
    }
}

fn pairwise(results: &[CvResult], alpha: f64) -> Vec<PairwiseEntry> {
    let mut out = Vec::new();
    for a in results {
        for b in results {
            if a.model_name == b.model_name {
                continue;
            }
            let matched = a.protocol == Protocol::CrossValidation
                && b.protocol == Protocol::CrossValidation
                && a.per_fold_accuracy.len() == b.per_fold_accuracy.len();
            out.push(PairwiseEntry {
                a: a.model_name.clone(),
                b: b.model_name.clone(),
                rule: significant(a, b),
                ttest: if matched { paired_ttest(a, b, alpha).ok() } else { None },
            });
        }
    }
    out
}

/// Runs every configured model on shared folds and assembles the report.
pub fn run_comparison(
    dataset: &IndexedDataset,
    config: &ComparisonConfig,
) -> Result<ComparisonReport, EvalError> {
    if config.models.is_empty() {
        return Err(EvalError::UnknownModel("(none selected)".into()));
    }
    let grid = config.grid.values()?;
    let folds = kfold_indices(dataset.len(), config.folds, config.seed)?;
    let mut models = config.models.clone();
    let mut seen = std::collections::HashSet::new();
    models.retain(|m| seen.insert(*m));
    let results = models
        .iter()
        .map(|&kind| run_model(dataset, kind, &folds, &grid, config))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = match verdict(&results, &config.verdict_options()) {
        Ok(v) => Some(v),
        Err(EvalError::MissingModel(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ComparisonReport {
        schema_version: SCHEMA_VERSION.into(),
        config: serde_json::to_value(config).expect("config serializes"),
        std_denominator: "n-1".into(),
        pairwise: pairwise(&results, config.alpha),
        results,
        components: verdict.as_ref().map(|v| v.components),
        evidence: verdict.as_ref().map(|v| v.evidence.clone()).unwrap_or_default(),
        hypothesis: verdict.map(|v| v.hypothesis),
    })
}

/// Fits a model on every match of `dataset`.
pub fn fit_full(
    dataset: &IndexedDataset,
    kind: Scheme,
    c: f64,
    optimizer: &OptimizerConfig,
) -> Result<TrainedModel, EvalError> {
    let scheme = EncodingScheme::for_dataset(kind, dataset);
    let set = LabeledSet::from_dataset(dataset, &scheme)?;
    Ok(train(&set, scheme, c, optimizer)?)
}
