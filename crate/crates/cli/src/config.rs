//! `evaluate` settings: flags, then `SKILLDECOMP_*` variables, then the config file, then defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use skilldecomp_core::evalcmp::{Conjunction, GridSpec, SignificanceMode};
use skilldecomp_core::{ComparisonConfig, ModelKind, OptimizerConfig, TrueSkillParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rule,
    Ttest,
    Both,
}

impl From<ModeArg> for SignificanceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rule => SignificanceMode::Rule,
            ModeArg::Ttest => SignificanceMode::Ttest,
            ModeArg::Both => SignificanceMode::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConjunctionArg {
    And,
    Or,
}

impl From<ConjunctionArg> for Conjunction {
    fn from(c: ConjunctionArg) -> Self {
        match c {
            ConjunctionArg::And => Conjunction::And,
            ConjunctionArg::Or => Conjunction::Or,
        }
    }
}

/// Rating-system hyperparameters shared by `evaluate` and `trueskill`.
#[derive(Debug, Clone, Default, Args)]
pub struct RatingArgs {
    #[arg(long, env = "SKILLDECOMP_TS_MU0")]
    pub ts_mu0: Option<f64>,
    #[arg(long, env = "SKILLDECOMP_TS_SIGMA0")]
    pub ts_sigma0: Option<f64>,
    #[arg(long, env = "SKILLDECOMP_TS_BETA")]
    pub ts_beta: Option<f64>,
    #[arg(long, env = "SKILLDECOMP_TS_TAU")]
    pub ts_tau: Option<f64>,
}

impl RatingArgs {
    pub fn apply(&self, mut p: TrueSkillParams) -> TrueSkillParams {
        p.mu0 = self.ts_mu0.unwrap_or(p.mu0);
        p.sigma0 = self.ts_sigma0.unwrap_or(p.sigma0);
        p.beta = self.ts_beta.unwrap_or(p.beta);
        p.tau = self.ts_tau.unwrap_or(p.tau);
        p
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// TOML file with any of the settings below.
    #[arg(long, env = "SKILLDECOMP_CONFIG")]
    pub config: Option<PathBuf>,
    /// Indexed dataset written by `ingest`.
    #[arg(long, env = "SKILLDECOMP_DATASET")]
    pub dataset: Option<PathBuf>,
    #[arg(long, env = "SKILLDECOMP_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, env = "SKILLDECOMP_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "SKILLDECOMP_FOLDS")]
    pub folds: Option<usize>,
    #[arg(long, env = "SKILLDECOMP_GRID_LOW")]
    pub grid_low: Option<f64>,
    #[arg(long, env = "SKILLDECOMP_GRID_HIGH")]
    pub grid_high: Option<f64>,
    #[arg(long, env = "SKILLDECOMP_GRID_POINTS")]
    pub grid_points: Option<usize>,
    /// Comma-separated, e.g. `LR-P,LR-C,LR-P-C,LR-P-C-PC,TrueSkill,BL-MC`.
    #[arg(long, env = "SKILLDECOMP_MODELS", value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long, value_enum, env = "SKILLDECOMP_SIGNIFICANCE")]
    pub significance: Option<ModeArg>,
    #[arg(long, value_enum, env = "SKILLDECOMP_CONJUNCTION")]
    pub conjunction: Option<ConjunctionArg>,
    /// Level of the paired t-test.
    #[arg(long, env = "SKILLDECOMP_ALPHA")]
    pub alpha: Option<f64>,
    /// Pick C by an inner search with this many folds.
    #[arg(long, env = "SKILLDECOMP_NESTED_INNER_FOLDS")]
    pub nested_inner_folds: Option<usize>,
    #[arg(long, env = "SKILLDECOMP_TRAIN_FRACTION")]
    pub train_fraction: Option<f64>,
    #[arg(long, env = "SKILLDECOMP_BOOTSTRAP")]
    pub bootstrap_resamples: Option<usize>,
    #[command(flatten)]
    pub rating: RatingArgs,
    /// Also write per-fold accuracies as CSV.
    #[arg(long)]
    pub fold_csv: bool,
    /// Refit each regression model on all matches at its best C and save it.
    #[arg(long)]
    pub save_models: bool,
}

/// Config-file layout; every key optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub grid: Option<GridSpec>,
    pub models: Option<Vec<String>>,
    pub significance: Option<SignificanceMode>,
    pub conjunction: Option<Conjunction>,
    pub alpha: Option<f64>,
    pub nested_inner_folds: Option<usize>,
    pub train_fraction: Option<f64>,
    pub bootstrap_resamples: Option<usize>,
    pub trueskill: Option<TrueSkillParams>,
    pub optimizer: Option<OptimizerConfig>,
    pub fold_csv: Option<bool>,
    pub save_models: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Resolved settings. Serialized into the report, so it holds nothing that
/// varies between otherwise identical runs (such as the output directory).
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveEvaluate {
    pub dataset: PathBuf,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(flatten)]
    pub comparison: ComparisonConfig,
    pub fold_csv: bool,
    pub save_models: bool,
}

fn parse_models(names: &[String]) -> anyhow::Result<Vec<ModelKind>> {
    names
        .iter()
        .map(|n| n.trim().parse::<ModelKind>().map_err(anyhow::Error::from))
        .collect()
}

impl EvaluateArgs {
    pub fn resolve(&self) -> anyhow::Result<EffectiveEvaluate> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let defaults = ComparisonConfig::default();
        let Some(seed) = self.seed.or(file.seed) else {
            bail!("a seed is required: pass --seed, set SKILLDECOMP_SEED or put `seed` in the config");
        };
        let Some(dataset) = self.dataset.clone().or(file.dataset) else {
            bail!("no dataset given: pass --dataset or put `dataset` in the config");
        };
        let Some(out_dir) = self.out_dir.clone().or(file.out_dir) else {
            bail!("no output directory given: pass --out-dir or put `out_dir` in the config");
        };
        let file_grid = file.grid.unwrap_or(defaults.grid);
        let grid = GridSpec {
            low: self.grid_low.unwrap_or(file_grid.low),
            high: self.grid_high.unwrap_or(file_grid.high),
            points: self.grid_points.unwrap_or(file_grid.points),
        };
        let models = match self.models.as_ref().or(file.models.as_ref()) {
            Some(names) => parse_models(names)?,
            None => defaults.models.clone(),
        };
        if models.is_empty() {
            bail!("no models selected");
        }
        let comparison = ComparisonConfig {
            folds: self.folds.or(file.folds).unwrap_or(defaults.folds),
            seed,
            grid,
            models,
            trueskill: self.rating.apply(file.trueskill.unwrap_or(defaults.trueskill)),
            train_fraction: self
                .train_fraction
                .or(file.train_fraction)
                .unwrap_or(defaults.train_fraction),
            bootstrap_resamples: self
                .bootstrap_resamples
                .or(file.bootstrap_resamples)
                .unwrap_or(defaults.bootstrap_resamples),
            significance: self
                .significance
                .map(Into::into)
                .or(file.significance)
                .unwrap_or(defaults.significance),
            conjunction: self
                .conjunction
                .map(Into::into)
                .or(file.conjunction)
                .unwrap_or(defaults.conjunction),
            alpha: self.alpha.or(file.alpha).unwrap_or(defaults.alpha),
            nested_inner_folds: self.nested_inner_folds.or(file.nested_inner_folds),
            optimizer: file.optimizer.unwrap_or(defaults.optimizer),
        };
        if comparison.folds < 2 {
            bail!("folds must be at least 2, got {}", comparison.folds);
        }
        grid.values()?;
        Ok(EffectiveEvaluate {
            dataset,
            out_dir,
            comparison,
            fold_csv: self.fold_csv || file.fold_csv.unwrap_or(false),
            save_models: self.save_models || file.save_models.unwrap_or(false),
        })
    }
}
