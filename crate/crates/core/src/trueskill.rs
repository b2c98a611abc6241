//! Two-team, no-draw TrueSkill ratings and the chronological hold-out protocol.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use libm::erfc;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{chronological_split, DatasetError, IndexedDataset, Outcome, Pick};

#[derive(Debug, Error, PartialEq)]
pub enum TrueSkillError {
    #[error("team has no players")]
    EmptyTeam,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("update produced a non-finite or non-positive rating")]
    NonFinite,
    #[error(transparent)]
    Dataset(#[from] DatasetErrorMessage),
}

/// `DatasetError` holds an io error and so is not `PartialEq`; keep its message.
#[derive(Debug, Error, PartialEq)]
#[error("{0}")]
pub struct DatasetErrorMessage(pub String);

impl From<DatasetError> for TrueSkillError {
    fn from(e: DatasetError) -> Self {
        Self::Dataset(DatasetErrorMessage(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueSkillParams {
    pub mu0: f64,
    pub sigma0: f64,
    pub beta: f64,
    pub tau: f64,
}

impl Default for TrueSkillParams {
    fn default() -> Self {
        Self {
            mu0: 25.0,
            sigma0: 25.0 / 3.0,
            beta: 25.0 / 6.0,
            tau: 25.0 / 300.0,
        }
    }
}

impl TrueSkillParams {
    pub fn validate(&self) -> Result<(), TrueSkillError> {
        let ok = self.mu0.is_finite()
            && self.sigma0.is_finite()
            && self.sigma0 > 0.0
            && self.beta.is_finite()
            && self.beta > 0.0
            && self.tau.is_finite()
            && self.tau >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(TrueSkillError::InvalidParams(format!("{self:?}")))
        }
    }

    pub fn prior(&self) -> Rating {
        Rating {
            mu: self.mu0,
            sigma: self.sigma0,
        }
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `φ(t)/Φ(t)`, switching to the asymptotic Mills-ratio series where `Φ` underflows.
fn v_win(t: f64) -> f64 {
    if t < -35.0 {
        let x = -t;
        let x2 = x * x;
        // Φ(-x)/φ(x) ~ (1/x)(1 - 1/x² + 3/x⁴ - 15/x⁶ + 105/x⁸ - 945/x¹⁰)
        let r = (1.0 - 1.0 / x2 + 3.0 / x2.powi(2) - 15.0 / x2.powi(3) + 105.0 / x2.powi(4)
            - 945.0 / x2.powi(5))
            / x;
        1.0 / r
    } else {
        normal_pdf(t) / normal_cdf(t)
    }
}

fn w_win(t: f64, v: f64) -> f64 {
    v * (v + t)
}

fn check_teams(red: &[Rating], blue: &[Rating]) -> Result<(), TrueSkillError> {
    if red.is_empty() || blue.is_empty() {
        return Err(TrueSkillError::EmptyTeam);
    }
    if red.iter().chain(blue).any(|r| !r.mu.is_finite() || !r.sigma.is_finite() || r.sigma <= 0.0) {
        return Err(TrueSkillError::NonFinite);
    }
    Ok(())
}

/// Posterior ratings after one match.
pub fn update(
    red: &[Rating],
    blue: &[Rating],
    outcome: Outcome,
    params: &TrueSkillParams,
) -> Result<(Vec<Rating>, Vec<Rating>), TrueSkillError> {
    params.validate()?;
    check_teams(red, blue)?;
    let tau2 = params.tau * params.tau;
    let (winners, losers) = match outcome {
        Outcome::RedWin => (red, blue),
        Outcome::BlueWin => (blue, red),
    };
    let var = |r: &Rating| r.sigma * r.sigma + tau2;
    let n = (red.len() + blue.len()) as f64;
    let c2: f64 = winners.iter().chain(losers).map(var).sum::<f64>() + n * params.beta * params.beta;
    let c = c2.sqrt();
    let delta: f64 =
        winners.iter().map(|r| r.mu).sum::<f64>() - losers.iter().map(|r| r.mu).sum::<f64>();
    let t = delta / c;
    let v = v_win(t);
    let w = w_win(t, v);

    let step = |r: &Rating, sign: f64| -> Result<Rating, TrueSkillError> {
        let s2 = var(r);
        let mu = r.mu + sign * (s2 / c) * v;
        let sigma2 = s2 * (1.0 - (s2 / c2) * w);
        if !mu.is_finite() || !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(TrueSkillError::NonFinite);
        }
        Ok(Rating {
            mu,
            sigma: sigma2.sqrt(),
        })
    };
    let won: Vec<Rating> = winners.iter().map(|r| step(r, 1.0)).collect::<Result<_, _>>()?;
    let lost: Vec<Rating> = losers.iter().map(|r| step(r, -1.0)).collect::<Result<_, _>>()?;
    Ok(match outcome {
        Outcome::RedWin => (won, lost),
        Outcome::BlueWin => (lost, won),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueSkillPrediction {
    pub prob_red: f64,
    pub red: bool,
}

/// Win probability for red; no dynamics inflation at prediction time.
pub fn predict(
    red: &[Rating],
    blue: &[Rating],
    params: &TrueSkillParams,
) -> Result<TrueSkillPrediction, TrueSkillError> {
    check_teams(red, blue)?;
    let n = (red.len() + blue.len()) as f64;
    let c2: f64 =
        red.iter().chain(blue).map(|r| r.sigma * r.sigma).sum::<f64>() + n * params.beta * params.beta;
    let delta: f64 = red.iter().map(|r| r.mu).sum::<f64>() - blue.iter().map(|r| r.mu).sum::<f64>();
    Ok(TrueSkillPrediction {
        prob_red: normal_cdf(delta / c2.sqrt()),
        red: delta >= 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRating {
    pub player: String,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSkillReport {
    pub train_matches: usize,
    pub test_matches: usize,
    pub accuracy: f64,
    /// Whether each test match, in chronological order, was called correctly.
    pub correct: Vec<bool>,
    /// Final ratings, highest mean first.
    pub ratings: Vec<PlayerRating>,
}

impl TrueSkillReport {
    /// Standard deviation of test accuracy over `resamples` bootstrap draws of the test matches.
    pub fn bootstrap_std(&self, resamples: usize, seed: u64) -> f64 {
        let n = self.correct.len();
        if n == 0 || resamples < 2 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let accs: Vec<f64> = (0..resamples)
            .map(|_| {
                let hits = (0..n).filter(|_| self.correct[rng.random_range(0..n)]).count();
                hits as f64 / n as f64
            })
            .collect();
        crate::stats::sample_std(&accs)
    }
}

fn gather(ratings: &[Rating], picks: &[Pick]) -> Vec<Rating> {
    picks.iter().map(|p| ratings[p.player]).collect()
}

/// Rates players over the earliest `train_fraction` of matches, then predicts the rest
/// with frozen ratings.
pub fn evaluate_chronological(
    dataset: &IndexedDataset,
    params: &TrueSkillParams,
    train_fraction: f64,
) -> Result<TrueSkillReport, TrueSkillError> {
    params.validate()?;
    let (train, test) = chronological_split(dataset, train_fraction)?;
    let mut ratings = vec![params.prior(); dataset.num_players()];
    for m in train.iter() {
        let (red, blue) = update(&gather(&ratings, &m.red), &gather(&ratings, &m.blue), m.outcome, params)?;
        for (p, r) in m.red.iter().zip(red).chain(m.blue.iter().zip(blue)) {
            ratings[p.player] = r;
        }
    }
    let correct: Vec<bool> = test
        .iter()
        .map(|m| {
            predict(&gather(&ratings, &m.red), &gather(&ratings, &m.blue), params)
                .map(|p| p.red == m.red_won())
        })
        .collect::<Result<_, _>>()?;
    let hits = correct.iter().filter(|&&c| c).count();
    let accuracy = if correct.is_empty() {
        0.0
    } else {
        hits as f64 / correct.len() as f64
    };
    let mut table: Vec<PlayerRating> = dataset
        .player_names()
        .iter()
        .zip(&ratings)
        .map(|(name, r)| PlayerRating {
            player: name.clone(),
            mu: r.mu,
            sigma: r.sigma,
        })
        .collect();
    table.sort_by(|a, b| b.mu.total_cmp(&a.mu).then_with(|| a.player.cmp(&b.player)));
    Ok(TrueSkillReport {
        train_matches: train.len(),
        test_matches: test.len(),
        accuracy,
        correct,
        ratings: table,
    })
}
