//! Match generator with known skill components.
//!
//! A match's red skill sum is `Σ player_base + champion_base + specific` over
//! its red picks; red wins with probability `σ(scale · (S_red - S_blue))`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{MatchRecord, Outcome, Participation, PlayerRef, DEFAULT_TEAM_SIZE};
use crate::logreg::sigmoid;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error(
        "a match needs {needed} distinct players and champions but the world has {players} players \
         and {champions} champions; raise N and M or lower team_size"
    )]
    PopulationTooSmall {
        needed: usize,
        players: usize,
        champions: usize,
    },
    #[error("invalid generator setting: {0}")]
    InvalidConfig(String),
}

/// Shape and spreads of a generated world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    #[serde(rename = "N")]
    pub players: usize,
    #[serde(rename = "M")]
    pub champions: usize,
    pub team_size: usize,
    pub s_p: f64,
    pub s_c: f64,
    pub s_pc: f64,
    pub scale: f64,
}

impl WorldConfig {
    pub fn new(players: usize, champions: usize, s_p: f64, s_c: f64, s_pc: f64) -> Self {
        Self {
            players,
            champions,
            team_size: DEFAULT_TEAM_SIZE,
            s_p,
            s_c,
            s_pc,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "N")]
    pub players: usize,
    #[serde(rename = "M")]
    pub champions: usize,
    pub team_size: usize,
    /// Indexed like the generated names `p{j}`.
    pub player_base: Vec<f64>,
    /// Indexed like the generated names `c{i}`.
    pub champion_base: Vec<f64>,
    /// `specific[j][i]` for player `j` on champion `i`.
    pub specific: Vec<Vec<f64>>,
    pub scale: f64,
}

fn draw(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Result<Vec<f64>, SynthError> {
    if spread == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let normal = Normal::new(0.0, spread)
        .map_err(|_| SynthError::InvalidConfig(format!("spread {spread}")))?;
    Ok((0..n).map(|_| normal.sample(rng)).collect())
}

/// Draws i.i.d. normal skills; a zero spread gives exact zeros.
pub fn sample_ground_truth(config: &WorldConfig, seed: u64) -> Result<GroundTruth, SynthError> {
    for (name, s) in [("s_p", config.s_p), ("s_c", config.s_c), ("s_pc", config.s_pc)] {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(SynthError::InvalidConfig(format!("{name} = {s}")));
        }
    }
    if !(config.scale > 0.0 && config.scale.is_finite()) {
        return Err(SynthError::InvalidConfig(format!("scale = {}", config.scale)));
    }
    if config.team_size == 0 {
        return Err(SynthError::InvalidConfig("team_size = 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let player_base = draw(&mut rng, config.players, config.s_p)?;
    let champion_base = draw(&mut rng, config.champions, config.s_c)?;
    let specific = (0..config.players)
        .map(|_| draw(&mut rng, config.champions, config.s_pc))
        .collect::<Result<_, _>>()?;
    Ok(GroundTruth {
        players: config.players,
        champions: config.champions,
        team_size: config.team_size,
        player_base,
        champion_base,
        specific,
        scale: config.scale,
    })
}

/// Player and champion indices for red then blue.
struct Matchup {
    players: Vec<usize>,
    champions: Vec<usize>,
}

impl GroundTruth {
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn skill(&self, player: usize, champion: usize) -> f64 {
        self.player_base[player] + self.champion_base[champion] + self.specific[player][champion]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn check_population(&self) -> Result<(), SynthError> {
        let needed = 2 * self.team_size;
        if needed > self.players || needed > self.champions {
            return Err(SynthError::PopulationTooSmall {
                needed,
                players: self.players,
                champions: self.champions,
            });
        }
        Ok(())
    }

    fn matchup(&self, rng: &mut ChaCha8Rng) -> Matchup {
        let needed = 2 * self.team_size;
        Matchup {
            players: sample(rng, self.players, needed).into_vec(),
            champions: sample(rng, self.champions, needed).into_vec(),
        }
    }

    /// `S_red - S_blue` before scaling.
    fn skill_gap(&self, m: &Matchup) -> f64 {
        let k = self.team_size;
        let sum = |range: std::ops::Range<usize>| -> f64 {
            range.map(|s| self.skill(m.players[s], m.champions[s])).sum()
        };
        sum(0..k) - sum(k..2 * k)
    }

    /// Monte Carlo draws of the unscaled skill gap.
    fn gaps(&self, z: usize, seed: u64) -> Result<Vec<f64>, SynthError> {
        self.check_population()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..z).map(|_| self.skill_gap(&self.matchup(&mut rng))).collect())
    }
}

pub fn player_name(j: usize) -> String {
    format!("p{j}")
}

pub fn champion_name(i: usize) -> String {
    format!("c{i}")
}

/// Samples `z` matches with timestamps `1..=z`.
pub fn generate_matches(
    truth: &GroundTruth,
    z: usize,
    seed: u64,
) -> Result<Vec<MatchRecord>, SynthError> {
    truth.check_population()?;
    let width = z.to_string().len();
    let k = truth.team_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(z);
    for n in 0..z {
        let m = truth.matchup(&mut rng);
        let p_red = sigmoid(truth.scale * truth.skill_gap(&m));
        let red_won = rng.random::<f64>() < p_red;
        let side = |range: std::ops::Range<usize>| -> Vec<Participation> {
            range
                .map(|s| {
                    Participation::new(
                        PlayerRef::Named(player_name(m.players[s])),
                        champion_name(m.champions[s]),
                    )
                })
                .collect()
        };
        out.push(MatchRecord {
            match_id: format!("m{:0width$}", n + 1),
            timestamp: Some(n as i64 + 1),
            red: side(0..k),
            blue: side(k..2 * k),
            outcome: if red_won { Outcome::RedWin } else { Outcome::BlueWin },
        });
    }
    Ok(out)
}

fn mean_bayes(gaps: &[f64], scale: f64) -> f64 {
    gaps.iter().map(|d| sigmoid(scale * d.abs())).sum::<f64>() / gaps.len() as f64
}

/// Monte Carlo estimate of `E[max(p, 1 - p)]` over `z_mc` random matchups.
pub fn bayes_accuracy(truth: &GroundTruth, z_mc: usize, seed: u64) -> Result<f64, SynthError> {
    if z_mc == 0 {
        return Err(SynthError::InvalidConfig("z_mc = 0".into()));
    }
    Ok(mean_bayes(&truth.gaps(z_mc, seed)?, truth.scale))
}

/// Scale at which [`bayes_accuracy`] with the same `z_mc` and `seed` hits `target`.
///
/// The matchups are drawn once and reused at every trial scale, so the estimate
/// is monotone in the scale and bisection is exact up to `1e-10` relative.
pub fn calibrate_scale(
    truth: &GroundTruth,
    target: f64,
    z_mc: usize,
    seed: u64,
) -> Result<f64, SynthError> {
    if !(target > 0.5 && target < 1.0) {
        return Err(SynthError::InvalidConfig(format!("target accuracy {target}")));
    }
    if z_mc == 0 {
        return Err(SynthError::InvalidConfig("z_mc = 0".into()));
    }
    let gaps = truth.gaps(z_mc, seed)?;
    let ceiling = 0.5 + 0.5 * gaps.iter().filter(|d| **d != 0.0).count() as f64 / gaps.len() as f64;
    if target >= ceiling {
        return Err(SynthError::InvalidConfig(format!(
            "target {target} unreachable; at most {ceiling} with these skills"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean_bayes(&gaps, hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if mean_bayes(&gaps, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
