use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A simulated player: how it buzzes, and what has been observed of it.
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentProfile {
    /// Mean buzz position as a fraction of the question, μ ∈ (0, 1].
    pub mean_buzz: f64,
    /// Spread σ of the buzz fraction.
    pub spread: f64,
    /// Probability ρ that a buzz is correct.
    pub accuracy: f64,
    pub games_played: u32,
    pub errors: u32,
    pub buzz_fraction_sum: f64,
}

const PRIOR_BUZZ: f64 = 0.5;
const PRIOR_ERROR: f64 = 0.5;

impl OpponentProfile {
    pub fn new(mean_buzz: f64, spread: f64, accuracy: f64) -> Result<Self> {
        if !(mean_buzz > 0.0 && mean_buzz <= 1.0)
            || !(0.0..=1.0).contains(&accuracy)
            || spread < 0.0
        {
            return Err(Error::config(format!(
                "invalid opponent profile mu={mean_buzz} rho={accuracy} sigma={spread}"
            )));
        }
        Ok(Self {
            mean_buzz,
            spread,
            accuracy,
            games_played: 0,
            errors: 0,
            buzz_fraction_sum: 0.0,
        })
    }

    pub fn record(&mut self, buzz_fraction: f64, correct: bool) {
        self.games_played += 1;
        self.buzz_fraction_sum += buzz_fraction;
        if !correct {
            self.errors += 1;
        }
    }

    pub fn historical_mean_buzz(&self) -> f64 {
        if self.games_played == 0 {
            PRIOR_BUZZ
        } else {
            self.buzz_fraction_sum / self.games_played as f64
        }
    }

    pub fn historical_error_rate(&self) -> f64 {
        if self.games_played == 0 {
            PRIOR_ERROR
        } else {
            self.errors as f64 / self.games_played as f64
        }
    }
}

/// `[ln(1 + games)/10, mean buzz fraction, error rate]`.
pub fn opponent_features(profile: &OpponentProfile) -> [f64; 3] {
    [
        (1.0 + profile.games_played as f64).ln() / 10.0,
        profile.historical_mean_buzz(),
        profile.historical_error_rate(),
    ]
}

/// Quartile of the historical mean buzz fraction, 1 through 4; boundary
/// values belong to the lower class.
pub fn opponent_type(profile: &OpponentProfile) -> u8 {
    let f = profile.historical_mean_buzz();
    if f <= 0.25 {
        1
    } else if f <= 0.5 {
        2
    } else if f <= 0.75 {
        3
    } else {
        4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PopulationPreset {
    /// Only players of one buzz-position quartile, 1 through 4.
    Type(u8),
    /// All four quartiles, weighted 4.8 : 18 : 0.7 : 1.3.
    Mixed,
}

impl PopulationPreset {
    /// `(μ, ρ)` of quartile `ty`.
    pub fn bucket(ty: u8) -> (f64, f64) {
        match ty {
            1 => (0.15, 0.6),
            2 => (0.38, 0.8),
            3 => (0.62, 0.85),
            _ => (0.88, 0.9),
        }
    }

    fn weights(self) -> [f64; 4] {
        match self {
            PopulationPreset::Mixed => [4.8, 18.0, 0.7, 1.3],
            PopulationPreset::Type(t) => {
                let mut w = [0.0; 4];
                w[(t - 1) as usize] = 1.0;
                w
            }
        }
    }
}

impl fmt::Display for PopulationPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PopulationPreset::Mixed => f.write_str("mixed"),
            PopulationPreset::Type(t) => write!(f, "type{t}"),
        }
    }
}

impl FromStr for PopulationPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(PopulationPreset::Mixed),
            "type1" => Ok(PopulationPreset::Type(1)),
            "type2" => Ok(PopulationPreset::Type(2)),
            "type3" => Ok(PopulationPreset::Type(3)),
            "type4" => Ok(PopulationPreset::Type(4)),
            other => Err(Error::config(format!("unknown quiz population {other}"))),
        }
    }
}

/// Players to draw opponents from, with per-player sampling weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    players: Vec<OpponentProfile>,
    cumulative: Vec<f64>,
}

pub const PLAYERS_PER_TYPE: usize = 25;
const BUZZ_SPREAD: f64 = 0.05;
const MEAN_JITTER: f64 = 0.05;
const ACCURACY_JITTER: f64 = 0.05;
const MAX_WARMUP_GAMES: u32 = 30;

impl Population {
    pub fn new(players: Vec<OpponentProfile>, weights: Vec<f64>) -> Result<Self> {
        if players.is_empty() || players.len() != weights.len() {
            return Err(Error::config(
                "population needs one weight per player and at least one player",
            ));
        }
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config(
                "population weights must be non-negative with a positive sum",
            ));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            players,
            cumulative,
        })
    }

    /// Built-in population. Each quartile contributes [`PLAYERS_PER_TYPE`]
    /// players whose μ and ρ are jittered around the quartile preset and
    /// who arrive with 0 to 30 games of observed history.
    pub fn preset<R: Rng + ?Sized>(preset: PopulationPreset, rng: &mut R) -> Result<Self> {
        let weights = preset.weights();
        let mut players = Vec::new();
        let mut player_weights = Vec::new();
        for ty in 1..=4u8 {
            let w = weights[(ty - 1) as usize];
            if w == 0.0 {
                continue;
            }
            let (mu, rho) = PopulationPreset::bucket(ty);
            for _ in 0..PLAYERS_PER_TYPE {
                let mean = (mu + rng.random_range(-MEAN_JITTER..=MEAN_JITTER)).clamp(0.01, 1.0);
                let acc =
                    (rho + rng.random_range(-ACCURACY_JITTER..=ACCURACY_JITTER)).clamp(0.0, 1.0);
                let mut p = OpponentProfile::new(mean, BUZZ_SPREAD, acc)?;
                for _ in 0..rng.random_range(0..=MAX_WARMUP_GAMES) {
                    let z: f64 = rng.sample(StandardNormal);
                    let frac = (mean + BUZZ_SPREAD * z).clamp(0.01, 1.0);
                    let correct = rng.random_bool(acc);
                    p.record(frac, correct);
                }
                players.push(p);
                player_weights.push(w / PLAYERS_PER_TYPE as f64);
            }
        }
        Self::new(players, player_weights)
    }

    pub fn players(&self) -> &[OpponentProfile] {
        &self.players
    }

    pub fn player_mut(&mut self, i: usize) -> &mut OpponentProfile {
        &mut self.players[i]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let total = *self
            .cumulative
            .last()
            .ok_or_else(|| Error::usage("empty population"))?;
        let u = rng.random::<f64>() * total;
        Ok(self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.players.len() - 1))
    }
}
