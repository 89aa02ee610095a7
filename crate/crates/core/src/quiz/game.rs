use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quiz::Population;

#[derive(Debug, Clone, PartialEq)]
pub struct QuizConfig {
    /// Answer vocabulary size V.
    pub vocab: usize,
    pub min_length: usize,
    pub max_length: usize,
    /// Peak logit advantage α of the true answer at the end of the question.
    pub belief_scale: f64,
    /// Sharpening exponent κ: the advantage is `α·(t/L)^κ`.
    pub belief_exponent: f64,
    /// Standard deviation of the per-word logit noise.
    pub belief_noise: f64,
    pub correct_reward: f64,
    pub wrong_reward: f64,
    /// Agent payoff when the opponent answers correctly.
    pub opponent_correct_reward: f64,
}

impl Default for QuizConfig {
    fn default() -> Self {
        Self {
            vocab: 50,
            min_length: 60,
            max_length: 120,
            belief_scale: 5.0,
            belief_exponent: 0.7,
            belief_noise: 1.0,
            correct_reward: 10.0,
            wrong_reward: -5.0,
            opponent_correct_reward: -10.0,
        }
    }
}

impl QuizConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab < 2 {
            return Err(Error::config("quiz vocabulary needs at least two answers"));
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return Err(Error::config(
                "question length range must satisfy 1 <= min <= max",
            ));
        }
        if !(self.belief_noise >= 0.0
            && self.belief_scale.is_finite()
            && self.belief_exponent > 0.0)
        {
            return Err(Error::config("belief generator parameters out of range"));
        }
        Ok(())
    }

    pub fn state_features(&self) -> usize {
        2 * self.vocab + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuizAction {
    Buzz,
    Wait,
}

impl QuizAction {
    pub fn index(self) -> usize {
        match self {
            QuizAction::Buzz => 0,
            QuizAction::Wait => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(QuizAction::Buzz),
            1 => Ok(QuizAction::Wait),
            _ => Err(Error::usage(format!("quiz action {i} out of range"))),
        }
    }
}

/// Full game state. `opponent_buzz` and `opponent_correct` are hidden from
/// the agent's features.
#[derive(Debug, Clone, PartialEq)]
pub struct QuizState {
    /// Words revealed so far.
    pub t: usize,
    pub length: usize,
    pub answer: usize,
    /// Log probabilities over answers at word `t`.
    pub belief: Vec<f64>,
    pub previous_belief: Vec<f64>,
    pub agent_locked: bool,
    pub opponent_locked: bool,
    /// Someone has buzzed wrong this question.
    pub wrong_buzz_seen: bool,
    pub opponent_buzz: usize,
    pub opponent_correct: bool,
    pub done: bool,
}

impl QuizState {
    pub fn guess(&self) -> usize {
        crate::rl::argmax(&self.belief)
    }

    pub fn guess_is_correct(&self) -> bool {
        self.guess() == self.answer
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Buzzer {
    Agent,
    Opponent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuzzOutcome {
    pub who: Buzzer,
    pub correct: bool,
    pub step: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuizStep {
    pub reward: f64,
    pub done: bool,
    /// Buzzes resolved this step, agent first.
    pub buzzes: Vec<BuzzOutcome>,
}

fn log_softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    logits.iter_mut().for_each(|x| *x -= lse);
}

fn draw_belief<R: Rng + ?Sized>(
    config: &QuizConfig,
    t: usize,
    length: usize,
    answer: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut logits: Vec<f64> = (0..config.vocab)
        .map(|_| config.belief_noise * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let progress = t as f64 / length as f64;
    logits[answer] += config.belief_scale * progress.powf(config.belief_exponent);
    log_softmax(&mut logits);
    logits
}

/// New question against an opponent drawn from `population`; returns the
/// state and the drawn player's index.
pub fn sample_episode<R: Rng + ?Sized>(
    config: &QuizConfig,
    population: &Population,
    rng: &mut R,
) -> Result<(QuizState, usize)> {
    let length = rng.random_range(config.min_length..=config.max_length);
    let answer = rng.random_range(0..config.vocab);
    let player = population.sample(rng)?;
    let profile = &population.players()[player];
    let z: f64 = rng.sample(StandardNormal);
    let raw = (length as f64 * (profile.mean_buzz + profile.spread * z)).round();
    let opponent_buzz = raw.clamp(1.0, length as f64) as usize;
    let opponent_correct = rng.random_bool(profile.accuracy);
    let belief = draw_belief(config, 0, length, answer, rng);
    let uniform = -(config.vocab as f64).ln();
    Ok((
        QuizState {
            t: 0,
            length,
            answer,
            belief,
            previous_belief: vec![uniform; config.vocab],
            agent_locked: false,
            opponent_locked: false,
            wrong_buzz_seen: false,
            opponent_buzz,
            opponent_correct,
            done: false,
        },
        player,
    ))
}

/// Reveals the next word and redraws the belief vector.
pub fn advance_belief<R: Rng + ?Sized>(
    state: &mut QuizState,
    config: &QuizConfig,
    rng: &mut R,
) -> Result<()> {
    if state.done || state.t >= state.length {
        return Err(Error::usage("no words left to reveal"));
    }
    state.t += 1;
    let next = draw_belief(config, state.t, state.length, state.answer, rng);
    state.previous_belief = std::mem::replace(&mut state.belief, next);
    Ok(())
}

/// One decision point. The agent's buzz is resolved first, then the
/// opponent's if this is its buzz position; otherwise the next word is
/// revealed. The question ends on a correct answer or after word `L`.
pub fn step<R: Rng + ?Sized>(
    state: &mut QuizState,
    action: QuizAction,
    config: &QuizConfig,
    rng: &mut R,
) -> Result<QuizStep> {
    if state.done {
        return Err(Error::usage("step on a finished question"));
    }
    let mut out = QuizStep {
        reward: 0.0,
        done: false,
        buzzes: Vec::new(),
    };
    if action == QuizAction::Buzz && !state.agent_locked {
        let correct = state.guess_is_correct();
        let reward = if correct {
            config.correct_reward
        } else {
            config.wrong_reward
        };
        out.reward += reward;
        out.buzzes.push(BuzzOutcome {
            who: Buzzer::Agent,
            correct,
            step: state.t,
            reward,
        });
        if correct {
            state.done = true;
            out.done = true;
            return Ok(out);
        }
        state.agent_locked = true;
        state.wrong_buzz_seen = true;
    }
    if !state.opponent_locked && state.t == state.opponent_buzz {
        let correct = state.opponent_correct;
        let reward = if correct {
            config.opponent_correct_reward
        } else {
            0.0
        };
        out.reward += reward;
        out.buzzes.push(BuzzOutcome {
            who: Buzzer::Opponent,
            correct,
            step: state.t,
            reward,
        });
        if correct {
            state.done = true;
            out.done = true;
            return Ok(out);
        }
        state.opponent_locked = true;
        state.wrong_buzz_seen = true;
    }
    if state.t >= state.length {
        state.done = true;
        out.done = true;
    } else {
        advance_belief(state, config, rng)?;
    }
    Ok(out)
}

/// `[belief; previous belief; t/L; wrong buzz seen]`, length `2V + 2`.
pub fn featurize(state: &QuizState) -> Vec<f64> {
    let mut f = Vec::with_capacity(2 * state.belief.len() + 2);
    f.extend_from_slice(&state.belief);
    f.extend_from_slice(&state.previous_belief);
    f.push(state.t as f64 / state.length as f64);
    f.push(if state.wrong_buzz_seen { 1.0 } else { 0.0 });
    f
}

/// How far the opponent is toward its buzz: `min(1, t / buzz_position)`.
pub fn action_supervision_target(t: usize, buzz_position: usize) -> Result<f64> {
    if buzz_position == 0 {
        return Err(Error::usage("buzz position must be at least 1"));
    }
    Ok((t as f64 / buzz_position as f64).min(1.0))
}

/// Opponent-free training reward: buzz when the guess is right, wait when
/// it is wrong.
pub fn dqnself_reward(buzz: bool, prediction_correct: bool) -> f64 {
    match (buzz, prediction_correct) {
        (true, true) => 10.0,
        (false, true) => -10.0,
        (true, false) => -15.0,
        (false, false) => 15.0,
    }
}
