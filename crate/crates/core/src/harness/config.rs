use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::agents::{AgentKind, AgentSpec, HeadKind, Multitask};
use crate::error::{Error, Result};
use crate::quiz::{PopulationPreset, QuizConfig};
use crate::rl::{EpsilonSchedule, QLearningConfig};
use crate::soccer::{ModePolicy, SoccerConfig};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "DRON_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Soccer(SoccerConfig),
    Quiz(QuizConfig),
}

impl Environment {
    pub fn name(&self) -> &'static str {
        match self {
            Environment::Soccer(_) => "soccer",
            Environment::Quiz(_) => "quizbowl",
        }
    }
}

/// Who the agent plays against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpponentSpec {
    Soccer(ModePolicy),
    Quiz(PopulationPreset),
}

impl OpponentSpec {
    /// Parses an opponent name in the context of an environment.
    pub fn parse_for(env: &Environment, s: &str) -> Result<Self> {
        match env {
            Environment::Soccer(_) => Ok(OpponentSpec::Soccer(s.parse()?)),
            Environment::Quiz(_) => Ok(OpponentSpec::Quiz(s.parse()?)),
        }
    }
}

impl fmt::Display for OpponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpponentSpec::Soccer(p) => p.fmt(f),
            OpponentSpec::Quiz(p) => p.fmt(f),
        }
    }
}

/// Training reward in the quiz game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuizReward {
    /// The game payoff.
    Game,
    /// Opponent-free shaped reward for buzzing exactly when the guess is right.
    SelfSupervised,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: Environment,
    pub agent: AgentSpec,
    pub q: QLearningConfig,
    pub schedule: EpsilonSchedule,
    pub replay_capacity: usize,
    /// Replay size before gradient updates begin.
    pub learn_start: usize,
    /// Environment steps per gradient update.
    pub update_every: usize,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub eval_games: usize,
    /// Seed of the evaluation games, shared by every run so results pair up.
    pub eval_seed: u64,
    pub seeds: Vec<u64>,
    pub opponent: OpponentSpec,
    pub quiz_reward: QuizReward,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for one environment: γ 0.9, AdaGrad 0.0005, batch 64,
    /// ε 0.3 → 0.1 over 500k steps, 50 epochs of 10k steps, mixed opponents.
    pub fn defaults(env: Environment, kind: AgentKind) -> Self {
        let (agent, opponent) = match &env {
            Environment::Soccer(_) => (
                AgentSpec::soccer(kind),
                OpponentSpec::Soccer(ModePolicy::Mixed),
            ),
            Environment::Quiz(q) => (
                AgentSpec::quiz(kind, q.vocab),
                OpponentSpec::Quiz(PopulationPreset::Mixed),
            ),
        };
        Self {
            env,
            agent,
            q: QLearningConfig::default(),
            schedule: EpsilonSchedule::default(),
            replay_capacity: 100_000,
            learn_start: 1_000,
            update_every: 1,
            epochs: 50,
            steps_per_epoch: 10_000,
            eval_games: 1_000,
            eval_seed: 20_160_101,
            seeds: vec![1],
            opponent,
            quiz_reward: QuizReward::Game,
            output_dir: PathBuf::from("runs"),
        }
    }

    pub fn soccer(kind: AgentKind) -> Self {
        Self::defaults(Environment::Soccer(SoccerConfig::default()), kind)
    }

    pub fn quiz(kind: AgentKind) -> Self {
        Self::defaults(Environment::Quiz(QuizConfig::default()), kind)
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        self.q.validate()?;
        self.schedule.validate()?;
        if let Environment::Quiz(q) = &self.env {
            q.validate()?;
            if self.agent.state_dim != q.state_features() {
                return Err(Error::config(
                    "agent state_dim does not match the quiz vocabulary",
                ));
            }
        }
        match (&self.env, self.opponent) {
            (Environment::Soccer(_), OpponentSpec::Soccer(_))
            | (Environment::Quiz(_), OpponentSpec::Quiz(_)) => {}
            _ => return Err(Error::config("opponent does not belong to the environment")),
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.replay_capacity == 0 || self.update_every == 0 {
            return Err(Error::config(
                "replay_capacity and update_every must be positive",
            ));
        }
        if self.epochs == 0 || self.eval_games == 0 {
            return Err(Error::config("epochs and eval_games must be positive"));
        }
        Ok(())
    }

    /// Applies [`OUTPUT_DIR_ENV`] if it is set.
    pub fn apply_env_overrides(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    pub fn with_experts(mut self, k: usize) -> Self {
        self.agent.experts = k;
        self
    }
}

/// Supervision head implied by the environment and the multitask mode.
pub fn supervision_head(env: &Environment, multitask: Multitask) -> Option<HeadKind> {
    match (env, multitask) {
        (_, Multitask::None) => None,
        (Environment::Soccer(_), Multitask::Action) => Some(HeadKind::Classes(5)),
        (Environment::Soccer(_), Multitask::Type) => Some(HeadKind::Classes(2)),
        (Environment::Quiz(_), Multitask::Action) => Some(HeadKind::Scalar),
        (Environment::Quiz(_), Multitask::Type) => Some(HeadKind::Classes(4)),
    }
}

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(line, format!("malformed value {raw:?} for {key}")))
}

fn list<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<Vec<T>> {
    raw.split(',').map(|s| value(key, s.trim(), line)).collect()
}

fn flag(key: &str, raw: &str, line: usize) -> Result<bool> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::parse(
            line,
            format!("malformed value {raw:?} for {key}"),
        )),
    }
}

/// Parses flat `key=value` text; `#` starts a comment. Omitted keys keep
/// their defaults.
///
/// `env` and `agent` are read first regardless of position, since the
/// remaining defaults depend on them.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key=value, got {content:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if pairs
            .iter()
            .any(|(_, key, _): &(usize, &str, &str)| *key == k)
        {
            return Err(Error::parse(line, format!("duplicate key {k}")));
        }
        pairs.push((line, k, v));
    }
    let lookup = |key: &str| {
        pairs
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|&(l, _, v)| (l, v))
    };

    let env = match lookup("env") {
        None | Some((_, "soccer")) => Environment::Soccer(SoccerConfig::default()),
        Some((_, "quizbowl")) | Some((_, "quiz")) => Environment::Quiz(QuizConfig::default()),
        Some((line, other)) => return Err(Error::parse(line, format!("unknown env {other:?}"))),
    };
    let kind = match lookup("agent") {
        None => AgentKind::DronMoe,
        Some((line, v)) => v
            .parse()
            .map_err(|_| Error::parse(line, format!("unknown agent {v:?}")))?,
    };
    let mut cfg = ExperimentConfig::defaults(env, kind);
    let mut multitask = Multitask::None;
    let mut opponent_raw = None;

    for &(line, key, raw) in &pairs {
        match key {
            "env" | "agent" => {}
            "experts" => cfg.agent.experts = value(key, raw, line)?,
            "multitask" => {
                multitask = raw
                    .parse()
                    .map_err(|_| Error::parse(line, format!("unknown multitask {raw:?}")))?
            }
            "lambda" => cfg.agent.lambda = value(key, raw, line)?,
            "state_hidden" => cfg.agent.state_hidden = list(key, raw, line)?,
            "opponent_hidden" => cfg.agent.opponent_hidden = value(key, raw, line)?,
            "head_hidden" => cfg.agent.head_hidden = value(key, raw, line)?,
            "gamma" => {
                let g: f64 = value(key, raw, line)?;
                if !(0.0..=1.0).contains(&g) {
                    return Err(Error::parse(line, format!("gamma={g} outside [0, 1]")));
                }
                cfg.q.gamma = g;
            }
            "learning_rate" | "lr" => cfg.q.learning_rate = value(key, raw, line)?,
            "batch_size" => cfg.q.batch_size = value(key, raw, line)?,
            "target_sync" => cfg.q.target_sync = value(key, raw, line)?,
            "clip_gradients" => cfg.q.clip_gradients = flag(key, raw, line)?,
            "epsilon_start" => cfg.schedule.start = value(key, raw, line)?,
            "epsilon_end" => cfg.schedule.end = value(key, raw, line)?,
            "epsilon_decay_steps" => cfg.schedule.decay_steps = value(key, raw, line)?,
            "replay_capacity" => cfg.replay_capacity = value(key, raw, line)?,
            "learn_start" => cfg.learn_start = value(key, raw, line)?,
            "update_every" => cfg.update_every = value(key, raw, line)?,
            "epochs" => cfg.epochs = value(key, raw, line)?,
            "steps_per_epoch" => cfg.steps_per_epoch = value(key, raw, line)?,
            "eval_games" => cfg.eval_games = value(key, raw, line)?,
            "eval_seed" => cfg.eval_seed = value(key, raw, line)?,
            "seeds" => cfg.seeds = list(key, raw, line)?,
            "opponent" => opponent_raw = Some((line, raw)),
            "reward" => {
                cfg.quiz_reward = match raw {
                    "game" => QuizReward::Game,
                    "self" => QuizReward::SelfSupervised,
                    _ => return Err(Error::parse(line, format!("unknown reward {raw:?}"))),
                }
            }
            "output_dir" => cfg.output_dir = PathBuf::from(raw),
            "vocab"
            | "min_length"
            | "max_length"
            | "belief_scale"
            | "belief_exponent"
            | "belief_noise"
            | "correct_reward"
            | "wrong_reward"
            | "opponent_correct_reward" => {
                let Environment::Quiz(q) = &mut cfg.env else {
                    return Err(Error::parse(
                        line,
                        format!("{key} only applies to env=quizbowl"),
                    ));
                };
                match key {
                    "vocab" => q.vocab = value(key, raw, line)?,
                    "min_length" => q.min_length = value(key, raw, line)?,
                    "max_length" => q.max_length = value(key, raw, line)?,
                    "belief_scale" => q.belief_scale = value(key, raw, line)?,
                    "belief_exponent" => q.belief_exponent = value(key, raw, line)?,
                    "belief_noise" => q.belief_noise = value(key, raw, line)?,
                    "correct_reward" => q.correct_reward = value(key, raw, line)?,
                    "wrong_reward" => q.wrong_reward = value(key, raw, line)?,
                    _ => q.opponent_correct_reward = value(key, raw, line)?,
                }
            }
            "horizon" => {
                let Environment::Soccer(s) = &mut cfg.env else {
                    return Err(Error::parse(line, "horizon only applies to env=soccer"));
                };
                s.horizon = value(key, raw, line)?;
            }
            other => return Err(Error::parse(line, format!("unknown key {other:?}"))),
        }
    }

    if let Environment::Quiz(q) = &cfg.env {
        cfg.agent.state_dim = q.state_features();
    }
    if let Some((line, raw)) = opponent_raw {
        cfg.opponent = OpponentSpec::parse_for(&cfg.env, raw)
            .map_err(|e| Error::parse(line, e.to_string()))?;
    }
    cfg.agent.multitask = multitask;
    cfg.agent.supervision = supervision_head(&cfg.env, multitask);
    cfg.validate()?;
    Ok(cfg)
}
