use rand_chacha::ChaCha8Rng;

use crate::agents::Multitask;
use crate::error::Result;
use crate::quiz::{
    self, action_supervision_target, dqnself_reward, opponent_features, opponent_type,
    score_episode, EpisodeTrace, Population, QuizAction, QuizConfig, QuizState, TraceStep,
};
use crate::rl::Supervision;
use crate::soccer::{
    self, classify_move, featurize_state, rule_agent_act, sample_mode, Action, Mode, ModePolicy,
    OpponentStats, Player, SoccerConfig, SoccerState,
};

use super::config::QuizReward;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub state: Vec<f64>,
    pub opponent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    /// Reward used for learning.
    pub reward: f64,
    pub done: bool,
    /// Label for the opponent head, taken before the step.
    pub supervision: Option<Supervision<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

/// Scored result of a finished episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    /// Game payoff to the agent.
    pub reward: f64,
    pub outcome: Option<Outcome>,
    pub rush: Option<bool>,
    pub miss: Option<bool>,
}

/// An episodic two-player environment seen from the learning agent's side.
/// The opponent and the environment draw from the game's own generator.
pub trait Game {
    fn reseed(&mut self, rng: ChaCha8Rng);
    fn reset(&mut self) -> Result<()>;
    fn observe(&self) -> Observation;
    fn act(&mut self, action: usize) -> Result<Feedback>;
    fn is_done(&self) -> bool;
    fn result(&self) -> Result<EpisodeResult>;
}

/// The agent plays A against the rule-based B.
#[derive(Debug, Clone)]
pub struct SoccerGame {
    config: SoccerConfig,
    policy: ModePolicy,
    multitask: Multitask,
    rng: ChaCha8Rng,
    state: SoccerState,
    mode: Mode,
    stats: OpponentStats,
    payoff: f64,
}

impl SoccerGame {
    pub fn new(
        config: SoccerConfig,
        policy: ModePolicy,
        multitask: Multitask,
        mut rng: ChaCha8Rng,
    ) -> Self {
        let state = soccer::reset(&config, &mut rng);
        let mode = sample_mode(policy, &mut rng);
        Self {
            config,
            policy,
            multitask,
            rng,
            state,
            mode,
            stats: OpponentStats::new(),
            payoff: 0.0,
        }
    }

    pub fn state(&self) -> &SoccerState {
        &self.state
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn config(&self) -> &SoccerConfig {
        &self.config
    }
}

impl Game for SoccerGame {
    fn reseed(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
    }

    fn reset(&mut self) -> Result<()> {
        self.state = soccer::reset(&self.config, &mut self.rng);
        self.mode = sample_mode(self.policy, &mut self.rng);
        self.stats = OpponentStats::new();
        self.payoff = 0.0;
        Ok(())
    }

    fn observe(&self) -> Observation {
        Observation {
            state: featurize_state(&self.state, &self.config, Player::A).to_vec(),
            opponent: self.stats.features().to_vec(),
        }
    }

    fn act(&mut self, action: usize) -> Result<Feedback> {
        let mine = Action::from_index(action)?;
        let theirs = rule_agent_act(
            &self.state,
            Player::B,
            self.mode,
            &mut self.rng,
            &self.config,
        );
        let category = classify_move(&self.state, Player::B, theirs, &self.config);
        let supervision = match self.multitask {
            Multitask::None => None,
            Multitask::Action => Some(Supervision::Class(category.index())),
            Multitask::Type => Some(Supervision::Class(self.mode.index())),
        };
        let out = soccer::step(&self.config, &self.state, mine, theirs)?;
        self.stats
            .observe(category, theirs, out.events.ball_lost_by == Some(Player::A));
        self.state = out.state;
        self.payoff += out.reward_a;
        Ok(Feedback {
            reward: out.reward_a,
            done: out.done,
            supervision,
        })
    }

    fn is_done(&self) -> bool {
        self.state.done
    }

    fn result(&self) -> Result<EpisodeResult> {
        let outcome = if self.payoff > 0.0 {
            Outcome::Win
        } else if self.payoff < 0.0 {
            Outcome::Loss
        } else {
            Outcome::Tie
        };
        Ok(EpisodeResult {
            reward: self.payoff,
            outcome: Some(outcome),
            rush: None,
            miss: None,
        })
    }
}

/// The agent answers questions against players drawn from a population.
///
/// After a wrong buzz the agent can only wait, so the rest of the question
/// is played out inside the same step and its rewards fold into it.
#[derive(Debug, Clone)]
pub struct QuizGame {
    config: QuizConfig,
    population: Population,
    reward: QuizReward,
    multitask: Multitask,
    /// Record each question in the opponent's history when it ends.
    track_history: bool,
    rng: ChaCha8Rng,
    state: QuizState,
    player: usize,
    trace: EpisodeTrace,
}

impl QuizGame {
    pub fn new(
        config: QuizConfig,
        population: Population,
        reward: QuizReward,
        multitask: Multitask,
        track_history: bool,
        mut rng: ChaCha8Rng,
    ) -> Result<Self> {
        let (state, player) = quiz::sample_episode(&config, &population, &mut rng)?;
        let trace = new_trace(&state);
        Ok(Self {
            config,
            population,
            reward,
            multitask,
            track_history,
            rng,
            state,
            player,
            trace,
        })
    }

    pub fn state(&self) -> &QuizState {
        &self.state
    }

    pub fn trace(&self) -> &EpisodeTrace {
        &self.trace
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    fn play(&mut self, action: QuizAction) -> Result<f64> {
        let t = self.state.t;
        let agent_locked = self.state.agent_locked;
        let guess_correct = self.state.guess_is_correct();
        let out = quiz::step(&mut self.state, action, &self.config, &mut self.rng)?;
        self.trace.steps.push(TraceStep {
            t,
            buzzed: action == QuizAction::Buzz && !agent_locked,
            guess_correct,
            agent_locked,
            reward: out.reward,
        });
        Ok(out.reward)
    }
}

fn new_trace(state: &QuizState) -> EpisodeTrace {
    EpisodeTrace {
        length: state.length,
        opponent_buzz: state.opponent_buzz,
        opponent_correct: state.opponent_correct,
        steps: Vec::new(),
        done: false,
    }
}

impl Game for QuizGame {
    fn reseed(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
    }

    fn reset(&mut self) -> Result<()> {
        let (state, player) = quiz::sample_episode(&self.config, &self.population, &mut self.rng)?;
        self.trace = new_trace(&state);
        self.state = state;
        self.player = player;
        Ok(())
    }

    fn observe(&self) -> Observation {
        Observation {
            state: quiz::featurize(&self.state),
            opponent: opponent_features(&self.population.players()[self.player]).to_vec(),
        }
    }

    fn act(&mut self, action: usize) -> Result<Feedback> {
        let action = QuizAction::from_index(action)?;
        let profile = &self.population.players()[self.player];
        let supervision = match self.multitask {
            Multitask::None => None,
            Multitask::Action => Some(Supervision::Value(action_supervision_target(
                self.state.t,
                self.state.opponent_buzz,
            )?)),
            Multitask::Type => Some(Supervision::Class(usize::from(opponent_type(profile)) - 1)),
        };
        let guess_correct = self.state.guess_is_correct();
        let mut game_reward = self.play(action)?;
        while !self.state.done && self.state.agent_locked {
            game_reward += self.play(QuizAction::Wait)?;
        }
        let done = self.state.done;
        if done {
            self.trace.done = true;
            if self.track_history {
                let fraction = self.state.opponent_buzz as f64 / self.state.length as f64;
                let correct = self.state.opponent_correct;
                self.population
                    .player_mut(self.player)
                    .record(fraction, correct);
            }
        }
        let reward = match self.reward {
            QuizReward::Game => game_reward,
            QuizReward::SelfSupervised => dqnself_reward(action == QuizAction::Buzz, guess_correct),
        };
        Ok(Feedback {
            reward,
            done,
            supervision,
        })
    }

    fn is_done(&self) -> bool {
        self.state.done
    }

    fn result(&self) -> Result<EpisodeResult> {
        let score = score_episode(&self.trace)?;
        Ok(EpisodeResult {
            reward: score.reward,
            outcome: None,
            rush: Some(score.rush),
            miss: Some(score.miss),
        })
    }
}
