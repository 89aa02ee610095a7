//! Synthetic incremental quiz-bowl buzzing game.
//!
//! A question of `L` words is revealed one word per decision point. A
//! simulated content model emits a belief vector over `V` answers that
//! sharpens toward the true answer as words arrive. The agent chooses to
//! buzz or wait; a simulated opponent buzzes at a position drawn from its
//! profile and is right with its profile accuracy.

mod game;
mod opponents;
mod trace;

pub use game::{
    action_supervision_target, advance_belief, dqnself_reward, featurize, sample_episode, step,
    BuzzOutcome, Buzzer, QuizAction, QuizConfig, QuizState, QuizStep,
};
pub use opponents::{
    opponent_features, opponent_type, OpponentProfile, Population, PopulationPreset,
};
pub use trace::{score_episode, EpisodeScore, EpisodeTrace, TraceStep};
