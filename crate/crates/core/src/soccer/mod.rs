//! Two-player grid soccer with a two-mode scripted opponent.
//!
//! The field is 9 columns by 6 rows. Each end column holds a two-cell goal
//! in its middle rows; the other cells of the end columns are out of play.
//! Player A starts on the left, defends the left goal and scores on the
//! right; B mirrors it.

mod features;
mod game;
mod rules;

pub use features::{
    classify_move, featurize_state, MoveCategory, OpponentStats, OPPONENT_FEATURES, STATE_FEATURES,
};
pub use game::{
    render, reset, step, Action, Cell, Player, SoccerConfig, SoccerState, StepEvents, StepOutcome,
};
pub use rules::{rule_agent_act, sample_mode, Mode, ModePolicy};
