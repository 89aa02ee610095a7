//! Experiment driver: configuration, training, evaluation, sweeps,
//! statistics and checkpoints.
//!
//! Output CSV schemas:
//!
//! * `curve.csv`: `epoch,mean_reward,rush,miss,win,tie`, one row per epoch.
//!   Soccer leaves `rush` and `miss` blank, the quiz game leaves `win` and
//!   `tie` blank.
//! * `summary.csv`: `seed,mean_reward,max_reward,win,tie,loss,rush,miss`,
//!   one row per seed; `mean_reward` averages the last 10 epochs.
//! * `sweep.csv`: `experts,mean_reward,ci90,seeds,degenerate`.
//! * quiz traces: see [`TRACE_HEADER`].

mod checkpoint;
mod config;
mod eval;
mod game;
mod metrics;
mod selfcheck;
mod stats;
mod sweep;
mod train;

use std::path::Path;

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, RngState, CHECKPOINT_VERSION};
pub use config::{
    parse_config, supervision_head, Environment, ExperimentConfig, OpponentSpec, QuizReward,
    OUTPUT_DIR_ENV,
};
pub use eval::{
    eval_population, evaluate, evaluate_params, game_rng, greedy_episode, quiz_traces,
    soccer_replays, trace_csv, TRACE_HEADER,
};
pub use game::{EpisodeResult, Feedback, Game, Observation, Outcome, QuizGame, SoccerGame};
pub use metrics::{
    curve_csv, read_column, summary_csv, EvalStats, MetricsSummary, CURVE_HEADER, MEAN_WINDOW,
    SUMMARY_HEADER,
};
pub use selfcheck::{
    gradcheck, gradcheck_spec, miniature_spec, miniature_specs, random_batch, selfcheck,
    CheckOutcome, GradCheckReport, GRADCHECK_FLOOR, GRADCHECK_TOLERANCE,
};
pub use stats::{
    ci90, incomplete_beta, ln_gamma, paired_ttest, t_two_tailed_p, Interval, TTest, Z_90,
};
pub use sweep::{sweep_csv, sweep_experts, SweepRow, SWEEP_HEADER};
pub use train::{seed_dir, train, train_run, write_run, TrainedRun};

/// Writes `contents` to `path`, creating parent directories.
pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
