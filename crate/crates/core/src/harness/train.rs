use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{save_checkpoint, Checkpoint, RngState};
use super::config::{Environment, ExperimentConfig, OpponentSpec};
use super::eval::evaluate_params;
use super::game::{Game, QuizGame, SoccerGame};
use super::metrics::{curve_csv, summary_csv, EvalStats, MetricsSummary};
use super::write_file;
use crate::agents::Agent;
use crate::error::{Error, Result};
use crate::quiz::Population;
use crate::rl::{act_epsilon_greedy, td_update, ReplayBuffer, Transition};
use crate::AdaGradState;

/// Result of training one seed.
#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub seed: u64,
    pub checkpoint: Checkpoint,
    pub curve: Vec<EvalStats>,
    pub summary: MetricsSummary,
}

impl TrainedRun {
    pub fn curve_csv(&self) -> String {
        curve_csv(&self.curve)
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const EXPLORE_STREAM: u64 = 1;
const ENV_STREAM: u64 = 2;
const REPLAY_STREAM: u64 = 3;
const POPULATION_STREAM: u64 = 4;

fn training_game(config: &ExperimentConfig, seed: u64) -> Result<Box<dyn Game>> {
    let multitask = config.agent.multitask;
    Ok(match (&config.env, config.opponent) {
        (Environment::Soccer(cfg), OpponentSpec::Soccer(policy)) => Box::new(SoccerGame::new(
            cfg.clone(),
            policy,
            multitask,
            stream(seed, ENV_STREAM),
        )),
        (Environment::Quiz(cfg), OpponentSpec::Quiz(preset)) => {
            let population = Population::preset(preset, &mut stream(seed, POPULATION_STREAM))?;
            Box::new(QuizGame::new(
                cfg.clone(),
                population,
                config.quiz_reward,
                multitask,
                true,
                stream(seed, ENV_STREAM),
            )?)
        }
        _ => return Err(Error::config("opponent does not belong to the environment")),
    })
}

/// Trains one seed in memory: ε-greedy play with a replay-sampled update
/// after every `update_every` steps once `learn_start` transitions are
/// stored, and a greedy evaluation on the shared test games after each epoch.
pub fn train_run(config: &ExperimentConfig, seed: u64) -> Result<TrainedRun> {
    config.validate()?;
    let agent = Agent::new(config.agent.clone())?;
    let mut params = agent.init_params::<f64>(seed)?;
    let mut target = params.clone();
    let mut optimizer = AdaGradState::new(&params, config.q.learning_rate);
    let mut replay = ReplayBuffer::new(config.replay_capacity)?;
    let mut explore = stream(seed, EXPLORE_STREAM);
    let mut replay_rng = stream(seed, REPLAY_STREAM);
    let mut game = training_game(config, seed)?;

    let mut obs = game.observe();
    let mut steps: u64 = 0;
    let mut updates: usize = 0;
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let in_epoch = |e: Error| Error::Training(format!("epoch {epoch}: {e}"));
        for _ in 0..config.steps_per_epoch {
            let q = agent.q_values(&params, &obs.state, &obs.opponent)?;
            if q.iter().any(|v| !v.is_finite()) {
                return Err(in_epoch(Error::Training("non-finite Q-values".into())));
            }
            let action = act_epsilon_greedy(&q, config.schedule.epsilon_at(steps), &mut explore)?;
            let fb = game.act(action)?;
            let next = game.observe();
            replay.push(Transition {
                state_features: std::mem::take(&mut obs.state),
                opponent_features: std::mem::take(&mut obs.opponent),
                action,
                reward: fb.reward,
                next_state_features: next.state.clone(),
                next_opponent_features: next.opponent.clone(),
                terminal: fb.done,
                supervision: fb.supervision,
            });
            obs = if fb.done {
                game.reset()?;
                game.observe()
            } else {
                next
            };
            steps += 1;

            if replay.len() >= config.learn_start
                && steps.is_multiple_of(config.update_every as u64)
            {
                let batch = replay.sample(config.q.batch_size, &mut replay_rng)?;
                td_update(
                    &agent,
                    &mut params,
                    &target,
                    &batch,
                    &config.q,
                    &mut optimizer,
                )
                .map_err(in_epoch)?;
                updates += 1;
                if updates.is_multiple_of(config.q.target_sync) {
                    target = params.clone();
                }
            }
        }
        curve.push(evaluate_params(
            &agent,
            &params,
            &config.env,
            config.opponent,
            config.eval_games,
            config.eval_seed,
        )?);
    }

    let summary = MetricsSummary::from_evals(&curve)?;
    Ok(TrainedRun {
        seed,
        checkpoint: Checkpoint {
            env: config.env.clone(),
            spec: config.agent.clone(),
            params,
            steps,
            rng: RngState::capture(&explore),
        },
        curve,
        summary,
    })
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed{seed}"))
}

/// Writes `curve.csv` and `checkpoint.txt` for a run under `out/seed<N>/`.
pub fn write_run(out: &Path, run: &TrainedRun) -> Result<()> {
    let dir = seed_dir(out, run.seed);
    write_file(&dir.join("curve.csv"), &run.curve_csv())?;
    save_checkpoint(&run.checkpoint, dir.join("checkpoint.txt"))
}

/// Trains every configured seed, writing each run and a `summary.csv`
/// under the output directory.
pub fn train(config: &ExperimentConfig) -> Result<Vec<TrainedRun>> {
    train_into(config, &config.output_dir)
}

pub(crate) fn train_into(config: &ExperimentConfig, out: &Path) -> Result<Vec<TrainedRun>> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut runs = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let run = train_run(config, seed)?;
        write_run(out, &run)?;
        runs.push(run);
    }
    let rows: Vec<(u64, MetricsSummary)> =
        runs.iter().map(|r| (r.seed, r.summary.clone())).collect();
    write_file(&out.join("summary.csv"), &summary_csv(&rows))?;
    Ok(runs)
}
