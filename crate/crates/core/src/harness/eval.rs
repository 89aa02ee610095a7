use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use super::config::{Environment, OpponentSpec, QuizReward};
use super::game::{EpisodeResult, Game, QuizGame, SoccerGame};
use super::metrics::{EvalStats, MetricsSummary};
use crate::agents::{Agent, Multitask};
use crate::error::{Error, Result};
use crate::quiz::{EpisodeTrace, Population};
use crate::rl::argmax;
use crate::soccer::render;
use crate::ParamSet;

/// Generator for evaluation game `index` under `seed`.
pub fn game_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Evaluation population for a quiz preset, fixed by the seed.
pub fn eval_population(opponent: crate::quiz::PopulationPreset, seed: u64) -> Result<Population> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Population::preset(opponent, &mut rng)
}

/// Plays one episode greedily, calling `visit` before every move.
pub fn greedy_episode<G: Game>(
    agent: &Agent,
    params: &ParamSet,
    game: &mut G,
    mut visit: impl FnMut(&G),
) -> Result<EpisodeResult> {
    while !game.is_done() {
        visit(game);
        let obs = game.observe();
        let q = agent.q_values(params, &obs.state, &obs.opponent)?;
        game.act(argmax(&q))?;
    }
    visit(game);
    game.result()
}

fn soccer_game(env: &Environment, opponent: OpponentSpec) -> Result<SoccerGame> {
    match (env, opponent) {
        (Environment::Soccer(cfg), OpponentSpec::Soccer(policy)) => Ok(SoccerGame::new(
            cfg.clone(),
            policy,
            Multitask::None,
            game_rng(0, 0),
        )),
        _ => Err(Error::usage(format!(
            "opponent {opponent} does not fit {}",
            env.name()
        ))),
    }
}

fn quiz_game(env: &Environment, opponent: OpponentSpec, seed: u64) -> Result<QuizGame> {
    match (env, opponent) {
        (Environment::Quiz(cfg), OpponentSpec::Quiz(preset)) => QuizGame::new(
            cfg.clone(),
            eval_population(preset, seed)?,
            QuizReward::Game,
            Multitask::None,
            false,
            game_rng(seed, 0),
        ),
        _ => Err(Error::usage(format!(
            "opponent {opponent} does not fit {}",
            env.name()
        ))),
    }
}

fn run_games<G: Game>(
    agent: &Agent,
    params: &ParamSet,
    game: &mut G,
    n_games: usize,
    seed: u64,
    mut visit: impl FnMut(usize, &G),
) -> Result<Vec<EpisodeResult>> {
    (0..n_games)
        .map(|i| {
            game.reseed(game_rng(seed, i));
            game.reset()?;
            greedy_episode(agent, params, game, |g| visit(i, g))
        })
        .collect()
}

/// Greedy evaluation over `n_games` fresh games. Game `i` draws from its
/// own stream of `seed`, so results depend only on the parameters and seed.
pub fn evaluate_params(
    agent: &Agent,
    params: &ParamSet,
    env: &Environment,
    opponent: OpponentSpec,
    n_games: usize,
    seed: u64,
) -> Result<EvalStats> {
    if n_games == 0 {
        return Err(Error::usage("evaluation needs at least one game"));
    }
    let results = match env {
        Environment::Soccer(_) => run_games(
            agent,
            params,
            &mut soccer_game(env, opponent)?,
            n_games,
            seed,
            |_, _| {},
        )?,
        Environment::Quiz(_) => run_games(
            agent,
            params,
            &mut quiz_game(env, opponent, seed)?,
            n_games,
            seed,
            |_, _| {},
        )?,
    };
    EvalStats::from_results(&results)
}

/// Evaluates a checkpoint; the summary covers this single evaluation.
pub fn evaluate(
    checkpoint: &Checkpoint,
    opponent: OpponentSpec,
    n_games: usize,
    seed: u64,
) -> Result<MetricsSummary> {
    let agent = checkpoint.agent()?;
    let stats = evaluate_params(
        &agent,
        &checkpoint.params,
        &checkpoint.env,
        opponent,
        n_games,
        seed,
    )?;
    MetricsSummary::from_evals(&[stats])
}

/// Text replays of soccer evaluation games, one frame per step.
pub fn soccer_replays(
    checkpoint: &Checkpoint,
    opponent: OpponentSpec,
    n_games: usize,
    seed: u64,
) -> Result<String> {
    let agent = checkpoint.agent()?;
    let mut game = soccer_game(&checkpoint.env, opponent)?;
    let mut out = String::new();
    let results = run_games(
        &agent,
        &checkpoint.params,
        &mut game,
        n_games,
        seed,
        |i, g| {
            if g.state().steps == 0 {
                let _ = writeln!(out, "game {i} opponent {:?}", g.mode());
            }
            out.push_str(&render(g.state(), g.config()));
            out.push('\n');
        },
    )?;
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(out, "game {i} reward {}", r.reward);
    }
    Ok(out)
}

/// Header of the quiz trace CSV: one row per decision point.
pub const TRACE_HEADER: &str =
    "game,t,length,opponent_buzz,opponent_correct,buzzed,guess_correct,agent_locked,reward";

pub fn trace_csv(traces: &[EpisodeTrace]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (i, tr) in traces.iter().enumerate() {
        for s in &tr.steps {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{},{},{},{}",
                s.t,
                tr.length,
                tr.opponent_buzz,
                u8::from(tr.opponent_correct),
                u8::from(s.buzzed),
                u8::from(s.guess_correct),
                u8::from(s.agent_locked),
                s.reward
            );
        }
    }
    out
}

/// Traces of quiz evaluation games, for buzz-position plots.
pub fn quiz_traces(
    checkpoint: &Checkpoint,
    opponent: OpponentSpec,
    n_games: usize,
    seed: u64,
) -> Result<Vec<EpisodeTrace>> {
    let agent = checkpoint.agent()?;
    let mut game = quiz_game(&checkpoint.env, opponent, seed)?;
    let mut traces = Vec::with_capacity(n_games);
    for i in 0..n_games {
        game.reseed(game_rng(seed, i));
        game.reset()?;
        greedy_episode(&agent, &checkpoint.params, &mut game, |_| {})?;
        traces.push(game.trace().clone());
    }
    Ok(traces)
}
