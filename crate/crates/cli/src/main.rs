use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dron::harness::{
    self, load_checkpoint, parse_config, read_column, ExperimentConfig, OpponentSpec,
};
use dron::{Error, Result};

#[derive(Parser)]
#[command(name = "dron", about = "Opponent-aware deep Q-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment config.
    Train { config: PathBuf },
    /// Evaluate a checkpoint greedily.
    Eval {
        checkpoint: PathBuf,
        /// mixed, offensive or defensive (soccer); mixed or type1..type4 (quiz).
        #[arg(long, default_value = "mixed")]
        opponent: String,
        #[arg(long, default_value_t = 5000)]
        games: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print soccer games frame by frame.
        #[arg(long)]
        render: bool,
        /// Write quiz decision traces as CSV to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Train a mixture-of-experts agent for several expert counts.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        experts: Vec<usize>,
    },
    /// Paired t-test on the mean_reward columns of two summary CSVs.
    Ttest { csv_a: PathBuf, csv_b: PathBuf },
    /// Finite-difference check of every agent kind's gradients.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        networks: usize,
    },
    /// Run the invariant suite.
    Selfcheck,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let mut config = parse_config(&read(path)?)?;
    config.apply_env_overrides();
    Ok(config)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train { config } => {
            let config = load_config(&config)?;
            for run in harness::train(&config)? {
                println!(
                    "seed {}: mean reward {:.4}, max {:.4}",
                    run.seed, run.summary.mean_reward, run.summary.max_reward
                );
            }
            println!("wrote {}", config.output_dir.display());
        }
        Command::Eval {
            checkpoint,
            opponent,
            games,
            seed,
            render,
            trace,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let opponent = OpponentSpec::parse_for(&ckpt.env, &opponent)?;
            if render {
                print!("{}", harness::soccer_replays(&ckpt, opponent, games, seed)?);
                return Ok(true);
            }
            let s = harness::evaluate(&ckpt, opponent, games, seed)?;
            println!(
                "games {games} mean_reward {:.4} win {} tie {} loss {} rush {} miss {}",
                s.mean_reward,
                opt(s.win),
                opt(s.tie),
                opt(s.loss),
                opt(s.rush),
                opt(s.miss)
            );
            if let Some(path) = trace {
                let traces = harness::quiz_traces(&ckpt, opponent, games, seed)?;
                std::fs::write(&path, harness::trace_csv(&traces))
                    .map_err(|source| Error::Io { path, source })?;
            }
        }
        Command::Sweep { config, experts } => {
            let config = load_config(&config)?;
            print!(
                "{}",
                harness::sweep_csv(&harness::sweep_experts(&config, &experts)?)
            );
        }
        Command::Ttest { csv_a, csv_b } => {
            let a = read_column(&read(&csv_a)?, "mean_reward")?;
            let b = read_column(&read(&csv_b)?, "mean_reward")?;
            let t = harness::paired_ttest(&a, &b)?;
            println!("# pairs matched by row (one row per training seed)");
            println!("t,df,p,mean_difference,degenerate");
            println!(
                "{:.6},{},{:.6},{:.6},{}",
                t.t,
                t.df,
                t.p,
                t.mean_difference,
                u8::from(t.degenerate)
            );
        }
        Command::Gradcheck { networks } => {
            let mut ok = true;
            for r in harness::gradcheck(networks, 1)? {
                let kind = match r.spec.supervision {
                    None => r.spec.kind.to_string(),
                    Some(h) => format!("{}+{h}", r.spec.kind),
                };
                println!(
                    "{kind}: {} networks, max relative error {:.3e}, {} failures",
                    r.networks, r.max_relative_error, r.failures
                );
                ok &= r.failures == 0;
            }
            return Ok(ok);
        }
        Command::Selfcheck => {
            let mut ok = true;
            for c in harness::selfcheck()? {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
