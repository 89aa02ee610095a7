use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::metrics::MetricsSummary;
use super::stats::{ci90, Interval};
use super::train::train_into;
use super::write_file;
use crate::agents::AgentKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub experts: usize,
    /// One summary per seed, in seed order.
    pub runs: Vec<MetricsSummary>,
    /// Interval over the seeds' mean rewards.
    pub interval: Interval,
}

pub const SWEEP_HEADER: &str = "experts,mean_reward,ci90,seeds,degenerate";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{},{}",
            r.experts,
            r.interval.mean,
            r.interval.half_width,
            r.interval.n,
            u8::from(r.interval.degenerate)
        );
    }
    out
}

/// Trains a mixture-of-experts agent for each expert count and seed.
/// Runs go under `output_dir/k<K>/`, and `sweep.csv` gets one row per K.
pub fn sweep_experts(config: &ExperimentConfig, experts: &[usize]) -> Result<Vec<SweepRow>> {
    if experts.is_empty() {
        return Err(Error::usage("no expert counts to sweep"));
    }
    if config.agent.kind != AgentKind::DronMoe {
        return Err(Error::config("expert sweep needs agent=dron_moe"));
    }
    let mut rows = Vec::with_capacity(experts.len());
    for &k in experts {
        let cfg = config.clone().with_experts(k);
        let runs = train_into(&cfg, &config.output_dir.join(format!("k{k}")))?;
        let means: Vec<f64> = runs.iter().map(|r| r.summary.mean_reward).collect();
        rows.push(SweepRow {
            experts: k,
            interval: ci90(&means)?,
            runs: runs.into_iter().map(|r| r.summary).collect(),
        });
    }
    write_file(&config.output_dir.join("sweep.csv"), &sweep_csv(&rows))?;
    Ok(rows)
}
