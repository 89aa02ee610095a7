use std::fmt::Write as _;

use super::game::{EpisodeResult, Outcome};
use crate::error::{Error, Result};

/// Epochs averaged into the headline reward.
pub const MEAN_WINDOW: usize = 10;

/// Header of the learning-curve CSV. Rates that do not apply to the
/// environment are left blank.
pub const CURVE_HEADER: &str = "epoch,mean_reward,rush,miss,win,tie";

/// One greedy evaluation over a batch of games.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub games: usize,
    pub mean_reward: f64,
    pub win: Option<f64>,
    pub tie: Option<f64>,
    pub loss: Option<f64>,
    pub rush: Option<f64>,
    pub miss: Option<f64>,
}

fn rate(results: &[EpisodeResult], f: impl Fn(&EpisodeResult) -> Option<bool>) -> Option<f64> {
    let flags: Option<Vec<bool>> = results.iter().map(f).collect();
    flags.map(|v| v.iter().filter(|&&b| b).count() as f64 / v.len() as f64)
}

impl EvalStats {
    pub fn from_results(results: &[EpisodeResult]) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::usage("no games to summarize"));
        }
        let n = results.len() as f64;
        let outcome = |o: Outcome| rate(results, move |r| r.outcome.map(|x| x == o));
        Ok(Self {
            games: results.len(),
            mean_reward: results.iter().map(|r| r.reward).sum::<f64>() / n,
            win: outcome(Outcome::Win),
            tie: outcome(Outcome::Tie),
            loss: outcome(Outcome::Loss),
            rush: rate(results, |r| r.rush),
            miss: rate(results, |r| r.miss),
        })
    }
}

/// Aggregate over a sequence of evaluations (one per epoch).
///
/// The reward and the rates average the last [`MEAN_WINDOW`] evaluations,
/// or all of them when there are fewer.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub mean_reward: f64,
    pub max_reward: f64,
    pub win: Option<f64>,
    pub tie: Option<f64>,
    pub loss: Option<f64>,
    pub rush: Option<f64>,
    pub miss: Option<f64>,
    /// Mean evaluation reward of every epoch, in order.
    pub series: Vec<f64>,
}

fn window_mean(evals: &[EvalStats], f: impl Fn(&EvalStats) -> Option<f64>) -> Option<f64> {
    let vals: Option<Vec<f64>> = evals.iter().map(f).collect();
    vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

impl MetricsSummary {
    pub fn from_evals(evals: &[EvalStats]) -> Result<Self> {
        if evals.is_empty() {
            return Err(Error::usage("no evaluations to summarize"));
        }
        let series: Vec<f64> = evals.iter().map(|e| e.mean_reward).collect();
        let tail = &evals[evals.len().saturating_sub(MEAN_WINDOW)..];
        Ok(Self {
            mean_reward: window_mean(tail, |e| Some(e.mean_reward)).unwrap_or(f64::NAN),
            max_reward: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            win: window_mean(tail, |e| e.win),
            tie: window_mean(tail, |e| e.tie),
            loss: window_mean(tail, |e| e.loss),
            rush: window_mean(tail, |e| e.rush),
            miss: window_mean(tail, |e| e.miss),
            series,
        })
    }

    /// Sample variance of the per-epoch rewards.
    pub fn series_variance(&self) -> f64 {
        let n = self.series.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.series.iter().sum::<f64>() / n as f64;
        self.series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Learning-curve CSV, epochs numbered from 1.
pub fn curve_csv(evals: &[EvalStats]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for (i, e) in evals.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:.6},{},{},{},{}",
            i + 1,
            e.mean_reward,
            cell(e.rush),
            cell(e.miss),
            cell(e.win),
            cell(e.tie)
        );
    }
    out
}

/// Header of the per-seed summary CSV.
pub const SUMMARY_HEADER: &str = "seed,mean_reward,max_reward,win,tie,loss,rush,miss";

pub fn summary_csv(rows: &[(u64, MetricsSummary)]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (seed, s) in rows {
        let _ = writeln!(
            out,
            "{seed},{:.6},{:.6},{},{},{},{},{}",
            s.mean_reward,
            s.max_reward,
            cell(s.win),
            cell(s.tie),
            cell(s.loss),
            cell(s.rush),
            cell(s.miss)
        );
    }
    out
}

/// Reads one numeric column of a CSV with a header row.
pub fn read_column(csv: &str, column: &str) -> Result<Vec<f64>> {
    let mut lines = csv
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty CSV"))?;
    let idx = header
        .split(',')
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::parse(1, format!("no column {column:?}")))?;
    lines
        .map(|(i, l)| {
            let field = l.split(',').nth(idx).unwrap_or("").trim();
            field
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad {column} value {field:?}")))
        })
        .collect()
}
