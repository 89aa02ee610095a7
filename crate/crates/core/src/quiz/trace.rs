use crate::error::{Error, Result};

/// What happened at one decision point, from the agent's side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    /// The agent buzzed (a locked agent's buzz does not count).
    pub buzzed: bool,
    /// The content model's top guess was right at this point.
    pub guess_correct: bool,
    /// The agent was locked out before acting.
    pub agent_locked: bool,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub length: usize,
    pub opponent_buzz: usize,
    pub opponent_correct: bool,
    pub steps: Vec<TraceStep>,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeScore {
    pub reward: f64,
    /// The agent buzzed and was wrong.
    pub rush: bool,
    /// The agent never answered correctly though it could have, by waiting
    /// at a point where its guess was right, up to the deciding step.
    pub miss: bool,
}

pub fn score_episode(trace: &EpisodeTrace) -> Result<EpisodeScore> {
    if !trace.done {
        return Err(Error::usage("cannot score an unfinished question"));
    }
    let reward = trace.steps.iter().map(|s| s.reward).sum();
    let rush = trace.steps.iter().any(|s| s.buzzed && !s.guess_correct);
    let answered = trace.steps.iter().any(|s| s.buzzed && s.guess_correct);
    let passed_up = trace
        .steps
        .iter()
        .any(|s| !s.buzzed && !s.agent_locked && s.guess_correct);
    Ok(EpisodeScore {
        reward,
        rush,
        miss: !answered && passed_up,
    })
}
