use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::soccer::{Action, Cell, Player, SoccerConfig, SoccerState};

/// Strategy of the scripted opponent for one game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Advance to goal with the ball, intercept without it.
    Offensive,
    /// Avoid the opponent with the ball, guard the goal without it.
    Defensive,
}

impl Mode {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// How the opponent's mode is chosen at each kickoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModePolicy {
    Mixed,
    Fixed(Mode),
}

impl fmt::Display for ModePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModePolicy::Mixed => "mixed",
            ModePolicy::Fixed(Mode::Offensive) => "offensive",
            ModePolicy::Fixed(Mode::Defensive) => "defensive",
        })
    }
}

impl FromStr for ModePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(ModePolicy::Mixed),
            "offensive" | "o" => Ok(ModePolicy::Fixed(Mode::Offensive)),
            "defensive" | "d" => Ok(ModePolicy::Fixed(Mode::Defensive)),
            other => Err(Error::config(format!("unknown soccer opponent {other}"))),
        }
    }
}

/// Draws a mode; a fixed policy consumes no randomness.
pub fn sample_mode<R: Rng + ?Sized>(policy: ModePolicy, rng: &mut R) -> Mode {
    match policy {
        ModePolicy::Fixed(m) => m,
        ModePolicy::Mixed => {
            if rng.random_bool(0.5) {
                Mode::Offensive
            } else {
                Mode::Defensive
            }
        }
    }
}

fn goal_distance(c: Cell, goal: [Cell; 2]) -> i32 {
    c.manhattan(goal[0]).min(c.manhattan(goal[1]))
}

/// Cell in front of `who`'s goal on the side of the ball holder.
fn guard_cell(config: &SoccerConfig, who: Player, holder: Cell) -> Cell {
    let goal = config.own_goal(who);
    let x = if who == Player::A {
        goal[0].x + 1
    } else {
        goal[0].x - 1
    };
    let y = if holder.y <= goal[0].y {
        goal[0].y
    } else {
        goal[1].y
    };
    Cell::new(x, y)
}

/// Scripted move for `who` under `mode`. Moves into shaded or off-grid
/// cells are never chosen; ties are broken uniformly with `rng`.
pub fn rule_agent_act<R: Rng + ?Sized>(
    state: &SoccerState,
    who: Player,
    mode: Mode,
    rng: &mut R,
    config: &SoccerConfig,
) -> Action {
    let me = state.position(who);
    let other = state.position(who.other());
    let has_ball = state.ball == who;
    let own_goal = config.own_goal(who);

    let candidates: Vec<(Action, Cell)> = Action::ALL
        .iter()
        .map(|&a| (a, config.target(me, a)))
        .filter(|&(a, to)| a == Action::Stand || to != me)
        .collect();

    // Lower score is better.
    let scored: Vec<(Action, i32)> = match (mode, has_ball) {
        (Mode::Offensive, true) => candidates
            .iter()
            .map(|&(a, to)| (a, goal_distance(to, config.target_goal(who))))
            .collect(),
        (Mode::Offensive, false) => candidates
            .iter()
            .map(|&(a, to)| (a, to.manhattan(other)))
            .collect(),
        (Mode::Defensive, true) => candidates
            .iter()
            .filter(|(_, to)| !own_goal.contains(to))
            .map(|&(a, to)| (a, -to.manhattan(other)))
            .collect(),
        (Mode::Defensive, false) => {
            let guard = guard_cell(config, who, other);
            if me == guard {
                return Action::Stand;
            }
            candidates
                .iter()
                .map(|&(a, to)| (a, to.manhattan(guard)))
                .collect()
        }
    };
    let best = scored.iter().map(|&(_, s)| s).min().unwrap_or(0);
    let ties: Vec<Action> = scored
        .iter()
        .filter(|&&(_, s)| s == best)
        .map(|&(a, _)| a)
        .collect();
    if ties.is_empty() {
        return Action::Stand;
    }
    ties[rng.random_range(0..ties.len())]
}
