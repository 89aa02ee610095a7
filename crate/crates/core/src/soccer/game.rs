use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    A,
    B,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::A => Player::B,
            Player::B => Player::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    North,
    South,
    West,
    East,
    Stand,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::North,
        Action::South,
        Action::West,
        Action::East,
        Action::Stand,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Action> {
        Action::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::usage(format!("soccer action {i} out of range")))
    }

    fn delta(self) -> (i32, i32) {
        match self {
            Action::North => (0, -1),
            Action::South => (0, 1),
            Action::West => (-1, 0),
            Action::East => (1, 0),
            Action::Stand => (0, 0),
        }
    }
}

/// Grid cell; `x` is the column (0 = left), `y` the row (0 = top).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    fn shifted(self, (dx, dy): (i32, i32)) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoccerConfig {
    pub width: i32,
    pub height: i32,
    pub horizon: u32,
}

impl Default for SoccerConfig {
    fn default() -> Self {
        Self {
            width: 9,
            height: 6,
            horizon: 100,
        }
    }
}

impl SoccerConfig {
    fn goal_rows(&self) -> (i32, i32) {
        let lo = (self.height - 1) / 2;
        (lo, lo + 1)
    }

    /// Goal cells defended by `player`.
    pub fn own_goal(&self, player: Player) -> [Cell; 2] {
        let x = match player {
            Player::A => 0,
            Player::B => self.width - 1,
        };
        let (lo, hi) = self.goal_rows();
        [Cell::new(x, lo), Cell::new(x, hi)]
    }

    /// Goal cells `player` scores on.
    pub fn target_goal(&self, player: Player) -> [Cell; 2] {
        self.own_goal(player.other())
    }

    pub fn is_goal(&self, c: Cell) -> bool {
        self.own_goal(Player::A).contains(&c) || self.own_goal(Player::B).contains(&c)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.x < self.width && c.y >= 0 && c.y < self.height
    }

    /// End-column cells outside the goals.
    pub fn is_shaded(&self, c: Cell) -> bool {
        self.in_bounds(c) && (c.x == 0 || c.x == self.width - 1) && !self.is_goal(c)
    }

    pub fn is_playable(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_shaded(c)
    }

    /// Where `action` would take a player at `from`; invalid moves stay put.
    pub fn target(&self, from: Cell, action: Action) -> Cell {
        let to = from.shifted(action.delta());
        if self.is_playable(to) {
            to
        } else {
            from
        }
    }

    /// Non-goal playable cells in the columns where `player` may start.
    pub fn start_cells(&self, player: Player) -> Vec<Cell> {
        let half = self.width / 2;
        let cols = match player {
            Player::A => 0..half,
            Player::B => self.width - half..self.width,
        };
        cols.flat_map(|x| (0..self.height).map(move |y| Cell::new(x, y)))
            .filter(|&c| self.is_playable(c) && !self.is_goal(c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SoccerState {
    pub a: Cell,
    pub b: Cell,
    pub ball: Player,
    pub steps: u32,
    pub done: bool,
}

impl SoccerState {
    pub fn position(&self, p: Player) -> Cell {
        match p {
            Player::A => self.a,
            Player::B => self.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepEvents {
    /// The moves conflicted and neither took place.
    pub collision: bool,
    pub ball_lost_by: Option<Player>,
    pub goal_by: Option<Player>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SoccerState,
    /// Reward to A; B receives the negation.
    pub reward_a: f64,
    pub done: bool,
    pub events: StepEvents,
}

/// Random kickoff: A on the left half, B on the right, ball to either.
pub fn reset<R: Rng + ?Sized>(config: &SoccerConfig, rng: &mut R) -> SoccerState {
    let left = config.start_cells(Player::A);
    let right = config.start_cells(Player::B);
    let a = left[rng.random_range(0..left.len())];
    let b = right[rng.random_range(0..right.len())];
    let ball = if rng.random_bool(0.5) {
        Player::A
    } else {
        Player::B
    };
    SoccerState {
        a,
        b,
        ball,
        steps: 0,
        done: false,
    }
}

/// Resolves one simultaneous move.
///
/// If both players would end on the same cell, or would swap cells, the
/// ball passes from its holder to the other player and neither moves.
pub fn step(
    config: &SoccerConfig,
    state: &SoccerState,
    action_a: Action,
    action_b: Action,
) -> Result<StepOutcome> {
    if state.done {
        return Err(Error::usage("step on a finished soccer episode"));
    }
    let ta = config.target(state.a, action_a);
    let tb = config.target(state.b, action_b);
    let mut next = state.clone();
    let mut events = StepEvents::default();
    if ta == tb || (ta == state.b && tb == state.a) {
        events.collision = true;
        events.ball_lost_by = Some(state.ball);
        next.ball = state.ball.other();
    } else {
        next.a = ta;
        next.b = tb;
    }
    next.steps += 1;

    let holder = next.ball;
    let mut reward_a = 0.0;
    if config.target_goal(holder).contains(&next.position(holder)) {
        next.done = true;
        events.goal_by = Some(holder);
        reward_a = if holder == Player::A { 1.0 } else { -1.0 };
    } else if next.steps >= config.horizon {
        next.done = true;
    }
    Ok(StepOutcome {
        done: next.done,
        state: next,
        reward_a,
        events,
    })
}

/// Text picture of the field, one character per cell: `A`/`B` for the
/// players, `G` for empty goal cells, `#` for shaded cells. The status line
/// marks the ball owner with `*`.
pub fn render(state: &SoccerState, config: &SoccerConfig) -> String {
    let mut out = String::new();
    for y in 0..config.height {
        for x in 0..config.width {
            let c = Cell::new(x, y);
            out.push(if c == state.a {
                'A'
            } else if c == state.b {
                'B'
            } else if config.is_shaded(c) {
                '#'
            } else if config.is_goal(c) {
                'G'
            } else {
                '.'
            });
        }
        out.push('\n');
    }
    let owner = match state.ball {
        Player::A => "A*",
        Player::B => "B*",
    };
    let _ = writeln!(
        out,
        "step {} ball {owner}{}",
        state.steps,
        if state.done { " done" } else { "" }
    );
    out
}
