use crate::soccer::{Action, Cell, Player, SoccerConfig, SoccerState};

pub const STATE_FEATURES: usize = 15;
pub const OPPONENT_FEATURES: usize = 16;

/// `[self x, y; other x, y; xmin, xmax, ymin, ymax; own goal x, ylow, yhigh;
/// target goal x, ylow, yhigh; holds ball]`, coordinates scaled to `[0, 1]`.
pub fn featurize_state(
    state: &SoccerState,
    config: &SoccerConfig,
    perspective: Player,
) -> [f64; STATE_FEATURES] {
    let sx = 1.0 / (config.width - 1) as f64;
    let sy = 1.0 / (config.height - 1) as f64;
    let me = state.position(perspective);
    let other = state.position(perspective.other());
    let own = config.own_goal(perspective);
    let target = config.target_goal(perspective);
    [
        me.x as f64 * sx,
        me.y as f64 * sy,
        other.x as f64 * sx,
        other.y as f64 * sy,
        0.0,
        (config.width - 1) as f64 * sx,
        0.0,
        (config.height - 1) as f64 * sy,
        own[0].x as f64 * sx,
        own[0].y as f64 * sy,
        own[1].y as f64 * sy,
        target[0].x as f64 * sx,
        target[0].y as f64 * sy,
        target[1].y as f64 * sy,
        if state.ball == perspective { 1.0 } else { 0.0 },
    ]
}

/// Observed kind of opponent move, relative to the primary agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveCategory {
    ApproachAgent,
    AvoidAgent,
    ApproachAgentGoal,
    ApproachOwnGoal,
    Stand,
}

impl MoveCategory {
    pub const ALL: [MoveCategory; 5] = [
        MoveCategory::ApproachAgent,
        MoveCategory::AvoidAgent,
        MoveCategory::ApproachAgentGoal,
        MoveCategory::ApproachOwnGoal,
        MoveCategory::Stand,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

fn goal_distance(c: Cell, goal: [Cell; 2]) -> i32 {
    c.manhattan(goal[0]).min(c.manhattan(goal[1]))
}

/// Category of `mover`'s `action` from `state`, judged against the other
/// player's position. First match wins: approach agent, avoid agent,
/// approach agent's goal, approach own goal; unchanged position is a stand.
pub fn classify_move(
    state: &SoccerState,
    mover: Player,
    action: Action,
    config: &SoccerConfig,
) -> MoveCategory {
    let from = state.position(mover);
    let to = config.target(from, action);
    if to == from {
        return MoveCategory::Stand;
    }
    let agent = mover.other();
    let agent_pos = state.position(agent);
    let (d0, d1) = (from.manhattan(agent_pos), to.manhattan(agent_pos));
    let agent_goal = config.own_goal(agent);
    let own_goal = config.own_goal(mover);
    if d1 < d0 {
        MoveCategory::ApproachAgent
    } else if d1 > d0 {
        MoveCategory::AvoidAgent
    } else if goal_distance(to, agent_goal) < goal_distance(from, agent_goal) {
        MoveCategory::ApproachAgentGoal
    } else if goal_distance(to, own_goal) < goal_distance(from, own_goal) {
        MoveCategory::ApproachOwnGoal
    } else {
        // A unit step always changes the distance to a player on another
        // cell, so this is unreachable on the grid; keep the map total.
        MoveCategory::Stand
    }
}

/// Per-episode record of the opponent's observed behavior.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpponentStats {
    pub counts: [u32; 5],
    pub recent_category: Option<MoveCategory>,
    pub recent_action: Option<Action>,
    /// Times the primary agent lost the ball to the opponent.
    pub ball_losses: u32,
    pub steps: u32,
}

impl OpponentStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, category: MoveCategory, action: Action, agent_lost_ball: bool) {
        self.counts[category.index()] += 1;
        self.recent_category = Some(category);
        self.recent_action = Some(action);
        self.steps += 1;
        if agent_lost_ball {
            self.ball_losses += 1;
        }
    }

    /// `[5 move frequencies; one-hot last move; one-hot last action;
    /// ball-loss frequency]`, all zero before the first observation.
    pub fn features(&self) -> [f64; OPPONENT_FEATURES] {
        let mut f = [0.0; OPPONENT_FEATURES];
        let steps = self.steps.max(1) as f64;
        for (dst, &c) in f[..5].iter_mut().zip(&self.counts) {
            *dst = c as f64 / steps;
        }
        if let Some(c) = self.recent_category {
            f[5 + c.index()] = 1.0;
        }
        if let Some(a) = self.recent_action {
            f[10 + a.index()] = 1.0;
        }
        f[15] = self.ball_losses as f64 / steps;
        f
    }
}
