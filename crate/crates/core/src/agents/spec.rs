use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    /// State-only Q-network; opponents are part of the world.
    Dqn,
    /// State and opponent embeddings concatenated below the Q head.
    DronConcat,
    /// Experts over the state embedding mixed by an opponent-conditioned gate.
    DronMoe,
}

impl AgentKind {
    pub fn uses_opponent(self) -> bool {
        !matches!(self, AgentKind::Dqn)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::Dqn => "dqn",
            AgentKind::DronConcat => "dron_concat",
            AgentKind::DronMoe => "dron_moe",
        })
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dqn" => Ok(AgentKind::Dqn),
            "dron_concat" => Ok(AgentKind::DronConcat),
            "dron_moe" => Ok(AgentKind::DronMoe),
            other => Err(Error::config(format!("unknown agent kind {other}"))),
        }
    }
}

/// Which opponent signal, if any, supervises the opponent embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Multitask {
    None,
    Action,
    Type,
}

impl fmt::Display for Multitask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Multitask::None => "none",
            Multitask::Action => "action",
            Multitask::Type => "type",
        })
    }
}

impl FromStr for Multitask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Multitask::None),
            "action" => Ok(Multitask::Action),
            "type" => Ok(Multitask::Type),
            other => Err(Error::config(format!("unknown multitask mode {other}"))),
        }
    }
}

/// Output shape of the opponent-prediction head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeadKind {
    /// Softmax over this many classes, trained with cross entropy.
    Classes(usize),
    /// Sigmoid scalar in `[0, 1]`, trained with mean squared error.
    Scalar,
}

impl HeadKind {
    pub fn width(self) -> usize {
        match self {
            HeadKind::Classes(n) => n,
            HeadKind::Scalar => 1,
        }
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeadKind::Classes(n) => write!(f, "classes:{n}"),
            HeadKind::Scalar => f.write_str("scalar"),
        }
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "scalar" {
            return Ok(HeadKind::Scalar);
        }
        s.strip_prefix("classes:")
            .and_then(|n| n.parse().ok())
            .map(HeadKind::Classes)
            .ok_or_else(|| Error::config(format!("bad supervision head {s}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub kind: AgentKind,
    pub state_dim: usize,
    pub opponent_dim: usize,
    pub actions: usize,
    /// Hidden sizes of the state tower; its last entry is `|hˢ|`.
    pub state_hidden: Vec<usize>,
    /// `|hᵒ|`, the opponent tower width.
    pub opponent_hidden: usize,
    /// Hidden width above the concatenation (DRON-concat only).
    pub head_hidden: usize,
    /// Expert count K (DRON-MoE only).
    pub experts: usize,
    pub multitask: Multitask,
    pub supervision: Option<HeadKind>,
    /// Weight of the supervision loss.
    pub lambda: f64,
}

impl AgentSpec {
    /// Soccer sizes: 15 state features, 16 opponent features, 5 moves,
    /// 50-unit layers throughout.
    pub fn soccer(kind: AgentKind) -> Self {
        Self {
            kind,
            state_dim: 15,
            opponent_dim: 16,
            actions: 5,
            state_hidden: vec![50, 50],
            opponent_hidden: 50,
            head_hidden: 50,
            experts: 3,
            multitask: Multitask::None,
            supervision: None,
            lambda: 1.0,
        }
    }

    /// Quiz-bowl sizes for an answer vocabulary of `vocab`: buzz/wait,
    /// 128-unit state layers and a 10-unit opponent tower.
    pub fn quiz(kind: AgentKind, vocab: usize) -> Self {
        Self {
            kind,
            state_dim: 2 * vocab + 2,
            opponent_dim: 3,
            actions: 2,
            state_hidden: vec![128, 128],
            opponent_hidden: 10,
            head_hidden: 128,
            experts: 3,
            multitask: Multitask::None,
            supervision: None,
            lambda: 1.0,
        }
    }

    pub fn with_experts(mut self, k: usize) -> Self {
        self.experts = k;
        self
    }

    pub fn with_multitask(mut self, multitask: Multitask, head: Option<HeadKind>) -> Self {
        self.multitask = multitask;
        self.supervision = head;
        self
    }

    pub fn state_embedding(&self) -> usize {
        *self.state_hidden.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.actions == 0 {
            return Err(Error::config("state_dim and actions must be positive"));
        }
        if self.state_hidden.is_empty() || self.state_hidden.contains(&0) {
            return Err(Error::config("state tower needs positive hidden sizes"));
        }
        if self.kind.uses_opponent() && (self.opponent_dim == 0 || self.opponent_hidden == 0) {
            return Err(Error::config("opponent tower needs positive sizes"));
        }
        if self.kind == AgentKind::DronConcat && self.head_hidden == 0 {
            return Err(Error::config("concat head needs a positive hidden size"));
        }
        if self.kind == AgentKind::DronMoe && self.experts == 0 {
            return Err(Error::config("DRON-MoE needs at least one expert"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(
                "multitask weight must be finite and non-negative",
            ));
        }
        match (self.multitask, self.supervision) {
            (Multitask::None, None) => Ok(()),
            (Multitask::None, Some(_)) => {
                Err(Error::config("supervision head given without multitask"))
            }
            (_, None) => Err(Error::config("multitask needs a supervision head")),
            (_, Some(_)) if !self.kind.uses_opponent() => Err(Error::config(
                "multitask supervision needs an opponent tower (dron kinds only)",
            )),
            (_, Some(HeadKind::Classes(n))) if n < 2 => Err(Error::config(
                "class supervision needs at least two classes",
            )),
            _ => Ok(()),
        }
    }
}
