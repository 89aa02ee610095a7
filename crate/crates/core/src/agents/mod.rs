//! Q-value architectures: DQN, DRON-concat and DRON-MoE, each optionally
//! with a multitask head predicting opponent behavior from `hᵒ`.

mod network;
mod spec;

pub use network::{combined_loss, Agent, AgentForward, GateOutput, HiddenReps, OpponentPrediction};
pub use spec::{AgentKind, AgentSpec, HeadKind, Multitask};
