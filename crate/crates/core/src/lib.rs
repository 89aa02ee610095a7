//! Opponent-aware deep Q-learning.
//!
//! The crate provides the DQN, DRON-concat and DRON-MoE value networks
//! (optionally with a multitask opponent head), a from-scratch dense network
//! stack with AdaGrad, experience replay and the Q-learning update, two
//! two-player environments with scripted opponents (grid soccer and a
//! synthetic quiz-bowl buzzer game), and an experiment harness that trains,
//! evaluates, sweeps and checkpoints agents.
//!
//! The network code is generic over [`Scalar`] (`f32` or `f64`). The
//! environments and the harness are `f64`; the aliases below name the `f64`
//! instantiations.

pub mod agents;
pub mod error;
pub mod harness;
pub mod nn;
pub mod quiz;
pub mod rl;
pub mod scalar;
pub mod soccer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = nn::Matrix<f64>;
pub type ParamSet = nn::ParamSet<f64>;
pub type AdaGradState = nn::AdaGradState<f64>;
