//! Dense feed-forward networks with hand-written backpropagation and AdaGrad.

mod adagrad;
mod gradcheck;
mod loss;
mod matrix;
mod mlp;
mod params;

pub use adagrad::AdaGradState;
pub use gradcheck::{finite_difference, max_relative_error, relative_error};
pub(crate) use loss::softmax_in_place;
pub use loss::{loss_and_grad, softmax, LossKind, Target};
pub use matrix::Matrix;
pub use mlp::{init_params, mlp_backward, mlp_forward, Activation, ForwardCache, Mlp, MlpSpec};
pub use params::{Dense, ParamSet};
