use rand::Rng;

use crate::agents::{Agent, HeadKind};
use crate::error::{Error, Result};
use crate::nn::{AdaGradState, Matrix, ParamSet};
use crate::rl::{Supervision, Transition};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct QLearningConfig {
    pub gamma: f64,
    pub batch_size: usize,
    /// Gradient updates between target refreshes; 1 copies after every update.
    pub target_sync: usize,
    pub learning_rate: f64,
    /// Clip each gradient coordinate to ±1 before the optimizer step.
    pub clip_gradients: bool,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            batch_size: 64,
            target_sync: 500,
            learning_rate: 0.0005,
            clip_gradients: false,
        }
    }
}

impl QLearningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.target_sync == 0 {
            return Err(Error::config("target sync period must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Greedy with probability `1 − ε`, uniform otherwise. Ties go to the
/// lowest index. Always consumes exactly one draw for the coin flip.
pub fn act_epsilon_greedy<T: Scalar, R: Rng + ?Sized>(
    q_values: &[T],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if q_values.is_empty() {
        return Err(Error::usage("no actions to choose from"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::usage(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..q_values.len()))
    } else {
        Ok(argmax(q_values))
    }
}

pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Frozen copy of the live parameters.
pub fn sync_target<T: Scalar>(params: &ParamSet<T>) -> ParamSet<T> {
    params.clone()
}

fn stack<'a, T: Scalar>(rows: impl Iterator<Item = &'a [T]>) -> Result<Matrix<T>> {
    let rows: Vec<&[T]> = rows.collect();
    Matrix::from_rows(&rows)
}

/// `r` for terminal transitions, `r + γ·max_a' Q(s', a'; θ⁻)` otherwise.
pub fn q_targets<T: Scalar>(
    agent: &Agent,
    target_params: &ParamSet<T>,
    batch: &[&Transition<T>],
    gamma: T,
) -> Result<Vec<T>> {
    let mut targets: Vec<T> = batch.iter().map(|t| t.reward).collect();
    let live: Vec<usize> = (0..batch.len()).filter(|&i| !batch[i].terminal).collect();
    if live.is_empty() || gamma == T::zero() {
        return Ok(targets);
    }
    let next_s = stack(
        live.iter()
            .map(|&i| batch[i].next_state_features.as_slice()),
    )?;
    let next_o = if agent.spec().kind.uses_opponent() {
        Some(stack(
            live.iter()
                .map(|&i| batch[i].next_opponent_features.as_slice()),
        )?)
    } else {
        None
    };
    let fwd = agent.forward(target_params, &next_s, next_o.as_ref())?;
    for (row, &i) in live.iter().enumerate() {
        let best = fwd
            .q()
            .row(row)
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max);
        targets[i] = targets[i] + gamma * best;
    }
    Ok(targets)
}

/// Loss components of one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateLoss<T> {
    pub q_loss: T,
    pub supervision_loss: T,
    pub total: T,
}

/// Loss and parameter gradients for one batch, without touching parameters.
///
/// The Q loss is the batch mean of `(y − Q(s, a))²`; only the taken action's
/// output receives gradient. With a supervision head, transitions carrying a
/// label add `λ` times the mean cross entropy (class head) or squared error
/// (scalar head).
pub fn td_gradients<T: Scalar>(
    agent: &Agent,
    params: &ParamSet<T>,
    target_params: &ParamSet<T>,
    batch: &[&Transition<T>],
    gamma: T,
) -> Result<(UpdateLoss<T>, ParamSet<T>)> {
    if batch.is_empty() {
        return Err(Error::usage("empty training batch"));
    }
    let spec = agent.spec();
    if let Some(t) = batch.iter().find(|t| t.action >= spec.actions) {
        return Err(Error::usage(format!("action {} out of range", t.action)));
    }
    let targets = q_targets(agent, target_params, batch, gamma)?;
    let states = stack(batch.iter().map(|t| t.state_features.as_slice()))?;
    let opps = if spec.kind.uses_opponent() {
        Some(stack(batch.iter().map(|t| t.opponent_features.as_slice()))?)
    } else {
        None
    };
    let fwd = agent.forward(params, &states, opps.as_ref())?;

    let n = T::of(batch.len() as f64);
    let two = T::of(2.0);
    let mut q_loss = T::zero();
    let mut dq = Matrix::zeros(batch.len(), spec.actions);
    for (i, t) in batch.iter().enumerate() {
        let err = fwd.q().get(i, t.action) - targets[i];
        q_loss = q_loss + err * err / n;
        dq.set(i, t.action, two * err / n);
    }

    let lambda = T::of(spec.lambda);
    let mut supervision_loss = T::zero();
    let mut dsup = None;
    if let (Some(head), Some(pred)) = (spec.supervision, fwd.supervision()) {
        let labelled: Vec<(usize, Supervision<T>)> = batch
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.supervision.map(|s| (i, s)))
            .collect();
        let mut g = Matrix::zeros(batch.len(), head.width());
        if !labelled.is_empty() {
            let m = T::of(labelled.len() as f64);
            let eps = T::stabilizer();
            for (i, s) in labelled {
                match (head, s) {
                    (HeadKind::Classes(k), Supervision::Class(c)) if c < k => {
                        let p = pred.get(i, c);
                        supervision_loss = supervision_loss - (p + eps).ln() / m;
                        g.set(i, c, -lambda / ((p + eps) * m));
                    }
                    (HeadKind::Scalar, Supervision::Value(y)) => {
                        let d = pred.get(i, 0) - y;
                        supervision_loss = supervision_loss + d * d / m;
                        g.set(i, 0, lambda * two * d / m);
                    }
                    _ => {
                        return Err(Error::usage(format!(
                            "supervision label does not fit the {head} head"
                        )))
                    }
                }
            }
        }
        dsup = Some(g);
    }

    let total = q_loss + lambda * supervision_loss;
    if !total.is_finite() {
        return Err(Error::Training(format!("non-finite loss {total}")));
    }
    let grads = agent.backward(params, &fwd, &dq, dsup.as_ref())?;
    Ok((
        UpdateLoss {
            q_loss,
            supervision_loss,
            total,
        },
        grads,
    ))
}

/// One AdaGrad step on the TD loss (plus supervision loss) of `batch`.
pub fn td_update<T: Scalar>(
    agent: &Agent,
    params: &mut ParamSet<T>,
    target_params: &ParamSet<T>,
    batch: &[&Transition<T>],
    config: &QLearningConfig,
    optimizer: &mut AdaGradState<T>,
) -> Result<UpdateLoss<T>> {
    let (loss, mut grads) = td_gradients(agent, params, target_params, batch, T::of(config.gamma))?;
    if config.clip_gradients {
        let one = T::one();
        grads.map_inplace(|g| *g = g.max(-one).min(one));
    }
    optimizer.update(params, &grads)?;
    Ok(loss)
}
