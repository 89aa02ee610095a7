use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Max-subtracted softmax, written into `v`.
pub(crate) fn softmax_in_place<T: Scalar>(v: &mut [T]) {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        total = total + *x;
    }
    for x in v.iter_mut() {
        *x = *x / total;
    }
}

pub fn softmax<T: Scalar>(v: &[T]) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(Error::usage("softmax of an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::usage("softmax input must be finite"));
    }
    let mut out = v.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `½‖p − t‖²`
    Squared,
    /// `−ln(p[target] + ε)` over a probability vector.
    CrossEntropy,
    /// `mean((p − t)²)`
    MeanSquared,
}

#[derive(Debug, Clone, Copy)]
pub enum Target<'a, T> {
    Values(&'a [T]),
    Class(usize),
}

/// Loss value and its gradient with respect to `prediction`.
pub fn loss_and_grad<T: Scalar>(
    kind: LossKind,
    prediction: &[T],
    target: Target<'_, T>,
) -> Result<(T, Vec<T>)> {
    match kind {
        LossKind::Squared | LossKind::MeanSquared => {
            let target = match target {
                Target::Values(t) => t,
                Target::Class(_) => {
                    return Err(Error::usage("squared losses need a real-valued target"))
                }
            };
            if target.len() != prediction.len() {
                return Err(Error::usage(format!(
                    "prediction has length {}, target {}",
                    prediction.len(),
                    target.len()
                )));
            }
            let n = T::of(prediction.len().max(1) as f64);
            let (scale, grad_scale) = match kind {
                LossKind::Squared => (T::of(0.5), T::one()),
                _ => (T::one() / n, T::of(2.0) / n),
            };
            let mut loss = T::zero();
            let grad = prediction
                .iter()
                .zip(target)
                .map(|(&p, &t)| {
                    let d = p - t;
                    loss = loss + d * d;
                    grad_scale * d
                })
                .collect();
            Ok((scale * loss, grad))
        }
        LossKind::CrossEntropy => {
            let total: T = prediction.iter().copied().sum();
            if prediction.is_empty()
                || prediction.iter().any(|&p| p < T::zero() || !p.is_finite())
                || (total - T::one()).abs() > T::of(1e-6)
            {
                return Err(Error::usage(
                    "cross entropy needs a normalized probability vector",
                ));
            }
            let eps = T::stabilizer();
            match target {
                Target::Class(c) => {
                    if c >= prediction.len() {
                        return Err(Error::usage(format!(
                            "class {c} out of range for {} outputs",
                            prediction.len()
                        )));
                    }
                    let mut grad = vec![T::zero(); prediction.len()];
                    grad[c] = -T::one() / (prediction[c] + eps);
                    Ok((-(prediction[c] + eps).ln(), grad))
                }
                Target::Values(t) => {
                    if t.len() != prediction.len() {
                        return Err(Error::usage("one-hot target length mismatch"));
                    }
                    let mut loss = T::zero();
                    let grad = prediction
                        .iter()
                        .zip(t)
                        .map(|(&p, &y)| {
                            loss = loss - y * (p + eps).ln();
                            -y / (p + eps)
                        })
                        .collect();
                    Ok((loss, grad))
                }
            }
        }
    }
}
