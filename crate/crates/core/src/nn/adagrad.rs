use crate::error::{Error, Result};
use crate::nn::ParamSet;
use crate::scalar::Scalar;

/// Per-coordinate AdaGrad accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGradState<T> {
    accumulator: ParamSet<T>,
    pub learning_rate: T,
    pub epsilon: T,
}

impl<T: Scalar> AdaGradState<T> {
    pub fn new(params: &ParamSet<T>, learning_rate: T) -> Self {
        Self {
            accumulator: params.zeros_like(),
            learning_rate,
            epsilon: T::stabilizer(),
        }
    }

    pub fn accumulator(&self) -> &ParamSet<T> {
        &self.accumulator
    }

    /// `acc += g²; θ −= η·g / (√acc + ε)`.
    ///
    /// Rejects the whole step, leaving parameters and state untouched, if any
    /// gradient coordinate is non-finite.
    pub fn update(&mut self, params: &mut ParamSet<T>, grads: &ParamSet<T>) -> Result<()> {
        params.check_layout(grads)?;
        self.accumulator.check_layout(grads)?;
        if let Some((name, _)) = grads
            .iter()
            .find(|(_, d)| !d.weight.is_finite() || d.bias.iter().any(|b| !b.is_finite()))
        {
            return Err(Error::Training(format!("non-finite gradient in {name}")));
        }
        self.accumulator.zip_apply(grads, |a, g| *a = *a + g * g);
        let (lr, eps) = (self.learning_rate, self.epsilon);
        // accumulator and grads share a layout; walk the three in lockstep
        let acc = &self.accumulator;
        let mut acc_values = acc.values();
        let mut grad_values = grads.values();
        params.map_inplace(|p| {
            let a = acc_values.next().expect("same layout");
            let g = grad_values.next().expect("same layout");
            *p = *p - lr * g / (a.sqrt() + eps);
        });
        Ok(())
    }
}
