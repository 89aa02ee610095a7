use crate::nn::ParamSet;
use crate::scalar::Scalar;

/// Central finite-difference gradient of `loss` at `params`.
pub fn finite_difference<T, F>(params: &ParamSet<T>, step: T, mut loss: F) -> ParamSet<T>
where
    T: Scalar,
    F: FnMut(&ParamSet<T>) -> T,
{
    let mut probe = params.clone();
    let mut grads = params.zeros_like();
    let two = T::of(2.0);
    for i in 0..params.num_coords() {
        let x = params.coord(i);
        probe.set_coord(i, x + step);
        let up = loss(&probe);
        probe.set_coord(i, x - step);
        let down = loss(&probe);
        probe.set_coord(i, x);
        grads.set_coord(i, (up - down) / (two * step));
    }
    grads
}

/// `|a − b| / max(|a|, |b|, floor)`; the floor keeps near-zero pairs from
/// reporting spurious relative error.
pub fn relative_error<T: Scalar>(a: T, b: T, floor: T) -> T {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Worst coordinatewise [`relative_error`] between two gradient sets.
pub fn max_relative_error<T: Scalar>(analytic: &ParamSet<T>, numeric: &ParamSet<T>, floor: T) -> T {
    assert!(analytic.same_layout(numeric), "gradient layouts differ");
    analytic
        .values()
        .zip(numeric.values())
        .map(|(a, b)| relative_error(a, b, floor))
        .fold(T::zero(), T::max)
}
