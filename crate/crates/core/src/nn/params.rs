use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// One affine map: `weight` is `out × in`, `bias` has length `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Matrix::zeros(fan_out, fan_in),
            bias: vec![T::zero(); fan_out],
        }
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` with zero bias.
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut layer = Self::zeros(fan_in, fan_out);
        for w in layer.weight.as_mut_slice() {
            *w = T::of(rng.random_range(-bound..=bound));
        }
        layer
    }

    #[inline]
    pub fn fan_in(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn fan_out(&self) -> usize {
        self.weight.rows()
    }

    fn len(&self) -> usize {
        self.weight.as_slice().len() + self.bias.len()
    }
}

/// Named collection of dense layers; the unit of checkpointing and optimization.
///
/// Entry order is insertion order and is part of the on-disk format.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<T> {
    entries: Vec<(String, Dense<T>)>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, layer: Dense<T>) -> Result<()> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(Error::config(format!("duplicate parameter name {name}")));
        }
        self.entries.push((name, layer));
        Ok(())
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Result<&Dense<T>> {
        self.index_of(name)
            .map(|i| &self.entries[i].1)
            .ok_or_else(|| Error::config(format!("missing parameter {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Dense<T>> {
        match self.index_of(name) {
            Some(i) => Ok(&mut self.entries[i].1),
            None => Err(Error::config(format!("missing parameter {name}"))),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Dense<T>)> {
        self.entries.iter().map(|(n, d)| (n.as_str(), d))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Dense<T>)> {
        self.entries.iter_mut().map(|(n, d)| (n.as_str(), d))
    }

    /// Same names and shapes, all values zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(n, d)| (n.clone(), Dense::zeros(d.fan_in(), d.fan_out())))
                .collect(),
        }
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((a, da), (b, db))| a == b && da.weight.shape() == db.weight.shape())
    }

    pub fn check_layout(&self, other: &Self) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::config("parameter sets have different layouts"))
        }
    }

    /// Total number of scalar coordinates (weights and biases).
    pub fn num_coords(&self) -> usize {
        self.entries.iter().map(|(_, d)| d.len()).sum()
    }

    fn locate(&self, mut i: usize) -> (usize, usize) {
        for (e, (_, d)) in self.entries.iter().enumerate() {
            if i < d.len() {
                return (e, i);
            }
            i -= d.len();
        }
        panic!("coordinate out of range");
    }

    /// Coordinate `i` in flat order: each entry's weights then its bias.
    pub fn coord(&self, i: usize) -> T {
        let (e, j) = self.locate(i);
        let d = &self.entries[e].1;
        let nw = d.weight.as_slice().len();
        if j < nw {
            d.weight.as_slice()[j]
        } else {
            d.bias[j - nw]
        }
    }

    pub fn set_coord(&mut self, i: usize, v: T) {
        let (e, j) = self.locate(i);
        let d = &mut self.entries[e].1;
        let nw = d.weight.as_slice().len();
        if j < nw {
            d.weight.as_mut_slice()[j] = v;
        } else {
            d.bias[j - nw] = v;
        }
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.entries
            .iter()
            .flat_map(|(_, d)| d.weight.as_slice().iter().chain(d.bias.iter()).copied())
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| v == T::zero())
    }

    /// Applies `f(self_value, other_value)` coordinatewise, in place.
    pub fn zip_apply(&mut self, other: &Self, mut f: impl FnMut(&mut T, T)) {
        debug_assert!(self.same_layout(other));
        for ((_, a), (_, b)) in self.entries.iter_mut().zip(&other.entries) {
            for (x, &y) in a.weight.as_mut_slice().iter_mut().zip(b.weight.as_slice()) {
                f(x, y);
            }
            for (x, &y) in a.bias.iter_mut().zip(&b.bias) {
                f(x, y);
            }
        }
    }

    pub fn map_inplace(&mut self, mut f: impl FnMut(&mut T)) {
        for (_, d) in self.entries.iter_mut() {
            d.weight.as_mut_slice().iter_mut().for_each(&mut f);
            d.bias.iter_mut().for_each(&mut f);
        }
    }

    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        self.zip_apply(other, |x, y| *x = *x + scale * y);
    }

    /// Largest absolute coordinate difference; `None` on layout mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        if !self.same_layout(other) {
            return None;
        }
        Some(
            self.values()
                .zip(other.values())
                .fold(T::zero(), |m, (a, b)| m.max((a - b).abs())),
        )
    }
}
