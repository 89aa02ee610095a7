use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{softmax_in_place, Dense, Matrix, ParamSet};
use crate::scalar::Scalar;

/// Output nonlinearity of the last layer. Hidden layers are always ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Softmax,
    Sigmoid,
}

/// Layer sizes of a feed-forward stack, input first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub sizes: Vec<usize>,
    pub output: Activation,
}

impl MlpSpec {
    pub fn new(sizes: Vec<usize>, output: Activation) -> Result<Self> {
        let spec = Self { sizes, output };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::config(
                "an MLP needs an input size and at least one layer",
            ));
        }
        if self.sizes.contains(&0) {
            return Err(Error::config("MLP layer sizes must be positive"));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().expect("validated spec")
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output
        } else {
            Activation::Relu
        }
    }
}

/// Pre- and post-activation values of every layer for one batch of inputs.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    input: Matrix<T>,
    pre: Vec<Matrix<T>>,
    post: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn num_layers(&self) -> usize {
        self.pre.len()
    }

    pub fn pre_activation(&self, layer: usize) -> &Matrix<T> {
        &self.pre[layer]
    }

    pub fn post_activation(&self, layer: usize) -> &Matrix<T> {
        &self.post[layer]
    }

    pub fn output(&self) -> &Matrix<T> {
        self.post.last().expect("at least one layer")
    }

    pub fn input(&self) -> &Matrix<T> {
        &self.input
    }
}

/// An [`MlpSpec`] bound to a name prefix inside a [`ParamSet`].
///
/// Layer `i` lives under `"{prefix}.{i}"`; a single-layer stack uses the bare
/// prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    spec: MlpSpec,
    names: Vec<String>,
}

impl Mlp {
    pub fn new(prefix: &str, spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let names = if spec.num_layers() == 1 {
            vec![prefix.to_string()]
        } else {
            (0..spec.num_layers())
                .map(|i| format!("{prefix}.{i}"))
                .collect()
        };
        Ok(Self { spec, names })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layer_names(&self) -> &[String] {
        &self.names
    }

    pub fn init_into<T: Scalar, R: Rng + ?Sized>(
        &self,
        params: &mut ParamSet<T>,
        rng: &mut R,
    ) -> Result<()> {
        for (i, name) in self.names.iter().enumerate() {
            let layer = Dense::glorot(self.spec.sizes[i], self.spec.sizes[i + 1], rng);
            params.insert(name.clone(), layer)?;
        }
        Ok(())
    }

    pub fn check_params<T: Scalar>(&self, params: &ParamSet<T>) -> Result<()> {
        for (i, name) in self.names.iter().enumerate() {
            let d = params.get(name)?;
            if d.fan_in() != self.spec.sizes[i]
                || d.fan_out() != self.spec.sizes[i + 1]
                || d.bias.len() != d.fan_out()
            {
                return Err(Error::config(format!(
                    "{name} is {}x{}, expected {}x{}",
                    d.fan_out(),
                    d.fan_in(),
                    self.spec.sizes[i + 1],
                    self.spec.sizes[i]
                )));
            }
        }
        Ok(())
    }

    /// Forward pass for a batch; one input per row.
    pub fn forward<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        input: &Matrix<T>,
    ) -> Result<(Matrix<T>, ForwardCache<T>)> {
        if input.cols() != self.spec.input_size() {
            return Err(Error::config(format!(
                "input width {} does not match layer size {}",
                input.cols(),
                self.spec.input_size()
            )));
        }
        let n = self.spec.num_layers();
        let mut pre = Vec::with_capacity(n);
        let mut post: Vec<Matrix<T>> = Vec::with_capacity(n);
        for (i, name) in self.names.iter().enumerate() {
            let layer = params.get(name)?;
            let x = if i == 0 { input } else { &post[i - 1] };
            if layer.fan_in() != x.cols() {
                return Err(Error::config(format!("{name} fan-in mismatch")));
            }
            let mut z = x.matmul_nt(&layer.weight);
            for r in 0..z.rows() {
                for (v, &b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v = *v + b;
                }
            }
            let a = activate(self.spec.activation(i), &z);
            pre.push(z);
            post.push(a);
        }
        let out = post.last().expect("at least one layer").clone();
        Ok((
            out,
            ForwardCache {
                input: input.clone(),
                pre,
                post,
            },
        ))
    }

    /// Backward pass: accumulates parameter gradients into `grads` and
    /// returns the gradient with respect to the input batch.
    pub fn backward<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        cache: &ForwardCache<T>,
        output_grad: &Matrix<T>,
        grads: &mut ParamSet<T>,
    ) -> Result<Matrix<T>> {
        let n = self.spec.num_layers();
        if cache.num_layers() != n {
            return Err(Error::config("forward cache has a different layer count"));
        }
        if output_grad.shape() != cache.output().shape() {
            return Err(Error::config(format!(
                "output gradient is {:?}, forward output is {:?}",
                output_grad.shape(),
                cache.output().shape()
            )));
        }
        let mut delta = output_grad.clone();
        for i in (0..n).rev() {
            let layer = params.get(&self.names[i])?;
            if layer.fan_out() != cache.pre[i].cols() {
                return Err(Error::config(format!(
                    "{} does not match the forward cache",
                    self.names[i]
                )));
            }
            let dz = activation_backward(
                self.spec.activation(i),
                &cache.pre[i],
                &cache.post[i],
                &delta,
            );
            let x = if i == 0 {
                &cache.input
            } else {
                &cache.post[i - 1]
            };
            let g = grads.get_mut(&self.names[i])?;
            dz.matmul_tn_acc(x, &mut g.weight);
            for r in 0..dz.rows() {
                for (b, &d) in g.bias.iter_mut().zip(dz.row(r)) {
                    *b = *b + d;
                }
            }
            delta = dz.matmul(&layer.weight);
        }
        Ok(delta)
    }
}

fn activate<T: Scalar>(act: Activation, z: &Matrix<T>) -> Matrix<T> {
    let mut a = z.clone();
    match act {
        Activation::Identity => {}
        Activation::Relu => a
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = v.max(T::zero())),
        Activation::Sigmoid => a
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = T::one() / (T::one() + (-*v).exp())),
        Activation::Softmax => {
            for r in 0..a.rows() {
                softmax_in_place(a.row_mut(r));
            }
        }
    }
    a
}

fn activation_backward<T: Scalar>(
    act: Activation,
    pre: &Matrix<T>,
    post: &Matrix<T>,
    grad: &Matrix<T>,
) -> Matrix<T> {
    let mut dz = grad.clone();
    match act {
        Activation::Identity => {}
        Activation::Relu => {
            for (d, &z) in dz.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                if z <= T::zero() {
                    *d = T::zero();
                }
            }
        }
        Activation::Sigmoid => {
            for (d, &y) in dz.as_mut_slice().iter_mut().zip(post.as_slice()) {
                *d = *d * y * (T::one() - y);
            }
        }
        Activation::Softmax => {
            for r in 0..dz.rows() {
                let y = post.row(r);
                let dot: T = y.iter().zip(grad.row(r)).map(|(&a, &b)| a * b).sum();
                for (d, &yi) in dz.row_mut(r).iter_mut().zip(y) {
                    *d = yi * (*d - dot);
                }
            }
        }
    }
    dz
}

const STANDALONE_PREFIX: &str = "layer";

/// Fresh parameters for a standalone network, deterministic in `seed`.
pub fn init_params<T: Scalar>(spec: &MlpSpec, seed: u64) -> Result<ParamSet<T>> {
    let mlp = Mlp::new(STANDALONE_PREFIX, spec.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    mlp.init_into(&mut params, &mut rng)?;
    Ok(params)
}

/// Single-input forward pass over parameters made by [`init_params`].
pub fn mlp_forward<T: Scalar>(
    spec: &MlpSpec,
    params: &ParamSet<T>,
    input: &[T],
) -> Result<(Vec<T>, ForwardCache<T>)> {
    let mlp = Mlp::new(STANDALONE_PREFIX, spec.clone())?;
    let (out, cache) = mlp.forward(params, &Matrix::row_vector(input))?;
    Ok((out.into_vec(), cache))
}

/// Gradient of a scalar loss with respect to every parameter, given the
/// loss gradient at the network output.
pub fn mlp_backward<T: Scalar>(
    spec: &MlpSpec,
    params: &ParamSet<T>,
    cache: &ForwardCache<T>,
    output_gradient: &[T],
) -> Result<ParamSet<T>> {
    let mlp = Mlp::new(STANDALONE_PREFIX, spec.clone())?;
    mlp.check_params(params)?;
    let mut grads = params.zeros_like();
    mlp.backward(
        params,
        cache,
        &Matrix::row_vector(output_gradient),
        &mut grads,
    )?;
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_zero() {
        let spec = MlpSpec::new(vec![3, 4, 2], Activation::Identity).unwrap();
        let params = init_params::<f64>(&spec, 1).unwrap().zeros_like();
        let (out, _) = mlp_forward(&spec, &params, &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_with_relu_clips_negatives() {
        let spec = MlpSpec::new(vec![2, 2], Activation::Relu).unwrap();
        let mut params = init_params::<f64>(&spec, 1).unwrap().zeros_like();
        let w = &mut params.get_mut("layer").unwrap().weight;
        w.set(0, 0, 1.0);
        w.set(1, 1, 1.0);
        let (out, _) = mlp_forward(&spec, &params, &[-1.0, 2.0]).unwrap();
        assert_eq!(out, vec![0.0, 2.0]);
    }

    #[test]
    fn two_three_two_matches_hand_chain() {
        let spec = MlpSpec::new(vec![2, 3, 2], Activation::Identity).unwrap();
        let mut params = init_params::<f64>(&spec, 9).unwrap();
        params.get_mut("layer.0").unwrap().bias = vec![0.1, -0.2, 0.3];
        params.get_mut("layer.1").unwrap().bias = vec![-0.05, 0.07];
        let x = [0.7, -1.3];
        let l0 = params.get("layer.0").unwrap();
        let l1 = params.get("layer.1").unwrap();
        let mut h = [0.0; 3];
        for (j, hj) in h.iter_mut().enumerate() {
            let z = l0.weight.get(j, 0) * x[0] + l0.weight.get(j, 1) * x[1] + l0.bias[j];
            *hj = if z > 0.0 { z } else { 0.0 };
        }
        let (out, _) = mlp_forward(&spec, &params, &x).unwrap();
        for (k, &o) in out.iter().enumerate() {
            let y = l1.weight.get(k, 0) * h[0]
                + l1.weight.get(k, 1) * h[1]
                + l1.weight.get(k, 2) * h[2]
                + l1.bias[k];
            assert!((o - y).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let spec = MlpSpec::new(vec![3, 5, 2], Activation::Identity).unwrap();
        let params = init_params::<f64>(&spec, 3).unwrap();
        let (_, cache) = mlp_forward(&spec, &params, &[0.2, 0.4, -0.9]).unwrap();
        let g = mlp_backward(&spec, &params, &cache, &[0.0, 0.0]).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let spec = MlpSpec::new(vec![3, 2], Activation::Identity).unwrap();
        let params = init_params::<f64>(&spec, 4).unwrap();
        let x = [0.5, -1.0, 2.0];
        let t = [0.3, 0.1];
        let (y, cache) = mlp_forward(&spec, &params, &x).unwrap();
        let dy: Vec<f64> = y.iter().zip(t).map(|(a, b)| a - b).collect();
        let g = mlp_backward(&spec, &params, &cache, &dy).unwrap();
        let gw = &g.get("layer").unwrap().weight;
        for (i, d) in dy.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                assert!((gw.get(i, j) - d * xj).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn init_is_deterministic_bounded_and_bias_free() {
        let spec = MlpSpec::new(vec![15, 50, 50, 5], Activation::Identity).unwrap();
        let a = init_params::<f64>(&spec, 11).unwrap();
        assert_eq!(a, init_params::<f64>(&spec, 11).unwrap());
        assert_ne!(a, init_params::<f64>(&spec, 12).unwrap());
        let first = a.get("layer.0").unwrap();
        let bound = (6.0f64 / 65.0).sqrt();
        assert!(first.weight.as_slice().iter().all(|w| w.abs() <= bound));
        assert!(a.iter().all(|(_, d)| d.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn wrong_input_length_is_a_config_error() {
        let spec = MlpSpec::new(vec![3, 2], Activation::Identity).unwrap();
        let params = init_params::<f64>(&spec, 1).unwrap();
        assert!(matches!(
            mlp_forward(&spec, &params, &[1.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn spec_needs_a_layer() {
        assert!(MlpSpec::new(vec![4], Activation::Identity).is_err());
        assert!(MlpSpec::new(vec![4, 0, 2], Activation::Identity).is_err());
    }
}
