//! A small fully connected generator mapping a flow condition to a field.
//!
//! Hidden layers use a leaky rectifier; the output layer is affine followed
//! by a clamp to `[0, 1]`. All parameters live in one flat vector, layer by
//! layer, each layer storing its `out × in` weight matrix row-major followed
//! by its `out` biases.
//!
//! Batched passes parallelize over independent rows only. Every reduction
//! runs in a fixed order, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::rng::SeedStream;
use crate::synthetic::FlowCondition;

#[derive(Debug, Clone, Copy, PartialEq)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl LayerShape {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    fn biases(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.inputs * self.outputs;
        start..start + self.outputs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNet {
    sizes: Vec<usize>,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
    leaky_slope: f64,
    height: usize,
    width: usize,
}

/// Gradients in the same flat layout as [`GeneratorNet::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads(pub Vec<f64>);

impl ParamGrads {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Activations kept from a batched forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    /// `activations[l]` is the input to layer `l` (batch × sizes[l]).
    activations: Vec<Vec<f64>>,
    /// Pre-activations of every layer (batch × sizes[l + 1]).
    pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Clamped network outputs, `batch × (height · width)` row-major.
    pub fn outputs(&self) -> &[f64] {
        self.activations.last().expect("at least the input layer")
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl GeneratorNet {
    /// Default desk-scale architecture `2 → 64 → 256 → h·w`.
    pub fn default_hidden() -> Vec<usize> {
        vec![64, 256]
    }

    /// Network with all-zero parameters.
    pub fn zeros(hidden: &[usize], height: usize, width: usize, leaky_slope: f64) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Config(format!("output shape {height}x{width} is empty")));
        }
        if hidden.contains(&0) {
            return Err(Error::Config("hidden layers must be non-empty".into()));
        }
        if !(leaky_slope.is_finite() && leaky_slope >= 0.0) {
            return Err(Error::Config(format!("leaky slope must be non-negative, got {leaky_slope}")));
        }
        let mut sizes = vec![2];
        sizes.extend_from_slice(hidden);
        sizes.push(height * width);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for pair in sizes.windows(2) {
            layers.push(LayerShape {
                inputs: pair[0],
                outputs: pair[1],
                offset,
            });
            offset += pair[0] * pair[1] + pair[1];
        }
        Ok(GeneratorNet {
            sizes,
            layers,
            params: vec![0.0; offset],
            leaky_slope,
            height,
            width,
        })
    }

    /// Seeded initialization: uniform He-style hidden weights, small output
    /// weights and mid-range output biases so outputs start inside `(0, 1)`.
    pub fn init(hidden: &[usize], height: usize, width: usize, leaky_slope: f64, seed: u64) -> Result<Self> {
        let mut net = GeneratorNet::zeros(hidden, height, width, leaky_slope)?;
        let mut rng = SeedStream::new(seed);
        let last = net.layers.len() - 1;
        for (l, layer) in net.layers.clone().iter().enumerate() {
            let gain = if l == last {
                0.25
            } else {
                (2.0 / (1.0 + leaky_slope * leaky_slope)).sqrt()
            };
            let bound = gain * (3.0 / layer.inputs as f64).sqrt();
            for p in &mut net.params[layer.weights()] {
                *p = rng.uniform(-bound, bound);
            }
            let bias = if l == last { 0.5 } else { 0.0 };
            for p in &mut net.params[layer.biases()] {
                *p = bias;
            }
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn output_shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn leaky_slope(&self) -> f64 {
        self.leaky_slope
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Replaces every parameter. Fails on length mismatch or non-finite values.
    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::shape(
                format!("{} parameters", self.params.len()),
                format!("{} parameters", params.len()),
            ));
        }
        if let Some((index, &value)) = params.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index, value });
        }
        self.params = params;
        Ok(())
    }

    /// Forward pass on a batch of network inputs.
    pub fn forward_batch(&self, inputs: &[[f64; 2]]) -> ForwardCache {
        let batch = inputs.len();
        let mut activations = vec![inputs.iter().flat_map(|x| x.iter().copied()).collect::<Vec<f64>>()];
        let mut pre = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let w = &self.params[layer.weights()];
            let b = &self.params[layer.biases()];
            let x = activations.last().unwrap();
            let mut z = vec![0.0; batch * layer.outputs];
            z.par_chunks_mut(layer.outputs)
                .zip(x.par_chunks(layer.inputs))
                .for_each(|(zs, xs)| {
                    for (o, zo) in zs.iter_mut().enumerate() {
                        let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
                        *zo = b[o] + dot(row, xs);
                    }
                });
            let a: Vec<f64> = if l == last {
                z.iter().map(|&v| v.clamp(0.0, 1.0)).collect()
            } else {
                let slope = self.leaky_slope;
                z.iter().map(|&v| if v > 0.0 { v } else { slope * v }).collect()
            };
            pre.push(z);
            activations.push(a);
        }
        ForwardCache {
            batch,
            activations,
            pre,
        }
    }

    /// Reverse-mode gradients of a scalar loss given its gradient with
    /// respect to the clamped outputs (`batch × h·w`, summed over the batch).
    ///
    /// The clamp passes gradient strictly inside `(0, 1)` and blocks it at
    /// the rails; the leaky rectifier uses slope 1 for positive
    /// pre-activations and `leaky_slope` otherwise.
    pub fn backward_batch(&self, cache: &ForwardCache, output_grad: &[f64]) -> ParamGrads {
        let batch = cache.batch;
        let last = self.layers.len() - 1;
        assert_eq!(output_grad.len(), batch * self.layers[last].outputs, "output gradient shape");
        let mut grads = vec![0.0; self.params.len()];
        let mut delta: Vec<f64> = output_grad
            .iter()
            .zip(&cache.pre[last])
            .map(|(&g, &z)| if z > 0.0 && z < 1.0 { g } else { 0.0 })
            .collect();

        for l in (0..self.layers.len()).rev() {
            let layer = self.layers[l];
            let x = &cache.activations[l];
            let (n_in, n_out) = (layer.inputs, layer.outputs);

            let (gw, gb) = grads[layer.offset..layer.offset + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            gw.par_chunks_mut(n_in).zip(gb.par_iter_mut()).enumerate().for_each(|(o, (gw_row, gb_o))| {
                for s in 0..batch {
                    let d = delta[s * n_out + o];
                    if d != 0.0 {
                        axpy(d, &x[s * n_in..(s + 1) * n_in], gw_row);
                    }
                    *gb_o += d;
                }
            });

            if l == 0 {
                break;
            }
            let w = &self.params[layer.weights()];
            let mut upstream = vec![0.0; batch * n_in];
            upstream
                .par_chunks_mut(n_in)
                .zip(delta.par_chunks(n_out))
                .for_each(|(up, ds)| {
                    for (o, &d) in ds.iter().enumerate() {
                        if d != 0.0 {
                            axpy(d, &w[o * n_in..(o + 1) * n_in], up);
                        }
                    }
                });
            let slope = self.leaky_slope;
            for (u, &z) in upstream.iter_mut().zip(&cache.pre[l - 1]) {
                if z <= 0.0 {
                    *u *= slope;
                }
            }
            delta = upstream;
        }
        ParamGrads(grads)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Generated field for one condition.
pub fn net_forward(net: &GeneratorNet, condition: &FlowCondition) -> Field {
    let cache = net.forward_batch(&[condition.normalized()]);
    let (h, w) = net.output_shape();
    Field::from_parts(h, w, cache.outputs().to_vec())
}

/// Parameter gradients for one condition given the loss gradient with
/// respect to the generated field.
pub fn net_backward(net: &GeneratorNet, condition: &FlowCondition, output_grad: &Field) -> Result<ParamGrads> {
    let (h, w) = net.output_shape();
    if output_grad.shape() != (h, w) {
        return Err(Error::shape(
            format!("{h}x{w}"),
            format!("{}x{}", output_grad.height(), output_grad.width()),
        ));
    }
    let cache = net.forward_batch(&[condition.normalized()]);
    Ok(net.backward_batch(&cache, output_grad.values()))
}
