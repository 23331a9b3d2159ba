use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{encode_backward, encode_into, EncoderConfig, RectifierError};
use crate::gauss::Vec3;
use crate::rig::BODY_POSE_WIDTH;

/// Width of the rectifier output: δμ (3), δr (4), δs (3).
pub const OUTPUT_WIDTH: usize = 10;

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Shape of the rectification network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RectifierConfig {
    pub encoder: EncoderConfig,
    pub pose_width: usize,
    /// Output widths of the four hidden layers.
    pub hidden_widths: [usize; 4],
    /// Index of the layer that additionally receives the network input.
    pub skip_layer: usize,
    pub activation: Activation,
}

impl Default for RectifierConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            pose_width: BODY_POSE_WIDTH,
            hidden_widths: [128, 164, 128, 128],
            skip_layer: 3,
            activation: Activation::Relu,
        }
    }
}

impl RectifierConfig {
    pub fn input_width(&self) -> usize {
        self.encoder.output_dim() + self.pose_width
    }

    /// `(in, out)` for each of the five affine layers.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(5);
        let mut prev = self.input_width();
        for (i, &w) in self.hidden_widths.iter().chain(std::iter::once(&OUTPUT_WIDTH)).enumerate() {
            let fan_in = if i == self.skip_layer { prev + self.input_width() } else { prev };
            shapes.push((fan_in, w));
            prev = w;
        }
        shapes
    }
}

/// Affine layer `y = W x + b` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl DenseLayer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: DMatrix::zeros(fan_out, fan_in), bias: DVector::zeros(fan_out) }
    }

    /// Uniform in `±1/√fan_in` for weights and biases.
    pub fn fan_in_uniform<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        Self {
            weight: DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound)),
            bias: DVector::from_fn(fan_out, |_, _| rng.random_range(-bound..bound)),
        }
    }

    /// Column-batched forward: `x` is `in × N`.
    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.weight * x;
        for mut col in z.column_iter_mut() {
            col += &self.bias;
        }
        z
    }

    /// Returns `(dW, db, dx)` for upstream `dz` (`out × N`).
    pub fn backward(&self, x: &DMatrix<f64>, dz: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let dw = dz * x.transpose();
        let db = dz.column_sum();
        let dx = self.weight.transpose() * dz;
        (dw, db, dx)
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Weights of the five-layer rectification network.
#[derive(Debug, Clone, PartialEq)]
pub struct RectifierParams {
    pub config: RectifierConfig,
    pub layers: Vec<DenseLayer>,
}

/// Intermediate values of a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub mu_star: Vec<Vec3>,
    input: DMatrix<f64>,
    layer_inputs: Vec<DMatrix<f64>>,
    pre_activations: Vec<DMatrix<f64>>,
    /// `10 × N` network output.
    pub output: DMatrix<f64>,
}

impl RectifierParams {
    /// Hidden layers use fan-in uniform initialization; the head is zero so
    /// the untrained network predicts no correction.
    pub fn new<R: Rng>(config: RectifierConfig, rng: &mut R) -> Self {
        let shapes = config.layer_shapes();
        let last = shapes.len() - 1;
        let layers = shapes
            .iter()
            .enumerate()
            .map(|(i, &(fan_in, fan_out))| {
                if i == last {
                    DenseLayer::zeros(fan_in, fan_out)
                } else {
                    DenseLayer::fan_in_uniform(fan_in, fan_out, rng)
                }
            })
            .collect();
        Self { config, layers }
    }

    pub fn zeros(config: RectifierConfig) -> Self {
        let layers = config.layer_shapes().iter().map(|&(i, o)| DenseLayer::zeros(i, o)).collect();
        Self { config, layers }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// All weights then biases, layer by layer, weights column-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(l.bias.as_slice());
        }
        out
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<(), RectifierError> {
        if flat.len() != self.param_count() {
            return Err(RectifierError::ParamCount { expected: self.param_count(), got: flat.len() });
        }
        let mut i = 0;
        for l in &mut self.layers {
            let n = l.weight.len();
            l.weight.as_mut_slice().copy_from_slice(&flat[i..i + n]);
            i += n;
            let n = l.bias.len();
            l.bias.as_mut_slice().copy_from_slice(&flat[i..i + n]);
            i += n;
        }
        Ok(())
    }

    fn build_input(&self, mu_star: &[Vec3], pose: &[f64]) -> Result<DMatrix<f64>, RectifierError> {
        let cfg = &self.config;
        if pose.len() != cfg.pose_width {
            return Err(RectifierError::InputWidth {
                expected: cfg.input_width(),
                got: cfg.encoder.output_dim() + pose.len(),
            });
        }
        let enc = cfg.encoder.output_dim();
        let width = cfg.input_width();
        let mut input = DMatrix::zeros(width, mu_star.len());
        for (j, mu) in mu_star.iter().enumerate() {
            let mut col = input.column_mut(j);
            let slice = col.as_mut_slice();
            encode_into(mu, &cfg.encoder, &mut slice[..enc]);
            slice[enc..].copy_from_slice(pose);
        }
        Ok(input)
    }

    /// Evaluates the network for every position under one pose.
    pub fn forward_batch(&self, mu_star: &[Vec3], pose: &[f64]) -> Result<ForwardCache, RectifierError> {
        let input = self.build_input(mu_star, pose)?;
        let last = self.layers.len() - 1;
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut h = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let x = if i == self.config.skip_layer {
                let mut cat = DMatrix::zeros(h.nrows() + input.nrows(), h.ncols());
                cat.rows_mut(0, h.nrows()).copy_from(&h);
                cat.rows_mut(h.nrows(), input.nrows()).copy_from(&input);
                cat
            } else {
                h
            };
            let z = layer.forward(&x);
            h = if i == last { z.clone() } else { z.map(|v| self.config.activation.apply(v)) };
            layer_inputs.push(x);
            pre_activations.push(z);
        }
        Ok(ForwardCache { mu_star: mu_star.to_vec(), input, layer_inputs, pre_activations, output: h })
    }

    /// Backpropagates `d_output` (`10 × N`). Returns parameter gradients in
    /// the same shape as `self` and the gradient with respect to each μ*.
    pub fn backward_batch(&self, cache: &ForwardCache, d_output: &DMatrix<f64>) -> (RectifierParams, Vec<Vec3>) {
        let cfg = &self.config;
        let last = self.layers.len() - 1;
        let mut grads = RectifierParams::zeros(cfg.clone());
        let mut d_input = DMatrix::<f64>::zeros(cache.input.nrows(), cache.input.ncols());
        let mut dh = d_output.clone();
        for i in (0..self.layers.len()).rev() {
            let dz = if i == last {
                dh
            } else {
                let z = &cache.pre_activations[i];
                dh.zip_map(z, |g, z| g * cfg.activation.derivative(z))
            };
            let (dw, db, dx) = self.layers[i].backward(&cache.layer_inputs[i], &dz);
            grads.layers[i].weight = dw;
            grads.layers[i].bias = db;
            dh = if i == cfg.skip_layer {
                let prev = dx.nrows() - cache.input.nrows();
                d_input += dx.rows(prev, cache.input.nrows());
                dx.rows(0, prev).into_owned()
            } else {
                dx
            };
        }
        d_input += dh;
        let enc = cfg.encoder.output_dim();
        let d_mu = cache
            .mu_star
            .iter()
            .enumerate()
            .map(|(j, mu)| {
                let col = d_input.column(j);
                encode_backward(mu, &cfg.encoder, &col.as_slice()[..enc])
            })
            .collect();
        (grads, d_mu)
    }
}
