//! Feed-forward networks with explicit forward traces.
//!
//! A [`MlpModel`] is a chain of [`DenseLayer`]s computing
//! `a_l = act_l(a_{l-1} W_l + b_l)` on row-major batches (one sample per
//! row). [`MlpModel::forward`] returns the outputs together with a
//! [`ForwardTrace`] caching every pre-activation and activation;
//! [`MlpModel::backward`] takes that trace and an arbitrary gradient with
//! respect to the outputs, so any loss that can produce `∂L/∂outputs` can
//! drive training.

mod activation;
pub mod snapshot;

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

pub use activation::Activation;

use crate::error::{Error, Result};

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

fn fresh_version() -> u64 {
    NEXT_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// Layer sizes (input first) plus one activation per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl ModelSpec {
    pub fn new(sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        let spec = Self { sizes, activations };
        spec.validate()?;
        Ok(spec)
    }

    /// Every hidden layer uses `hidden`, the last layer uses `output`.
    pub fn classifier(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        let layers = sizes.len().saturating_sub(1);
        let activations = (0..layers)
            .map(|i| if i + 1 == layers { output } else { hidden })
            .collect();
        Self::new(sizes.to_vec(), activations)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::Config(
                "model needs an input size and at least one layer".into(),
            ));
        }
        if let Some(i) = self.sizes.iter().position(|s| *s == 0) {
            return Err(Error::Config(format!("layer size {i} is zero")));
        }
        if self.activations.len() != self.sizes.len() - 1 {
            return Err(Error::Config(format!(
                "{} layers but {} activations",
                self.sizes.len() - 1,
                self.activations.len()
            )));
        }
        let last = self.activations.len() - 1;
        if let Some(i) = self.activations[..last]
            .iter()
            .position(|a| *a == Activation::Softmax)
        {
            return Err(Error::Config(format!(
                "softmax is only allowed on the final layer (found on layer {i})"
            )));
        }
        Ok(())
    }
}

/// `act(x W + b)` with `W` stored `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Array2<f64>,
    bias: Array1<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.ncols() {
            return Err(Error::Dimension(format!(
                "bias length {} vs fan_out {}",
                bias.len(),
                weights.ncols()
            )));
        }
        if !weights.iter().chain(bias.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("layer parameters".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    fn pre_activation(&self, input: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights);
        z += &self.bias;
        z
    }
}

/// Per-layer inputs, pre-activations and activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    version: u64,
    input: Array2<f64>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn batch_size(&self) -> usize {
        self.input.nrows()
    }

    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.pre
    }

    pub fn activations(&self) -> &[Array2<f64>] {
        &self.post
    }

    /// The network outputs recorded by this trace.
    pub fn outputs(&self) -> &Array2<f64> {
        self.post.last().expect("trace has at least one layer")
    }
}

/// Gradient of one layer's weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Parameter gradients for every layer, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    /// Flattened in the same order as [`MlpModel::parameters`].
    pub fn to_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied())
            .collect()
    }
}

/// A dense feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    version: u64,
}

/// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
///
/// Identical `(spec, seed)` pairs give bit-identical models.
pub fn init_model(spec: &ModelSpec, seed: u64) -> Result<MlpModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = spec
        .sizes
        .windows(2)
        .zip(&spec.activations)
        .map(|(dims, act)| {
            let (fan_in, fan_out) = (dims[0], dims[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit)
                .map_err(|e| Error::Config(format!("init range: {e}")))?;
            let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(&mut rng));
            DenseLayer::new(weights, Array1::zeros(fan_out), *act)
        })
        .collect::<Result<Vec<_>>>()?;
    MlpModel::new(spec.sizes[0], layers)
}

impl MlpModel {
    pub fn new(input_dim: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("model needs at least one layer".into()));
        }
        let mut width = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.fan_in() != width {
                return Err(Error::Dimension(format!(
                    "layer {i} expects {} inputs but receives {width}",
                    layer.fan_in()
                )));
            }
            if layer.activation == Activation::Softmax && i + 1 != layers.len() {
                return Err(Error::Config(format!(
                    "softmax is only allowed on the final layer (found on layer {i})"
                )));
            }
            width = layer.fan_out();
        }
        Ok(Self {
            input_dim,
            layers,
            version: fresh_version(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::fan_out)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().map_or(Activation::Identity, |l| l.activation)
    }

    fn check_input(&self, inputs: &ArrayView2<f64>) -> Result<()> {
        if inputs.ncols() != self.input_dim {
            return Err(Error::Dimension(format!(
                "input width {} vs model input {}",
                inputs.ncols(),
                self.input_dim
            )));
        }
        if inputs.nrows() == 0 {
            return Err(Error::Dimension("empty input batch".into()));
        }
        Ok(())
    }

    /// Runs the network and keeps everything [`backward`](Self::backward) needs.
    pub fn forward(&self, inputs: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardTrace)> {
        self.check_input(&inputs)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = match post.last() {
                Some(prev) => layer.pre_activation(&prev.view()),
                None => layer.pre_activation(&inputs),
            };
            post.push(layer.activation.apply(&z));
            pre.push(z);
        }
        let outputs = post.last().cloned().expect("model has layers");
        if !outputs.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("network outputs".into()));
        }
        let trace = ForwardTrace {
            version: self.version,
            input: inputs.to_owned(),
            pre,
            post,
        };
        Ok((outputs, trace))
    }

    /// Outputs only, processed in chunks of `chunk` rows.
    pub fn predict(&self, inputs: ArrayView2<f64>, chunk: usize) -> Result<Array2<f64>> {
        self.check_input(&inputs)?;
        let chunk = chunk.max(1);
        let mut out = Array2::zeros((inputs.nrows(), self.output_dim()));
        for (rows, mut dst) in inputs
            .axis_chunks_iter(Axis(0), chunk)
            .zip(out.axis_chunks_iter_mut(Axis(0), chunk))
        {
            let mut a = rows.to_owned();
            for layer in &self.layers {
                a = layer.activation.apply(&layer.pre_activation(&a.view()));
            }
            dst.assign(&a);
        }
        Ok(out)
    }

    fn check_trace(&self, trace: &ForwardTrace, grad: &ArrayView2<f64>) -> Result<()> {
        if trace.version != self.version {
            return Err(Error::StaleTrace(format!(
                "trace version {} vs model version {}",
                trace.version, self.version
            )));
        }
        if trace.pre.len() != self.layers.len() {
            return Err(Error::StaleTrace(format!(
                "trace has {} layers, model has {}",
                trace.pre.len(),
                self.layers.len()
            )));
        }
        let expected = (trace.batch_size(), self.output_dim());
        if grad.dim() != expected {
            return Err(Error::Dimension(format!(
                "output gradient {:?} vs expected {:?}",
                grad.dim(),
                expected
            )));
        }
        Ok(())
    }

    /// Parameter gradients given `∂L/∂outputs`.
    ///
    /// Linear in `grad_outputs`.
    pub fn backward(&self, trace: &ForwardTrace, grad_outputs: ArrayView2<f64>) -> Result<Gradients> {
        self.check_trace(trace, &grad_outputs)?;
        let top = self.layers.len() - 1;
        let dz = self.layers[top]
            .activation
            .backward(&trace.pre[top], &trace.post[top], &grad_outputs);
        Ok(self.backprop(trace, dz))
    }

    /// Parameter gradients given `∂L/∂z` for the final pre-activation.
    ///
    /// Used for softmax cross-entropy, whose logit gradient `(f − y)/m` is
    /// better conditioned than routing `−y/f` through the softmax Jacobian.
    pub fn backward_from_logits(
        &self,
        trace: &ForwardTrace,
        grad_logits: ArrayView2<f64>,
    ) -> Result<Gradients> {
        self.check_trace(trace, &grad_logits)?;
        Ok(self.backprop(trace, grad_logits.to_owned()))
    }

    fn backprop(&self, trace: &ForwardTrace, mut dz: Array2<f64>) -> Gradients {
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let a_prev = if l == 0 { &trace.input } else { &trace.post[l - 1] };
            let weights = a_prev.t().dot(&dz);
            let bias = dz.sum_axis(Axis(0));
            if l > 0 {
                let da = dz.dot(&self.layers[l].weights.t());
                let below = &self.layers[l - 1];
                dz = below
                    .activation
                    .backward(&trace.pre[l - 1], &trace.post[l - 1], &da.view());
            }
            layers.push(LayerGradient { weights, bias });
        }
        layers.reverse();
        Gradients { layers }
    }

    /// `θ ← θ − lr · g` for every parameter.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Dimension(format!(
                "{} gradient layers for {} model layers",
                grads.layers.len(),
                self.layers.len()
            )));
        }
        for (layer, g) in self.layers.iter().zip(&grads.layers) {
            if layer.weights.dim() != g.weights.dim() || layer.bias.len() != g.bias.len() {
                return Err(Error::Dimension("gradient shape does not match layer".into()));
            }
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.scaled_add(-lr, &g.weights);
            layer.bias.scaled_add(-lr, &g.bias);
        }
        self.version = fresh_version();
        Ok(())
    }

    /// All parameters, layer by layer: weights row-major, then bias.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    /// Inverse of [`parameters`](Self::parameters).
    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::Dimension(format!(
                "{} values for {} parameters",
                values.len(),
                self.parameter_count()
            )));
        }
        let mut rest = values;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            let (b, tail) = tail.split_at(layer.bias.len());
            layer.weights.iter_mut().zip(w).for_each(|(d, s)| *d = *s);
            layer.bias.iter_mut().zip(b).for_each(|(d, s)| *d = *s);
            rest = tail;
        }
        self.version = fresh_version();
        Ok(())
    }
}

/// Fraction of rows whose argmax differs from the label.
///
/// Ties go to the lowest class index.
pub fn error_rate(outputs: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let classes = outputs.ncols();
    if classes < 2 {
        return Err(Error::Dimension(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if outputs.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::Dimension(format!(
            "{} output rows vs {} labels",
            outputs.nrows(),
            labels.len()
        )));
    }
    let mut wrong = 0usize;
    for (row, (out, &label)) in outputs.axis_iter(Axis(0)).zip(labels).enumerate() {
        if label >= classes {
            return Err(Error::LabelRange {
                row,
                label,
                classes,
            });
        }
        if argmax(out.iter().copied()) != label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / labels.len() as f64)
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Rows of the `classes`-dimensional identity selected by `labels`.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((labels.len(), classes));
    for (row, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::LabelRange {
                row,
                label,
                classes,
            });
        }
        out[[row, label]] = 1.0;
    }
    Ok(out)
}
