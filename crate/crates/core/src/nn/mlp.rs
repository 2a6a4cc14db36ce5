use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FINAL_LAYER_BOUND: f64 = 0.003;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

/// Dense layer y = act(W x + b) with W stored row-major as outputs × inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out.iter_mut().zip(self.weights.chunks_exact(self.inputs).zip(&self.biases)) {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        match self.activation {
            Activation::Relu => out.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Linear => {}
            Activation::Softmax => softmax_in_place(out),
        }
    }
}

pub fn softmax_in_place(z: &mut [f64]) {
    let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - top).exp();
        total += *v;
    }
    z.iter_mut().for_each(|v| *v /= total);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Post-activation values of every layer for a batch, kept for backward.
/// `values[0]` is the input and `values[l + 1]` the output of layer l, each
/// flattened sample-major.
#[derive(Clone, Debug)]
pub struct Trace {
    batch: usize,
    values: Vec<Vec<f64>>,
}

impl Trace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[f64] {
        self.values.last().expect("input is always present")
    }
}

/// Gradients of a scalar with respect to every parameter and to the input.
/// Shapes mirror the network; input gradients are flattened sample-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GradRecord {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub inputs: Vec<f64>,
    pub loss: f64,
}

impl GradRecord {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
            inputs: Vec::new(),
            loss: 0.0,
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights.iter().chain(&self.biases).flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Weights uniform in ±1/√fan_in for hidden layers and ±`final_bound` for
/// the last layer; biases drawn from the same ranges.
pub fn init_network<R: Rng + ?Sized>(
    sizes: &[usize],
    activations: &[Activation],
    final_bound: f64,
    rng: &mut R,
) -> Result<Mlp> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::Shape(format!("layer sizes {sizes:?} need at least two positive entries")));
    }
    if activations.len() != sizes.len() - 1 {
        return Err(Error::Shape(format!("{} activations for {} layers", activations.len(), sizes.len() - 1)));
    }
    if activations[..activations.len() - 1].contains(&Activation::Softmax) {
        return Err(Error::Shape("softmax is only allowed on the final layer".into()));
    }
    let last = activations.len() - 1;
    let layers = sizes
        .windows(2)
        .zip(activations)
        .enumerate()
        .map(|(k, (io, &activation))| {
            let (inputs, outputs) = (io[0], io[1]);
            let bound = if k == last { final_bound } else { 1.0 / (inputs as f64).sqrt() };
            let mut draw = |n: usize| -> Vec<f64> {
                (0..n).map(|_| if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 }).collect()
            };
            let weights = draw(inputs * outputs);
            let biases = draw(outputs);
            Layer { inputs, outputs, activation, weights, biases }
        })
        .collect();
    Ok(Mlp { layers })
}

impl Mlp {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::Shape(format!("layer {k} parameter lengths do not match {}x{}", l.outputs, l.inputs)));
            }
            if l.activation == Activation::Softmax && k + 1 != layers.len() {
                return Err(Error::Shape("softmax is only allowed on the final layer".into()));
            }
        }
        if layers.windows(2).any(|w| w[0].outputs != w[1].inputs) {
            return Err(Error::Shape("consecutive layer sizes do not chain".into()));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs).chain(self.layers.iter().map(|l| l.outputs)).collect()
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().expect("nonempty").outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Every parameter in layer order, weights before biases.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(input, 1)?.values.pop().expect("output"))
    }

    /// Forward pass over `batch` samples flattened sample-major.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Trace> {
        if inputs.len() != batch * self.input_size() {
            return Err(Error::Shape(format!(
                "input of length {} for batch {batch} of width {}",
                inputs.len(),
                self.input_size()
            )));
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(inputs.to_vec());
        for layer in &self.layers {
            let x = values.last().expect("input");
            let mut y = vec![0.0; batch * layer.outputs];
            for (xs, ys) in x.chunks_exact(layer.inputs).zip(y.chunks_exact_mut(layer.outputs)) {
                layer.apply(xs, ys);
            }
            values.push(y);
        }
        Ok(Trace { batch, values })
    }

    /// Back-propagates `upstream` = ∂L/∂output (sample-major) through the
    /// traced batch. Parameter gradients are summed over samples.
    pub fn backward(&self, trace: &Trace, upstream: &[f64], loss: f64) -> Result<GradRecord> {
        if upstream.len() != trace.batch * self.output_size() || trace.values.len() != self.layers.len() + 1 {
            return Err(Error::Shape("upstream gradient does not match the traced batch".into()));
        }
        let mut grads = GradRecord::zeros_like(self);
        let mut delta = upstream.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let out = &trace.values[k + 1];
            // ∂L/∂z for the pre-activation z
            match layer.activation {
                Activation::Linear => {}
                Activation::Relu => {
                    for (d, &y) in delta.iter_mut().zip(out) {
                        if y <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Activation::Softmax => {
                    for (ds, ys) in delta.chunks_exact_mut(layer.outputs).zip(out.chunks_exact(layer.outputs)) {
                        let dot: f64 = ds.iter().zip(ys).map(|(d, y)| d * y).sum();
                        for (d, &y) in ds.iter_mut().zip(ys) {
                            *d = y * (*d - dot);
                        }
                    }
                }
            }
            let input = &trace.values[k];
            let gw = &mut grads.weights[k];
            let gb = &mut grads.biases[k];
            for (ds, xs) in delta.chunks_exact(layer.outputs).zip(input.chunks_exact(layer.inputs)) {
                for (o, &d) in ds.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, &x) in gw[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(xs) {
                        *g += d * x;
                    }
                }
            }
            let mut next = vec![0.0; trace.batch * layer.inputs];
            for (ds, ns) in delta.chunks_exact(layer.outputs).zip(next.chunks_exact_mut(layer.inputs)) {
                for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(ds) {
                    if d == 0.0 {
                        continue;
                    }
                    for (n, &w) in ns.iter_mut().zip(row) {
                        *n += d * w;
                    }
                }
            }
            delta = next;
        }
        grads.inputs = delta;
        grads.loss = loss;
        Ok(grads)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Mlp = serde_json::from_str(text)?;
        Self::from_layers(raw.layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// L = (1/N)Σ(pred - target)² and ∂L/∂pred.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let n = pred.len() as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    (loss, grad)
}
