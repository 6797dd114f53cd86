//! Dense feed-forward network with manual backpropagation.
//!
//! Layer `i` computes `a_{i+1} = act(a_i · Wᵢᵀ + bᵢ)` with `Wᵢ` of shape
//! `out × in`. The last layer is always linear and its outputs are logits
//! fed to softmax cross-entropy. Parameters are stored as
//! `[W₀, b₀, W₁, b₁, …]`, so each bias vector is its own optimizer tensor.

mod gradcheck;

pub use gradcheck::{
    gradient_check, probe_batch, relative_error, GradCheckConfig, GradCheckReport, REL_ERR_FLOOR,
};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::seed;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `max(0, x)`
    Relu,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    layers: Vec<LayerSpec>,
    params: Vec<Tensor>,
    init_seed: u64,
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    let last = specs
        .last()
        .ok_or_else(|| Error::argument("model needs at least one layer"))?;
    for (i, s) in specs.iter().enumerate() {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(Error::argument(format!("layer {i} has a zero dimension")));
        }
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::argument(format!(
                "layer {i} outputs {} features but layer {} expects {}",
                pair[0].out_dim,
                i + 1,
                pair[1].in_dim
            )));
        }
    }
    if last.activation != Activation::Identity {
        return Err(Error::argument(
            "final layer must be linear (logits output)",
        ));
    }
    Ok(())
}

impl Model {
    /// Weights are `N(0, 1) / √in_dim` drawn layer by layer from one
    /// `ChaCha8Rng` stream; biases start at zero.
    pub fn new(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        validate_specs(specs)?;
        let mut rng = seed::rng(seed);
        let mut params = Vec::with_capacity(2 * specs.len());
        for s in specs {
            let scale = 1.0 / (s.in_dim as f64).sqrt();
            let mut w = Tensor::zeros(&[s.out_dim, s.in_dim])?;
            for x in w.data_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = scale * z;
            }
            params.push(w);
            params.push(Tensor::zeros(&[s.out_dim])?);
        }
        Ok(Self {
            layers: specs.to_vec(),
            params,
            init_seed: seed,
        })
    }

    /// ReLU MLP through `dims`, e.g. `[784, 128, 10]`.
    pub fn mlp(dims: &[usize], seed: u64) -> Result<Self> {
        Self::new(&mlp_specs(dims)?, seed)
    }

    /// Builds a model around explicit parameters laid out as `[W₀, b₀, …]`.
    pub fn from_params(specs: &[LayerSpec], params: Vec<Tensor>) -> Result<Self> {
        validate_specs(specs)?;
        if params.len() != 2 * specs.len() {
            return Err(Error::argument(format!(
                "{} layers need {} parameter tensors, got {}",
                specs.len(),
                2 * specs.len(),
                params.len()
            )));
        }
        for (i, s) in specs.iter().enumerate() {
            if params[2 * i].shape() != [s.out_dim, s.in_dim]
                || params[2 * i + 1].shape() != [s.out_dim]
            {
                return Err(Error::argument(format!(
                    "parameter shapes of layer {i} do not match its spec"
                )));
            }
        }
        Ok(Self {
            layers: specs.to_vec(),
            params,
            init_seed: 0,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.params.iter().map(|p| p.shape().to_vec()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        match *x.shape() {
            [n, d] if d == self.input_dim() => Ok(n),
            _ => Err(Error::argument(format!(
                "expected input of shape [n, {}], got {:?}",
                self.input_dim(),
                x.shape()
            ))),
        }
    }

    fn layer_forward(&self, i: usize, input: &[f64], n: usize) -> Vec<f64> {
        let s = self.layers[i];
        let (w, b) = (self.params[2 * i].data(), self.params[2 * i + 1].data());
        let mut out = vec![0.0; n * s.out_dim];
        linalg::matmul_nt(input, w, &mut out, n, s.in_dim, s.out_dim);
        for row in out.chunks_exact_mut(s.out_dim) {
            for (z, bias) in row.iter_mut().zip(b) {
                *z += bias;
            }
            if s.activation == Activation::Relu {
                for z in row.iter_mut() {
                    *z = z.max(0.0);
                }
            }
        }
        out
    }

    /// Logits of shape `[n, K]` for an input batch of shape `[n, d]`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let n = self.check_input(x)?;
        let mut a = self.layer_forward(0, x.data(), n);
        for i in 1..self.layers.len() {
            a = self.layer_forward(i, &a, n);
        }
        Tensor::new(vec![n, self.num_classes()], a)
    }

    /// Mean softmax cross-entropy over the batch.
    pub fn loss(&self, x: &Tensor, labels: &[usize]) -> Result<f64> {
        let logits = self.forward(x)?;
        softmax_cross_entropy(&logits, labels)
    }

    /// Mean loss together with its gradient for every parameter tensor.
    pub fn loss_and_grads(&self, x: &Tensor, labels: &[usize]) -> Result<(f64, Vec<Tensor>)> {
        let n = self.check_input(x)?;
        if n == 0 {
            return Err(Error::argument("empty batch"));
        }
        let depth = self.layers.len();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(depth);
        for i in 0..depth {
            let input = if i == 0 { x.data() } else { &acts[i - 1] };
            let out = self.layer_forward(i, input, n);
            acts.push(out);
        }
        let k = self.num_classes();
        let logits = &acts[depth - 1];
        check_labels(labels, n, k)?;

        // dL/dz for the logits: (softmax − onehot) / n
        let mut loss = 0.0;
        let mut delta = vec![0.0; n * k];
        for ((row, d), &y) in logits
            .chunks_exact(k)
            .zip(delta.chunks_exact_mut(k))
            .zip(labels)
        {
            let lse = log_sum_exp(row);
            loss += lse - row[y];
            for (dj, &z) in d.iter_mut().zip(row) {
                *dj = (z - lse).exp() / n as f64;
            }
            d[y] -= 1.0 / n as f64;
        }
        loss /= n as f64;

        let mut grads: Vec<Tensor> = self
            .params
            .iter()
            .map(|p| Tensor::zeros(p.shape()))
            .collect::<Result<_>>()?;
        for i in (0..depth).rev() {
            let s = self.layers[i];
            let input = if i == 0 { x.data() } else { &acts[i - 1] };
            linalg::matmul_tn(
                &delta,
                input,
                grads[2 * i].data_mut(),
                s.out_dim,
                n,
                s.in_dim,
            );
            let db = grads[2 * i + 1].data_mut();
            for row in delta.chunks_exact(s.out_dim) {
                for (b, d) in db.iter_mut().zip(row) {
                    *b += d;
                }
            }
            if i > 0 {
                let mut prev = vec![0.0; n * s.in_dim];
                linalg::matmul(
                    &delta,
                    self.params[2 * i].data(),
                    &mut prev,
                    n,
                    s.out_dim,
                    s.in_dim,
                );
                if self.layers[i - 1].activation == Activation::Relu {
                    for (p, &a) in prev.iter_mut().zip(&acts[i - 1]) {
                        if a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                }
                delta = prev;
            }
        }
        Ok((loss, grads))
    }
}

/// Layer specs for a ReLU MLP with a linear output layer.
pub fn mlp_specs(dims: &[usize]) -> Result<Vec<LayerSpec>> {
    if dims.len() < 2 {
        return Err(Error::argument(
            "an MLP needs at least input and output dimensions",
        ));
    }
    let last = dims.len() - 2;
    Ok(dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i == last {
                Activation::Identity
            } else {
                Activation::Relu
            };
            LayerSpec::new(w[0], w[1], act)
        })
        .collect())
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

fn check_labels(labels: &[usize], n: usize, k: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::argument(format!(
            "{n} rows but {} labels",
            labels.len()
        )));
    }
    if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= k) {
        return Err(Error::argument(format!(
            "label {y} at row {i} is outside [0, {k})"
        )));
    }
    Ok(())
}

fn logits_dims(logits: &Tensor) -> Result<(usize, usize)> {
    match *logits.shape() {
        [n, k] => Ok((n, k)),
        _ => Err(Error::argument(format!(
            "logits must be two-dimensional, got {:?}",
            logits.shape()
        ))),
    }
}

/// Summed (not averaged) cross-entropy and number of correct predictions.
pub(crate) fn loss_sum_and_hits(logits: &Tensor, labels: &[usize]) -> Result<(f64, usize)> {
    let (n, k) = logits_dims(logits)?;
    check_labels(labels, n, k)?;
    let mut loss = 0.0;
    let mut hits = 0;
    for (row, &y) in logits.data().chunks_exact(k).zip(labels) {
        loss += log_sum_exp(row) - row[y];
        if argmax(row) == y {
            hits += 1;
        }
    }
    Ok((loss, hits))
}

/// Mean of `−log softmax(z)[label]`, evaluated with log-sum-exp.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let (n, _) = logits_dims(logits)?;
    if n == 0 {
        return Err(Error::argument("empty batch"));
    }
    let (sum, _) = loss_sum_and_hits(logits, labels)?;
    Ok(sum / n as f64)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &z) in row.iter().enumerate().skip(1) {
        if z > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let (n, k) = logits_dims(logits)?;
    if labels.len() != n {
        return Err(Error::argument(format!(
            "{n} rows but {} labels",
            labels.len()
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let hits = logits
        .data()
        .chunks_exact(k)
        .zip(labels)
        .filter(|(row, &y)| argmax(row) == y)
        .count();
    Ok(hits as f64 / n as f64)
}
