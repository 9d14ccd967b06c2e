//! One-hidden-layer perceptron: logistic hidden units, softmax output,
//! mean cross-entropy loss, full-batch gradient descent.
//!
//! All parameters live in one flat vector laid out as
//! `[W1 (hidden × inputs) | b1 (hidden) | W2 (outputs × hidden) | b2 (outputs)]`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Encoded;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_units: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_units: 64,
            epochs: 500,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 {
            return Err(Error::InvalidArgument("hidden_units must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub params: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Forward-pass activations for one sample.
struct Pass {
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

impl Mlp {
    pub fn param_count(inputs: usize, hidden: usize, outputs: usize) -> usize {
        hidden * inputs + hidden + outputs * hidden + outputs
    }

    /// Parameters drawn uniformly from `[-0.5, 0.5]`.
    pub fn init(inputs: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let params = (0..Self::param_count(inputs, hidden, outputs))
            .map(|_| rng.gen_range(-0.5..=0.5))
            .collect();
        Self {
            inputs,
            hidden,
            outputs,
            params,
        }
    }

    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self {
            inputs,
            hidden,
            outputs,
            params: vec![0.0; Self::param_count(inputs, hidden, outputs)],
        }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }

    /// Index of `W1[h][i]` in the flat parameter vector.
    pub fn w1_index(&self, h: usize, i: usize) -> usize {
        h * self.inputs + i
    }

    /// Index of `W2[o][h]`.
    pub fn w2_index(&self, o: usize, h: usize) -> usize {
        self.offsets().1 + o * self.hidden + h
    }

    fn forward(&self, x: &[f64]) -> Pass {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let row = &p[h * self.inputs..(h + 1) * self.inputs];
                let z = p[b1 + h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                sigmoid(z)
            })
            .collect();
        let logits = (0..self.outputs)
            .map(|o| {
                let row = &p[w2 + o * self.hidden..w2 + (o + 1) * self.hidden];
                p[b2 + o] + row.iter().zip(&hidden).map(|(w, a)| w * a).sum::<f64>()
            })
            .collect();
        Pass { hidden, logits }
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.forward(x).logits)
    }

    /// Argmax of the softmax output; ties go to the earliest class.
    pub fn predict(&self, x: &[f64]) -> usize {
        let logits = self.forward(x).logits;
        let mut best = 0;
        for (k, &z) in logits.iter().enumerate() {
            if z > logits[best] {
                best = k;
            }
        }
        best
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, xs: &[&[f64]], targets: &[usize]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(targets)
            .map(|(x, &t)| {
                let z = self.forward(x).logits;
                log_sum_exp(&z) - z[t]
            })
            .sum();
        total / xs.len() as f64
    }

    /// Gradient of [`Mlp::loss`] with respect to every parameter.
    pub fn gradient(&self, xs: &[&[f64]], targets: &[usize]) -> Vec<f64> {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let mut g = vec![0.0; p.len()];
        let scale = 1.0 / xs.len() as f64;
        let mut delta_hidden = vec![0.0; self.hidden];
        for (x, &t) in xs.iter().zip(targets) {
            let pass = self.forward(x);
            let mut delta_out = softmax(&pass.logits);
            delta_out[t] -= 1.0;
            delta_out.iter_mut().for_each(|d| *d *= scale);

            delta_hidden.iter_mut().for_each(|d| *d = 0.0);
            for (o, &d) in delta_out.iter().enumerate() {
                g[b2 + o] += d;
                let row = w2 + o * self.hidden;
                for h in 0..self.hidden {
                    g[row + h] += d * pass.hidden[h];
                    delta_hidden[h] += d * p[row + h];
                }
            }
            for h in 0..self.hidden {
                let a = pass.hidden[h];
                let dz = delta_hidden[h] * a * (1.0 - a);
                g[b1 + h] += dz;
                let row = h * self.inputs;
                for (i, &v) in x.iter().enumerate() {
                    g[row + i] += dz * v;
                }
            }
        }
        g
    }

    pub fn step(&mut self, xs: &[&[f64]], targets: &[usize], learning_rate: f64) {
        let g = self.gradient(xs, targets);
        for (w, d) in self.params.iter_mut().zip(g) {
            *w -= learning_rate * d;
        }
    }

    /// Train from the config's initialization; returns the network and the
    /// loss before each epoch followed by the final loss.
    pub fn train_with_history(
        cfg: &MlpConfig,
        xs: &[&[f64]],
        targets: &[usize],
        n_classes: usize,
    ) -> Result<(Self, Vec<f64>)> {
        cfg.validate()?;
        let inputs = xs.first().map_or(0, |x| x.len());
        let mut net = Mlp::init(inputs, cfg.hidden_units, n_classes, cfg.seed);
        let mut history = Vec::with_capacity(cfg.epochs + 1);
        for _ in 0..cfg.epochs {
            history.push(net.loss(xs, targets));
            net.step(xs, targets, cfg.learning_rate);
        }
        history.push(net.loss(xs, targets));
        Ok((net, history))
    }

    pub(crate) fn fit(cfg: &MlpConfig, data: &Encoded<'_>) -> Result<Self> {
        cfg.validate()?;
        let mut net = Mlp::init(data.dims, cfg.hidden_units, data.n_classes, cfg.seed);
        for _ in 0..cfg.epochs {
            net.step(&data.rows, &data.targets, cfg.learning_rate);
        }
        Ok(net)
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub const GRADIENT_CHECK_STEP: f64 = 1e-5;

/// Largest relative discrepancy between the analytic gradient and central
/// finite differences (step 1e-5) over all parameters of a network
/// initialized from `cfg`. Relative error is `|a − n| / max(|a| + |n|, 1e-6)`.
pub fn mlp_gradient_check(
    cfg: &MlpConfig,
    xs: &[Vec<f64>],
    targets: &[usize],
    n_classes: usize,
) -> Result<f64> {
    cfg.validate()?;
    if xs.is_empty() || xs.len() > 10 || xs[0].len() > 10 {
        return Err(Error::InvalidArgument(
            "gradient check expects 1..=10 samples of at most 10 dims".into(),
        ));
    }
    if n_classes < 1 || targets.iter().any(|&t| t >= n_classes) || targets.len() != xs.len() {
        return Err(Error::InvalidArgument("targets out of range".into()));
    }
    let rows: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
    let net = Mlp::init(xs[0].len(), cfg.hidden_units, n_classes, cfg.seed);
    Ok(max_relative_error(&net, &rows, targets))
}

pub fn max_relative_error(net: &Mlp, rows: &[&[f64]], targets: &[usize]) -> f64 {
    let analytic = net.gradient(rows, targets);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let w = net.params[k];
        probe.params[k] = w + GRADIENT_CHECK_STEP;
        let up = probe.loss(rows, targets);
        probe.params[k] = w - GRADIENT_CHECK_STEP;
        let down = probe.loss(rows, targets);
        probe.params[k] = w;
        let numeric = (up - down) / (2.0 * GRADIENT_CHECK_STEP);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}
