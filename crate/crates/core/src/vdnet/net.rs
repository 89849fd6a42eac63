//! Feedforward network built from variational dense layers, its sampled
//! pseudo-ELBO objective, and exact reverse-mode gradients.
//!
//! The objective is the single-sample pathwise estimate of the Gaussian
//! log-likelihood (fixed observation noise `sigma_n`) minus `kl_scale`
//! times the exact KL total from [`crate::kl`]. Only the likelihood term
//! is stochastic; the KL term and its gradients are analytic.

use super::layer::{DenseVDLayer, LayerMode, LayerTrace};
use super::matrix::Matrix;
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::kl::{PriorConstant, SeriesConfig};
use crate::util::positive_finite;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(&self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    fn derivative(&self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Architecture and likelihood description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Unit counts from input to output, e.g. `[10, 1]` or `[2, 4, 1]`.
    pub layer_sizes: Vec<usize>,
    /// One mode per layer (`layer_sizes.len() - 1` entries).
    pub modes: Vec<LayerMode>,
    /// Hidden-layer activation; the output layer is always linear.
    pub activation: Activation,
    /// Fixed Gaussian observation noise of the likelihood.
    pub sigma_n: f64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "layer_sizes needs >= 2 positive entries, got {:?}",
                self.layer_sizes
            )));
        }
        if self.modes.len() != self.layer_sizes.len() - 1 {
            return Err(Error::Config(format!(
                "expected {} layer modes, got {}",
                self.layer_sizes.len() - 1,
                self.modes.len()
            )));
        }
        if !positive_finite(self.sigma_n) {
            return Err(Error::Config(format!(
                "sigma_n must be finite and > 0, got {}",
                self.sigma_n
            )));
        }
        Ok(())
    }

    /// Total trainable weight count D: theta entries plus biases.
    pub fn weight_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// Internal parameter clamps keeping positivity invariants and staying
/// inside the supported range of the KL evaluation (`u <= 1e8` means
/// `ln alpha >= -18.4`).
pub(crate) const LOG_ALPHA_MIN: f64 = -18.0;
pub(crate) const LOG_ALPHA_MAX: f64 = 20.0;
pub(crate) const LOG_SIGMA_MIN: f64 = -20.0;
pub(crate) const LOG_SIGMA_MAX: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub(crate) layers: Vec<DenseVDLayer>,
    pub activation: Activation,
    pub sigma_n: f64,
}

impl Network {
    /// He-style init for theta, zero biases, small initial noise so early
    /// training resembles a maximum-likelihood fit: `ln alpha = -3`
    /// (multiplicative) or `ln sigma = ln(0.05 |theta| + 1e-8)` (additive).
    pub fn init(cfg: &NetworkConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (idx, w) in cfg.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = (2.0 / fan_in as f64).sqrt();
            let theta = Matrix::from_fn(fan_out, fan_in, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            });
            let noise = match cfg.modes[idx] {
                LayerMode::Multiplicative => {
                    Matrix::from_fn(fan_out, fan_in, |_, _| (-3.0f64).exp())
                }
                LayerMode::Additive => theta.map(|t| (0.05 * t.abs() + 1e-8).ln()),
                LayerMode::Deterministic => Matrix::zeros(fan_out, fan_in),
            };
            layers.push(DenseVDLayer::new(
                cfg.modes[idx],
                theta,
                noise,
                vec![0.0; fan_out],
            )?);
        }
        Ok(Self {
            layers,
            activation: cfg.activation,
            sigma_n: cfg.sigma_n,
        })
    }

    pub fn layers(&self) -> &[DenseVDLayer] {
        &self.layers
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim())
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim())
    }

    /// Mean propagation: every layer contributes its exact mean, no
    /// sampling. Used for RMSE evaluation and reports.
    pub fn forward_deterministic(&self, x: &Matrix) -> Result<Matrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(0); // never consulted
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            let det = DenseVDLayer::new(
                LayerMode::Deterministic,
                layer.theta().clone(),
                layer.noise().clone(),
                layer.bias().to_vec(),
            )?;
            let mut pre = det.forward_local_reparam(&h, &mut rng)?;
            if idx != last {
                pre = pre.map(|v| self.activation.apply(v));
            }
            h = pre;
        }
        Ok(h)
    }

    /// Sampled forward pass recording everything backward needs.
    pub fn forward_sampled(&self, x: &Matrix, rng: &mut ChaCha8Rng) -> Result<ForwardRecord> {
        if x.cols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "network expects input width {}, got {}",
                self.in_dim(),
                x.cols()
            )));
        }
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut traces = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            layer_inputs.push(h.clone());
            let (pre, trace) = layer.forward_traced(&h, rng)?;
            h = if idx != last {
                pre.map(|v| self.activation.apply(v))
            } else {
                pre
            };
            traces.push(trace);
        }
        Ok(ForwardRecord {
            layer_inputs,
            traces,
            outputs: h,
            batch_rows: x.rows(),
        })
    }

    /// Root-mean-square error of the deterministic forward pass against
    /// scalar targets.
    pub fn rmse(&self, x: &Matrix, y: &[f64]) -> Result<f64> {
        if x.rows() != y.len() {
            return Err(Error::Shape(format!(
                "{} rows of features vs {} targets",
                x.rows(),
                y.len()
            )));
        }
        let out = self.forward_deterministic(x)?;
        if out.cols() != 1 {
            return Err(Error::Shape(format!(
                "rmse needs a single output unit, network has {}",
                out.cols()
            )));
        }
        let sse: f64 = y
            .iter()
            .enumerate()
            .map(|(n, &t)| {
                let d = out.get(n, 0) - t;
                d * d
            })
            .sum();
        Ok((sse / y.len() as f64).sqrt())
    }

    /// Exact KL total over all weights (biases are deterministic and
    /// contribute nothing).
    pub fn kl_total(&self, prior: &PriorConstant, cfg: &SeriesConfig) -> Result<f64> {
        self.layers.iter().map(|l| l.kl_sum(prior, cfg)).sum()
    }

    /// Exact per-weight KL values across all stochastic layers.
    pub fn per_weight_kl_values(
        &self,
        prior: &PriorConstant,
        cfg: &SeriesConfig,
    ) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.per_weight_kl(prior, cfg)?.iter().map(|e| e.value));
        }
        Ok(out)
    }
}

/// Cached state of one sampled forward pass.
#[derive(Clone, Debug)]
pub struct ForwardRecord {
    pub(crate) layer_inputs: Vec<Matrix>,
    pub(crate) traces: Vec<LayerTrace>,
    pub(crate) outputs: Matrix,
    pub(crate) batch_rows: usize,
}

impl ForwardRecord {
    pub fn outputs(&self) -> &Matrix {
        &self.outputs
    }
}

/// Objective breakdown of one sampled evaluation.
#[derive(Clone, Debug)]
pub struct ElboEval {
    pub objective: f64,
    pub log_likelihood: f64,
    pub kl_total: f64,
    pub kl_per_layer: Vec<f64>,
    pub record: ForwardRecord,
}

/// Single-sample pathwise estimate of the pseudo-ELBO over one batch:
/// Gaussian log-likelihood of the sampled outputs minus
/// `kl_scale * KL total`. The batch is treated as the full dataset; the
/// training loop rescales the likelihood term when it slices minibatches.
pub fn elbo_objective(
    net: &Network,
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ElboEval> {
    elbo_objective_scaled(net, x, y, cfg, 1.0, rng)
}

pub(crate) fn elbo_objective_scaled(
    net: &Network,
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
    likelihood_scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ElboEval> {
    if x.rows() == 0 {
        return Err(Error::Precondition(
            "elbo_objective requires a nonempty batch".into(),
        ));
    }
    if x.rows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows of features vs {} targets",
            x.rows(),
            y.len()
        )));
    }
    let record = net.forward_sampled(x, rng)?;
    if record.outputs.cols() != 1 {
        return Err(Error::Shape(format!(
            "Gaussian likelihood expects one output unit, got {}",
            record.outputs.cols()
        )));
    }
    let sigma2 = net.sigma_n * net.sigma_n;
    let norm = -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln();
    let mut loglik = 0.0;
    for (n, &t) in y.iter().enumerate() {
        let d = record.outputs.get(n, 0) - t;
        loglik += norm - d * d / (2.0 * sigma2);
    }
    loglik *= likelihood_scale;

    let prior = PriorConstant::new(cfg.prior_c)?;
    let series = SeriesConfig::default();
    let mut kl_per_layer = Vec::with_capacity(net.layers.len());
    for l in &net.layers {
        kl_per_layer.push(l.kl_sum(&prior, &series)?);
    }
    let kl_total: f64 = kl_per_layer.iter().sum();
    Ok(ElboEval {
        objective: loglik - cfg.kl_scale * kl_total,
        log_likelihood: loglik,
        kl_total,
        kl_per_layer,
        record,
    })
}

/// Parameter gradients for one layer, in the layer's own parametrisation
/// (`noise` gradients are with respect to stored alpha or `ln sigma`).
#[derive(Clone, Debug)]
pub struct LayerGradients {
    pub theta: Matrix,
    pub noise: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct NetGradients {
    pub layers: Vec<LayerGradients>,
}

/// Reverse-mode gradients of the objective recorded in `record`, with the
/// noise draw frozen: the likelihood part is the pathwise estimator, the
/// KL part comes from the exact chain rules, never from sampling.
pub fn backward(
    net: &Network,
    record: &ForwardRecord,
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
) -> Result<NetGradients> {
    backward_scaled(net, record, x, y, cfg, 1.0)
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn backward_scaled(
    net: &Network,
    record: &ForwardRecord,
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
    likelihood_scale: f64,
) -> Result<NetGradients> {
    if record.batch_rows != x.rows()
        || record.layer_inputs.len() != net.layers.len()
        || record
            .layer_inputs
            .first()
            .is_some_and(|inp| inp.cols() != x.cols())
    {
        return Err(Error::State(format!(
            "forward record is for a {}-row batch over {} layers; got {} rows",
            record.batch_rows,
            record.layer_inputs.len(),
            x.rows()
        )));
    }
    if x.rows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows of features vs {} targets",
            x.rows(),
            y.len()
        )));
    }

    let sigma2 = net.sigma_n * net.sigma_n;
    let prior = PriorConstant::new(cfg.prior_c)?;
    let series = SeriesConfig::default();

    // d loglik / d output
    let mut upstream = Matrix::from_fn(record.outputs.rows(), 1, |n, _| {
        likelihood_scale * (y[n] - record.outputs.get(n, 0)) / sigma2
    });

    let last = net.layers.len() - 1;
    let mut grads: Vec<LayerGradients> = Vec::with_capacity(net.layers.len());
    for idx in (0..net.layers.len()).rev() {
        let layer = &net.layers[idx];
        let trace = &record.traces[idx];
        let inputs = &record.layer_inputs[idx];
        let (rows, out_d, in_d) = (inputs.rows(), layer.out_dim(), layer.in_dim());

        // Through the activation (hidden layers only).
        let d_pre = if idx == last {
            upstream
        } else {
            Matrix::from_fn(rows, out_d, |n, j| {
                upstream.get(n, j) * net.activation.derivative(trace.pre_activation.get(n, j))
            })
        };

        let mut d_theta = Matrix::zeros(out_d, in_d);
        let mut d_noise = Matrix::zeros(out_d, in_d);
        let mut d_bias = vec![0.0; out_d];
        let mut d_inputs = Matrix::zeros(rows, in_d);
        let variances = layer.weight_variance();
        let stochastic = layer.mode() != LayerMode::Deterministic;

        for n in 0..rows {
            for j in 0..out_d {
                let g = d_pre.get(n, j);
                d_bias[j] += g;
                // Noise-path factor d pre / d var_{nj} = z / (2 std); zero
                // variance contributes nothing (the draw is degenerate).
                let gv = if stochastic && trace.std.get(n, j) > 0.0 {
                    g * trace.z.get(n, j) / (2.0 * trace.std.get(n, j))
                } else {
                    0.0
                };
                for i in 0..in_d {
                    let a = inputs.get(n, i);
                    d_theta.set(j, i, d_theta.get(j, i) + g * a);
                    let mut d_in = g * layer.theta().get(j, i);
                    if gv != 0.0 {
                        let dv = gv * a * a; // d obj / d s_{ji} through sample n
                        match layer.mode() {
                            LayerMode::Multiplicative => {
                                let theta = layer.theta().get(j, i);
                                let alpha = layer.noise().get(j, i);
                                d_noise.set(j, i, d_noise.get(j, i) + dv * theta * theta);
                                d_theta.set(j, i, d_theta.get(j, i) + dv * 2.0 * alpha * theta);
                            }
                            LayerMode::Additive => {
                                // var = exp(2 ls): d var / d ls = 2 var
                                d_noise.set(
                                    j,
                                    i,
                                    d_noise.get(j, i) + dv * 2.0 * variances.get(j, i),
                                );
                            }
                            LayerMode::Deterministic => unreachable!(),
                        }
                        d_in += gv * 2.0 * a * variances.get(j, i);
                    }
                    d_inputs.set(n, i, d_inputs.get(n, i) + d_in);
                }
            }
        }

        // Exact KL gradients enter with their -kl_scale weight.
        if cfg.kl_scale != 0.0 && stochastic {
            let (kl_d_theta, kl_d_noise) = layer.kl_param_grads(&prior, &series)?;
            for j in 0..out_d {
                for i in 0..in_d {
                    d_theta.set(
                        j,
                        i,
                        d_theta.get(j, i) - cfg.kl_scale * kl_d_theta.get(j, i),
                    );
                    d_noise.set(
                        j,
                        i,
                        d_noise.get(j, i) - cfg.kl_scale * kl_d_noise.get(j, i),
                    );
                }
            }
        }

        grads.push(LayerGradients {
            theta: d_theta,
            noise: d_noise,
            bias: d_bias,
        });
        upstream = d_inputs;
    }
    grads.reverse();
    Ok(NetGradients { layers: grads })
}
