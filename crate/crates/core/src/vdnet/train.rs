//! Gradient-ascent training loop for the pseudo-ELBO.
//!
//! Plain first-order ascent, deterministic for a given seed. Noise
//! parameters step in unconstrained form (`ln alpha`, `ln sigma`) and are
//! clamped so positivity holds throughout and the reduced parameter stays
//! inside the supported KL range.

use super::data::Dataset;
use super::layer::LayerMode;
use super::matrix::Matrix;
use super::net::{
    backward_scaled, elbo_objective_scaled, Network, NetworkConfig, LOG_ALPHA_MAX, LOG_ALPHA_MIN,
    LOG_SIGMA_MAX, LOG_SIGMA_MIN,
};
use crate::error::{Error, Result};
use crate::kl::{PriorConstant, SeriesConfig};
use crate::util::{non_negative_finite, positive_finite};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// 1 recovers the pseudo-ELBO; 0 is pure likelihood fitting.
    pub kl_scale: f64,
    pub prior_c: f64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !positive_finite(self.learning_rate) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        if !non_negative_finite(self.kl_scale) || !positive_finite(self.prior_c) {
            return Err(Error::Config(format!(
                "kl_scale >= 0 and prior_c > 0 required, got ({}, {})",
                self.kl_scale, self.prior_c
            )));
        }
        Ok(())
    }
}

/// One row of the training trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub objective: f64,
    pub kl_total: f64,
    pub rmse_train: f64,
    pub rmse_test: f64,
    /// Smallest exact per-weight KL over all stochastic layers (NaN when
    /// the network is fully deterministic). Not part of the trace CSV.
    pub min_weight_kl: f64,
}

impl EpochStats {
    pub const CSV_HEADER: &'static str = "epoch,objective,kl_total,rmse_train,rmse_test";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.epoch, self.objective, self.kl_total, self.rmse_train, self.rmse_test
        )
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub network: Network,
    pub trace: Vec<EpochStats>,
}

/// Train a fresh network on `train_data`, reporting per-epoch statistics
/// against both splits. Minibatches are sliced in order (no shuffling),
/// with the likelihood term rescaled by `n/batch` so the objective keeps
/// full-dataset units; `batch_size >= n` is a full-batch run.
pub fn train(
    net_cfg: &NetworkConfig,
    cfg: &TrainConfig,
    train_data: &Dataset,
    test_data: &Dataset,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    net_cfg.validate()?;
    if train_data.dim() != net_cfg.layer_sizes[0] {
        return Err(Error::Shape(format!(
            "dataset has {} features, network expects {}",
            train_data.dim(),
            net_cfg.layer_sizes[0]
        )));
    }
    if *net_cfg.layer_sizes.last().expect("validated") != 1 {
        return Err(Error::Config(
            "training expects a single output unit".into(),
        ));
    }
    let mut net = Network::init(net_cfg, cfg.seed)?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(1);

    let n = train_data.len();
    let prior = PriorConstant::new(cfg.prior_c)?;
    let series = SeriesConfig::default();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut objective_acc = 0.0;
        let mut batches = 0usize;
        let mut start = 0usize;
        while start < n {
            let end = (start + cfg.batch_size).min(n);
            let rows = end - start;
            let x = Matrix::from_fn(rows, train_data.dim(), |r, c| {
                train_data.features.get(start + r, c)
            });
            let y = &train_data.targets[start..end];
            let scale = n as f64 / rows as f64;
            let eval = elbo_objective_scaled(&net, &x, y, cfg, scale, &mut noise_rng)?;
            if !eval.objective.is_finite() {
                return Err(Error::Diverged(format!(
                    "objective became {} at epoch {epoch}",
                    eval.objective
                )));
            }
            let grads = backward_scaled(&net, &eval.record, &x, y, cfg, scale)?;
            apply_ascent_step(&mut net, &grads, cfg.learning_rate);
            objective_acc += eval.objective;
            batches += 1;
            start = end;
        }

        let per_weight = net.per_weight_kl_values(&prior, &series)?;
        let min_weight_kl = per_weight.iter().copied().fold(f64::NAN, f64::min);
        trace.push(EpochStats {
            epoch,
            objective: objective_acc / batches as f64,
            kl_total: net.kl_total(&prior, &series)?,
            rmse_train: net.rmse(&train_data.features, &train_data.targets)?,
            rmse_test: net.rmse(&test_data.features, &test_data.targets)?,
            min_weight_kl,
        });
    }
    Ok(TrainOutcome {
        network: net,
        trace,
    })
}

/// Additive-mode reduced parameters are held at or below this by a
/// theta-dependent floor on `ln sigma`; the static clamp alone cannot keep
/// `u = theta^2 exp(-2 ln sigma) / 2` inside the supported KL range.
const ADDITIVE_U_CAP: f64 = 1e7;

fn apply_ascent_step(net: &mut Network, grads: &super::net::NetGradients, lr: f64) {
    for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
        let mode = layer.mode();
        for (t, gt) in layer.theta_mut().data_mut().iter_mut().zip(g.theta.data()) {
            *t += lr * gt;
        }
        for (b, gb) in layer.bias_mut().iter_mut().zip(&g.bias) {
            *b += lr * gb;
        }
        match mode {
            LayerMode::Deterministic => {}
            LayerMode::Multiplicative => {
                // Step alpha in log space: d/d ln(alpha) = alpha * d/d alpha.
                for (a, ga) in layer.noise_mut().data_mut().iter_mut().zip(g.noise.data()) {
                    let log_alpha = (a.ln() + lr * ga * *a).clamp(LOG_ALPHA_MIN, LOG_ALPHA_MAX);
                    *a = log_alpha.exp();
                }
            }
            LayerMode::Additive => {
                let theta: Vec<f64> = layer.theta().data().to_vec();
                for (idx, (ls, gls)) in layer
                    .noise_mut()
                    .data_mut()
                    .iter_mut()
                    .zip(g.noise.data())
                    .enumerate()
                {
                    let mut next = (*ls + lr * gls).clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX);
                    if theta[idx] != 0.0 {
                        let floor = theta[idx].abs().ln() - 0.5 * (2.0 * ADDITIVE_U_CAP).ln();
                        next = next.max(floor);
                    }
                    *ls = next;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vdnet::data::builtin_linear;
    use crate::vdnet::net::Activation;

    fn linear_net(mode: LayerMode) -> NetworkConfig {
        NetworkConfig {
            layer_sizes: vec![10, 1],
            modes: vec![mode],
            activation: Activation::Identity,
            sigma_n: 0.1,
        }
    }

    #[test]
    fn fixed_seed_runs_are_bit_identical() {
        let (train_data, test_data) = builtin_linear(11);
        let cfg = TrainConfig {
            learning_rate: 2e-5,
            epochs: 40,
            batch_size: 200,
            seed: 5,
            kl_scale: 1.0,
            prior_c: 1.0,
        };
        let a = train(
            &linear_net(LayerMode::Additive),
            &cfg,
            &train_data,
            &test_data,
        )
        .unwrap();
        let b = train(
            &linear_net(LayerMode::Additive),
            &cfg,
            &train_data,
            &test_data,
        )
        .unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.network, b.network);
    }

    #[test]
    fn deterministic_likelihood_fit_reaches_the_ols_noise_floor() {
        let (train_data, test_data) = builtin_linear(13);
        let cfg = TrainConfig {
            learning_rate: 2e-5,
            epochs: 1500,
            batch_size: 200,
            seed: 1,
            kl_scale: 0.0,
            prior_c: 1.0,
        };
        let out = train(
            &linear_net(LayerMode::Deterministic),
            &cfg,
            &train_data,
            &test_data,
        )
        .unwrap();
        let fitted = out.trace.last().unwrap().rmse_train;
        let ols = ols_rmse(&train_data);
        assert!(
            fitted <= ols * 1.10,
            "gradient fit rmse {fitted} vs OLS floor {ols}"
        );
    }

    #[test]
    fn divergent_learning_rate_is_reported_not_propagated() {
        let (train_data, test_data) = builtin_linear(17);
        let cfg = TrainConfig {
            learning_rate: 10.0,
            epochs: 50,
            batch_size: 200,
            seed: 1,
            kl_scale: 0.0,
            prior_c: 1.0,
        };
        let res = train(
            &linear_net(LayerMode::Deterministic),
            &cfg,
            &train_data,
            &test_data,
        );
        assert!(matches!(res, Err(Error::Diverged(_))));
    }

    #[test]
    fn config_validation() {
        let good = TrainConfig {
            learning_rate: 1e-4,
            epochs: 1,
            batch_size: 1,
            seed: 0,
            kl_scale: 0.0,
            prior_c: 1.0,
        };
        assert!(good.validate().is_ok());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..good
        }
        .validate()
        .is_err());
        assert!(TrainConfig { epochs: 0, ..good }.validate().is_err());
        assert!(TrainConfig {
            kl_scale: -1.0,
            ..good
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            prior_c: 0.0,
            ..good
        }
        .validate()
        .is_err());
    }

    /// Ordinary least squares (with intercept) via normal equations and
    /// Gaussian elimination; the independent floor for the linear task.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn ols_rmse(data: &Dataset) -> f64 {
        let n = data.len();
        let d = data.dim() + 1; // intercept last
        let mut xtx = vec![vec![0.0f64; d]; d];
        let mut xty = vec![0.0f64; d];
        let feat = |r: usize, c: usize| {
            if c == d - 1 {
                1.0
            } else {
                data.features.get(r, c)
            }
        };
        for r in 0..n {
            for i in 0..d {
                xty[i] += feat(r, i) * data.targets[r];
                for j in 0..d {
                    xtx[i][j] += feat(r, i) * feat(r, j);
                }
            }
        }
        // Solve xtx w = xty.
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&a, &b| xtx[a][col].abs().total_cmp(&xtx[b][col].abs()))
                .unwrap();
            xtx.swap(col, pivot);
            xty.swap(col, pivot);
            let p = xtx[col][col];
            for row in (col + 1)..d {
                let f = xtx[row][col] / p;
                for k in col..d {
                    xtx[row][k] -= f * xtx[col][k];
                }
                xty[row] -= f * xty[col];
            }
        }
        let mut w = vec![0.0f64; d];
        for row in (0..d).rev() {
            let mut acc = xty[row];
            for k in (row + 1)..d {
                acc -= xtx[row][k] * w[k];
            }
            w[row] = acc / xtx[row][row];
        }
        let sse: f64 = (0..n)
            .map(|r| {
                let pred: f64 = (0..d).map(|c| w[c] * feat(r, c)).sum();
                let e = pred - data.targets[r];
                e * e
            })
            .sum();
        (sse / n as f64).sqrt()
    }
}
