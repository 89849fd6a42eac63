//! Dense layers with per-weight Gaussian noise, sampled by the local
//! reparameterisation trick: instead of sampling each weight, the layer
//! samples its pre-activations from the Gaussian they induce, with mean
//! `A theta^T + b` and variance `(A o A) S^T` where `S` holds the
//! per-weight variances.

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::kl::{
    kl_additive, kl_multiplicative, AdditiveParams, KlEvaluation, MultiplicativeParams,
    PriorConstant, SeriesConfig,
};
use crate::util::positive_finite;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Meaning of the per-weight noise parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerMode {
    /// `noise` holds alpha: weight variance `alpha * theta^2`, i.e. the
    /// mean multiplied by `N(1, alpha)` noise. The per-weight KL depends
    /// on alpha alone.
    Multiplicative,
    /// `noise` holds `ln sigma`: weight variance `exp(2 ln sigma)`,
    /// independent of theta, so `theta = 0` reaches the KL minimum exactly.
    Additive,
    /// No noise; `noise` is carried but ignored.
    Deterministic,
}

/// A dense layer of variational parameters: `theta` and `noise` are
/// `out x in`, `bias` is deterministic with one entry per output.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVDLayer {
    mode: LayerMode,
    theta: Matrix,
    noise: Matrix,
    bias: Vec<f64>,
}

impl DenseVDLayer {
    pub fn new(mode: LayerMode, theta: Matrix, noise: Matrix, bias: Vec<f64>) -> Result<Self> {
        if !theta.same_shape(&noise) {
            return Err(Error::Shape(format!(
                "theta is {}x{} but noise is {}x{}",
                theta.rows(),
                theta.cols(),
                noise.rows(),
                noise.cols()
            )));
        }
        if bias.len() != theta.rows() {
            return Err(Error::Shape(format!(
                "bias length {} does not match out-dim {}",
                bias.len(),
                theta.rows()
            )));
        }
        if mode == LayerMode::Multiplicative && !noise.data().iter().all(|&a| positive_finite(a)) {
            return Err(Error::Precondition(
                "multiplicative mode requires every alpha > 0".into(),
            ));
        }
        Ok(Self {
            mode,
            theta,
            noise,
            bias,
        })
    }

    pub fn mode(&self) -> LayerMode {
        self.mode
    }

    pub fn out_dim(&self) -> usize {
        self.theta.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.theta.cols()
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn noise(&self) -> &Matrix {
        &self.noise
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn theta_mut(&mut self) -> &mut Matrix {
        &mut self.theta
    }

    pub(crate) fn noise_mut(&mut self) -> &mut Matrix {
        &mut self.noise
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// Per-weight variance matrix `S` in the induced pre-activation
    /// Gaussian.
    pub fn weight_variance(&self) -> Matrix {
        match self.mode {
            LayerMode::Multiplicative => Matrix::from_fn(self.out_dim(), self.in_dim(), |j, i| {
                let t = self.theta.get(j, i);
                self.noise.get(j, i) * t * t
            }),
            LayerMode::Additive => self.noise.map(|ls| (2.0 * ls).exp()),
            LayerMode::Deterministic => Matrix::zeros(self.out_dim(), self.in_dim()),
        }
    }

    /// Sample pre-activations for a batch via the local reparameterisation
    /// trick; deterministic mode returns the mean exactly and draws
    /// nothing from the generator.
    pub fn forward_local_reparam(&self, inputs: &Matrix, rng: &mut ChaCha8Rng) -> Result<Matrix> {
        Ok(self.forward_traced(inputs, rng)?.0)
    }

    pub(crate) fn forward_traced(
        &self,
        inputs: &Matrix,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Matrix, LayerTrace)> {
        if inputs.cols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "layer expects {} inputs, batch has width {}",
                self.in_dim(),
                inputs.cols()
            )));
        }
        let mut mean = inputs.mul_weights_t(&self.theta);
        for n in 0..mean.rows() {
            for j in 0..mean.cols() {
                mean.set(n, j, mean.get(n, j) + self.bias[j]);
            }
        }
        if self.mode == LayerMode::Deterministic {
            let trace = LayerTrace {
                std: Matrix::zeros(mean.rows(), mean.cols()),
                z: Matrix::zeros(mean.rows(), mean.cols()),
                pre_activation: mean.clone(),
            };
            return Ok((mean, trace));
        }
        let squared = inputs.map(|v| v * v);
        let var = squared.mul_weights_t(&self.weight_variance());
        let std = var.map(f64::sqrt);
        let z = Matrix::from_fn(mean.rows(), mean.cols(), |_, _| StandardNormal.sample(rng));
        let pre = Matrix::from_fn(mean.rows(), mean.cols(), |n, j| {
            mean.get(n, j) + std.get(n, j) * z.get(n, j)
        });
        let trace = LayerTrace {
            std,
            z,
            pre_activation: pre.clone(),
        };
        Ok((pre, trace))
    }

    /// Sum of exact per-weight KL terms for the layer (zero in
    /// deterministic mode; biases carry no KL).
    pub fn kl_sum(&self, prior: &PriorConstant, cfg: &SeriesConfig) -> Result<f64> {
        Ok(self
            .per_weight_kl(prior, cfg)?
            .iter()
            .map(|e| e.value)
            .sum())
    }

    /// Exact KL evaluation for every weight, row-major. Empty in
    /// deterministic mode.
    pub fn per_weight_kl(
        &self,
        prior: &PriorConstant,
        cfg: &SeriesConfig,
    ) -> Result<Vec<KlEvaluation>> {
        let mut out = Vec::new();
        match self.mode {
            LayerMode::Deterministic => {}
            LayerMode::Multiplicative => {
                for &alpha in self.noise.data() {
                    let p = MultiplicativeParams::new(1.0, alpha)?;
                    out.push(kl_multiplicative(&p, prior, cfg)?.eval);
                }
            }
            LayerMode::Additive => {
                for (idx, &ls) in self.noise.data().iter().enumerate() {
                    let theta = self.theta.data()[idx];
                    let p = AdditiveParams::new(theta, ls)?;
                    out.push(kl_additive(&p, prior, cfg)?.eval);
                }
            }
        }
        Ok(out)
    }

    /// Exact gradients of the layer's KL sum with respect to `theta` and
    /// `noise` entries. The multiplicative theta gradient is identically
    /// zero: the KL never reads theta there.
    pub(crate) fn kl_param_grads(
        &self,
        prior: &PriorConstant,
        cfg: &SeriesConfig,
    ) -> Result<(Matrix, Matrix)> {
        let mut d_theta = Matrix::zeros(self.out_dim(), self.in_dim());
        let mut d_noise = Matrix::zeros(self.out_dim(), self.in_dim());
        match self.mode {
            LayerMode::Deterministic => {}
            LayerMode::Multiplicative => {
                for j in 0..self.out_dim() {
                    for i in 0..self.in_dim() {
                        let p = MultiplicativeParams::new(1.0, self.noise.get(j, i))?;
                        let r = kl_multiplicative(&p, prior, cfg)?;
                        d_noise.set(j, i, r.d_alpha);
                    }
                }
            }
            LayerMode::Additive => {
                for j in 0..self.out_dim() {
                    for i in 0..self.in_dim() {
                        let p = AdditiveParams::new(self.theta.get(j, i), self.noise.get(j, i))?;
                        let r = kl_additive(&p, prior, cfg)?;
                        d_theta.set(j, i, r.d_theta);
                        d_noise.set(j, i, r.d_log_sigma);
                    }
                }
            }
        }
        Ok((d_theta, d_noise))
    }

    /// Per-weight `log10 alpha`: the stored alpha in multiplicative mode,
    /// `log10(sigma^2/theta^2)` in additive mode (`+inf` at theta = 0, by
    /// convention always pruned). Deterministic layers have no alpha.
    pub fn log10_alpha(&self) -> Result<Matrix> {
        match self.mode {
            LayerMode::Deterministic => Err(Error::Precondition(
                "log10_alpha is undefined for deterministic layers".into(),
            )),
            LayerMode::Multiplicative => Ok(self.noise.map(f64::log10)),
            LayerMode::Additive => Ok(Matrix::from_fn(self.out_dim(), self.in_dim(), |j, i| {
                let theta = self.theta.get(j, i);
                if theta == 0.0 {
                    f64::INFINITY
                } else {
                    let ls = self.noise.get(j, i);
                    (2.0 * ls - 2.0 * theta.abs().ln()) / std::f64::consts::LN_10
                }
            })),
        }
    }
}

/// Per-layer cache from a sampled forward pass, consumed by backward.
#[derive(Clone, Debug)]
pub(crate) struct LayerTrace {
    pub std: Matrix,
    pub z: Matrix,
    pub pre_activation: Matrix,
}

/// One shared noise scalar per input row: `w_i = s_i theta_i` with
/// `s_i ~ N(1, alpha_i)`, emulating Bernoulli dropout's row-coupled noise.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedVDLayer {
    theta: Matrix,
    row_alpha: Vec<f64>,
    prior_scope: PriorScope,
}

/// What the log-uniform prior is placed over in the correlated model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorScope {
    /// Prior over all weights: the row-coupled posterior concentrates on a
    /// measure-zero subspace, so its KL is infinite for any theta.
    FullWeights,
    /// Prior over the row scalars only: the KL is finite but every theta
    /// entry becomes an unregularised model parameter.
    ScalarsOnly,
}

impl CorrelatedVDLayer {
    /// `row_alpha` has one entry per input row (theta column).
    pub fn new(theta: Matrix, row_alpha: Vec<f64>, prior_scope: PriorScope) -> Result<Self> {
        if row_alpha.len() != theta.cols() {
            return Err(Error::Shape(format!(
                "row_alpha length {} does not match in-dim {}",
                row_alpha.len(),
                theta.cols()
            )));
        }
        if !row_alpha.iter().all(|&a| positive_finite(a)) {
            return Err(Error::Precondition(
                "every row_alpha must be finite and > 0".into(),
            ));
        }
        Ok(Self {
            theta,
            row_alpha,
            prior_scope,
        })
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn row_alpha(&self) -> &[f64] {
        &self.row_alpha
    }

    pub fn prior_scope(&self) -> PriorScope {
        self.prior_scope
    }
}

/// Outcome of the correlated-noise KL diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub enum CorrelatedKlDiagnostic {
    /// Degenerate posterior against a full-support prior.
    InfiniteKl,
    /// Prior over the scalars only: finite per-row KL of `N(1, alpha_i)`
    /// against `C/|s|` (so `u = 1/(2 alpha_i)`), plus the count of theta
    /// entries left unregularised.
    ScalarOnlyKl {
        per_row: Vec<KlEvaluation>,
        unregularised_params: usize,
    },
}

pub fn correlated_kl_diagnostic(
    layer: &CorrelatedVDLayer,
    prior: &PriorConstant,
    cfg: &SeriesConfig,
) -> Result<CorrelatedKlDiagnostic> {
    match layer.prior_scope {
        PriorScope::FullWeights => Ok(CorrelatedKlDiagnostic::InfiniteKl),
        PriorScope::ScalarsOnly => {
            let mut per_row = Vec::with_capacity(layer.row_alpha.len());
            for &alpha in &layer.row_alpha {
                let p = crate::kl::MeanVarParams::new(1.0, alpha)?;
                let u = crate::kl::reduced_u(&p);
                per_row.push(KlEvaluation {
                    u,
                    value: crate::kl::kl_value(u, prior, cfg)?,
                    grad_u: crate::kl::kl_grad_u(u)?,
                });
            }
            Ok(CorrelatedKlDiagnostic::ScalarOnlyKl {
                per_row,
                unregularised_params: layer.theta.len(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn fixed_layer(mode: LayerMode) -> DenseVDLayer {
        // 3 outputs, 2 inputs.
        let theta = Matrix::from_vec(3, 2, vec![0.6, -0.4, 1.2, 0.3, -0.8, 0.5]).unwrap();
        let noise = match mode {
            LayerMode::Multiplicative => Matrix::from_vec(3, 2, vec![0.3; 6]).unwrap(),
            _ => Matrix::from_vec(3, 2, vec![-1.0, -0.5, -2.0, -1.5, -0.7, -1.2]).unwrap(),
        };
        DenseVDLayer::new(mode, theta, noise, vec![0.1, -0.2, 0.3]).unwrap()
    }

    #[test]
    fn deterministic_forward_is_the_affine_map() {
        let layer = fixed_layer(LayerMode::Deterministic);
        let x = Matrix::from_vec(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = layer.forward_local_reparam(&x, &mut rng).unwrap();
        for n in 0..2 {
            for j in 0..3 {
                let expect = layer.bias()[j]
                    + x.get(n, 0) * layer.theta().get(j, 0)
                    + x.get(n, 1) * layer.theta().get(j, 1);
                assert!((y.get(n, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn vanishing_additive_noise_matches_deterministic() {
        let det = fixed_layer(LayerMode::Deterministic);
        let tiny = DenseVDLayer::new(
            LayerMode::Additive,
            det.theta().clone(),
            Matrix::from_vec(3, 2, vec![-20.0; 6]).unwrap(),
            det.bias().to_vec(),
        )
        .unwrap();
        let x = Matrix::from_vec(1, 2, vec![0.7, -1.3]).unwrap();
        let mut rng_a = ChaCha8Rng::seed_from_u64(5);
        let mut rng_b = ChaCha8Rng::seed_from_u64(5);
        let y_det = det.forward_local_reparam(&x, &mut rng_a).unwrap();
        let y_add = tiny.forward_local_reparam(&x, &mut rng_b).unwrap();
        for j in 0..3 {
            assert!((y_det.get(0, j) - y_add.get(0, j)).abs() < 1e-6);
        }
    }

    #[test]
    fn sampled_moments_match_the_analytic_gaussian() {
        // 1e5 draws through a fixed 3-out/2-in layer: per-unit sample mean
        // and variance must sit within 4 standard errors of the analytic
        // moments of the induced Gaussian.
        let layer = fixed_layer(LayerMode::Multiplicative);
        let x = Matrix::from_vec(1, 2, vec![0.9, -0.6]).unwrap();
        let mean = {
            let mut m = x.mul_weights_t(layer.theta());
            for j in 0..3 {
                m.set(0, j, m.get(0, j) + layer.bias()[j]);
            }
            m
        };
        let var = x.map(|v| v * v).mul_weights_t(&layer.weight_variance());
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut sums = [0.0f64; 3];
        let mut sumsqs = [0.0f64; 3];
        for _ in 0..n {
            let y = layer.forward_local_reparam(&x, &mut rng).unwrap();
            for j in 0..3 {
                sums[j] += y.get(0, j);
                sumsqs[j] += y.get(0, j) * y.get(0, j);
            }
        }
        for j in 0..3 {
            let m_hat = sums[j] / n as f64;
            let v_hat = (sumsqs[j] - n as f64 * m_hat * m_hat) / (n as f64 - 1.0);
            let mean_se = (var.get(0, j) / n as f64).sqrt();
            assert!(
                (m_hat - mean.get(0, j)).abs() < 4.0 * mean_se,
                "unit {j}: mean {m_hat} vs {}",
                mean.get(0, j)
            );
            let var_se = var.get(0, j) * (2.0 / (n as f64 - 1.0)).sqrt();
            assert!(
                (v_hat - var.get(0, j)).abs() < 4.0 * var_se,
                "unit {j}: var {v_hat} vs {}",
                var.get(0, j)
            );
        }
    }

    #[test]
    fn multiplicative_kl_ignores_theta_rescaling() {
        let layer = fixed_layer(LayerMode::Multiplicative);
        let rescaled = DenseVDLayer::new(
            LayerMode::Multiplicative,
            layer.theta().map(|t| t * -17.5),
            layer.noise().clone(),
            layer.bias().to_vec(),
        )
        .unwrap();
        let prior = PriorConstant::default();
        let cfg = SeriesConfig::default();
        let a = layer.kl_sum(&prior, &cfg).unwrap();
        let b = rescaled.kl_sum(&prior, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn shape_and_positivity_invariants_are_enforced() {
        let theta = Matrix::zeros(2, 3);
        let bad_noise = Matrix::zeros(3, 2);
        assert!(
            DenseVDLayer::new(LayerMode::Additive, theta.clone(), bad_noise, vec![0.0; 2]).is_err()
        );
        let noise = Matrix::zeros(2, 3);
        assert!(
            DenseVDLayer::new(
                LayerMode::Multiplicative,
                theta.clone(),
                noise.clone(),
                vec![0.0; 2]
            )
            .is_err(),
            "alpha = 0 must be rejected"
        );
        assert!(DenseVDLayer::new(LayerMode::Additive, theta, noise, vec![0.0; 3]).is_err());
    }

    #[test]
    fn forward_rejects_width_mismatch() {
        let layer = fixed_layer(LayerMode::Additive);
        let x = Matrix::zeros(1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            layer.forward_local_reparam(&x, &mut rng),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn additive_log10_alpha_handles_zero_theta() {
        let layer = DenseVDLayer::new(
            LayerMode::Additive,
            Matrix::from_vec(1, 2, vec![0.0, 2.0]).unwrap(),
            Matrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap(),
            vec![0.0],
        )
        .unwrap();
        let l10 = layer.log10_alpha().unwrap();
        assert!(l10.get(0, 0).is_infinite());
        // theta = 2, sigma = 1: alpha = 1/4.
        assert!((l10.get(0, 1) - 0.25f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn correlated_full_weights_scope_is_always_infinite() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let prior = PriorConstant::default();
        let cfg = SeriesConfig::default();
        for _ in 0..5 {
            let theta = Matrix::from_fn(3, 5, |_, _| rng.gen_range(-2.0..2.0));
            let layer =
                CorrelatedVDLayer::new(theta, vec![0.5; 5], PriorScope::FullWeights).unwrap();
            let d = correlated_kl_diagnostic(&layer, &prior, &cfg).unwrap();
            assert_eq!(d, CorrelatedKlDiagnostic::InfiniteKl);
        }
    }

    #[test]
    fn correlated_scalar_scope_reports_rows_and_unregularised_count() {
        let theta = Matrix::zeros(3, 5);
        let layer = CorrelatedVDLayer::new(theta, vec![2.0; 5], PriorScope::ScalarsOnly).unwrap();
        let d =
            correlated_kl_diagnostic(&layer, &PriorConstant::default(), &SeriesConfig::default())
                .unwrap();
        match d {
            CorrelatedKlDiagnostic::ScalarOnlyKl {
                per_row,
                unregularised_params,
            } => {
                assert_eq!(per_row.len(), 5);
                assert_eq!(unregularised_params, 15);
                for e in &per_row {
                    // N(1, alpha): u = 1/(2 alpha) = 0.25 at alpha = 2.
                    assert!((e.u - 0.25).abs() < 1e-15);
                    assert!(e.value.is_finite());
                    assert!(e.grad_u > 0.0);
                }
            }
            other => panic!("expected scalar-only diagnostic, got {other:?}"),
        }
    }

    #[test]
    fn correlated_layer_validates_row_alpha() {
        let theta = Matrix::zeros(2, 3);
        assert!(
            CorrelatedVDLayer::new(theta.clone(), vec![1.0; 2], PriorScope::ScalarsOnly).is_err()
        );
        assert!(
            CorrelatedVDLayer::new(theta, vec![1.0, -1.0, 1.0], PriorScope::ScalarsOnly).is_err()
        );
    }
}
