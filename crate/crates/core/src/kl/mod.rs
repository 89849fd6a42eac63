//! Exact KL divergence of a Gaussian pseudo-posterior `N(mu, sigma^2)`
//! against the improper log-uniform prior `p(w) = C/|w|`.
//!
//! The divergence depends on the posterior only through the reduced
//! parameter `u = mu^2 / (2 sigma^2)`:
//!
//! ```text
//! KL(u) = -ln(2 pi e)/2 - ln C + ( ln 2 + E_{K~Poisson(u)}[psi(1/2 + K)] ) / 2
//! dKL/du = 1 at u = 0, and D(sqrt u)/sqrt u for u > 0,
//! ```
//!
//! where `psi` is the digamma function and `D` the Dawson integral. The
//! gradient is strictly positive, so `KL` is strictly increasing in `u`
//! with its unique minimum at `u = 0`.
//!
//! Chain rules are provided for three parametrisations: `(mu, sigma^2)`,
//! the multiplicative `(theta, alpha)` where `u = 1/alpha` and the KL
//! never reads `theta`, and the additive `(theta, log sigma)` where
//! `theta = 0` attains `u = 0` exactly.
//!
//! [`oracle`] holds two independent reference routes (naive fixed-term
//! summation and Monte Carlo); [`identities`] checks the closed-form
//! series identities the derivation rests on.

pub mod identities;
pub mod oracle;
mod series;

pub use identities::{verify_series_identities, SeriesIdentityResiduals};
pub use oracle::{kl_mc_oracle, kl_series_oracle, McEstimate};
pub use series::{kl_grad_u, kl_value, logchisq_mean, MAX_U};

use crate::error::{Error, Result};
use crate::util::positive_finite;
use serde::{Deserialize, Serialize};

/// A single weight's Gaussian pseudo-posterior in mean/variance form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanVarParams {
    mu: f64,
    sigma2: f64,
}

impl MeanVarParams {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::Precondition(format!(
                "MeanVarParams requires finite mu and sigma2 > 0, got ({mu}, {sigma2})"
            )));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// Multiplicative parametrisation `N(theta, alpha theta^2)`, i.e. the mean
/// multiplied by noise `N(1, alpha)`. Here `u = 1/alpha` regardless of
/// `theta`, so `u = 0` is only approached as `alpha -> infinity`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplicativeParams {
    theta: f64,
    alpha: f64,
}

impl MultiplicativeParams {
    pub fn new(theta: f64, alpha: f64) -> Result<Self> {
        if !theta.is_finite() || !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Precondition(format!(
                "MultiplicativeParams requires finite theta and alpha > 0, got ({theta}, {alpha})"
            )));
        }
        Ok(Self { theta, alpha })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Additive parametrisation `(theta, log sigma)`; `u = 0` is attained
/// exactly at `theta = 0` for any finite `log_sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdditiveParams {
    theta: f64,
    log_sigma: f64,
}

impl AdditiveParams {
    pub fn new(theta: f64, log_sigma: f64) -> Result<Self> {
        if !theta.is_finite() || !log_sigma.is_finite() {
            return Err(Error::Precondition(format!(
                "AdditiveParams requires finite fields, got ({theta}, {log_sigma})"
            )));
        }
        Ok(Self { theta, log_sigma })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn log_sigma(&self) -> f64 {
        self.log_sigma
    }
}

/// The prior constant C in `p(w) = C/|w|`. It shifts the KL by `-ln C` and
/// never touches gradients, so optimisation behaviour is C-independent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorConstant {
    c: f64,
}

impl PriorConstant {
    pub fn new(c: f64) -> Result<Self> {
        if !positive_finite(c) {
            return Err(Error::Precondition(format!(
                "PriorConstant requires finite c > 0, got {c}"
            )));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Default for PriorConstant {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

/// KL value and gradient at a reduced parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlEvaluation {
    pub u: f64,
    pub value: f64,
    pub grad_u: f64,
}

/// Truncation and regime control for the Poisson-mixture series.
///
/// `switch_u` is where evaluation moves from the forward sum to the
/// log-space summation centred at `floor(u)`; the forward sum would
/// underflow `exp(-u)` against overflowing `u^k/k!` well before the series
/// itself misbehaves. `max_terms` defaults far above the specfun cap
/// because the centred window is `O(sqrt u)` wide and `u` may legitimately
/// reach [`MAX_U`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub tol: f64,
    pub max_terms: usize,
    pub switch_u: f64,
}

impl SeriesConfig {
    pub fn new(tol: f64, max_terms: usize, switch_u: f64) -> Result<Self> {
        if !positive_finite(tol) || !positive_finite(switch_u) || max_terms < 1 {
            return Err(Error::Precondition(format!(
                "SeriesConfig requires tol > 0, switch_u > 0, max_terms >= 1 \
                 (got {tol}, {switch_u}, {max_terms})"
            )));
        }
        Ok(Self {
            tol,
            max_terms,
            switch_u,
        })
    }
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 500_000,
            switch_u: 25.0,
        }
    }
}

/// Reduced parameter `u = mu^2 / (2 sigma^2) >= 0`.
pub fn reduced_u(params: &MeanVarParams) -> f64 {
    params.mu * params.mu / (2.0 * params.sigma2)
}

/// Gradient of the KL with respect to `(mu, sigma^2)` by the chain rule.
pub fn kl_grad_mean_var(params: &MeanVarParams) -> Result<(f64, f64)> {
    let u = reduced_u(params);
    let g = kl_grad_u(u)?;
    let d_mu = g * params.mu / params.sigma2;
    let d_sigma2 = -g * params.mu * params.mu / (2.0 * params.sigma2 * params.sigma2);
    Ok((d_mu, d_sigma2))
}

/// KL in the multiplicative parametrisation plus its `alpha` gradient.
/// `d_theta` is identically zero: `theta` is never read.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplicativeKl {
    pub eval: KlEvaluation,
    pub d_alpha: f64,
    pub d_theta: f64,
}

pub fn kl_multiplicative(
    params: &MultiplicativeParams,
    prior: &PriorConstant,
    cfg: &SeriesConfig,
) -> Result<MultiplicativeKl> {
    let u = 1.0 / params.alpha;
    let value = kl_value(u, prior, cfg)?;
    let grad_u = kl_grad_u(u)?;
    Ok(MultiplicativeKl {
        eval: KlEvaluation { u, value, grad_u },
        d_alpha: -grad_u / (params.alpha * params.alpha),
        d_theta: 0.0,
    })
}

/// KL in the additive parametrisation plus its `(theta, log_sigma)`
/// gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdditiveKl {
    pub eval: KlEvaluation,
    pub d_theta: f64,
    pub d_log_sigma: f64,
}

pub fn kl_additive(
    params: &AdditiveParams,
    prior: &PriorConstant,
    cfg: &SeriesConfig,
) -> Result<AdditiveKl> {
    let inv_var = (-2.0 * params.log_sigma).exp();
    let u = 0.5 * params.theta * params.theta * inv_var;
    let value = kl_value(u, prior, cfg)?;
    let grad_u = kl_grad_u(u)?;
    Ok(AdditiveKl {
        eval: KlEvaluation { u, value, grad_u },
        d_theta: grad_u * params.theta * inv_var,
        d_log_sigma: -2.0 * u * grad_u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> SeriesConfig {
        SeriesConfig::default()
    }

    fn prior() -> PriorConstant {
        PriorConstant::default()
    }

    #[test]
    fn reduced_u_basic_values() {
        let z = MeanVarParams::new(0.0, 1.0).unwrap();
        assert_eq!(reduced_u(&z), 0.0);
        let p = MeanVarParams::new(2.0, 2.0).unwrap();
        assert_eq!(reduced_u(&p), 1.0);
        for &c in &[0.5f64, 3.0, -7.0] {
            let s = MeanVarParams::new(c, c * c).unwrap();
            assert!((reduced_u(&s) - 0.5).abs() < 1e-15, "c = {c}");
        }
    }

    #[test]
    fn grad_mean_var_vanishes_at_zero_mean() {
        let p = MeanVarParams::new(0.0, 1.0).unwrap();
        assert_eq!(kl_grad_mean_var(&p).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn grad_mean_var_composition_at_unit() {
        let p = MeanVarParams::new(1.0, 1.0).unwrap();
        let (d_mu, d_sigma2) = kl_grad_mean_var(&p).unwrap();
        let g = kl_grad_u(0.5).unwrap();
        assert!((d_mu - g).abs() < 1e-15);
        assert!(d_mu > 0.0);
        assert!((d_sigma2 + 0.5 * g).abs() < 1e-15);
    }

    #[test]
    fn multiplicative_is_theta_independent() {
        let a = kl_multiplicative(
            &MultiplicativeParams::new(7.0, 2.0).unwrap(),
            &prior(),
            &cfg(),
        )
        .unwrap();
        let b = kl_multiplicative(
            &MultiplicativeParams::new(-3.0, 2.0).unwrap(),
            &prior(),
            &cfg(),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.d_theta, 0.0);
        assert_eq!(a.eval.u, 0.5);
    }

    #[test]
    fn multiplicative_unit_alpha_gives_unit_u() {
        let r = kl_multiplicative(
            &MultiplicativeParams::new(1.0, 1.0).unwrap(),
            &prior(),
            &cfg(),
        )
        .unwrap();
        assert_eq!(r.eval.u, 1.0);
    }

    #[test]
    fn multiplicative_large_alpha_approaches_but_never_attains_minimum() {
        let floor = kl_value(0.0, &prior(), &cfg()).unwrap();
        let mut prev = f64::INFINITY;
        for &alpha in &[1.0, 10.0, 1e3, 1e6] {
            let r = kl_multiplicative(
                &MultiplicativeParams::new(1.0, alpha).unwrap(),
                &prior(),
                &cfg(),
            )
            .unwrap();
            assert!(r.eval.value > floor, "alpha = {alpha}");
            assert!(r.eval.value < prev, "alpha = {alpha}");
            prev = r.eval.value;
        }
    }

    #[test]
    fn additive_zero_theta_attains_the_minimum_with_zero_gradients() {
        let floor = kl_value(0.0, &prior(), &cfg()).unwrap();
        for &ls in &[-5.0, 0.0, 3.0] {
            let r = kl_additive(&AdditiveParams::new(0.0, ls).unwrap(), &prior(), &cfg()).unwrap();
            assert_eq!(r.eval.u, 0.0);
            assert_eq!(r.eval.value, floor);
            assert_eq!(r.d_theta, 0.0);
            assert_eq!(r.d_log_sigma, 0.0);
        }
    }

    #[test]
    fn additive_unit_theta_zero_log_sigma() {
        let r = kl_additive(&AdditiveParams::new(1.0, 0.0).unwrap(), &prior(), &cfg()).unwrap();
        assert!((r.eval.u - 0.5).abs() < 1e-15);
    }

    #[test]
    fn additive_gradients_match_finite_differences() {
        let h = 1e-6;
        for &(theta, ls) in &[(0.7, -0.3), (-1.4, 0.5), (2.0, -2.0), (0.05, 1.0)] {
            let r =
                kl_additive(&AdditiveParams::new(theta, ls).unwrap(), &prior(), &cfg()).unwrap();
            let at = |t: f64, l: f64| {
                kl_additive(&AdditiveParams::new(t, l).unwrap(), &prior(), &cfg())
                    .unwrap()
                    .eval
                    .value
            };
            let fd_theta = (at(theta + h, ls) - at(theta - h, ls)) / (2.0 * h);
            let fd_ls = (at(theta, ls + h) - at(theta, ls - h)) / (2.0 * h);
            assert!(
                (r.d_theta - fd_theta).abs() < 1e-6,
                "theta fd at ({theta},{ls})"
            );
            assert!(
                (r.d_log_sigma - fd_ls).abs() < 1e-6,
                "ls fd at ({theta},{ls})"
            );
        }
    }

    #[test]
    fn multiplicative_alpha_gradient_matches_finite_differences() {
        let h = 1e-7;
        for &alpha in &[0.3f64, 1.0, 4.0, 20.0] {
            let r = kl_multiplicative(
                &MultiplicativeParams::new(1.0, alpha).unwrap(),
                &prior(),
                &cfg(),
            )
            .unwrap();
            let at = |a: f64| kl_value(1.0 / a, &prior(), &cfg()).unwrap();
            let fd = (at(alpha + h) - at(alpha - h)) / (2.0 * h);
            assert!(
                (r.d_alpha - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "alpha = {alpha}: {} vs {fd}",
                r.d_alpha
            );
        }
    }

    #[test]
    fn constructors_enforce_invariants() {
        assert!(MeanVarParams::new(0.0, 0.0).is_err());
        assert!(MeanVarParams::new(f64::NAN, 1.0).is_err());
        assert!(MultiplicativeParams::new(1.0, -1.0).is_err());
        assert!(AdditiveParams::new(1.0, f64::INFINITY).is_err());
        assert!(PriorConstant::new(0.0).is_err());
        assert!(SeriesConfig::new(0.0, 10, 25.0).is_err());
    }

    proptest! {
        #[test]
        fn reduced_u_is_exactly_invariant_under_power_of_two_rescaling(
            mu in -10.0f64..10.0,
            sigma in 0.05f64..5.0,
            exp2 in -20i32..20,
        ) {
            let c = (2.0f64).powi(exp2);
            let base = MeanVarParams::new(mu, sigma * sigma).unwrap();
            let scaled = MeanVarParams::new(c * mu, c * c * sigma * sigma).unwrap();
            // Power-of-two scaling is exact in binary floating point.
            prop_assert_eq!(reduced_u(&base).to_bits(), reduced_u(&scaled).to_bits());
        }

        #[test]
        fn reduced_u_is_scale_invariant_up_to_rounding(
            mu in -10.0f64..10.0,
            sigma in 0.05f64..5.0,
            c in 0.01f64..100.0,
        ) {
            let base = MeanVarParams::new(mu, sigma * sigma).unwrap();
            let scaled = MeanVarParams::new(c * mu, c * c * sigma * sigma).unwrap();
            let (a, b) = (reduced_u(&base), reduced_u(&scaled));
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.max(1e-300));
        }

        #[test]
        fn mean_var_gradients_match_finite_differences(
            mu in -4.0f64..4.0,
            sigma in 0.3f64..3.0,
        ) {
            let sigma2 = sigma * sigma;
            let p = MeanVarParams::new(mu, sigma2).unwrap();
            let (d_mu, d_sigma2) = kl_grad_mean_var(&p).unwrap();
            let val = |m: f64, s2: f64| {
                kl_value(
                    reduced_u(&MeanVarParams::new(m, s2).unwrap()),
                    &PriorConstant::default(),
                    &SeriesConfig::default(),
                )
                .unwrap()
            };
            let h = 1e-6;
            let fd_mu = (val(mu + h, sigma2) - val(mu - h, sigma2)) / (2.0 * h);
            let fd_s2 = (val(mu, sigma2 + h) - val(mu, sigma2 - h)) / (2.0 * h);
            prop_assert!((d_mu - fd_mu).abs() < 1e-6, "mu: {d_mu} vs {fd_mu}");
            prop_assert!((d_sigma2 - fd_s2).abs() < 1e-6, "s2: {d_sigma2} vs {fd_s2}");
        }
    }
}
