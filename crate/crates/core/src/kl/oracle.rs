//! Independent reference routes for the KL value.
//!
//! Both oracles avoid the production evaluation path: the series oracle
//! sums the defining series naively with a fixed term count and builds
//! `psi(1/2 + k)` from the exact constant `-gamma - 2 ln 2` plus partial
//! fractions (no call into [`crate::specfun`]); the Monte Carlo oracle
//! estimates `E_q[ln q(w) - ln p(w)]` directly from samples.

use super::{MeanVarParams, PriorConstant};
use crate::error::{Error, Result};
use crate::specfun::DIGAMMA_HALF;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::{LN_2, PI};

/// Naive summation ceiling: beyond u = 30 the fixed-term forward sum loses
/// accuracy to the underflowing `exp(-u)` weight.
const MAX_ORACLE_U: f64 = 30.0;

/// Fixed-term, no-regime-switch evaluation of the KL series. Test code
/// only; `terms` large enough for the Poisson tail at the given `u` is the
/// caller's responsibility (200 terms covers u <= 30 to well below 1e-12).
pub fn kl_series_oracle(u: f64, prior: &PriorConstant, terms: usize) -> Result<f64> {
    if !u.is_finite() || u < 0.0 {
        return Err(Error::Domain {
            func: "kl_series_oracle",
            msg: format!("requires finite u >= 0, got {u}"),
        });
    }
    if u > MAX_ORACLE_U {
        return Err(Error::Range {
            func: "kl_series_oracle",
            msg: format!("naive summation supported for u <= {MAX_ORACLE_U}, got {u}"),
        });
    }
    if terms < 1 {
        return Err(Error::Precondition(
            "kl_series_oracle requires terms >= 1".into(),
        ));
    }
    let mut weight = (-u).exp();
    let mut psi = DIGAMMA_HALF;
    let mut sum = 0.0;
    for k in 0..terms {
        let kf = k as f64;
        sum += weight * psi;
        weight *= u / (kf + 1.0);
        psi += 1.0 / (0.5 + kf);
    }
    Ok(-0.5 * (2.0 * PI * std::f64::consts::E).ln() - prior.c().ln() + 0.5 * (LN_2 + sum))
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of `KL(q || p)` by averaging
/// `ln q(w) - ln C + ln |w|` over `w ~ N(mu, sigma^2)`.
///
/// Deterministic for a given seed. Samples landing exactly on `w = 0`
/// (probability zero, but representable) are rejected and redrawn. Uses
/// `ln |w|` directly rather than `ln(w^2)/2` so subnormal draws do not
/// underflow prematurely.
pub fn kl_mc_oracle(
    params: &MeanVarParams,
    prior: &PriorConstant,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n < 1000 {
        return Err(Error::Precondition(format!(
            "kl_mc_oracle requires n >= 1000, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma2 = params.sigma2();
    let normal = Normal::new(params.mu(), sigma2.sqrt())
        .expect("validated MeanVarParams give a valid Normal");
    let norm_const = -0.5 * (2.0 * PI * sigma2).ln();
    let ln_c = prior.c().ln();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n {
        let mut w = normal.sample(&mut rng);
        while w == 0.0 {
            w = normal.sample(&mut rng);
        }
        let d = w - params.mu();
        let t = norm_const - d * d / (2.0 * sigma2) - ln_c + w.abs().ln();
        sum += t;
        sumsq += t * t;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / nf).sqrt(),
    })
}
