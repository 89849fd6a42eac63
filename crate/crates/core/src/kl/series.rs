//! Poisson-mixture series evaluation of the KL value, its gradient, and
//! the mean of the log of a noncentral chi-squared variable.

use super::{PriorConstant, SeriesConfig};
use crate::error::{Error, Result};
use crate::specfun;
use std::f64::consts::{LN_2, PI};

/// Inputs above this are rejected rather than approximated; nothing in a
/// plausible training run gets near it (the network layers clamp their
/// noise parameters accordingly).
pub const MAX_U: f64 = 1e8;

fn check_u(func: &'static str, u: f64) -> Result<()> {
    if !u.is_finite() || u < 0.0 {
        return Err(Error::Domain {
            func,
            msg: format!("requires finite u >= 0, got {u}"),
        });
    }
    if u > MAX_U {
        return Err(Error::Range {
            func,
            msg: format!("u <= {MAX_U:e} supported, got {u:e}"),
        });
    }
    Ok(())
}

/// Exact KL value at reduced parameter `u` for prior constant C:
/// `-ln(2 pi e)/2 - ln C + ( ln 2 + E_{K~Poisson(u)}[psi(1/2 + K)] ) / 2`.
///
/// The Poisson mixture uses the `0^0 := 1` convention at `u = 0`, where the
/// mean collapses to `psi(1/2)`. Absolute accuracy is well inside 1e-9.
pub fn kl_value(u: f64, prior: &PriorConstant, cfg: &SeriesConfig) -> Result<f64> {
    check_u("kl_value", u)?;
    let mean_psi = poisson_mean_digamma(u, 0.5, cfg)?;
    Ok(-0.5 * (2.0 * PI * std::f64::consts::E).ln() - prior.c().ln() + 0.5 * (LN_2 + mean_psi))
}

/// The gradient series is preferred near the origin where the Dawson form
/// is 0/0; the Dawson form is preferred beyond, exercising both closed
/// forms of the same derivative.
const GRAD_SERIES_MAX_U: f64 = 1.0;

/// Exact derivative of [`kl_value`] with respect to `u`:
/// `1` at `u = 0` and `D(sqrt u)/sqrt u` for `u > 0`, continuous on
/// `[0, inf)` and strictly positive.
pub fn kl_grad_u(u: f64) -> Result<f64> {
    check_u("kl_grad_u", u)?;
    if u == 0.0 {
        return Ok(1.0);
    }
    if u <= GRAD_SERIES_MAX_U {
        let cfg = SeriesConfig::default();
        Ok(0.5 * poisson_mean_recip(u, 0.5, &cfg)?)
    } else {
        let r = u.sqrt();
        Ok(specfun::dawson(r)? / r)
    }
}

/// `E[ln v]` for `v ~ chi^2(lambda, nu)` (noncentrality `lambda`, `nu`
/// degrees of freedom), via the Poisson mixture of central chi-squareds:
/// `sum_k e^{-lambda/2} (lambda/2)^k / k! (psi(nu/2 + k) + ln 2)`.
pub fn logchisq_mean(lambda: f64, nu: u32, cfg: &SeriesConfig) -> Result<f64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Domain {
            func: "logchisq_mean",
            msg: format!("requires finite lambda >= 0, got {lambda}"),
        });
    }
    if nu == 0 {
        return Err(Error::Domain {
            func: "logchisq_mean",
            msg: "requires nu >= 1".to_string(),
        });
    }
    let rate = 0.5 * lambda;
    if rate > MAX_U {
        return Err(Error::Range {
            func: "logchisq_mean",
            msg: format!("lambda/2 <= {MAX_U:e} supported, got {rate:e}"),
        });
    }
    Ok(poisson_mean_digamma(rate, 0.5 * f64::from(nu), cfg)? + LN_2)
}

/// `E_{K~Poisson(rate)}[psi(offset + K)]`.
///
/// Forward summation for `rate <= cfg.switch_u`; otherwise a summation in
/// log space centred at `k0 = floor(rate)`, extended outward until
/// explicit Poisson tail bounds certify the truncation error below
/// `cfg.tol`. The naive forward sum is unusable there: `exp(-rate)`
/// underflows while `rate^k/k!` overflows, even though their product is
/// benign.
pub(crate) fn poisson_mean_digamma(rate: f64, offset: f64, cfg: &SeriesConfig) -> Result<f64> {
    debug_assert!(offset > 0.0);
    if rate <= cfg.switch_u {
        forward_sum(rate, offset, cfg, "poisson_mean_digamma")
    } else {
        centered_sum(rate, offset, cfg)
    }
}

/// `E_{K~Poisson(rate)}[1/(offset + K)]`, forward summation. Only needed
/// for small rates (the gradient series below u = 1).
pub(crate) fn poisson_mean_recip(rate: f64, offset: f64, cfg: &SeriesConfig) -> Result<f64> {
    debug_assert!(rate <= cfg.switch_u);
    let mut weight = (-rate).exp();
    let mut sum = 0.0;
    for k in 0..cfg.max_terms {
        let kf = k as f64;
        let term = weight / (offset + kf);
        sum += term;
        // The summand is decreasing in k, so once weights decay (k >= rate)
        // the tail is dominated by a geometric series.
        if kf >= rate {
            let q = rate / (kf + 2.0);
            let next = weight * rate / (kf + 1.0) / (offset + kf + 1.0);
            if next / (1.0 - q) < cfg.tol {
                return Ok(sum);
            }
        }
        weight *= rate / (kf + 1.0);
    }
    Err(Error::Convergence {
        func: "poisson_mean_recip",
        max_terms: cfg.max_terms,
    })
}

/// Upper-tail bound for `sum_{j > k} w_j psi(offset + j)` given `w_{k+1}`:
/// weights decay at least geometrically with ratio `q = rate/(k+2)` and
/// `psi(offset + j) <= psi(offset + k + 1) + (j - k - 1) * slope` with
/// `slope = 1/(offset+k+1) + 1/(offset+k+1)^2 >= psi'(offset + k + 1)`.
fn upper_tail_bound(rate: f64, offset: f64, k: f64, w_next: f64, psi_next: f64) -> f64 {
    let q = rate / (k + 2.0);
    if q >= 1.0 {
        return f64::INFINITY;
    }
    let x = offset + k + 1.0;
    let slope = 1.0 / x + 1.0 / (x * x);
    w_next * (psi_next.abs() / (1.0 - q) + slope * q / ((1.0 - q) * (1.0 - q)))
}

fn forward_sum(rate: f64, offset: f64, cfg: &SeriesConfig, func: &'static str) -> Result<f64> {
    let mut weight = (-rate).exp();
    let mut psi = specfun::digamma(offset)?;
    let mut sum = 0.0;
    for k in 0..cfg.max_terms {
        let kf = k as f64;
        sum += weight * psi;
        let w_next = weight * rate / (kf + 1.0);
        let psi_next = psi + 1.0 / (offset + kf);
        if kf >= rate && upper_tail_bound(rate, offset, kf, w_next, psi_next) < cfg.tol {
            return Ok(sum);
        }
        weight = w_next;
        psi = psi_next;
    }
    Err(Error::Convergence {
        func,
        max_terms: cfg.max_terms,
    })
}

fn centered_sum(rate: f64, offset: f64, cfg: &SeriesConfig) -> Result<f64> {
    let k0 = rate.floor();
    let w0 = ln_poisson_weight_at_mode(rate, k0).exp();
    let psi0 = specfun::digamma(offset + k0)?;
    let mut sum = w0 * psi0;

    // Upward from k0 + 1.
    let mut weight = w0;
    let mut psi = psi0;
    let mut k = k0;
    let mut converged = false;
    for _ in 0..cfg.max_terms {
        let w_next = weight * rate / (k + 1.0);
        let psi_next = psi + 1.0 / (offset + k);
        if k >= rate && upper_tail_bound(rate, offset, k, w_next, psi_next) < cfg.tol {
            converged = true;
            break;
        }
        weight = w_next;
        psi = psi_next;
        k += 1.0;
        sum += weight * psi;
    }
    if !converged {
        return Err(Error::Convergence {
            func: "poisson_mean_digamma",
            max_terms: cfg.max_terms,
        });
    }

    // Downward from k0 - 1. Weights decay with ratio k/rate < 1, so the
    // remaining lower tail is bounded by a geometric series times the
    // largest |psi| among the remaining summands (psi is increasing, and
    // psi(offset) may be negative).
    let psi_floor_abs = specfun::digamma(offset)?.abs();
    weight = w0;
    psi = psi0;
    k = k0;
    converged = false;
    for _ in 0..cfg.max_terms {
        if k < 1.0 {
            converged = true;
            break;
        }
        let w_prev = weight * k / rate;
        let psi_prev = psi - 1.0 / (offset + k - 1.0);
        let p = (k - 1.0) / rate;
        let f_max = psi_prev.abs().max(psi_floor_abs);
        if w_prev * f_max / (1.0 - p) < cfg.tol {
            converged = true;
            break;
        }
        weight = w_prev;
        psi = psi_prev;
        k -= 1.0;
        sum += weight * psi;
    }
    if !converged {
        return Err(Error::Convergence {
            func: "poisson_mean_digamma",
            max_terms: cfg.max_terms,
        });
    }
    Ok(sum)
}

/// Stirling correction J(z) with ln Gamma(z) = (z - 1/2) ln z - z
/// + ln(2 pi)/2 + J(z); accurate to ~1e-16 absolute for z >= 10.
fn stirling_tail(z: f64) -> f64 {
    debug_assert!(z >= 10.0);
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut tail = 0.0;
    let mut p = inv;
    for c in C {
        tail += c * p;
        p *= inv2;
    }
    tail
}

/// ln of the Poisson weight at the mode, `ln( e^{-rate} rate^{k0} / k0! )`
/// for `k0 = floor(rate)`, assembled so the O(rate ln rate) pieces cancel
/// symbolically: the naive three-term difference loses ~7 digits by
/// rate = 1e8. Writing `ln k0! = ln Gamma(Z) - sum ln(z+j)` with
/// `z = k0 + 1` shifted up by `m` terms to `Z = z + m >= 10`, Stirling
/// gives
///
/// ```text
/// ln w0 = (Z - rate) - ln(2 pi)/2 - J(Z)
///         + k0 ln_1p((rate - Z)/Z) - (m + 1/2) ln Z + sum_{j<m} ln(z+j)
/// ```
///
/// where every assembled term is O(ln rate), so the result is
/// eps-accurate for any rate.
fn ln_poisson_weight_at_mode(rate: f64, k0: f64) -> f64 {
    debug_assert!(k0 >= 0.0);
    let z = k0 + 1.0;
    let m = if z >= 10.0 { 0.0 } else { (10.0 - z).ceil() };
    let zz = z + m;
    let mut shift = 0.0;
    let mut j = 0.0;
    while j < m {
        shift += (z + j).ln();
        j += 1.0;
    }
    (zz - rate) - 0.5 * (2.0 * PI).ln() - stirling_tail(zz) + k0 * ((rate - zz) / zz).ln_1p()
        - (m + 0.5) * zz.ln()
        + shift
}

/// ln Gamma(z) for the tests below; shift-then-Stirling.
#[cfg(test)]
fn ln_gamma(mut z: f64) -> f64 {
    debug_assert!(z > 0.0);
    let mut shift = 0.0;
    while z < 10.0 {
        shift -= z.ln();
        z += 1.0;
    }
    shift + (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + stirling_tail(z)
}
