//! Closed-form series identities behind the KL derivation, checked by
//! direct truncated summation against their exponential-integral forms.

use crate::error::{Error, Result};
use crate::specfun::{expint_ei, EULER_GAMMA};

/// Absolute residuals of the two identities at one value of `u`:
///
/// * `harmonic_sum`: `sum_{k>=1} u^k H_k / k!  =  e^u (gamma + ln u - Ei(-u))`
/// * `ei_series`:    `sum_{k>=1} u^k / (k! k)  =  Ei(u) - gamma - ln u`
///
/// Both hold for `u > 0`. The left sides are summed directly until the
/// next term drops below 1e-14, so the residuals are meaningful at the
/// ~1e-9 level for `u` up to a few; at larger `u` they scale with `e^u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesIdentityResiduals {
    pub harmonic_sum: f64,
    pub ei_series: f64,
}

impl SeriesIdentityResiduals {
    pub fn max(&self) -> f64 {
        self.harmonic_sum.max(self.ei_series)
    }
}

const NEXT_TERM_FLOOR: f64 = 1e-14;
const MAX_TERMS: usize = 10_000;

/// Evaluate both identity residuals at `u` (supported for `0 < u <= 30`).
pub fn verify_series_identities(u: f64) -> Result<SeriesIdentityResiduals> {
    if !u.is_finite() || u <= 0.0 {
        return Err(Error::Domain {
            func: "verify_series_identities",
            msg: format!("requires finite u > 0, got {u}"),
        });
    }
    if u > 30.0 {
        return Err(Error::Range {
            func: "verify_series_identities",
            msg: format!("u <= 30 supported, got {u}"),
        });
    }

    // Direct truncated sums; both share the power/factorial recursion.
    let mut p = 1.0_f64; // u^k / k!
    let mut h = 0.0_f64; // H_k
    let mut harmonic_lhs = 0.0_f64;
    let mut ei_lhs = 0.0_f64;
    let mut converged = false;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        p *= u / kf;
        h += 1.0 / kf;
        harmonic_lhs += p * h;
        ei_lhs += p / kf;
        // The harmonic term dominates the Ei term, so one stop rule covers both.
        let next = p * u / (kf + 1.0) * (h + 1.0 / (kf + 1.0));
        if next < NEXT_TERM_FLOOR {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            func: "verify_series_identities",
            max_terms: MAX_TERMS,
        });
    }

    let harmonic_rhs = u.exp() * (EULER_GAMMA + u.ln() - expint_ei(-u)?);
    let ei_rhs = expint_ei(u)? - EULER_GAMMA - u.ln();
    Ok(SeriesIdentityResiduals {
        harmonic_sum: (harmonic_lhs - harmonic_rhs).abs(),
        ei_series: (ei_lhs - ei_rhs).abs(),
    })
}
