//! Exponential integral Ei(x) for 0 < |x| <= 30.

use super::{AccuracySpec, EULER_GAMMA};
use crate::error::{Error, Result};

/// Callers in this crate never need |x| beyond the series-identity range.
const MAX_ABS_X: f64 = 30.0;

/// Below this the power series is stable even though it alternates; beyond,
/// the alternating terms grow large enough to eat the answer (at x = -30
/// the largest term is ~2.6e10 against a value of ~3e-15), so the E1
/// continued fraction takes over.
const CF_BELOW: f64 = -1.0;

/// Exponential integral with default accuracy control.
pub fn expint_ei(x: f64) -> Result<f64> {
    expint_ei_with(x, &AccuracySpec::default())
}

/// Exponential integral Ei(x).
///
/// * `x > 0`: power series `gamma + ln x + sum_k x^k/(k k!)` (all positive).
/// * `-1 < x < 0`: the same series, alternating but well conditioned.
/// * `-30 <= x <= -1`: `Ei(x) = -E1(-x)` with E1 by modified-Lentz
///   continued fraction.
///
/// `x = 0` is a logarithmic singularity and is rejected, as is |x| > 30.
pub fn expint_ei_with(x: f64, spec: &AccuracySpec) -> Result<f64> {
    if !x.is_finite() || x == 0.0 {
        return Err(Error::Domain {
            func: "expint_ei",
            msg: format!("requires finite x != 0, got {x}"),
        });
    }
    if x.abs() > MAX_ABS_X {
        return Err(Error::Range {
            func: "expint_ei",
            msg: format!("|x| <= {MAX_ABS_X} supported, got {x}"),
        });
    }
    if x >= CF_BELOW {
        power_series(x, spec)
    } else {
        Ok(-e1_continued_fraction(-x, spec)?)
    }
}

fn power_series(x: f64, spec: &AccuracySpec) -> Result<f64> {
    let mut p = 1.0_f64; // x^k / k!
    let mut s = 0.0_f64;
    for k in 1..=spec.max_terms {
        p *= x / k as f64;
        let term = p / k as f64;
        s += term;
        if term.abs() <= spec.abs_tol + spec.rel_tol * s.abs().max(1.0) {
            return Ok(EULER_GAMMA + x.abs().ln() + s);
        }
    }
    Err(Error::Convergence {
        func: "expint_ei",
        max_terms: spec.max_terms,
    })
}

/// E1(t) = exp(-t) / (t + 1 - 1^2/(t + 3 - 2^2/(t + 5 - ...))) for t >= 1.
fn e1_continued_fraction(t: f64, spec: &AccuracySpec) -> Result<f64> {
    const FPMIN: f64 = 1e-300;
    let stop = spec.rel_tol.max(1e-15);
    let mut b = t + 1.0;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=spec.max_terms {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= stop {
            return Ok(h * (-t).exp());
        }
    }
    Err(Error::Convergence {
        func: "expint_ei",
        max_terms: spec.max_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct truncated series oracle, independent of the CF path.
    fn series_oracle(x: f64) -> f64 {
        let mut p = 1.0_f64;
        let mut s = 0.0_f64;
        for k in 1..400u64 {
            p *= x / k as f64;
            s += p / k as f64;
        }
        EULER_GAMMA + x.abs().ln() + s
    }

    #[test]
    fn positive_unit_matches_series_identity() {
        // Ei(1) = gamma + sum 1/(k! k), summed directly.
        let mut fact = 1.0_f64;
        let mut s = 0.0_f64;
        for k in 1..60u64 {
            fact *= k as f64;
            s += 1.0 / (fact * k as f64);
        }
        let oracle = EULER_GAMMA + s;
        let v = expint_ei(1.0).unwrap();
        assert!((v - oracle).abs() < 1e-13, "Ei(1) = {v} vs {oracle}");
        assert!((v - 1.895_117_8).abs() < 1e-6);
    }

    #[test]
    fn negative_unit_matches_alternating_series_oracle() {
        let oracle = series_oracle(-1.0);
        let v = expint_ei(-1.0).unwrap();
        assert!((v - oracle).abs() < 1e-12, "Ei(-1) = {v} vs {oracle}");
        assert!((v + 0.219_383_9).abs() < 1e-6);
    }

    #[test]
    fn continued_fraction_agrees_with_series_where_both_are_stable() {
        for &x in &[-1.0, -2.0, -4.0, -6.0] {
            let cf = expint_ei(x).unwrap();
            let series = series_oracle(x);
            assert!(
                (cf - series).abs() <= 1e-10 * series.abs().max(1e-3),
                "x={x}: cf {cf} vs series {series}"
            );
        }
    }

    #[test]
    fn continuity_spot_check() {
        for &x in &[0.5, 3.0, -2.0, 20.0] {
            let a = expint_ei(x).unwrap();
            let b = expint_ei(x * (1.0 - 1e-12)).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(expint_ei(0.0), Err(Error::Domain { .. })));
        assert!(matches!(expint_ei(31.0), Err(Error::Range { .. })));
        assert!(matches!(expint_ei(-31.0), Err(Error::Range { .. })));
        assert!(expint_ei(f64::NAN).is_err());
    }

    #[test]
    fn large_negative_argument_is_tiny_but_accurate() {
        // Ei(-30) = -E1(30); leading asymptotic E1(t) ~ e^-t/t (1 - 1/t + 2/t^2).
        let t: f64 = 30.0;
        let lead = (-t).exp() / t * (1.0 - 1.0 / t + 2.0 / (t * t));
        let v = expint_ei(-30.0).unwrap();
        assert!((v + lead).abs() / lead < 1e-3, "Ei(-30) = {v}");
    }
}
