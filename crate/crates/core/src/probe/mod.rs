//! Numerical demonstration of posterior impropriety under the log-uniform
//! prior: mass near the origin grows without bound as the inner radius
//! shrinks, and the logistic-regression tail mass grows without bound with
//! the outer limit.
//!
//! Integrals of `C/|w| * lik(w)` are computed in `t = ln |w|` coordinates,
//! where the `1/|w|` factor becomes a flat measure: endpoint blow-up
//! disappears and a divergence rate turns into a visible linear slope
//! against `ln K` or `ln(1/delta)`. Divergence is always reported as
//! slope-versus-log evidence with a least-squares fit, never as a claim of
//! having computed an infinite integral.

pub mod quad;

use crate::error::{Error, Result};
use crate::util::positive_finite;
use quad::integrate;
use serde::Serialize;

/// Quadrature targets for all probe integrals.
const QUAD_REL_TOL: f64 = 1e-9;
const QUAD_ABS_TOL: f64 = 1e-300;
const QUAD_MAX_SUBDIV: usize = 4000;

/// Sample count used to estimate the infimum of a likelihood over an
/// annulus. The infimum is only needed for a closed-form lower bound, so a
/// dense scan is enough; continuity itself is assumed, not proven.
const INFIMUM_SAMPLES: usize = 1001;

/// A one-dimensional likelihood `w -> p(data | w) >= 0`.
pub struct Likelihood1D {
    label: String,
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Likelihood1D {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Box::new(f),
        }
    }

    /// Logistic likelihood of a single observation (x = 1, y = 1).
    pub fn sigmoid() -> Self {
        Self::new("sigmoid", |w| 1.0 / (1.0 + (-w).exp()))
    }

    /// Gaussian likelihood `N(y; w, sigma^2)` of a single observation.
    pub fn gaussian(y: f64, sigma: f64) -> Self {
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        Self::new(format!("gaussian(y={y}, sigma={sigma})"), move |w| {
            let d = (w - y) / sigma;
            norm * (-0.5 * d * d).exp()
        })
    }

    /// Constant likelihood, handy for exactly integrable cases.
    pub fn constant(value: f64) -> Self {
        Self::new(format!("constant({value})"), move |_| value)
    }

    pub fn eval(&self, w: f64) -> f64 {
        (self.f)(w)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Quadrature estimate of `int C/|w| lik(w) dw` over one interval, with an
/// optional closed-form lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalMassReport {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub lower_bound: Option<f64>,
    pub abs_err: f64,
    pub prior_c: f64,
}

impl IntervalMassReport {
    pub const CSV_HEADER: &'static str = "lo,hi,estimate,lower_bound,abs_err,slope";

    /// One CSV row in the fixed schema; `slope` is the report-level fitted
    /// slope repeated on every row.
    pub fn csv_row(&self, slope: f64) -> String {
        let lb = self.lower_bound.map_or(String::new(), |v| v.to_string());
        format!(
            "{},{},{},{},{},{}",
            self.lo, self.hi, self.estimate, lb, self.abs_err, slope
        )
    }
}

/// `int_lo^hi C/|w| lik(w) dw` for an interval that excludes 0, evaluated
/// in log coordinates.
pub fn interval_mass(
    lik: &Likelihood1D,
    lo: f64,
    hi: f64,
    prior_c: f64,
) -> Result<IntervalMassReport> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::Precondition(format!(
            "interval_mass requires finite lo < hi, got [{lo}, {hi}]"
        )));
    }
    if lo < 0.0 && hi > 0.0 || lo == 0.0 || hi == 0.0 {
        return Err(Error::Precondition(format!(
            "interval_mass requires an interval excluding 0, got [{lo}, {hi}]"
        )));
    }
    if !positive_finite(prior_c) {
        return Err(Error::Precondition(format!(
            "prior_c must be finite and > 0, got {prior_c}"
        )));
    }
    let q = if lo > 0.0 {
        // t = ln w
        integrate(
            &|t: f64| prior_c * lik.eval(t.exp()),
            lo.ln(),
            hi.ln(),
            QUAD_REL_TOL,
            QUAD_ABS_TOL,
            QUAD_MAX_SUBDIV,
        )?
    } else {
        // t = ln(-w), orientation reversed
        integrate(
            &|t: f64| prior_c * lik.eval(-t.exp()),
            (-hi).ln(),
            (-lo).ln(),
            QUAD_REL_TOL,
            QUAD_ABS_TOL,
            QUAD_MAX_SUBDIV,
        )?
    };
    Ok(IntervalMassReport {
        lo,
        hi,
        estimate: q.value,
        lower_bound: None,
        abs_err: q.abs_err,
        prior_c,
    })
}

/// Mass of the prior-times-likelihood over the symmetric annulus
/// `delta <= |w| <= delta0`, with the closed-form lower bound
/// `2 C r ln(delta0/delta)` where `r` is the sampled infimum of the
/// likelihood on the annulus.
///
/// The estimate grows without bound as `delta -> 0` whenever the
/// likelihood is continuous and positive at the origin; feed a shrinking
/// delta grid to [`divergence_report`] to quantify it.
pub fn origin_mass(
    lik: &Likelihood1D,
    delta: f64,
    delta0: f64,
    prior_c: f64,
) -> Result<IntervalMassReport> {
    if !positive_finite(delta) || delta >= delta0 || !delta0.is_finite() {
        return Err(Error::Precondition(format!(
            "origin_mass requires 0 < delta < delta0 < inf, got ({delta}, {delta0})"
        )));
    }
    let r = annulus_infimum(lik, delta, delta0)?;
    let right = interval_mass(lik, delta, delta0, prior_c)?;
    let left = interval_mass(lik, -delta0, -delta, prior_c)?;
    Ok(IntervalMassReport {
        lo: delta,
        hi: delta0,
        estimate: right.estimate + left.estimate,
        lower_bound: Some(2.0 * prior_c * r * (delta0 / delta).ln()),
        abs_err: right.abs_err + left.abs_err,
        prior_c,
    })
}

/// Sampled infimum of the likelihood over both annulus components,
/// log-spaced in |w|. Errors if any sample is non-positive or non-finite,
/// since the lower bound needs a strictly positive floor.
fn annulus_infimum(lik: &Likelihood1D, delta: f64, delta0: f64) -> Result<f64> {
    let right = INFIMUM_SAMPLES / 2 + 1;
    let left = INFIMUM_SAMPLES - right;
    let ratio = delta0 / delta;
    let mut inf = f64::INFINITY;
    for (count, sign) in [(right, 1.0), (left, -1.0)] {
        for i in 0..count {
            let frac = i as f64 / (count - 1) as f64;
            let w = sign * delta * ratio.powf(frac);
            let v = lik.eval(w);
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Precondition(format!(
                    "likelihood '{}' is {v} at w = {w}; origin probe requires it \
                     positive on the annulus",
                    lik.label()
                )));
            }
            inf = inf.min(v);
        }
    }
    Ok(inf)
}

/// Closed-form lower bound for the logistic right-tail mass:
/// `C (ln K - ln k) / (1 + e^{-k})`. Strictly increasing and unbounded in K.
pub fn logistic_tail_lower_bound(k: f64, big_k: f64, prior_c: f64) -> Result<f64> {
    if !positive_finite(k) || big_k < k || !big_k.is_finite() || !positive_finite(prior_c) {
        return Err(Error::Precondition(format!(
            "logistic_tail_lower_bound requires 0 < k <= K < inf and C > 0, \
             got (k={k}, K={big_k}, C={prior_c})"
        )));
    }
    Ok(prior_c * (big_k.ln() - k.ln()) / (1.0 + (-k).exp()))
}

/// Quadrature estimate of `int_k^K C/w sigmoid(w) dw` together with the
/// closed-form lower bound; the estimate strictly exceeds the bound.
pub fn logistic_tail_mass(k: f64, big_k: f64, prior_c: f64) -> Result<IntervalMassReport> {
    if !positive_finite(k) || big_k <= k || !big_k.is_finite() {
        return Err(Error::Precondition(format!(
            "logistic_tail_mass requires 0 < k < K < inf, got (k={k}, K={big_k})"
        )));
    }
    let mut report = interval_mass(&Likelihood1D::sigmoid(), k, big_k, prior_c)?;
    report.lower_bound = Some(logistic_tail_lower_bound(k, big_k, prior_c)?);
    Ok(report)
}

/// Which family of interval reports a divergence fit describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    /// Shrinking inner radius: mass vs `ln(1/delta)`. The fitted response
    /// is the per-side mean mass (estimate/2), so the slope estimates
    /// `C * r` with `r` the likelihood level at the origin.
    Origin,
    /// Growing outer limit: mass vs `ln K`; the slope estimates `C` times
    /// the likelihood level in the far tail.
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Divergent,
    NotDivergent,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Divergent => write!(f, "divergent"),
            Verdict::NotDivergent => write!(f, "not divergent"),
        }
    }
}

/// Least-squares fit of interval mass against the log grid coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub kind: ProbeKind,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Fit `estimate` (per side for origin probes) against `ln K` or
/// `ln(1/delta)` and declare divergence when the slope exceeds the
/// threshold (default `0.1 * C`) with monotonically growing estimates.
/// Needs at least 4 grid points.
pub fn divergence_report(
    kind: ProbeKind,
    reports: &[IntervalMassReport],
    threshold: Option<f64>,
) -> Result<DivergenceReport> {
    if reports.len() < 4 {
        return Err(Error::InsufficientGrid {
            need: 4,
            got: reports.len(),
        });
    }
    let threshold = threshold.unwrap_or(0.1 * reports[0].prior_c);
    let mut points: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| match kind {
            ProbeKind::Tail => (r.hi.ln(), r.estimate),
            ProbeKind::Origin => (-r.lo.ln(), 0.5 * r.estimate),
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in &points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::Precondition(
            "divergence_report grid has no spread".into(),
        ));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    let monotone = points.windows(2).all(|w| w[1].1 > w[0].1);
    let verdict = if slope > threshold && monotone {
        Verdict::Divergent
    } else {
        Verdict::NotDivergent
    };
    Ok(DivergenceReport {
        kind,
        slope,
        intercept: mean_y - slope * mean_x,
        r_squared,
        threshold,
        verdict,
    })
}
