//! Self-contained scalar special functions.
//!
//! Everything the rest of the crate needs is implemented here from series
//! and continued fractions; there is no dependency on an external special
//! function library, so each routine can be cross-checked by an
//! independent oracle (quadrature, direct summation, recurrences).

mod dawson;
mod digamma;
mod expint;

pub use dawson::{dawson, dawson_with};
pub use digamma::digamma;
pub use expint::{expint_ei, expint_ei_with};

use crate::error::{Error, Result};
use crate::util::positive_finite;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// psi(1/2) = -gamma - 2 ln 2, exact up to rounding of the constants.
pub const DIGAMMA_HALF: f64 = -(EULER_GAMMA + 2.0 * std::f64::consts::LN_2);

/// Truncation control for the series evaluations in this module.
///
/// Series stop once the current term drops below
/// `abs_tol + rel_tol * |partial sum|`; hitting `max_terms` first is a
/// [`Error::Convergence`] rather than a silent partial sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracySpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl AccuracySpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !positive_finite(abs_tol) || !positive_finite(rel_tol) || max_terms < 1 {
            return Err(Error::Precondition(format!(
                "AccuracySpec requires abs_tol > 0, rel_tol > 0, max_terms >= 1 \
                 (got {abs_tol}, {rel_tol}, {max_terms})"
            )));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_terms,
        })
    }
}

impl Default for AccuracySpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-18,
            rel_tol: 1e-14,
            max_terms: 10_000,
        }
    }
}
