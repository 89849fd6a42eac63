//! Small shared validation helpers.

/// True for finite, strictly positive values; false for zero, negatives,
/// infinities and NaN.
pub(crate) fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// True for finite, non-negative values.
pub(crate) fn non_negative_finite(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}
