//! Threshold pruning on per-weight log10 alpha and its effect on held-out
//! error.

use super::data::Dataset;
use super::layer::LayerMode;
use super::net::Network;
use crate::error::{Error, Result};
use serde::Serialize;

/// Per-weight `log10 alpha` observables with the pruning outcome.
/// `log10_alpha` holds one row-major block per layer (empty for
/// deterministic layers); entries can be `+inf` (theta = 0 in additive
/// mode), which always prune.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparsityReport {
    pub threshold: f64,
    pub log10_alpha: Vec<Vec<f64>>,
    pub pruned_fraction: f64,
    pub rmse_before: f64,
    pub rmse_after: f64,
}

/// Prune every weight whose `log10 alpha` exceeds `threshold`: theta is
/// zeroed and the weight's noise is silenced (additive `ln sigma` floored;
/// multiplicative variance is already zero once theta is). Returns the
/// report plus the pruned network; RMSE is evaluated deterministically on
/// the held-out split before and after.
pub fn sparsity_report(
    net: &Network,
    threshold: f64,
    heldout: &Dataset,
) -> Result<(SparsityReport, Network)> {
    if !threshold.is_finite() {
        return Err(Error::Precondition(format!(
            "threshold must be finite, got {threshold}"
        )));
    }
    if net
        .layers()
        .iter()
        .all(|l| l.mode() == LayerMode::Deterministic)
    {
        return Err(Error::Precondition(
            "sparsity_report needs at least one stochastic layer".into(),
        ));
    }
    let rmse_before = net.rmse(&heldout.features, &heldout.targets)?;

    let mut log10_alpha = Vec::with_capacity(net.layers().len());
    let mut pruned = net.clone();
    let mut prunable = 0usize;
    let mut pruned_count = 0usize;
    for (li, layer) in net.layers().iter().enumerate() {
        if layer.mode() == LayerMode::Deterministic {
            log10_alpha.push(Vec::new());
            continue;
        }
        let l10 = layer.log10_alpha()?;
        prunable += l10.len();
        let target = &mut pruned.layers[li];
        for idx in 0..l10.len() {
            if l10.data()[idx] > threshold {
                pruned_count += 1;
                target.theta_mut().data_mut()[idx] = 0.0;
                if layer.mode() == LayerMode::Additive {
                    target.noise_mut().data_mut()[idx] = super::net::LOG_SIGMA_MIN;
                }
            }
        }
        log10_alpha.push(l10.data().to_vec());
    }
    let rmse_after = pruned.rmse(&heldout.features, &heldout.targets)?;
    Ok((
        SparsityReport {
            threshold,
            log10_alpha,
            pruned_fraction: pruned_count as f64 / prunable as f64,
            rmse_before,
            rmse_after,
        },
        pruned,
    ))
}

/// Median helper for log10-alpha comparisons; infinities sort last.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
