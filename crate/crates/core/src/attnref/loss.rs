use crate::{Error, Result};

/// Floor applied to the true-class probability before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Weight of the auxiliary per-task losses in [`weighted_joint_loss`].
pub const DEFAULT_AUX_WEIGHT: f64 = 0.25;

/// `-ln(max(prob[label], LOG_FLOOR))`.
pub fn cross_entropy(prob: &[f64], label: usize) -> Result<f64> {
    if prob.is_empty() || prob.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::contract(
            "probabilities must be finite and non-negative".to_string(),
        ));
    }
    let sum: f64 = prob.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::contract(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    let p = *prob
        .get(label)
        .ok_or_else(|| Error::contract(format!("label {label} outside 0..{}", prob.len())))?;
    Ok(-p.max(LOG_FLOOR).ln())
}

/// Batch mean of [`cross_entropy`].
pub fn mean_cross_entropy<'a>(batch: impl IntoIterator<Item = (&'a [f64], usize)>) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for (p, label) in batch {
        total += cross_entropy(p, label)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::contract("empty batch".to_string()));
    }
    Ok(total / n as f64)
}

/// Sum of the DR and DME losses.
pub fn joint_loss(l_dr: f64, l_dme: f64) -> f64 {
    debug_assert!(l_dr >= 0.0 && l_dme >= 0.0);
    l_dr + l_dme
}

/// Main losses plus `lambda` times the auxiliary per-task losses.
pub fn weighted_joint_loss(l_dr: f64, l_dme: f64, aux_dr: f64, aux_dme: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    l_dr + l_dme + lambda * (aux_dr + aux_dme)
}
