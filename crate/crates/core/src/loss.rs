//! The asymmetric absolute ("tick" or check) loss.

use crate::error::{Error, Result};

/// `u · (τ − 1{u < 0})`, checking that `τ ∈ (0, 1)` and `u` is finite.
pub fn tick_loss(u: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!(
            "quantile level {tau} is outside (0, 1)"
        )));
    }
    if !u.is_finite() {
        return Err(Error::Domain(format!("residual {u} is not finite")));
    }
    Ok(tick(u, tau))
}

/// Unchecked tick loss for hot loops.
#[inline]
pub fn tick(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        (tau - 1.0) * u
    } else {
        tau * u
    }
}
