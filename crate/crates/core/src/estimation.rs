//! Correlation estimation from a single observed vector.
//!
//! Under the equicorrelated model, any two coordinates satisfy
//! Var(X_{2i-1} - X_{2i}) = 2(1-ρ) regardless of the means being equal,
//! so Y_i = 1 - (X_{2i-1} - X_{2i})²/2 has expectation ρ whenever both
//! coordinates of the pair share the same mean (in particular under the
//! global null and for sparse alternatives, where almost all pairs do).
//! The estimator averages Y over m = ⌊n/2⌋ disjoint adjacent pairs and
//! clamps at zero from below; above, the average can never exceed 1 since
//! every Y_i ≤ 1 pointwise.

use crate::error::{Error, Result};

/// Result of correlation estimation: the clamped estimate together with the
/// pair count and the unclamped mean (diagnostic for how hard the clamp bit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    /// max(0, raw_mean): the value procedures plug into the cutoff.
    pub value: f64,
    /// Number of disjoint pairs m = ⌊n/2⌋.
    pub m: u64,
    /// Unclamped pair average; ≤ 1 always, may be negative.
    pub raw_mean: f64,
}

/// Pairwise-difference correlation estimate ρ̂★ from an observed vector.
///
/// Uses the m = ⌊n/2⌋ disjoint adjacent pairs (a trailing odd coordinate is
/// ignored). Requires n ≥ 2 and finite entries. The estimate depends on the
/// data only through within-pair differences, so it is invariant under
/// adding any constant to every coordinate.
pub fn rho_hat_star(x: &[f64]) -> Result<RhoEstimate> {
    if x.len() < 2 {
        return Err(Error::domain(format!(
            "rho_hat_star requires at least 2 observations, got {}",
            x.len()
        )));
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!(
            "rho_hat_star requires finite observations, got {bad}"
        )));
    }
    let m = x.len() / 2;
    // Kahan-compensated mean of Y_i = 1 - (X_{2i-1} - X_{2i})²/2 keeps the
    // estimate deterministic to the last bit for large n.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for pair in x.chunks_exact(2) {
        let d = pair[0] - pair[1];
        let y = 1.0 - 0.5 * d * d;
        let t = y - comp;
        let s = sum + t;
        comp = (s - sum) - t;
        sum = s;
    }
    let raw_mean = sum / m as f64;
    Ok(RhoEstimate { value: raw_mean.max(0.0), m: m as u64, raw_mean })
}
