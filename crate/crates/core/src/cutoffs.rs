//! Rejection cutoffs: the correlation-adjusted single-step cutoff, the
//! Bonferroni cutoff, and the blockwise level split.
//!
//! The central quantity is
//!
//! ```text
//! c_n(α, ρ) = √(1-ρ)·Φ⁻¹(1 - 1/n) - √ρ·Φ⁻¹(α)
//! ```
//!
//! whose ratio to the Bonferroni cutoff Φ⁻¹(1 - α/n) tends to √(1-ρ) as
//! n → ∞ (the adjusted procedure is asymptotically strictly more liberal).
//! Both quantile arguments are handled through upper-tail entry points so
//! that 1 - 1/n and α/n never suffer cancellation, even at n = 10⁹.

use crate::error::{Error, Result};
use crate::model::BlockStructure;
use crate::special::{a_n_exact, inverse_normal_cdf, inverse_normal_cdf_upper};

/// Correlation-adjusted cutoff c_n(α, ρ).
///
/// `rho = 0` is admitted (the estimator downstream clamps negative raw
/// estimates to 0, in which case the cutoff degenerates to Φ̄⁻¹(1/n)).
pub fn proposed_cutoff(n: u64, alpha: f64, rho: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!(
            "proposed_cutoff requires n >= 2, got {n}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "proposed_cutoff requires alpha in (0,1), got {alpha}"
        )));
    }
    if !(rho >= 0.0 && rho < 1.0) {
        return Err(Error::domain(format!(
            "proposed_cutoff requires rho in [0,1), got {rho}"
        )));
    }
    let a_n = a_n_exact(n)?;
    let z_alpha = inverse_normal_cdf(alpha)?;
    Ok((1.0 - rho).sqrt() * a_n - rho.sqrt() * z_alpha)
}

/// Bonferroni cutoff Φ⁻¹(1 - α/n) = Φ̄⁻¹(α/n), for n ≥ 1.
/// At n = 1 this is the plain level-α cutoff Φ⁻¹(1-α).
pub fn bonferroni_cutoff(n: u64, alpha: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("bonferroni_cutoff requires n >= 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "bonferroni_cutoff requires alpha in (0,1), got {alpha}"
        )));
    }
    inverse_normal_cdf_upper(alpha / n as f64)
}

/// Per-block level β = 1 - (1-α)^{1/m}, evaluated as -expm1(ln1p(-α)/m) so
/// the inverse identity (1-β)^m = 1-α holds to ~1 ulp for m up to 10⁶.
/// β ≤ α always (exact equality at m = 1).
pub fn block_beta(alpha: f64, m: u64) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain("block_beta requires m >= 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "block_beta requires alpha in (0,1), got {alpha}"
        )));
    }
    if m == 1 {
        // Preserve β = α exactly rather than round-tripping through logs.
        return Ok(alpha);
    }
    Ok(-((-alpha).ln_1p() / m as f64).exp_m1())
}

/// Per-block cutoffs c_{k_j}(β, ρ_j) at the split level β = block_beta(α, m),
/// in block order.
pub fn block_cutoffs(blocks: &BlockStructure, alpha: f64) -> Result<Vec<f64>> {
    let beta = block_beta(alpha, blocks.m() as u64)?;
    blocks
        .blocks()
        .iter()
        .map(|&(k, rho)| proposed_cutoff(k, beta, rho))
        .collect()
}

/// Which cutoff a procedure applied, with the values and correlation(s)
/// that produced it. Attached to every rejection summary.
#[derive(Debug, Clone, PartialEq)]
pub enum CutoffSpec {
    /// c_n(α, ρ) with ρ supplied.
    ProposedKnownRho { cutoff: f64, rho: f64 },
    /// c_n(α, ρ̂★) with ρ̂★ estimated from the observed vector.
    ProposedEstimatedRho { cutoff: f64, rho_hat: f64 },
    /// Correlation-free Bonferroni cutoff Φ̄⁻¹(α/n).
    Bonferroni { cutoff: f64 },
    /// Per-block cutoffs c_{k_j}(β, ρ_j) at split level β.
    BlockProposed { beta: f64, cutoffs: Vec<f64>, rhos: Vec<f64> },
}

impl CutoffSpec {
    /// The cutoff when a single one applies to every coordinate.
    pub fn single_cutoff(&self) -> Option<f64> {
        match *self {
            CutoffSpec::ProposedKnownRho { cutoff, .. }
            | CutoffSpec::ProposedEstimatedRho { cutoff, .. }
            | CutoffSpec::Bonferroni { cutoff } => Some(cutoff),
            CutoffSpec::BlockProposed { .. } => None,
        }
    }

    /// The correlation value(s) the cutoff was computed from
    /// (empty for Bonferroni).
    pub fn rho_used(&self) -> Vec<f64> {
        match self {
            CutoffSpec::ProposedKnownRho { rho, .. } => vec![*rho],
            CutoffSpec::ProposedEstimatedRho { rho_hat, .. } => vec![*rho_hat],
            CutoffSpec::Bonferroni { .. } => Vec::new(),
            CutoffSpec::BlockProposed { rhos, .. } => rhos.clone(),
        }
    }
}
