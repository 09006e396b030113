//! Applying the single-step procedures to an observed vector: compute the
//! appropriate cutoff(s), compare each coordinate, and report decisions.
//!
//! All three variants reject by strict comparison `x > c`; a statistic
//! exactly equal to its cutoff is NOT rejected (ties have probability zero
//! under the continuous model, so the convention only matters for
//! reproducibility of edge cases).

use crate::cutoffs::{block_cutoffs, block_beta, proposed_cutoff, CutoffSpec};
use crate::error::{Error, Result};
use crate::estimation::rho_hat_star;
use crate::model::{count_errors, AlternativeConfig, BlockStructure, RejectionSummary};

/// Which single-step rule to apply.
#[derive(Debug, Clone, PartialEq)]
pub enum Procedure {
    /// Correlation-adjusted cutoff with ρ supplied.
    KnownRho { rho: f64 },
    /// Correlation-adjusted cutoff with ρ̂★ estimated from the full vector.
    EstimatedRho,
    /// Per-block cutoffs at the split level β = 1-(1-α)^{1/m}.
    Blockwise(BlockStructure),
}

/// Apply a procedure at level α to an observed vector. Requires n ≥ 2 finite
/// observations (and, for the blockwise variant, n = Σ k_j).
pub fn apply_procedure(
    x: &[f64],
    procedure: &Procedure,
    alpha: f64,
) -> Result<RejectionSummary> {
    if x.len() < 2 {
        return Err(Error::domain(format!(
            "apply_procedure requires at least 2 observations, got {}",
            x.len()
        )));
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!(
            "apply_procedure requires finite observations, got {bad}"
        )));
    }
    let n = x.len() as u64;
    match procedure {
        Procedure::KnownRho { rho } => {
            let cutoff = proposed_cutoff(n, alpha, *rho)?;
            Ok(RejectionSummary {
                rejected: x.iter().map(|&v| v > cutoff).collect(),
                cutoff_used: CutoffSpec::ProposedKnownRho { cutoff, rho: *rho },
            })
        }
        Procedure::EstimatedRho => {
            let rho_hat = rho_hat_star(x)?.value;
            let cutoff = proposed_cutoff(n, alpha, rho_hat)?;
            Ok(RejectionSummary {
                rejected: x.iter().map(|&v| v > cutoff).collect(),
                cutoff_used: CutoffSpec::ProposedEstimatedRho { cutoff, rho_hat },
            })
        }
        Procedure::Blockwise(blocks) => {
            if blocks.n() != n {
                return Err(Error::domain(format!(
                    "blocks cover {} coordinates but the vector has {n}",
                    blocks.n()
                )));
            }
            let cutoffs = block_cutoffs(blocks, alpha)?;
            let mut rejected = Vec::with_capacity(x.len());
            let mut offset = 0usize;
            for (j, &(k_j, _)) in blocks.blocks().iter().enumerate() {
                let c_j = cutoffs[j];
                for i in 0..k_j as usize {
                    rejected.push(x[offset + i] > c_j);
                }
                offset += k_j as usize;
            }
            Ok(RejectionSummary {
                rejected,
                cutoff_used: CutoffSpec::BlockProposed {
                    beta: block_beta(alpha, blocks.m() as u64)?,
                    cutoffs,
                    rhos: blocks.blocks().iter().map(|&(_, r)| r).collect(),
                },
            })
        }
    }
}

/// Was the k-FWER event realized: did the procedure falsely reject at least
/// k true nulls? Requires k ≥ 1 and truth labels matching the summary.
pub fn kfwer_decision(
    summary: &RejectionSummary,
    alt: &AlternativeConfig,
    k: u64,
) -> Result<bool> {
    if k < 1 {
        return Err(Error::domain("kfwer_decision requires k >= 1"));
    }
    let (v, _s) = count_errors(&summary.rejected, alt)?;
    Ok(v >= k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::a_n_exact;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn known_rho_worked_example() {
        // n = 4, α = 0.05, ρ = 0.5: cutoff ≈ 1.640023; only the first
        // coordinate of (10, 0, 0, 0) exceeds it.
        let summary =
            apply_procedure(&[10.0, 0.0, 0.0, 0.0], &Procedure::KnownRho { rho: 0.5 }, 0.05)
                .unwrap();
        assert_eq!(summary.rejected, vec![true, false, false, false]);
        assert_eq!(summary.rejected_count(), 1);
        let c = summary.cutoff_used.single_cutoff().unwrap();
        assert!((c - 1.640_023_429_881_144).abs() < 1e-12);
        assert_eq!(summary.cutoff_used.rho_used(), vec![0.5]);
    }

    #[test]
    fn ties_are_not_rejected() {
        let c = crate::cutoffs::proposed_cutoff(2, 0.05, 0.5).unwrap();
        let summary =
            apply_procedure(&[c, c + 1e-9], &Procedure::KnownRho { rho: 0.5 }, 0.05).unwrap();
        assert_eq!(summary.rejected, vec![false, true]);
    }

    #[test]
    fn estimated_rho_clamps_to_the_independent_cutoff() {
        // Alternating (0, 2) pairs: every pair difference is ±2, so
        // Y = 1 - 2 = -1 < 0 and ρ̂★ = 0; the cutoff degenerates to the
        // exact 1/n upper quantile.
        let x: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 }).collect();
        let summary = apply_procedure(&x, &Procedure::EstimatedRho, 0.05).unwrap();
        match summary.cutoff_used {
            CutoffSpec::ProposedEstimatedRho { cutoff, rho_hat } => {
                assert_eq!(rho_hat, 0.0);
                assert_eq!(cutoff, a_n_exact(10).unwrap());
                // a_10 = Φ̄⁻¹(0.1) ≈ 1.2816: the five 2.0 coordinates all exceed it.
                assert_eq!(summary.rejected_count(), 5);
            }
            ref other => panic!("unexpected cutoff spec {other:?}"),
        }
    }

    #[test]
    fn blockwise_with_one_block_matches_known_rho() {
        // m = 1: β = α and the block cutoff equals the plain cutoff, so the
        // two procedures must agree decision-for-decision on random vectors.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let blocks = BlockStructure::new(vec![(25, 0.4)]).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..25).map(|_| rng.gen_range(-4.0..6.0)).collect();
            let one_block =
                apply_procedure(&x, &Procedure::Blockwise(blocks.clone()), 0.07).unwrap();
            let plain =
                apply_procedure(&x, &Procedure::KnownRho { rho: 0.4 }, 0.07).unwrap();
            assert_eq!(one_block.rejected, plain.rejected);
            match one_block.cutoff_used {
                CutoffSpec::BlockProposed { beta, ref cutoffs, .. } => {
                    assert_eq!(beta, 0.07);
                    assert_eq!(cutoffs[0], plain.cutoff_used.single_cutoff().unwrap());
                }
                ref other => panic!("unexpected cutoff spec {other:?}"),
            }
        }
    }

    #[test]
    fn blockwise_applies_per_block_cutoffs() {
        let blocks = BlockStructure::parse_spec("2:0.9,2:0.1").unwrap();
        let cutoffs = crate::cutoffs::block_cutoffs(&blocks, 0.1).unwrap();
        // At k_j = 2 the extreme-quantile term √(1-ρ)·Φ̄⁻¹(1/2) vanishes, so
        // the cutoff √ρ·|Φ⁻¹(β)| grows with ρ: high correlation is stricter.
        assert!(cutoffs[0] > cutoffs[1]);
        let mid = 0.5 * (cutoffs[0] + cutoffs[1]);
        let x = vec![mid, -10.0, mid, -10.0];
        let summary = apply_procedure(&x, &Procedure::Blockwise(blocks), 0.1).unwrap();
        // The same value is kept in the strict block, rejected in the lenient one.
        assert_eq!(summary.rejected, vec![false, false, true, false]);
        // Once k_j is large the extreme-quantile term dominates and the
        // ordering flips: high correlation buys a lower cutoff.
        let big = BlockStructure::parse_spec("5000:0.9,5000:0.1").unwrap();
        let big_cut = crate::cutoffs::block_cutoffs(&big, 0.1).unwrap();
        assert!(big_cut[0] < big_cut[1]);
    }

    #[test]
    fn validation_errors() {
        assert!(apply_procedure(&[1.0], &Procedure::EstimatedRho, 0.05).is_err());
        assert!(apply_procedure(&[1.0, f64::NAN], &Procedure::EstimatedRho, 0.05).is_err());
        let blocks = BlockStructure::parse_spec("2:0.5,3:0.5").unwrap();
        assert!(apply_procedure(&[0.0; 4], &Procedure::Blockwise(blocks), 0.05).is_err());
        assert!(apply_procedure(&[0.0; 4], &Procedure::KnownRho { rho: 1.5 }, 0.05).is_err());
    }

    #[test]
    fn kfwer_decision_counts_only_false_rejections() {
        let x = vec![5.0, 5.0, 5.0, -5.0];
        let summary = apply_procedure(&x, &Procedure::KnownRho { rho: 0.5 }, 0.05).unwrap();
        assert_eq!(summary.rejected, vec![true, true, true, false]);
        // Truth: index 1 is a real signal, 2..4 are true nulls.
        let alt = AlternativeConfig::with_means(4, [(1, 3.0)]).unwrap();
        assert!(kfwer_decision(&summary, &alt, 1).unwrap());
        assert!(kfwer_decision(&summary, &alt, 2).unwrap());
        assert!(!kfwer_decision(&summary, &alt, 3).unwrap());
        assert!(kfwer_decision(&summary, &alt, 0).is_err());
        let wrong_n = AlternativeConfig::global_null(5).unwrap();
        assert!(kfwer_decision(&summary, &wrong_n, 1).is_err());
    }
}
