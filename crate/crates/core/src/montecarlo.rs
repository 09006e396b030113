//! Seeded Monte Carlo engines for the same error rates the quadrature
//! module computes, as an independent cross-check and for configurations
//! (estimated correlation, finite-sample behaviour) with no closed form.
//!
//! Reproducibility contract: every replication r derives its own ChaCha8
//! stream from (master seed, r) through a SplitMix-style mixer, and results
//! are accumulated as exact integer success counts. Estimates are therefore
//! bit-identical across runs AND across worker-thread counts; parallelism
//! only changes which thread evaluates which replication.
//!
//! Two schemes:
//! * `FastH0` — under the global null with known ρ, conditionally on the
//!   shared factor the test statistic's maximum is a single quantile draw:
//!   M = Φ̄⁻¹(1 - V^{1/n}) with V uniform. One rep costs O(1) regardless of
//!   n, enabling n = 10⁹ tables. (k-FWER replaces the max by one binomial
//!   draw of the exceedance count.)
//! * `FullVector` — materializes all n coordinates per rep; required for
//!   estimated correlation, alternatives, power, and block layouts.

use crate::cutoffs::{block_cutoffs, proposed_cutoff};
use crate::error::{Error, Result};
use crate::estimation::rho_hat_star;
use crate::model::{
    AlternativeConfig, BlockStructure, CorrelationKnowledge, EstimateWithError, ProcedureConfig,
};
use crate::special::{a_n_exact, inverse_normal_cdf, normal_cdf_upper, quantile, quantile_upper};
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

/// Default replication count for the O(1)-per-rep scheme.
pub const DEFAULT_FAST_REPS: u64 = 100_000;
/// Default replication count for the full-vector scheme.
pub const DEFAULT_FULL_REPS: u64 = 10_000;

/// Which tail event a simulation estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// P(V ≥ 1): at least one false rejection.
    Fwer,
    /// P(V ≥ k): at least k false rejections.
    KFwer(u64),
    /// P(S ≥ 1): at least one true discovery.
    AnyPwr,
}

/// Which sampling scheme to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Conditional O(1)-per-rep sampling; global null + known ρ only.
    FastH0,
    /// Materialize the full coordinate vector each rep.
    FullVector,
}

/// A complete, self-describing simulation request.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    /// Dimension, level, and the procedure's correlation knowledge.
    pub config: ProcedureConfig,
    /// Truth labels and mean shifts (drives both generation and counting).
    pub alt: AlternativeConfig,
    /// Block layout; `None` means one equicorrelated family.
    pub blocks: Option<BlockStructure>,
    /// The data-generating correlation (may differ from what the procedure
    /// is told). Ignored when `blocks` is set — each block uses its own ρ_j.
    pub true_rho: f64,
    /// Estimated event.
    pub metric: Metric,
    /// Replications, ≥ 1.
    pub reps: u64,
    /// Master seed.
    pub seed: u64,
    /// Sampling scheme.
    pub scheme: Scheme,
}

impl SimulationPlan {
    fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::domain("simulation requires reps >= 1"));
        }
        if self.config.n() != self.alt.n() {
            return Err(Error::domain(format!(
                "config n = {} but alternative n = {}",
                self.config.n(),
                self.alt.n()
            )));
        }
        if let Some(blocks) = &self.blocks {
            if blocks.n() != self.config.n() {
                return Err(Error::domain(format!(
                    "blocks cover {} coordinates but n = {}",
                    blocks.n(),
                    self.config.n()
                )));
            }
        } else if !(0.0..1.0).contains(&self.true_rho) {
            return Err(Error::domain(format!(
                "true_rho must lie in [0,1), got {}",
                self.true_rho
            )));
        }
        match self.metric {
            Metric::KFwer(k) if k < 1 || k > self.config.n() => {
                return Err(Error::domain(format!(
                    "k-FWER requires 1 <= k <= n, got k = {k}"
                )));
            }
            Metric::AnyPwr if self.alt.n1() < 1 => {
                return Err(Error::domain(
                    "power estimation requires at least one false null",
                ));
            }
            _ => {}
        }
        if self.scheme == Scheme::FastH0 {
            if !self.alt.is_global_null() {
                return Err(Error::domain(
                    "the fast scheme is exact only under the global null",
                ));
            }
            if self.blocks.is_some() {
                return Err(Error::domain("the fast scheme has no block variant"));
            }
            match (self.config.rho(), self.metric) {
                (CorrelationKnowledge::Estimate, _) => {
                    return Err(Error::domain(
                        "the fast scheme requires a known correlation",
                    ));
                }
                (_, Metric::AnyPwr) => {
                    return Err(Error::domain(
                        "power has no false nulls under the global null",
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Substream derivation and sampling primitives
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer: a bijective avalanche mix on u64.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent ChaCha8 stream for replication `rep` of run `seed`: the
/// 32-byte key is four mixed words of (seed, rep, lane), so distinct reps
/// get unrelated keys and the mapping is stable across versions of this
/// crate, thread counts, and platforms.
fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (lane, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = mix64(seed ^ mix64(rep.wrapping_mul(4).wrapping_add(lane as u64 + 1)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Standard normal via the tail-accurate inverse CDF on an open uniform.
#[inline]
fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.sample(Open01);
    quantile(u)
}

/// The maximum of n iid standard normals in one draw:
/// M = Φ̄⁻¹(q), q = 1 - V^{1/n} evaluated as -expm1(ln V / n).
#[inline]
fn sample_iid_max(rng: &mut ChaCha8Rng, n: f64) -> f64 {
    let v: f64 = rng.sample(Open01);
    let q = -(v.ln() / n).exp_m1();
    quantile_upper(q)
}

/// Count successes over reps in parallel with a per-thread scratch state.
fn parallel_count<T, I, F>(reps: u64, init: I, body: F) -> u64
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(&mut T, u64) -> bool + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map_init(&init, |state, rep| u64::from(body(state, rep)))
        .sum()
}

// ---------------------------------------------------------------------------
// Fast (conditional) engines
// ---------------------------------------------------------------------------

/// P(max statistic > cutoff) under the global equicorrelated null, one
/// quantile draw per replication. Exposed with an explicit cutoff so other
/// rules (e.g. Bonferroni) can be simulated the same way.
pub fn simulate_max_exceeds_fast(
    n: u64,
    cutoff: f64,
    rho: f64,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    if n < 2 {
        return Err(Error::domain("fast scheme requires n >= 2"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!("rho must lie in [0,1), got {rho}")));
    }
    if !cutoff.is_finite() {
        return Err(Error::domain("cutoff must be finite"));
    }
    if reps < 1 {
        return Err(Error::domain("simulation requires reps >= 1"));
    }
    let nf = n as f64;
    let sr = rho.sqrt();
    let inv_sc = 1.0 / (1.0 - rho).sqrt();
    let hits = parallel_count(
        reps,
        || (),
        |(), rep| {
            let mut rng = rep_rng(seed, rep);
            let gamma = sample_normal(&mut rng);
            let m = sample_iid_max(&mut rng, nf);
            m > (cutoff - sr * gamma) * inv_sc
        },
    );
    EstimateWithError::from_successes(hits, reps, seed)
}

/// FWER of the correlation-adjusted procedure under the global null,
/// fast scheme.
pub fn simulate_fwer_fast(
    n: u64,
    alpha: f64,
    rho: f64,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    let cutoff = proposed_cutoff(n, alpha, rho)?;
    simulate_max_exceeds_fast(n, cutoff, rho, reps, seed)
}

/// k-FWER under the global null, fast scheme: conditionally on the shared
/// factor the false-rejection count is Binomial(n, Φ̄(u(γ))), drawn directly.
pub fn simulate_kfwer_fast(
    n: u64,
    k: u64,
    alpha: f64,
    rho: f64,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    if k < 1 || k > n {
        return Err(Error::domain(format!(
            "k-FWER requires 1 <= k <= n, got k = {k}"
        )));
    }
    if reps < 1 {
        return Err(Error::domain("simulation requires reps >= 1"));
    }
    let cutoff = proposed_cutoff(n, alpha, rho)?;
    let sr = rho.sqrt();
    let inv_sc = 1.0 / (1.0 - rho).sqrt();
    let hits = parallel_count(
        reps,
        || (),
        |(), rep| {
            let mut rng = rep_rng(seed, rep);
            let gamma = sample_normal(&mut rng);
            let p = normal_cdf_upper((cutoff - sr * gamma) * inv_sc);
            let dist = Binomial::new(n, p).expect("p is a probability");
            dist.sample(&mut rng) >= k
        },
    );
    EstimateWithError::from_successes(hits, reps, seed)
}

// ---------------------------------------------------------------------------
// Full-vector engine
// ---------------------------------------------------------------------------

/// Truth labels flattened to index-addressable arrays for the hot loop.
struct FlatAlt {
    means: Vec<f64>,
    is_false: Vec<bool>,
}

impl FlatAlt {
    fn new(alt: &AlternativeConfig) -> Self {
        let n = alt.n() as usize;
        let mut means = vec![0.0f64; n];
        let mut is_false = vec![false; n];
        for (idx, mu) in alt.false_nulls() {
            means[idx as usize - 1] = mu;
            is_false[idx as usize - 1] = true;
        }
        FlatAlt { means, is_false }
    }
}

/// Metric decision from the (false, true) rejection counts.
#[inline]
fn metric_hit(metric: Metric, v: u64, s: u64) -> bool {
    match metric {
        Metric::Fwer => v >= 1,
        Metric::KFwer(k) => v >= k,
        Metric::AnyPwr => s >= 1,
    }
}

/// Full-vector simulation of any plan: draws all n coordinates each rep,
/// applies the configured procedure (re-estimating ρ per rep when asked to),
/// and counts metric hits.
pub fn simulate_full(plan: &SimulationPlan) -> Result<EstimateWithError> {
    plan.validate()?;
    if let Some(blocks) = &plan.blocks {
        return simulate_full_blocks(plan, blocks);
    }
    let n = plan.config.n();
    let alpha = plan.config.alpha();
    let flat = FlatAlt::new(&plan.alt);
    let sr = plan.true_rho.sqrt();
    let sc = (1.0 - plan.true_rho).sqrt();
    let metric = plan.metric;
    let seed = plan.seed;

    let hits = match plan.config.rho() {
        CorrelationKnowledge::Known(rho_proc) => {
            let cutoff = proposed_cutoff(n, alpha, rho_proc)?;
            parallel_count(plan.reps, || (), |(), rep| {
                let mut rng = rep_rng(seed, rep);
                let gamma = sample_normal(&mut rng);
                let mut v = 0u64;
                let mut s = 0u64;
                for i in 0..n as usize {
                    let x = sr * gamma + sc * sample_normal(&mut rng) + flat.means[i];
                    if x > cutoff {
                        if flat.is_false[i] {
                            s += 1;
                        } else {
                            v += 1;
                        }
                    }
                }
                metric_hit(metric, v, s)
            })
        }
        CorrelationKnowledge::Estimate => {
            // The cutoff is an explicit function of ρ̂: precompute the two
            // quantiles once, per rep only square roots remain.
            let a_n = a_n_exact(n)?;
            let z_alpha = inverse_normal_cdf(alpha)?;
            parallel_count(
                plan.reps,
                || Vec::with_capacity(n as usize),
                |buf: &mut Vec<f64>, rep| {
                    let mut rng = rep_rng(seed, rep);
                    let gamma = sample_normal(&mut rng);
                    buf.clear();
                    for i in 0..n as usize {
                        buf.push(sr * gamma + sc * sample_normal(&mut rng) + flat.means[i]);
                    }
                    let rho_hat = rho_hat_star(buf)
                        .expect("synthetic data is finite and n >= 2")
                        .value;
                    let cutoff = (1.0 - rho_hat).sqrt() * a_n - rho_hat.sqrt() * z_alpha;
                    let mut v = 0u64;
                    let mut s = 0u64;
                    for (i, &x) in buf.iter().enumerate() {
                        if x > cutoff {
                            if flat.is_false[i] {
                                s += 1;
                            } else {
                                v += 1;
                            }
                        }
                    }
                    metric_hit(metric, v, s)
                },
            )
        }
    };
    EstimateWithError::from_successes(hits, plan.reps, seed)
}

/// Block-diagonal variant of the full engine: per-block shared factors and
/// per-block cutoffs at the split level β.
fn simulate_full_blocks(
    plan: &SimulationPlan,
    blocks: &BlockStructure,
) -> Result<EstimateWithError> {
    let cutoffs = block_cutoffs(blocks, plan.config.alpha())?;
    let flat = FlatAlt::new(&plan.alt);
    let layout: Vec<(u64, f64)> = blocks.blocks().to_vec();
    let metric = plan.metric;
    let seed = plan.seed;
    let hits = parallel_count(plan.reps, || (), |(), rep| {
        let mut rng = rep_rng(seed, rep);
        let mut v = 0u64;
        let mut s = 0u64;
        let mut idx = 0usize;
        for (j, &(k_j, rho_j)) in layout.iter().enumerate() {
            let gamma_j = sample_normal(&mut rng);
            let sr = rho_j.sqrt();
            let sc = (1.0 - rho_j).sqrt();
            let c_j = cutoffs[j];
            for _ in 0..k_j {
                let x = sr * gamma_j + sc * sample_normal(&mut rng) + flat.means[idx];
                if x > c_j {
                    if flat.is_false[idx] {
                        s += 1;
                    } else {
                        v += 1;
                    }
                }
                idx += 1;
            }
        }
        metric_hit(metric, v, s)
    });
    EstimateWithError::from_successes(hits, plan.reps, seed)
}

/// FWER of the blockwise procedure by full-vector simulation, with an
/// optional nonnegative cross-block correlation.
///
/// `cross_rho` = τ generalizes the block-diagonal covariance to
/// Cov(X_i, X_l) = τ for coordinates in different blocks (and ρ_j within
/// block j), realized as X = √τ·g₀ + √(ρ_j - τ)·γ_j + √(1-ρ_j)·W.
/// Requires 0 ≤ τ ≤ min_j ρ_j. τ = 0 recovers independent blocks.
pub fn simulate_block_fwer(
    blocks: &BlockStructure,
    alpha: f64,
    alt: &AlternativeConfig,
    cross_rho: f64,
    reps: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    if alt.n() != blocks.n() {
        return Err(Error::domain(format!(
            "alternative covers {} coordinates but blocks cover {}",
            alt.n(),
            blocks.n()
        )));
    }
    if !(0.0..=blocks.min_rho()).contains(&cross_rho) {
        return Err(Error::domain(format!(
            "cross_rho must lie in [0, min rho_j] = [0, {}], got {cross_rho}",
            blocks.min_rho()
        )));
    }
    if reps < 1 {
        return Err(Error::domain("simulation requires reps >= 1"));
    }
    let cutoffs = block_cutoffs(blocks, alpha)?;
    let flat = FlatAlt::new(alt);
    let layout: Vec<(u64, f64)> = blocks.blocks().to_vec();
    let st = cross_rho.sqrt();
    let hits = parallel_count(reps, || (), |(), rep| {
        let mut rng = rep_rng(seed, rep);
        let g0 = sample_normal(&mut rng);
        let mut v = 0u64;
        let mut idx = 0usize;
        for (j, &(k_j, rho_j)) in layout.iter().enumerate() {
            let gamma_j = sample_normal(&mut rng);
            let sb = (rho_j - cross_rho).max(0.0).sqrt();
            let sc = (1.0 - rho_j).sqrt();
            let c_j = cutoffs[j];
            let shared = st * g0 + sb * gamma_j;
            for _ in 0..k_j {
                let x = shared + sc * sample_normal(&mut rng) + flat.means[idx];
                if x > c_j && !flat.is_false[idx] {
                    v += 1;
                }
                idx += 1;
            }
        }
        v >= 1
    });
    EstimateWithError::from_successes(hits, reps, seed)
}

/// Disjunctive-power estimation: full-vector scheme with the AnyPwr metric.
pub fn simulate_power(plan: &SimulationPlan) -> Result<EstimateWithError> {
    if plan.metric != Metric::AnyPwr {
        return Err(Error::domain("simulate_power requires the AnyPwr metric"));
    }
    simulate_full(plan)
}

/// Run any plan with its declared scheme.
pub fn simulate(plan: &SimulationPlan) -> Result<EstimateWithError> {
    plan.validate()?;
    match plan.scheme {
        Scheme::FastH0 => {
            let rho = match plan.config.rho() {
                CorrelationKnowledge::Known(r) => r,
                CorrelationKnowledge::Estimate => unreachable!("validated"),
            };
            match plan.metric {
                Metric::Fwer => simulate_fwer_fast(
                    plan.config.n(),
                    plan.config.alpha(),
                    rho,
                    plan.reps,
                    plan.seed,
                ),
                Metric::KFwer(k) => simulate_kfwer_fast(
                    plan.config.n(),
                    k,
                    plan.config.alpha(),
                    rho,
                    plan.reps,
                    plan.seed,
                ),
                Metric::AnyPwr => unreachable!("validated"),
            }
        }
        Scheme::FullVector => simulate_full(plan),
    }
}

/// Run `f` on a dedicated pool of `threads` workers (0 = library default).
/// Results are identical regardless of the worker count; this only bounds
/// CPU usage.
pub fn with_thread_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numerical(format!("could not build thread pool: {e}")))?;
    Ok(pool.install(f))
}
