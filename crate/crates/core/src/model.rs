//! Problem configuration: test dimensions, correlation knowledge,
//! alternatives, block layouts, and result containers.
//!
//! All constructors validate their invariants and return [`Error::Domain`]
//! on violation, so downstream numeric code can assume well-formed inputs.
//! Each configuration type serializes to a line-oriented `key = value` text
//! format (`to_text` / `from_text`) that round-trips exactly.

use crate::cutoffs::CutoffSpec;
use crate::error::{Error, Result};
use crate::special::Probability;
use std::collections::BTreeMap;
use std::fmt::Write as _;

// ---------------------------------------------------------------------------
// Correlation knowledge
// ---------------------------------------------------------------------------

/// Whether the procedure knows the common correlation or must estimate it
/// from the observed vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationKnowledge {
    /// The correlation ρ ∈ (0,1) is supplied.
    Known(f64),
    /// The correlation is estimated from adjacent differences at apply time.
    Estimate,
}

// ---------------------------------------------------------------------------
// ProcedureConfig
// ---------------------------------------------------------------------------

/// Dimension, level, and correlation knowledge for a single-step procedure
/// on one equicorrelated family of n hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcedureConfig {
    n: u64,
    alpha: Probability,
    rho: CorrelationKnowledge,
}

impl ProcedureConfig {
    /// Validates n ≥ 2, α ∈ (0,1) open, and ρ ∈ (0,1) open when known.
    pub fn new(n: u64, alpha: f64, rho: CorrelationKnowledge) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("config requires n >= 2, got {n}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "config requires alpha in (0,1), got {alpha}"
            )));
        }
        if let CorrelationKnowledge::Known(r) = rho {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::domain(format!(
                    "config requires known rho in (0,1), got {r}"
                )));
            }
        }
        Ok(ProcedureConfig { n, alpha: Probability::new(alpha)?, rho })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.value()
    }

    pub fn rho(&self) -> CorrelationKnowledge {
        self.rho
    }

    /// Serialize as `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "alpha = {}", self.alpha.value());
        match self.rho {
            CorrelationKnowledge::Known(r) => {
                let _ = writeln!(s, "rho = {r}");
            }
            CorrelationKnowledge::Estimate => {
                let _ = writeln!(s, "rho = estimate");
            }
        }
        s
    }

    /// Parse the output of [`Self::to_text`]. Unknown keys are rejected.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut alpha = None;
        let mut rho = None;
        for (key, value) in parse_key_values(text)? {
            match key.as_str() {
                "n" => n = Some(parse_count(&value)?),
                "alpha" => {
                    alpha = Some(value.parse::<f64>().map_err(|_| {
                        Error::parse(format!("invalid alpha value {value:?}"))
                    })?)
                }
                "rho" => {
                    rho = Some(if value == "estimate" {
                        CorrelationKnowledge::Estimate
                    } else {
                        CorrelationKnowledge::Known(value.parse::<f64>().map_err(
                            |_| Error::parse(format!("invalid rho value {value:?}")),
                        )?)
                    })
                }
                other => return Err(Error::parse(format!("unknown key {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::parse("missing key \"n\""))?;
        let alpha = alpha.ok_or_else(|| Error::parse("missing key \"alpha\""))?;
        let rho = rho.ok_or_else(|| Error::parse("missing key \"rho\""))?;
        ProcedureConfig::new(n, alpha, rho)
    }
}

// ---------------------------------------------------------------------------
// AlternativeConfig
// ---------------------------------------------------------------------------

/// Which hypotheses are false and by how much: a sparse, 1-based map from
/// index to positive mean shift. An empty map is the global null.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeConfig {
    n: u64,
    false_null_means: BTreeMap<u64, f64>,
}

impl AlternativeConfig {
    /// All n hypotheses true (zero means).
    pub fn global_null(n: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("alternative requires n >= 1"));
        }
        Ok(AlternativeConfig { n, false_null_means: BTreeMap::new() })
    }

    /// Build from (index, mean) pairs; indices are 1-based, within 1..=n,
    /// distinct, and means must be positive and finite.
    pub fn with_means(n: u64, means: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, mu) in means {
            if idx < 1 || idx > n {
                return Err(Error::domain(format!(
                    "false-null index {idx} outside 1..={n}"
                )));
            }
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(Error::domain(format!(
                    "false-null mean must be positive and finite, got {mu} at index {idx}"
                )));
            }
            if map.insert(idx, mu).is_some() {
                return Err(Error::domain(format!("duplicate false-null index {idx}")));
            }
        }
        if n < 1 {
            return Err(Error::domain("alternative requires n >= 1"));
        }
        Ok(AlternativeConfig { n, false_null_means: map })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of true nulls.
    pub fn n0(&self) -> u64 {
        self.n - self.false_null_means.len() as u64
    }

    /// Number of false nulls.
    pub fn n1(&self) -> u64 {
        self.false_null_means.len() as u64
    }

    pub fn is_global_null(&self) -> bool {
        self.false_null_means.is_empty()
    }

    /// Mean shift of hypothesis `index` (1-based); 0 for true nulls.
    pub fn mean_of(&self, index: u64) -> f64 {
        self.false_null_means.get(&index).copied().unwrap_or(0.0)
    }

    pub fn is_false_null(&self, index: u64) -> bool {
        self.false_null_means.contains_key(&index)
    }

    /// Iterate (index, mean) pairs in index order.
    pub fn false_nulls(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.false_null_means.iter().map(|(&i, &m)| (i, m))
    }

    /// Distinct mean values with multiplicities (for product-form analytic
    /// evaluation). Grouped by exact bit pattern, ascending.
    pub fn grouped_means(&self) -> Vec<(f64, u64)> {
        let mut sorted: Vec<f64> = self.false_null_means.values().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let mut groups: Vec<(f64, u64)> = Vec::new();
        for mu in sorted {
            match groups.last_mut() {
                Some((value, count)) if value.to_bits() == mu.to_bits() => *count += 1,
                _ => groups.push((mu, 1)),
            }
        }
        groups
    }

    /// Serialize as `key = value` lines; false nulls as `index:mean` pairs.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let pairs: Vec<String> = self
            .false_nulls()
            .map(|(i, m)| format!("{i}:{m}"))
            .collect();
        let _ = writeln!(s, "false_nulls = {}", pairs.join(","));
        s
    }

    /// Parse the output of [`Self::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut means: Option<Vec<(u64, f64)>> = None;
        for (key, value) in parse_key_values(text)? {
            match key.as_str() {
                "n" => n = Some(parse_count(&value)?),
                "false_nulls" => {
                    let mut list = Vec::new();
                    if !value.is_empty() {
                        for pair in value.split(',') {
                            let (i, m) = pair.split_once(':').ok_or_else(|| {
                                Error::parse(format!("expected index:mean, got {pair:?}"))
                            })?;
                            let idx = parse_count(i)?;
                            let mu = m.parse::<f64>().map_err(|_| {
                                Error::parse(format!("invalid mean {m:?}"))
                            })?;
                            list.push((idx, mu));
                        }
                    }
                    means = Some(list);
                }
                other => return Err(Error::parse(format!("unknown key {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::parse("missing key \"n\""))?;
        AlternativeConfig::with_means(n, means.unwrap_or_default())
    }
}

// ---------------------------------------------------------------------------
// BlockStructure
// ---------------------------------------------------------------------------

/// Contiguous blocks of sizes k_j ≥ 2 with within-block correlations
/// ρ_j ∈ (0,1); hypotheses are numbered 1..=n across blocks in order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStructure {
    blocks: Vec<(u64, f64)>,
}

impl BlockStructure {
    /// Validates every (size, rho) pair.
    pub fn new(blocks: Vec<(u64, f64)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::domain("block structure requires at least one block"));
        }
        for (j, &(k, rho)) in blocks.iter().enumerate() {
            if k < 2 {
                return Err(Error::domain(format!(
                    "block {} requires size >= 2, got {k}",
                    j + 1
                )));
            }
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::domain(format!(
                    "block {} requires rho in (0,1), got {rho}",
                    j + 1
                )));
            }
        }
        Ok(BlockStructure { blocks })
    }

    /// Parse a compact `size:rho,size:rho,...` description
    /// (e.g. `"5000:0.5,5000:0.5"`). Sizes accept scientific notation.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for part in spec.split(',') {
            let part = part.trim();
            let (k, rho) = part.split_once(':').ok_or_else(|| {
                Error::parse(format!("expected size:rho, got {part:?}"))
            })?;
            let size = parse_count(k.trim())?;
            let rho = rho
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(format!("invalid block rho {rho:?}")))?;
            blocks.push((size, rho));
        }
        BlockStructure::new(blocks)
    }

    /// Inverse of [`Self::parse_spec`].
    pub fn to_spec_string(&self) -> String {
        self.blocks
            .iter()
            .map(|(k, r)| format!("{k}:{r}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Number of blocks m.
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// Total dimension n = Σ k_j.
    pub fn n(&self) -> u64 {
        self.blocks.iter().map(|&(k, _)| k).sum()
    }

    /// (size, rho) pairs in order.
    pub fn blocks(&self) -> &[(u64, f64)] {
        &self.blocks
    }

    /// Smallest within-block correlation (bound for admissible cross-block
    /// correlation in the nonnegative-dependence construction).
    pub fn min_rho(&self) -> f64 {
        self.blocks.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min)
    }

    /// Serialize as `key = value` lines.
    pub fn to_text(&self) -> String {
        format!("blocks = {}\n", self.to_spec_string())
    }

    /// Parse the output of [`Self::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut spec = None;
        for (key, value) in parse_key_values(text)? {
            match key.as_str() {
                "blocks" => spec = Some(value),
                other => return Err(Error::parse(format!("unknown key {other:?}"))),
            }
        }
        let spec = spec.ok_or_else(|| Error::parse("missing key \"blocks\""))?;
        BlockStructure::parse_spec(&spec)
    }
}

// ---------------------------------------------------------------------------
// RejectionSummary and error counting
// ---------------------------------------------------------------------------

/// Outcome of applying a single-step procedure to one observed vector:
/// per-hypothesis decisions plus the cutoff(s) actually used.
///
/// False-rejection and true-rejection counts depend on truth labels the
/// procedure does not see; obtain them afterwards with [`count_errors`].
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionSummary {
    /// Decision per hypothesis, index-aligned with the input vector.
    pub rejected: Vec<bool>,
    /// Cutoff(s) applied, including the correlation value(s) used.
    pub cutoff_used: CutoffSpec,
}

impl RejectionSummary {
    /// Total number of rejections.
    pub fn rejected_count(&self) -> u64 {
        self.rejected.iter().filter(|&&r| r).count() as u64
    }
}

/// Count (false rejections, true rejections) = (V, S) for a decision vector
/// against truth labels. Errors if the lengths disagree.
pub fn count_errors(rejected: &[bool], alt: &AlternativeConfig) -> Result<(u64, u64)> {
    if rejected.len() as u64 != alt.n() {
        return Err(Error::domain(format!(
            "decision vector has length {}, expected n = {}",
            rejected.len(),
            alt.n()
        )));
    }
    let mut v = 0u64;
    let mut s = 0u64;
    for (i, &rej) in rejected.iter().enumerate() {
        if rej {
            if alt.is_false_null(i as u64 + 1) {
                s += 1;
            } else {
                v += 1;
            }
        }
    }
    Ok((v, s))
}

// ---------------------------------------------------------------------------
// EstimateWithError
// ---------------------------------------------------------------------------

/// A Monte Carlo proportion with its binomial standard error and full
/// provenance (replication count and seed) for reproducibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    /// Estimated probability.
    pub estimate: Probability,
    /// √(p̂(1-p̂)/reps).
    pub std_error: f64,
    /// Number of replications (≥ 1).
    pub reps: u64,
    /// Master seed that generated the estimate.
    pub seed: u64,
}

impl EstimateWithError {
    /// Build from a success count out of `reps ≥ 1` trials.
    pub fn from_successes(successes: u64, reps: u64, seed: u64) -> Result<Self> {
        if reps < 1 {
            return Err(Error::domain("estimate requires reps >= 1"));
        }
        if successes > reps {
            return Err(Error::domain(format!(
                "successes {successes} exceed reps {reps}"
            )));
        }
        let p = successes as f64 / reps as f64;
        Ok(EstimateWithError {
            estimate: Probability::new(p)?,
            std_error: (p * (1.0 - p) / reps as f64).sqrt(),
            reps,
            seed,
        })
    }

    /// Standard error of the difference against another independent estimate.
    pub fn combined_se(&self, other: &EstimateWithError) -> f64 {
        (self.std_error * self.std_error + other.std_error * other.std_error).sqrt()
    }
}

// ---------------------------------------------------------------------------
// Shared text helpers
// ---------------------------------------------------------------------------

/// Parse `key = value` lines; blank lines and `#` comments are skipped.
pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(format!("line {}: expected key = value", lineno + 1))
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parse a nonnegative integer count, accepting plain decimal (`100000`)
/// or integral scientific notation (`1e5`, `2.5e3`). Rejects non-integral
/// values and anything above 2^53 (where f64 loses integer exactness).
pub fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f = s
        .parse::<f64>()
        .map_err(|_| Error::parse(format!("invalid count {s:?}")))?;
    const MAX_EXACT: f64 = 9_007_199_254_740_992.0; // 2^53
    if !f.is_finite() || f < 0.0 || f > MAX_EXACT {
        return Err(Error::parse(format!("count {s:?} out of range")));
    }
    if f.fract() != 0.0 {
        return Err(Error::parse(format!("count {s:?} is not an integer")));
    }
    Ok(f as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn procedure_config_validates() {
        assert!(ProcedureConfig::new(1, 0.05, CorrelationKnowledge::Estimate).is_err());
        assert!(ProcedureConfig::new(10, 0.0, CorrelationKnowledge::Estimate).is_err());
        assert!(ProcedureConfig::new(10, 1.0, CorrelationKnowledge::Estimate).is_err());
        assert!(ProcedureConfig::new(10, 0.05, CorrelationKnowledge::Known(0.0)).is_err());
        assert!(ProcedureConfig::new(10, 0.05, CorrelationKnowledge::Known(1.0)).is_err());
        let c = ProcedureConfig::new(10, 0.05, CorrelationKnowledge::Known(0.5)).unwrap();
        assert_eq!(c.n(), 10);
        assert_eq!(c.alpha(), 0.05);
        assert_eq!(c.rho(), CorrelationKnowledge::Known(0.5));
    }

    #[test]
    fn procedure_config_text_round_trip() {
        for config in [
            ProcedureConfig::new(100_000, 0.05, CorrelationKnowledge::Known(0.5)).unwrap(),
            ProcedureConfig::new(2, 0.987, CorrelationKnowledge::Estimate).unwrap(),
        ] {
            let text = config.to_text();
            let back = ProcedureConfig::from_text(&text).unwrap();
            assert_eq!(back, config, "round trip failed for:\n{text}");
        }
        assert!(ProcedureConfig::from_text("n = 10\nalpha = 0.05\nrho = 0.5\nbogus = 1").is_err());
        assert!(ProcedureConfig::from_text("alpha = 0.05\nrho = 0.5").is_err());
    }

    #[test]
    fn alternative_config_counts_and_lookup() {
        let alt = AlternativeConfig::with_means(10, [(3, 1.5), (7, 2.0)]).unwrap();
        assert_eq!(alt.n(), 10);
        assert_eq!(alt.n0(), 8);
        assert_eq!(alt.n1(), 2);
        assert!(!alt.is_global_null());
        assert!(alt.is_false_null(3));
        assert!(!alt.is_false_null(4));
        assert_eq!(alt.mean_of(7), 2.0);
        assert_eq!(alt.mean_of(1), 0.0);
        let groups = alt.grouped_means();
        assert_eq!(groups, vec![(1.5, 1), (2.0, 1)]);

        assert!(AlternativeConfig::with_means(10, [(0, 1.0)]).is_err());
        assert!(AlternativeConfig::with_means(10, [(11, 1.0)]).is_err());
        assert!(AlternativeConfig::with_means(10, [(3, 0.0)]).is_err());
        assert!(AlternativeConfig::with_means(10, [(3, -1.0)]).is_err());
        assert!(AlternativeConfig::with_means(10, [(3, 1.0), (3, 2.0)]).is_err());
    }

    #[test]
    fn alternative_groups_equal_means() {
        let alt =
            AlternativeConfig::with_means(100, (1..=50).map(|i| (i, 3.0))).unwrap();
        assert_eq!(alt.grouped_means(), vec![(3.0, 50)]);
    }

    #[test]
    fn alternative_text_round_trip() {
        for alt in [
            AlternativeConfig::global_null(5).unwrap(),
            AlternativeConfig::with_means(10, [(3, 1.5), (7, 2.0)]).unwrap(),
        ] {
            let text = alt.to_text();
            assert_eq!(AlternativeConfig::from_text(&text).unwrap(), alt);
        }
    }

    #[test]
    fn block_structure_validates_and_round_trips() {
        assert!(BlockStructure::new(vec![]).is_err());
        assert!(BlockStructure::new(vec![(1, 0.5)]).is_err());
        assert!(BlockStructure::new(vec![(5, 0.0)]).is_err());
        assert!(BlockStructure::new(vec![(5, 1.0)]).is_err());

        let b = BlockStructure::parse_spec("5000:0.5,300:0.7,2:0.1").unwrap();
        assert_eq!(b.m(), 3);
        assert_eq!(b.n(), 5302);
        assert_eq!(b.min_rho(), 0.1);
        assert_eq!(b.to_spec_string(), "5000:0.5,300:0.7,2:0.1");
        assert_eq!(BlockStructure::from_text(&b.to_text()).unwrap(), b);

        // Scientific-notation sizes are accepted.
        let s = BlockStructure::parse_spec("1e4:0.9,2e4:0.9").unwrap();
        assert_eq!(s.n(), 30_000);

        assert!(BlockStructure::parse_spec("5000-0.5").is_err());
        assert!(BlockStructure::parse_spec("").is_err());
    }

    #[test]
    fn count_errors_splits_by_truth() {
        let alt = AlternativeConfig::with_means(5, [(2, 1.0), (5, 2.0)]).unwrap();
        let rejected = vec![true, true, false, false, true];
        let (v, s) = count_errors(&rejected, &alt).unwrap();
        assert_eq!((v, s), (1, 2)); // index 1 is a false rejection; 2 and 5 are true ones
        assert!(count_errors(&[true, false], &alt).is_err());
    }

    #[test]
    fn count_errors_is_permutation_equivariant() {
        // Permuting (decisions, labels) jointly leaves (V, S) unchanged.
        let n = 12u64;
        let rejected: Vec<bool> =
            (0..n).map(|i| i.wrapping_mul(2_654_435_761) % 3 == 0).collect();
        let labels: Vec<Option<f64>> = (0..n)
            .map(|i| if i % 4 == 1 { Some(1.0 + i as f64) } else { None })
            .collect();
        let base_alt = AlternativeConfig::with_means(
            n,
            labels
                .iter()
                .enumerate()
                .filter_map(|(i, m)| m.map(|mu| (i as u64 + 1, mu))),
        )
        .unwrap();
        let base = count_errors(&rejected, &base_alt).unwrap();

        // A handful of deterministic permutations: rotations and a reversal.
        for shift in 0..n as usize {
            let perm: Vec<usize> = (0..n as usize).map(|i| (i + shift) % n as usize).collect();
            let p_rej: Vec<bool> = perm.iter().map(|&i| rejected[i]).collect();
            let p_alt = AlternativeConfig::with_means(
                n,
                perm.iter().enumerate().filter_map(|(new_i, &old_i)| {
                    labels[old_i].map(|mu| (new_i as u64 + 1, mu))
                }),
            )
            .unwrap();
            assert_eq!(count_errors(&p_rej, &p_alt).unwrap(), base);
        }
    }

    #[test]
    fn estimate_with_error_se_formula() {
        let e = EstimateWithError::from_successes(250, 1000, 42).unwrap();
        assert_eq!(e.estimate.value(), 0.25);
        let expected_se = (0.25f64 * 0.75 / 1000.0).sqrt();
        assert!((e.std_error - expected_se).abs() < 1e-15);
        assert_eq!(e.reps, 1000);
        assert_eq!(e.seed, 42);
        assert!(EstimateWithError::from_successes(0, 0, 1).is_err());
        assert!(EstimateWithError::from_successes(5, 4, 1).is_err());
        // Degenerate proportions have zero SE.
        assert_eq!(EstimateWithError::from_successes(0, 10, 1).unwrap().std_error, 0.0);
    }

    #[test]
    fn parse_count_accepts_scientific_notation() {
        assert_eq!(parse_count("100000").unwrap(), 100_000);
        assert_eq!(parse_count("1e5").unwrap(), 100_000);
        assert_eq!(parse_count("2.5e3").unwrap(), 2500);
        assert_eq!(parse_count("1e9").unwrap(), 1_000_000_000);
        assert!(parse_count("2.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("1e20").is_err());
        assert!(parse_count("abc").is_err());
    }
}
