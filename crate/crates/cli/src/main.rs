//! Batch front end for the equicorrelated multiple-testing engines.
//!
//! Every command is deterministic given its flags and seed: rerunning
//! produces byte-identical primary output. CSV goes to stdout by default;
//! `--out FILE` writes the CSV to FILE and a `FILE.manifest` text file
//! recording the command, full parameter set, engine versions, and wall
//! time. Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 numeric
//! domain error.

use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use equicorr::analytic::{
    exact_anypwr_grouped, exact_fwer_block, exact_fwer_equicorr, exact_kfwer_equicorr,
    QuadratureRule,
};
use equicorr::cutoffs::{proposed_cutoff, CutoffSpec};
use equicorr::estimation::rho_hat_star;
use equicorr::model::{
    parse_count, AlternativeConfig, BlockStructure, CorrelationKnowledge, ProcedureConfig,
};
use equicorr::montecarlo::{
    simulate_block_fwer, simulate_full, simulate_fwer_fast, simulate_kfwer_fast, simulate_power,
    with_thread_pool, Metric, Scheme, SimulationPlan, DEFAULT_FAST_REPS, DEFAULT_FULL_REPS,
};
use equicorr::procedures::{apply_procedure, Procedure};

/// Seeded Monte Carlo and quadrature for familywise error rates under
/// equicorrelated Gaussian models.
#[derive(Parser)]
#[command(name = "equicorr", version, about, max_term_width = 100)]
struct Cli {
    /// Worker threads for Monte Carlo (0 = one per CPU). Estimates do not
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Write the CSV to this file (plus a sibling `.manifest`) instead of
    /// standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Deterministic conditional quadrature.
    Quadrature,
    /// Monte Carlo over the shared factor only (global null, known ρ).
    McFast,
    /// Monte Carlo over full observation vectors.
    McFull,
}

impl Method {
    fn label(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::McFast => "mc-fast",
            Method::McFull => "mc-full",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Familywise error rate of the correlation-adjusted cutoff under the
    /// global null.
    Fwer {
        /// Number of hypotheses; scientific notation accepted (1e9).
        #[arg(long)]
        n: String,
        /// Nominal level in (0, 1).
        #[arg(long)]
        alpha: f64,
        /// Common correlation in (0, 1) of the generating model.
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum)]
        method: Method,
        /// Plug an estimated correlation into the cutoff on every replication
        /// instead of the true value (mc-full only).
        #[arg(long)]
        estimate: bool,
        /// Monte Carlo replications (default 100000 fast, 10000 full).
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Reproduce one of the eight published error-rate grids.
    Table {
        /// Grid number 1-8: levels 0.15/0.10/0.05/0.01, known correlation
        /// (1-4, n = 1e5..1e9) or estimated correlation (5-8, n = 5000..20000).
        table_id: u8,
        /// Replications per cell (default 100000 for 1-4, 10000 for 5-8).
        #[arg(long)]
        reps: Option<u64>,
        /// Base seed; each cell derives its own substream from it.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Probability of rejecting at least one false null.
    Power {
        #[arg(long)]
        n: String,
        /// Number of false nulls, placed at coordinates 1..=n1.
        #[arg(long)]
        n1: String,
        /// Common mean shift of the false nulls (> 0).
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum)]
        method: Method,
        /// Estimate the correlation on every replication (mc-full only).
        #[arg(long)]
        estimate: bool,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Probability of at least k false rejections under the global null.
    Kfwer {
        #[arg(long)]
        n: String,
        #[arg(long)]
        k: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Estimate the common correlation from a data file of newline-separated
    /// observations (use `-` for standard input).
    EstimateRho { file: String },
    /// Apply a single-step procedure to observed statistics and report the
    /// per-coordinate decisions.
    Reject {
        /// Newline-separated statistics (use `-` for standard input).
        file: String,
        #[arg(long)]
        alpha: f64,
        /// Known common correlation for the adjusted cutoff.
        #[arg(long)]
        rho: Option<f64>,
        /// Estimate the correlation from the data instead.
        #[arg(long)]
        estimate: bool,
        /// Per-block sizes and correlations as k:rho pairs, e.g.
        /// 5000:0.5,3000:0.2 (coordinates are consumed in order).
        #[arg(long)]
        blocks: Option<String>,
    },
    /// Familywise error rate of the blockwise procedure under the global
    /// null.
    Block {
        /// Block sizes and correlations as k:rho pairs, e.g. 5000:0.5,5000:0.5.
        #[arg(long)]
        blocks: String,
        #[arg(long)]
        alpha: f64,
        /// Correlation shared across blocks (mc-full only; quadrature treats
        /// blocks as independent).
        #[arg(long, default_value_t = 0.0)]
        cross_rho: f64,
        #[arg(long, value_enum, default_value = "mc-full")]
        method: Method,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum CliError {
    Io(std::io::Error),
    Usage(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<equicorr::Error> for CliError {
    fn from(e: equicorr::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Format with 6 significant digits, locale-independent, trailing zeros
/// trimmed; switches to scientific notation outside [1e-5, 1e15).
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        match s.split_once('e') {
            Some((mantissa, exp)) => {
                let m = mantissa.trim_end_matches('0').trim_end_matches('.');
                format!("{m}e{exp}")
            }
            None => s,
        }
    }
}

/// One key for the manifest and one CSV-ready value.
type Params = Vec<(&'static str, String)>;

struct Output {
    header: &'static str,
    rows: Vec<String>,
    /// Full parameter set for the manifest, in declaration order.
    params: Params,
    command: &'static str,
}

impl Output {
    fn csv(&self) -> String {
        let mut text = String::with_capacity(64 * (self.rows.len() + 1));
        text.push_str(self.header);
        text.push('\n');
        for row in &self.rows {
            text.push_str(row);
            text.push('\n');
        }
        text
    }

    fn manifest(&self, wall: f64) -> String {
        let mut text = String::new();
        let _ = writeln!(text, "command = {}", self.command);
        for (key, value) in &self.params {
            let _ = writeln!(text, "{key} = {value}");
        }
        let _ = writeln!(text, "engine = equicorr {}", equicorr::VERSION);
        let _ = writeln!(text, "cli = equicorr-cli {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "wall_time_s = {wall:.6}");
        text
    }
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let threads = cli.threads;
    let result = with_thread_pool(threads, || run(cli.command))
        .map_err(CliError::from)
        .and_then(|r| r);
    match result {
        Ok(output) => {
            if let Err(e) = emit(&output, cli.out.as_deref(), started.elapsed().as_secs_f64()) {
                eprintln!("error: {e}");
                std::process::exit(e.exit_code());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn emit(output: &Output, out: Option<&Path>, wall: f64) -> Result<(), CliError> {
    match out {
        None => {
            print!("{}", output.csv());
            Ok(())
        }
        Some(path) => {
            fs::write(path, output.csv())?;
            let mut manifest_path = path.as_os_str().to_owned();
            manifest_path.push(".manifest");
            fs::write(PathBuf::from(manifest_path), output.manifest(wall))?;
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Fwer {
            n,
            alpha,
            rho,
            method,
            estimate,
            reps,
            seed,
        } => cmd_fwer(&n, alpha, rho, method, estimate, reps, seed),
        Command::Table {
            table_id,
            reps,
            seed,
        } => cmd_table(table_id, reps, seed),
        Command::Power {
            n,
            n1,
            mu,
            alpha,
            rho,
            method,
            estimate,
            reps,
            seed,
        } => cmd_power(&n, &n1, mu, alpha, rho, method, estimate, reps, seed),
        Command::Kfwer {
            n,
            k,
            alpha,
            rho,
            method,
            reps,
            seed,
        } => cmd_kfwer(&n, &k, alpha, rho, method, reps, seed),
        Command::EstimateRho { file } => cmd_estimate_rho(&file),
        Command::Reject {
            file,
            alpha,
            rho,
            estimate,
            blocks,
        } => cmd_reject(&file, alpha, rho, estimate, blocks.as_deref()),
        Command::Block {
            blocks,
            alpha,
            cross_rho,
            method,
            reps,
            seed,
        } => cmd_block(&blocks, alpha, cross_rho, method, reps, seed),
    }
}

fn parse_count_flag(name: &str, value: &str) -> Result<u64, CliError> {
    parse_count(value).map_err(|e| usage(format!("invalid --{name}: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_fwer(
    n: &str,
    alpha: f64,
    rho: f64,
    method: Method,
    estimate: bool,
    reps: Option<u64>,
    seed: u64,
) -> Result<Output, CliError> {
    let n = parse_count_flag("n", n)?;
    if estimate && method != Method::McFull {
        return Err(usage("--estimate requires --method mc-full"));
    }
    let (value, se, reps_used) = match method {
        Method::Quadrature => {
            let rule = QuadratureRule::default_grid();
            let cutoff = proposed_cutoff(n, alpha, rho)?;
            let p = exact_fwer_equicorr(n, cutoff, rho, n, &rule)?;
            (p.value(), None, None)
        }
        Method::McFast => {
            let reps = reps.unwrap_or(DEFAULT_FAST_REPS);
            let est = simulate_fwer_fast(n, alpha, rho, reps, seed)?;
            (est.estimate.value(), Some(est.std_error), Some(reps))
        }
        Method::McFull => {
            let reps = reps.unwrap_or(DEFAULT_FULL_REPS);
            let knowledge = if estimate {
                CorrelationKnowledge::Estimate
            } else {
                CorrelationKnowledge::Known(rho)
            };
            let plan = SimulationPlan {
                config: ProcedureConfig::new(n, alpha, knowledge)?,
                alt: AlternativeConfig::global_null(n)?,
                blocks: None,
                true_rho: rho,
                metric: Metric::Fwer,
                reps,
                seed,
                scheme: Scheme::FullVector,
            };
            let est = simulate_full(&plan)?;
            (est.estimate.value(), Some(est.std_error), Some(reps))
        }
    };
    let (se_col, reps_col, seed_col) = mc_columns(se, reps_used, seed);
    let params = vec![
        ("n", n.to_string()),
        ("alpha", sig6(alpha)),
        ("rho", sig6(rho)),
        ("method", method.label().to_string()),
        ("estimate", estimate.to_string()),
        ("reps", reps_col.clone()),
        ("seed", seed.to_string()),
    ];
    Ok(Output {
        header: "n,alpha,rho,method,estimate,se,reps,seed",
        rows: vec![format!(
            "{n},{},{},{},{},{se_col},{reps_col},{seed_col}",
            sig6(alpha),
            sig6(rho),
            method.label(),
            sig6(value),
        )],
        params,
        command: "fwer",
    })
}

/// CSV cells for the stochastic columns; quadrature rows leave them empty.
fn mc_columns(se: Option<f64>, reps: Option<u64>, seed: u64) -> (String, String, String) {
    match (se, reps) {
        (Some(se), Some(reps)) => (sig6(se), reps.to_string(), seed.to_string()),
        _ => (String::new(), String::new(), String::new()),
    }
}

const TABLE_ALPHAS: [f64; 4] = [0.15, 0.10, 0.05, 0.01];
const TABLE_LARGE_NS: [u64; 5] = [100_000, 1_000_000, 10_000_000, 100_000_000, 1_000_000_000];
const TABLE_SMALL_NS: [u64; 4] = [5_000, 10_000, 15_000, 20_000];
const TABLE_RHOS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn cmd_table(table_id: u8, reps: Option<u64>, seed: u64) -> Result<Output, CliError> {
    if !(1..=8).contains(&table_id) {
        return Err(usage(format!("table id must be 1-8, got {table_id}")));
    }
    let alpha = TABLE_ALPHAS[(table_id as usize - 1) % 4];
    let known_rho = table_id <= 4;
    let reps = reps.unwrap_or(if known_rho {
        DEFAULT_FAST_REPS
    } else {
        DEFAULT_FULL_REPS
    });
    let rule = QuadratureRule::default_grid();
    let ns: &[u64] = if known_rho {
        &TABLE_LARGE_NS
    } else {
        &TABLE_SMALL_NS
    };
    let mut rows = Vec::with_capacity(ns.len() * TABLE_RHOS.len());
    for (i, &n) in ns.iter().enumerate() {
        for (j, &rho) in TABLE_RHOS.iter().enumerate() {
            // Each cell gets its own deterministic substream of the base seed.
            let cell_seed = seed
                .wrapping_mul(1_000)
                .wrapping_add(10 * i as u64 + j as u64);
            let (mc, quad) = if known_rho {
                let est = simulate_fwer_fast(n, alpha, rho, reps, cell_seed)?;
                let cutoff = proposed_cutoff(n, alpha, rho)?;
                let exact = exact_fwer_equicorr(n, cutoff, rho, n, &rule)?;
                (est, sig6(exact.value()))
            } else {
                let plan = SimulationPlan {
                    config: ProcedureConfig::new(n, alpha, CorrelationKnowledge::Estimate)?,
                    alt: AlternativeConfig::global_null(n)?,
                    blocks: None,
                    true_rho: rho,
                    metric: Metric::Fwer,
                    reps,
                    seed: cell_seed,
                    scheme: Scheme::FullVector,
                };
                (simulate_full(&plan)?, String::new())
            };
            rows.push(format!(
                "{table_id},{n},{},{},{},{},{quad},{reps},{cell_seed}",
                sig6(alpha),
                sig6(rho),
                sig6(mc.estimate.value()),
                sig6(mc.std_error),
            ));
        }
    }
    let params = vec![
        ("table_id", table_id.to_string()),
        ("alpha", sig6(alpha)),
        (
            "correlation_knowledge",
            if known_rho { "known" } else { "estimated" }.to_string(),
        ),
        ("reps", reps.to_string()),
        ("seed", seed.to_string()),
    ];
    Ok(Output {
        header: "table,n,alpha,rho,mc_estimate,mc_se,quadrature,reps,seed",
        rows,
        params,
        command: "table",
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_power(
    n: &str,
    n1: &str,
    mu: f64,
    alpha: f64,
    rho: f64,
    method: Method,
    estimate: bool,
    reps: Option<u64>,
    seed: u64,
) -> Result<Output, CliError> {
    let n = parse_count_flag("n", n)?;
    let n1 = parse_count_flag("n1", n1)?;
    if n1 < 1 || n1 > n {
        return Err(usage(format!("--n1 must be in 1..=n, got {n1} with n = {n}")));
    }
    if estimate && method != Method::McFull {
        return Err(usage("--estimate requires --method mc-full"));
    }
    let (value, se, reps_used) = match method {
        Method::Quadrature => {
            let rule = QuadratureRule::default_grid();
            let cutoff = proposed_cutoff(n, alpha, rho)?;
            let p = exact_anypwr_grouped(cutoff, rho, &[(mu, n1)], &rule)?;
            (p.value(), None, None)
        }
        Method::McFast => {
            return Err(usage("power requires --method quadrature or mc-full"));
        }
        Method::McFull => {
            let reps = reps.unwrap_or(DEFAULT_FULL_REPS);
            let knowledge = if estimate {
                CorrelationKnowledge::Estimate
            } else {
                CorrelationKnowledge::Known(rho)
            };
            let plan = SimulationPlan {
                config: ProcedureConfig::new(n, alpha, knowledge)?,
                alt: AlternativeConfig::with_means(n, (1..=n1).map(|i| (i, mu)))?,
                blocks: None,
                true_rho: rho,
                metric: Metric::AnyPwr,
                reps,
                seed,
                scheme: Scheme::FullVector,
            };
            let est = simulate_power(&plan)?;
            (est.estimate.value(), Some(est.std_error), Some(reps))
        }
    };
    let (se_col, reps_col, seed_col) = mc_columns(se, reps_used, seed);
    let params = vec![
        ("n", n.to_string()),
        ("n1", n1.to_string()),
        ("mu", sig6(mu)),
        ("alpha", sig6(alpha)),
        ("rho", sig6(rho)),
        ("method", method.label().to_string()),
        ("estimate", estimate.to_string()),
        ("reps", reps_col.clone()),
        ("seed", seed.to_string()),
    ];
    Ok(Output {
        header: "n,n1,mu,alpha,rho,method,estimate,se,reps,seed",
        rows: vec![format!(
            "{n},{n1},{},{},{},{},{},{se_col},{reps_col},{seed_col}",
            sig6(mu),
            sig6(alpha),
            sig6(rho),
            method.label(),
            sig6(value),
        )],
        params,
        command: "power",
    })
}

fn cmd_kfwer(
    n: &str,
    k: &str,
    alpha: f64,
    rho: f64,
    method: Method,
    reps: Option<u64>,
    seed: u64,
) -> Result<Output, CliError> {
    let n = parse_count_flag("n", n)?;
    let k = parse_count_flag("k", k)?;
    let (value, se, reps_used) = match method {
        Method::Quadrature => {
            let rule = QuadratureRule::default_grid();
            let cutoff = proposed_cutoff(n, alpha, rho)?;
            let p = exact_kfwer_equicorr(n, k, cutoff, rho, &rule)?;
            (p.value(), None, None)
        }
        Method::McFast => {
            let reps = reps.unwrap_or(DEFAULT_FAST_REPS);
            let est = simulate_kfwer_fast(n, k, alpha, rho, reps, seed)?;
            (est.estimate.value(), Some(est.std_error), Some(reps))
        }
        Method::McFull => {
            return Err(usage("kfwer requires --method quadrature or mc-fast"));
        }
    };
    let (se_col, reps_col, seed_col) = mc_columns(se, reps_used, seed);
    let params = vec![
        ("n", n.to_string()),
        ("k", k.to_string()),
        ("alpha", sig6(alpha)),
        ("rho", sig6(rho)),
        ("method", method.label().to_string()),
        ("reps", reps_col.clone()),
        ("seed", seed.to_string()),
    ];
    Ok(Output {
        header: "n,k,alpha,rho,method,estimate,se,reps,seed",
        rows: vec![format!(
            "{n},{k},{},{},{},{},{se_col},{reps_col},{seed_col}",
            sig6(alpha),
            sig6(rho),
            method.label(),
            sig6(value),
        )],
        params,
        command: "kfwer",
    })
}

/// Read newline-separated decimals from a file, or stdin when the name is
/// `-`. Blank lines are ignored; anything unparseable names its line.
fn read_observations(file: &str) -> Result<Vec<f64>, CliError> {
    let text = if file == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        fs::read_to_string(file)?
    };
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| {
            CliError::Numeric(format!(
                "line {} of {file}: expected a decimal number, got {line:?}",
                lineno + 1
            ))
        })?;
        values.push(value);
    }
    Ok(values)
}

fn cmd_estimate_rho(file: &str) -> Result<Output, CliError> {
    let x = read_observations(file)?;
    let est = rho_hat_star(&x)?;
    let params = vec![
        ("file", file.to_string()),
        ("n", x.len().to_string()),
    ];
    Ok(Output {
        header: "n,pairs,estimate,raw_mean",
        rows: vec![format!(
            "{},{},{},{}",
            x.len(),
            est.m,
            sig6(est.value),
            sig6(est.raw_mean),
        )],
        params,
        command: "estimate-rho",
    })
}

fn cmd_reject(
    file: &str,
    alpha: f64,
    rho: Option<f64>,
    estimate: bool,
    blocks: Option<&str>,
) -> Result<Output, CliError> {
    let chosen = usize::from(rho.is_some()) + usize::from(estimate) + usize::from(blocks.is_some());
    if chosen != 1 {
        return Err(usage(
            "choose exactly one of --rho, --estimate, --blocks",
        ));
    }
    let procedure = if let Some(rho) = rho {
        Procedure::KnownRho { rho }
    } else if estimate {
        Procedure::EstimatedRho
    } else {
        let spec = blocks.unwrap();
        Procedure::Blockwise(
            BlockStructure::parse_spec(spec)
                .map_err(|e| usage(format!("invalid --blocks: {e}")))?,
        )
    };
    let x = read_observations(file)?;
    let summary = apply_procedure(&x, &procedure, alpha)?;
    let cutoffs: Vec<f64> = match &summary.cutoff_used {
        CutoffSpec::BlockProposed { cutoffs, .. } => {
            let Procedure::Blockwise(blocks) = &procedure else {
                unreachable!("block cutoffs only arise from the blockwise procedure");
            };
            blocks
                .blocks()
                .iter()
                .zip(cutoffs)
                .flat_map(|(&(k, _), &c)| std::iter::repeat(c).take(k as usize))
                .collect()
        }
        spec => {
            let c = spec.single_cutoff().expect("non-block cutoff is single");
            vec![c; x.len()]
        }
    };
    let rows = x
        .iter()
        .zip(&cutoffs)
        .zip(&summary.rejected)
        .enumerate()
        .map(|(i, ((&stat, &cutoff), &rejected))| {
            format!("{},{},{},{rejected}", i + 1, sig6(stat), sig6(cutoff))
        })
        .collect();
    let params = vec![
        ("file", file.to_string()),
        ("alpha", sig6(alpha)),
        (
            "procedure",
            match &procedure {
                Procedure::KnownRho { rho } => format!("known-rho {}", sig6(*rho)),
                Procedure::EstimatedRho => "estimated-rho".to_string(),
                Procedure::Blockwise(b) => format!("blockwise {}", b.to_spec_string()),
            },
        ),
        ("n", x.len().to_string()),
    ];
    Ok(Output {
        header: "index,statistic,cutoff,rejected",
        rows,
        params,
        command: "reject",
    })
}

fn cmd_block(
    blocks: &str,
    alpha: f64,
    cross_rho: f64,
    method: Method,
    reps: Option<u64>,
    seed: u64,
) -> Result<Output, CliError> {
    let structure =
        BlockStructure::parse_spec(blocks).map_err(|e| usage(format!("invalid --blocks: {e}")))?;
    let (value, se, reps_used) = match method {
        Method::Quadrature => {
            if cross_rho != 0.0 {
                return Err(usage("--cross-rho requires --method mc-full"));
            }
            let rule = QuadratureRule::default_grid();
            let sizes: Vec<u64> = structure.blocks().iter().map(|&(k, _)| k).collect();
            let p = exact_fwer_block(&structure, &sizes, alpha, &rule)?;
            (p.value(), None, None)
        }
        Method::McFast => {
            return Err(usage("block requires --method quadrature or mc-full"));
        }
        Method::McFull => {
            let reps = reps.unwrap_or(DEFAULT_FULL_REPS);
            let alt = AlternativeConfig::global_null(structure.n())?;
            let est = simulate_block_fwer(&structure, alpha, &alt, cross_rho, reps, seed)?;
            (est.estimate.value(), Some(est.std_error), Some(reps))
        }
    };
    let (se_col, reps_col, seed_col) = mc_columns(se, reps_used, seed);
    let blocks_col = structure.to_spec_string().replace(',', ";");
    let params = vec![
        ("blocks", structure.to_spec_string()),
        ("alpha", sig6(alpha)),
        ("cross_rho", sig6(cross_rho)),
        ("method", method.label().to_string()),
        ("reps", reps_col.clone()),
        ("seed", seed.to_string()),
    ];
    Ok(Output {
        header: "blocks,alpha,cross_rho,method,estimate,se,reps,seed",
        rows: vec![format!(
            "{blocks_col},{},{},{},{},{se_col},{reps_col},{seed_col}",
            sig6(alpha),
            sig6(cross_rho),
            method.label(),
            sig6(value),
        )],
        params,
        command: "block",
    })
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_significant_digits_trimmed() {
        assert_eq!(sig6(0.5), "0.5");
        assert_eq!(sig6(0.0708726376), "0.0708726");
        assert_eq!(sig6(0.15672), "0.15672");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0123456789), "-0.0123457");
        assert_eq!(sig6(1_000_000_000.0), "1000000000");
        assert_eq!(sig6(1.4e-15), "1.4e-15");
        assert_eq!(sig6(1.23456789e-15), "1.23457e-15");
    }
}
