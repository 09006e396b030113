//! End-to-end tests of the `equicorr` binary: CSV schemas, worked examples,
//! determinism, exit codes, and manifest plumbing.

use std::io::Write as _;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equicorr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Split a single-data-row CSV into (header, fields).
fn parse_single_row(text: &str) -> (String, Vec<String>) {
    let mut lines = text.lines();
    let header = lines.next().expect("header row").to_string();
    let row = lines.next().expect("data row");
    assert_eq!(lines.next(), None, "expected exactly one data row");
    (header, row.split(',').map(str::to_string).collect())
}

#[test]
fn fwer_quadrature_worked_example() {
    let text = stdout_of(&[
        "fwer",
        "--n",
        "1e5",
        "--alpha",
        "0.05",
        "--rho",
        "0.5",
        "--method",
        "quadrature",
    ]);
    let (header, fields) = parse_single_row(&text);
    assert_eq!(header, "n,alpha,rho,method,estimate,se,reps,seed");
    assert_eq!(&fields[..4], ["100000", "0.05", "0.5", "quadrature"]);
    let estimate: f64 = fields[4].parse().unwrap();
    assert!(
        (estimate - 0.0708726).abs() < 1e-4,
        "quadrature value drifted: {estimate}"
    );
    // Consistent with the published grid cell for these parameters.
    assert!((estimate - 0.07137).abs() < 0.002);
    // Deterministic engine: the stochastic columns stay empty.
    assert_eq!(&fields[5..], ["", "", ""]);
}

#[test]
fn fwer_mc_fast_worked_example() {
    let text = stdout_of(&[
        "fwer", "--n", "1e9", "--alpha", "0.15", "--rho", "0.9", "--method", "mc-fast", "--reps",
        "100000", "--seed", "1",
    ]);
    let (_, fields) = parse_single_row(&text);
    let estimate: f64 = fields[4].parse().unwrap();
    let se: f64 = fields[5].parse().unwrap();
    assert_eq!(fields[6], "100000");
    assert_eq!(fields[7], "1");
    let published = 0.15672;
    let combined = (se.powi(2) + published * (1.0 - published) / 1e5).sqrt();
    assert!(
        (estimate - published).abs() < 4.0 * combined,
        "estimate {estimate} too far from published {published}"
    );
}

#[test]
fn fwer_missing_rho_is_usage_error() {
    let out = run(&["fwer", "--n", "1e5", "--alpha", "0.05", "--method", "mc-fast"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn fwer_bad_count_is_usage_error() {
    let out = run(&[
        "fwer", "--n", "1x5", "--alpha", "0.05", "--rho", "0.5", "--method", "quadrature",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--n"));
}

#[test]
fn fwer_domain_error_names_parameter_and_exits_3() {
    let out = run(&[
        "fwer", "--n", "1e5", "--alpha", "1.5", "--rho", "0.5", "--method", "quadrature",
    ]);
    assert_eq!(exit_code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn fwer_estimate_requires_full_engine() {
    let out = run(&[
        "fwer", "--n", "1e5", "--alpha", "0.05", "--rho", "0.5", "--method", "mc-fast",
        "--estimate",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "fwer", "--n", "2000", "--alpha", "0.05", "--rho", "0.5", "--method", "mc-full",
        "--reps", "500", "--seed", "42",
    ];
    assert_eq!(stdout_of(&args), stdout_of(&args));
}

#[test]
fn thread_count_does_not_change_output() {
    let base = [
        "fwer", "--n", "2000", "--alpha", "0.05", "--rho", "0.5", "--method", "mc-full",
        "--reps", "500", "--seed", "9",
    ];
    let mut one = base.to_vec();
    one.extend(["--threads", "1"]);
    let mut two = base.to_vec();
    two.extend(["--threads", "2"]);
    assert_eq!(stdout_of(&one), stdout_of(&two));
}

#[test]
fn out_flag_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("run.csv");
    let out = run(&[
        "fwer",
        "--n",
        "1000",
        "--alpha",
        "0.05",
        "--rho",
        "0.5",
        "--method",
        "quadrature",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "primary output goes to the file");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("n,alpha,rho,method,estimate,se,reps,seed\n"));
    let manifest = std::fs::read_to_string(dir.path().join("run.csv.manifest")).unwrap();
    for needle in [
        "command = fwer",
        "n = 1000",
        "alpha = 0.05",
        "method = quadrature",
        "seed = 1",
        "engine = equicorr ",
        "cli = equicorr-cli ",
        "wall_time_s = ",
    ] {
        assert!(manifest.contains(needle), "manifest missing {needle:?}:\n{manifest}");
    }
}

#[test]
fn table_known_rho_structure_and_determinism() {
    let args = ["table", "3", "--reps", "500", "--seed", "11"];
    let text = stdout_of(&args);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 26, "header + 25 grid rows");
    assert_eq!(lines[0], "table,n,alpha,rho,mc_estimate,mc_se,quadrature,reps,seed");
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[0], "3");
        assert_eq!(fields[2], "0.05");
        let mc: f64 = fields[4].parse().unwrap();
        let se: f64 = fields[5].parse().unwrap();
        let quad: f64 = fields[6].parse().unwrap();
        // Coarse 500-rep run still brackets the deterministic value.
        assert!(
            (mc - quad).abs() < 6.0 * se,
            "cell {row} inconsistent with quadrature"
        );
    }
    assert_eq!(text, stdout_of(&args), "same seed, same bytes");
}

#[test]
fn table_estimated_rho_leaves_quadrature_blank() {
    let text = stdout_of(&["table", "5", "--reps", "100", "--seed", "3"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21, "header + 20 grid rows");
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[0], "5");
        assert_eq!(fields[2], "0.15");
        assert_eq!(fields[6], "", "no closed form for the estimated-correlation rate");
    }
}

#[test]
fn table_id_out_of_range_is_usage_error() {
    assert_eq!(exit_code(&run(&["table", "9"])), 2);
}

#[test]
fn estimate_rho_worked_example_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.txt");
    std::fs::write(&data, "1.5\n0.5\n-0.3\n0.7\n").unwrap();
    let text = stdout_of(&["estimate-rho", data.to_str().unwrap()]);
    let (header, fields) = parse_single_row(&text);
    assert_eq!(header, "n,pairs,estimate,raw_mean");
    assert_eq!(fields, ["4", "2", "0.5", "0.5"]);
}

#[test]
fn estimate_rho_reads_stdin() {
    let mut child = bin()
        .args(["estimate-rho", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"1.5\n0.5\n-0.3\n0.7\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("4,2,0.5,"));
}

#[test]
fn estimate_rho_bad_line_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.txt");
    std::fs::write(&data, "1.5\nnot-a-number\n").unwrap();
    let out = run(&["estimate-rho", data.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr should name the line: {err}");
}

#[test]
fn reject_known_rho_marks_only_exceedances() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("stats.txt");
    std::fs::write(&data, "10\n0\n0\n0\n").unwrap();
    let text = stdout_of(&[
        "reject",
        data.to_str().unwrap(),
        "--alpha",
        "0.05",
        "--rho",
        "0.5",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,statistic,cutoff,rejected");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1], "1,10,1.64002,true");
    assert_eq!(lines[2], "2,0,1.64002,false");
    assert_eq!(lines[4], "4,0,1.64002,false");
}

#[test]
fn reject_blockwise_uses_per_block_cutoffs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("stats.txt");
    std::fs::write(&data, "0.5\n0.0\n3.5\n0.0\n").unwrap();
    let text = stdout_of(&[
        "reject",
        data.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--blocks",
        "2:0.9,2:0.1",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    let cutoff_of = |line: &str| line.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    // Two coordinates per block share a cutoff; the blocks differ.
    assert_eq!(cutoff_of(lines[1]), cutoff_of(lines[2]));
    assert_eq!(cutoff_of(lines[3]), cutoff_of(lines[4]));
    assert_ne!(cutoff_of(lines[1]), cutoff_of(lines[3]));
    assert!(lines[3].ends_with(",true"), "3.5 clears the second-block cutoff");
    assert!(lines[1].ends_with(",false"));
}

#[test]
fn reject_requires_exactly_one_procedure() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("stats.txt");
    std::fs::write(&data, "1\n2\n").unwrap();
    let path = data.to_str().unwrap();
    let both = run(&["reject", path, "--alpha", "0.05", "--rho", "0.5", "--estimate"]);
    assert_eq!(exit_code(&both), 2);
    let none = run(&["reject", path, "--alpha", "0.05"]);
    assert_eq!(exit_code(&none), 2);
}

#[test]
fn kfwer_quadrature_stays_near_level() {
    let text = stdout_of(&[
        "kfwer", "--n", "1e6", "--k", "3", "--alpha", "0.05", "--rho", "0.5", "--method",
        "quadrature",
    ]);
    let (header, fields) = parse_single_row(&text);
    assert_eq!(header, "n,k,alpha,rho,method,estimate,se,reps,seed");
    let estimate: f64 = fields[5].parse().unwrap();
    assert!(
        (estimate - 0.05).abs() < 0.02,
        "k-of-n rate {estimate} strayed from the level"
    );
}

#[test]
fn power_quadrature_worked_example() {
    let text = stdout_of(&[
        "power", "--n", "1e5", "--n1", "50000", "--mu", "2", "--alpha", "0.05", "--rho", "0.5",
        "--method", "quadrature",
    ]);
    let (_, fields) = parse_single_row(&text);
    let estimate: f64 = fields[6].parse().unwrap();
    assert!((estimate - 0.86599).abs() < 1e-3, "power {estimate}");
}

#[test]
fn block_simulation_brackets_deterministic_value() {
    let text = stdout_of(&[
        "block",
        "--blocks",
        "5000:0.5,5000:0.5,5000:0.5,5000:0.5",
        "--alpha",
        "0.05",
        "--reps",
        "10000",
        "--seed",
        "7",
    ]);
    let (header, fields) = parse_single_row(&text);
    assert_eq!(header, "blocks,alpha,cross_rho,method,estimate,se,reps,seed");
    assert_eq!(fields[0], "5000:0.5;5000:0.5;5000:0.5;5000:0.5");
    let estimate: f64 = fields[4].parse().unwrap();
    let se: f64 = fields[5].parse().unwrap();
    // Deterministic engine gives 0.090574 for this structure and level.
    assert!(
        (estimate - 0.090574).abs() < 4.0 * se,
        "block rate {estimate} inconsistent with 0.090574"
    );
}

#[test]
fn block_quadrature_matches_pinned_value() {
    let text = stdout_of(&[
        "block",
        "--blocks",
        "5000:0.5,5000:0.5,5000:0.5,5000:0.5",
        "--alpha",
        "0.05",
        "--method",
        "quadrature",
    ]);
    let (_, fields) = parse_single_row(&text);
    let estimate: f64 = fields[4].parse().unwrap();
    assert!((estimate - 0.090574).abs() < 1e-4);
}

#[test]
fn block_cross_rho_needs_simulation() {
    let out = run(&[
        "block", "--blocks", "100:0.5,100:0.5", "--alpha", "0.05", "--cross-rho", "0.2",
        "--method", "quadrature",
    ]);
    assert_eq!(exit_code(&out), 2);
}
