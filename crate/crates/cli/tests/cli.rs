use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ergo_bounds_cli::config::{parse_config, to_toml, ConfigError, Kind};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergo-bounds"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> toml::Table {
    toml::from_str(&fs::read_to_string(out.join("report.toml")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("problem.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn shipped_examples_round_trip() {
    for entry in fs::read_dir(example("")).unwrap() {
        let path = entry.unwrap().path();
        let spec = parse_config(&fs::read_to_string(&path).unwrap()).unwrap();
        let again = parse_config(&to_toml(&spec)).unwrap();
        assert_eq!(spec, again, "{}", path.display());
    }
    let harris = parse_config(&fs::read_to_string(example("two_state.toml")).unwrap()).unwrap();
    assert_eq!(harris.kind, Kind::Harris);
}

#[test]
fn row_sum_below_one_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(example("two_state.toml"))
        .unwrap()
        .replace("[[0.1, 0.9], [0.9, 0.1]]", "[[0.1, 0.89], [0.9, 0.1]]");
    let err = parse_config(&text).unwrap_err();
    assert!(matches!(err, ConfigError::Validation { .. }));
    assert!(err.to_string().contains("row-stochastic"));

    let out = run(&["harris"], &write_config(dir.path(), &text), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("VALIDATION_ERROR"));
}

#[test]
fn malformed_toml_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["renewal"],
        &write_config(dir.path(), "kind = \"renewal\"\n[increment\np = [1.0]\n"),
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PARSE_ERROR at line 2"));
}

#[test]
fn subcommand_must_match_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["kendall"], &example("two_state.toml"), dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kendall_run_on_the_fair_coin_increment() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["kendall", "--trace"], &example("kendall_half.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[renewal coupling] L = "));
    let r = report(dir.path());
    assert_eq!(r["bivariate_drift"]["m"].as_integer(), Some(8));
    assert_eq!(r["constants"]["m"].as_float(), Some(8.0));
    assert!(r["constants"]["ln_rho"].as_float().unwrap() > 0.0);
    assert!(r["constants"]["ln_l"].as_float().unwrap().is_finite());
    assert_eq!(r["verification"]["passed"].as_bool(), Some(true));
    assert_eq!(r["petiteness"]["passed"].as_bool(), Some(true));
}

#[test]
fn harris_run_on_the_flip_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["harris"], &example("two_state.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["verification"]["horizon"].as_integer(), Some(200));
    assert_eq!(r["verification"]["passed"].as_bool(), Some(true));
    assert_eq!(r["constants"]["gamma_below_one"].as_bool(), Some(true));
    assert!(r["constants"]["ln_d"].as_float().unwrap().is_finite());
    assert!(r["trace"].as_table().unwrap().contains_key("assembly.ln_D"));

    let csv = fs::read_to_string(dir.path().join("distances.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,exact_distance,bound_value,margin"));
    for (n, line) in lines.enumerate() {
        let exact: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        let expected = 0.8f64.powi(n as i32 + 1);
        assert!((exact / expected - 1.0).abs() < 1e-10, "n = {}", n + 1);
    }
}

#[test]
fn verify_accepts_true_and_rejects_corrupted_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify"], &example("verify_two_state.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0));

    let corrupted = fs::read_to_string(example("verify_two_state.toml"))
        .unwrap()
        .replace("gamma = 0.85", "gamma = 0.75");
    let out = run(&["verify"], &write_config(dir.path(), &corrupted), dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["verification"]["passed"].as_bool(), Some(false));
    assert_eq!(r["verification"]["violation_n"].as_integer(), Some(1));
}

#[test]
fn verify_renewal_claims() {
    let dir = tempfile::tempdir().unwrap();
    let claim =
        |ln_l: f64| format!("kind = \"verify\"\n[increment]\np = [0.5, 0.5]\n[constants]\nr2 = 1.5\nln_l = {ln_l}\n");
    // |u(n) - 2/3| = (1/2)^n / 3, so the weighted sum is sum_n 0.75^n / 3 = 1
    let out = run(&["verify"], &write_config(dir.path(), &claim(1.01f64.ln())), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify"], &write_config(dir.path(), &claim(0.99f64.ln())), dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_hypothesis_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(example("two_state.toml"))
        .unwrap()
        .replace("b = 0.2", "b = 0.05");
    let out = run(&["harris"], &write_config(dir.path(), &text), dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["hypotheses"]["passed"].as_bool(), Some(false));
}

#[test]
fn simulations_agree_with_exact_values() {
    for (cfg, section) in [
        ("simulate_coupling.toml", "coupling_time"),
        ("two_state.toml", "hitting_time"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["simulate", "--seed", "7"], &example(cfg), dir.path());
        assert_eq!(out.status.code(), Some(0), "{cfg}");
        let r = report(dir.path());
        assert_eq!(r[section]["mean_within_3se"].as_bool(), Some(true));
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for (cmd, cfg) in [
        ("harris", "two_state.toml"),
        ("kendall", "kendall_half.toml"),
        ("renewal", "renewal_three.toml"),
        ("simulate", "simulate_coupling.toml"),
    ] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run(&[cmd], &example(cfg), a.path());
        run(&[cmd], &example(cfg), b.path());
        for file in ["report.toml", "distances.csv"] {
            let (x, y) = (fs::read(a.path().join(file)), fs::read(b.path().join(file)));
            if let (Ok(x), Ok(y)) = (x, y) {
                assert_eq!(x, y, "{cmd} {file}");
            }
        }
    }
}
