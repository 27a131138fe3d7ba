use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn esgtev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esgtev"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr_error(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["error"].clone()
}

fn stdout_json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn four_asset(cmd: &str) -> Vec<String> {
    vec![
        cmd.into(),
        "--assets".into(),
        fixture("four_asset/assets.csv"),
        "--covariance".into(),
        fixture("four_asset/covariance.csv"),
    ]
}

fn run(args: &[String]) -> Output {
    esgtev(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&esgtev(&["--help"])), 0);
    assert_eq!(code(&esgtev(&["--version"])), 0);
    assert_eq!(code(&esgtev(&["frontier", "--help"])), 0);
}

#[test]
fn unknown_flag_is_a_config_error() {
    let mut args = four_asset("scalars");
    args.push("--bogus".into());
    let out = run(&args);
    assert_eq!(code(&out), 2);
    assert_eq!(stderr_error(&out)["class"], "config");
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_subcommand_and_bad_range_are_config_errors() {
    assert_eq!(code(&esgtev(&[])), 2);
    let mut args = four_asset("frontier");
    args.extend([
        "--benchmark".into(),
        fixture("four_asset/risk_reducer.csv"),
        "--g-min".into(),
        "0.1".into(),
        "--g-max".into(),
        "-0.1".into(),
    ]);
    let out = run(&args);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_input_file_is_a_config_error() {
    let out = esgtev(&[
        "scalars",
        "--assets",
        "/nonexistent/assets.csv",
        "--covariance",
        "/nonexistent/cov.csv",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_error(&out)["message"]
        .as_str()
        .unwrap()
        .contains("assets.csv"));
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn indefinite_covariance_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let assets = write(
        dir.path(),
        "assets.csv",
        "asset,mu,xi\nA,0.1,0.2\nB,0.05,0.6\nC,0.02,0.9\n",
    );
    let cov = write(
        dir.path(),
        "cov.csv",
        "A,B,C\n0.04,0.05,0\n0.05,0.04,0\n0,0,0.03\n",
    );
    let out = esgtev(&["scalars", "--assets", &assets, "--covariance", &cov]);
    assert_eq!(code(&out), 3);
    let err = stderr_error(&out);
    assert_eq!(err["class"], "numerical");
    assert_eq!(err["kind"], "not_positive_definite");
}

#[test]
fn malformed_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let assets = write(dir.path(), "assets.csv", "asset,mean,xi\nA,0.1,0.2\n");
    let out = esgtev(&[
        "scalars",
        "--assets",
        &assets,
        "--covariance",
        &fixture("four_asset/covariance.csv"),
    ]);
    assert_eq!(code(&out), 4);
    assert_eq!(stderr_error(&out)["class"], "data");

    let bench = write(dir.path(), "bench.csv", "asset,weight\nA,0.5\nB,0.5\n");
    let mut args = four_asset("gstar");
    args.extend(["--benchmark".into(), bench]);
    assert_eq!(code(&run(&args)), 4);
}

#[test]
fn unwritable_output_is_a_filesystem_error() {
    let mut args = four_asset("scalars");
    args.extend(["--out".into(), "/nonexistent-dir/scalars.json".into()]);
    let out = run(&args);
    assert_eq!(code(&out), 5);
    assert_eq!(stderr_error(&out)["class"], "io");
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let target: PathBuf = dir.path().join("frontier.csv");
    let mut args = four_asset("frontier");
    args.extend(["--benchmark".into(), fixture("four_asset/risk_reducer.csv")]);
    let stdout = run(&args).stdout;
    args.extend(["--out".into(), target.to_string_lossy().into_owned()]);
    let out = run(&args);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&target).unwrap(), stdout);
    let text = String::from_utf8(stdout).unwrap();
    assert!(text.starts_with("g,var_front,var_tev,var_tev_esg,binding\n"));
    assert_eq!(text.lines().take_while(|l| !l.is_empty()).count(), 202);
}

#[test]
fn portfolio_agrees_with_oracle() {
    let mut args = four_asset("portfolio");
    args.extend([
        "--benchmark".into(),
        fixture("four_asset/risk_reducer.csv"),
        "--g".into(),
        "0.02".into(),
        "--format".into(),
        "json".into(),
    ]);
    let v = stdout_json(&run(&args));
    assert!(v["oracle_max_deviation"].as_f64().unwrap() < 1e-7);
    assert_eq!(v["binding"], true);
}

#[test]
fn gstar_reports_positive_intersection_for_risk_reducer() {
    let mut args = four_asset("gstar");
    args.extend(["--benchmark".into(), fixture("four_asset/risk_reducer.csv")]);
    let v = stdout_json(&run(&args));
    let g = v["g_star"].as_f64().unwrap();
    assert!(g > 0.0 && g < 0.1, "{v}");
}

#[test]
fn equilibrium_json_has_positive_premium() {
    let v = stdout_json(&esgtev(&[
        "equilibrium",
        "--economy",
        &fixture("four_asset/economy.json"),
        "--format",
        "json",
    ]));
    assert!(v["pricing"]["gamma"].as_f64().unwrap() > 0.0, "{v}");
}

#[test]
fn regress_recovers_positive_premium() {
    let v = stdout_json(&esgtev(&[
        "regress",
        "--returns",
        &fixture("synthetic/returns.csv"),
        "--esg",
        &fixture("synthetic/esg.csv"),
        "--model",
        "tev_esg",
        "--format",
        "json",
    ]));
    let text = v.to_string();
    assert!(text.contains("tev_esg"), "{text}");
    let fit = &v[0];
    let gamma = fit["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "gamma")
        .unwrap();
    assert!(gamma["estimate"].as_f64().unwrap() > 0.0);
    assert!(gamma["p_value"].as_f64().unwrap() < 0.01);
}

#[test]
fn factor_model_without_factors_is_a_config_error() {
    let out = esgtev(&[
        "regress",
        "--returns",
        &fixture("synthetic/returns.csv"),
        "--esg",
        &fixture("synthetic/esg.csv"),
        "--model",
        "ff5",
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_check_passes_and_parallel_matches_sequential() {
    let par = esgtev(&["oracle-check", "--instances", "30"]);
    let seq = esgtev(&["oracle-check", "--instances", "30", "--sequential"]);
    let v = stdout_json(&par);
    assert_eq!(v["passed"], true);
    assert_eq!(par.stdout, seq.stdout);
}

#[test]
fn synth_regenerates_bundled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = esgtev(&["synth", "--out-dir", &dir.path().to_string_lossy()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "returns.csv",
        "esg.csv",
        "factors.csv",
        "sectors.csv",
        "truth.json",
    ] {
        let fresh = std::fs::read(dir.path().join(name)).unwrap();
        let bundled = std::fs::read(fixture(&format!("synthetic/{name}"))).unwrap();
        assert!(fresh == bundled, "{name} differs from the bundled fixture");
    }
}
