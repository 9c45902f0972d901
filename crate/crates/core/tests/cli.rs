//! End-to-end runs of the `hjb` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hjb_core::oracles::riccati_1d;
use hjb_core::ValueField;
use tempfile::TempDir;

fn hjb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn out_dir(tmp: &TempDir, name: &str) -> String {
    tmp.path().join(name).to_string_lossy().into_owned()
}

fn read(dir: &str, file: &str) -> String {
    fs::read_to_string(Path::new(dir).join(file)).unwrap()
}

fn solve_discounted(dir: &str) -> Output {
    hjb(&[
        "solve",
        "lqr-1d",
        "--solver",
        "discounted",
        "--delta",
        "0.5",
        "--grid",
        "-2:2:101",
        "--dt",
        "0.02",
        "--out-dir",
        dir,
    ])
}

#[test]
fn discounted_solve_writes_field_and_report() {
    let tmp = TempDir::new().unwrap();
    let dir = out_dir(&tmp, "run");
    let out = solve_discounted(&dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let field = ValueField::read_csv(&read(&dir, "value.csv")).unwrap();
    let p = riccati_1d(1.0, 1.0, 0.5).unwrap();
    for k in field.grid.inner_nodes(0.5) {
        let x = field.grid.node(k)[0];
        let v = field.values[k];
        assert!(
            (v - p * x * x).abs() <= 0.02 * p * (1.0 + x * x),
            "x = {x}: {v}"
        );
    }
    let report: serde_json::Value = serde_json::from_str(&read(&dir, "report.json")).unwrap();
    assert_eq!(report["verdict"], "converged");
    let manifest: serde_json::Value = serde_json::from_str(&read(&dir, "manifest.json")).unwrap();
    assert!(manifest.get("config").is_some());
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let a = out_dir(&tmp, "a");
    let b = out_dir(&tmp, "b");
    assert_eq!(code(&solve_discounted(&a)), 0);
    assert_eq!(code(&solve_discounted(&b)), 0);
    assert_eq!(read(&a, "value.csv"), read(&b, "value.csv"));
    assert_eq!(read(&a, "report.json"), read(&b, "report.json"));
}

#[test]
fn malformed_problem_file_exits_1() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("bad.toml");
    fs::write(&spec, "dimension = \"two\"\nlagrangian = \n").unwrap();
    let out = hjb(&[
        "solve",
        spec.to_str().unwrap(),
        "--solver",
        "discounted",
        "--delta",
        "1",
        "--grid",
        "-1:1:11",
        "--out-dir",
        &out_dir(&tmp, "run"),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
}

#[test]
fn unknown_flag_and_missing_arguments_exit_1() {
    assert_eq!(code(&hjb(&["solve", "lqr-1d", "--bogus"])), 1);
    let tmp = TempDir::new().unwrap();
    // Discounted solve without --delta.
    let out = hjb(&[
        "solve",
        "lqr-1d",
        "--solver",
        "discounted",
        "--grid",
        "-1:1:11",
        "--out-dir",
        &out_dir(&tmp, "r"),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn iteration_budget_exhaustion_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = hjb(&[
        "solve",
        "lqr-1d",
        "--solver",
        "discounted",
        "--delta",
        "0.5",
        "--grid",
        "-2:2:41",
        "--max-iter",
        "1",
        "--out-dir",
        &out_dir(&tmp, "run"),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn limits_agree_on_lqr() {
    let tmp = TempDir::new().unwrap();
    let dir = out_dir(&tmp, "limits");
    let out = hjb(&[
        "limits",
        "lqr-1d",
        "--grid",
        "-2:2:101",
        "--dt",
        "0.04",
        "--tol",
        "1e-5",
        "--horizon-schedule",
        "4,8,16,32",
        "--delta-schedule",
        "0.125,0.0625,0.03125",
        "--out-dir",
        &dir,
    ]);
    assert!(
        matches!(code(&out), 0 | 2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for file in [
        "limit_finite_horizon.csv",
        "limit_discounted.csv",
        "comparison.json",
        "manifest.json",
    ] {
        assert!(Path::new(&dir).join(file).exists(), "{file}");
    }
    let cmp: serde_json::Value = serde_json::from_str(&read(&dir, "comparison.json")).unwrap();
    let a = ValueField::read_csv(&read(&dir, "limit_finite_horizon.csv")).unwrap();
    let b = ValueField::read_csv(&read(&dir, "limit_discounted.csv")).unwrap();
    let (diff, disagreements) = a.sup_diff(&b).unwrap();
    assert_eq!(disagreements, 0);
    assert!(diff < 0.2 * a.finite_scale(), "{diff} {cmp}");
}

fn certify(tmp: &TempDir, body: &str) -> Output {
    let cert = tmp.path().join("cert.toml");
    fs::write(&cert, body).unwrap();
    hjb(&[
        "certify",
        "lqr-1d",
        cert.to_str().unwrap(),
        "--target",
        "point:0",
        "--out-dir",
        &out_dir(tmp, "cert"),
    ])
}

#[test]
fn certificate_exit_codes() {
    // l = x^2 + a^2 >= d^2 / 2 with d = |x|.
    let tmp = TempDir::new().unwrap();
    let pass = certify(
        &tmp,
        "kind = \"sc2\"\nc1 = \"r^2 / 2\"\nsamples = 500\n[region]\nlo = [-1.0]\nhi = [1.0]\n",
    );
    assert_eq!(code(&pass), 0, "{}", String::from_utf8_lossy(&pass.stderr));
    let margin: serde_json::Value =
        serde_json::from_str(&read(&out_dir(&tmp, "cert"), "margin.json")).unwrap();
    assert_eq!(margin["pass"], true);

    // l - 2 d^2 = a^2 - x^2 is negative at a = 0.
    let fail = certify(
        &tmp,
        "kind = \"sc2\"\nc1 = \"2 * r^2\"\nsamples = 500\n[region]\nlo = [-1.0]\nhi = [1.0]\n",
    );
    assert_eq!(code(&fail), 4);

    let missing = certify(
        &tmp,
        "kind = \"mrf\"\nU = \"x1^2\"\nk = 0.5\n[region]\nlo = [-1.0]\nhi = [1.0]\n",
    );
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("gradient"));
}
