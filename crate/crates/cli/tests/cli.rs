mod common;

use std::process::Command;

use common::*;
use mixedreg_core::export::read_meshfield;
use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixedreg"))
}

#[test]
fn exponents_example() {
    let dir = tempdir().unwrap();
    let out = bin().args(["exponents", "--N", "2", "--p", "3", "--q", "3", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("r=6, s=3, slack=0.5\n"), "{stdout}");
    assert_valid_summary(dir.path());
    let csv = std::fs::read_to_string(dir.path().join("exponents.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("N,p,q,r,s,slack"));
}

#[test]
fn inadmissible_exponents_are_config_errors() {
    let dir = tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["exponents", "--N", "2", "--p", "1", "--q", "3"]), 2);
    let s = summary(dir.path());
    assert_eq!(s["status"], "config_error");
    assert_eq!(s["exit_code"], 2);
    assert!(s["error"].as_str().unwrap().contains("p > N/2"));
    assert_valid_summary(dir.path());
}

#[test]
fn check_reports_witness_for_shifted_zeta() {
    let dir = tempdir().unwrap();
    let out = bin()
        .args(["check", "--config", &config("shifted_zeta.toml"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("violated zeta1_zero"), "{stderr}");
    assert!(stderr.contains("observed = 0.5"), "{stderr}");
    let s = summary(dir.path());
    let c = s["checks"].as_array().unwrap().iter().find(|c| c["name"] == "assumption.zeta1_zero").unwrap();
    assert_eq!(c["passed"], false);
    assert_valid_summary(dir.path());
    assert!(dir.path().join("assumptions.json").exists());
}

#[test]
fn check_passes_on_default_problem() {
    let dir = tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["check"]), 0);
    assert_eq!(summary(dir.path())["status"], "pass");
}

#[test]
fn config_errors_name_line_and_field() {
    let dir = tempdir().unwrap();
    let text = std::fs::read_to_string(config("smooth_active.toml")).unwrap();
    let cases = [
        (text.replace("g1 = \"0.5*y - 0.4\"", "g1 = \"0.5*y -\""), "constraints.g1"),
        (text.replace("p = 2", "p = \"two\""), ""),
        (text.replace("lambda1 = 1", "lambda1 = -1"), "cost.lambda1"),
    ];
    for (i, (bad, field)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.toml"));
        std::fs::write(&path, bad).unwrap();
        let line = bad.lines().position(|l| {
            l.starts_with("g1 = \"0.5*y -\"") || l.starts_with("p = \"two\"") || l.starts_with("lambda1 = -1")
        });
        let out = bin()
            .args(["solve-kkt", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(dir.path().join("out"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2));
        let stderr = String::from_utf8(out.stderr).unwrap();
        let expect = format!("{}:{}:", path.display(), line.unwrap() + 1);
        assert!(stderr.contains(&expect), "{stderr} lacks {expect}");
        assert!(stderr.contains(field), "{stderr}");
    }
    assert_eq!(run_in(dir.path(), &["solve-kkt", "--config", "/nonexistent/problem.toml"]), 2);
}

#[test]
fn argument_errors() {
    let dir = tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["no-such-command"]), 2);
    assert_eq!(run_in(dir.path(), &["solve-kkt", "--levels", "3..4"]), 2);
    assert_eq!(run_in(dir.path(), &["solve-kkt", "--damping", "1.5"]), 2);
    assert_eq!(run_in(dir.path(), &["solve-kkt", "--kkt-tol", "0"]), 2);
    assert_eq!(run_in(dir.path(), &["solve-state", "--u", "x1 +"]), 2);
    assert_eq!(run_in(dir.path(), &["product-rule", "--k2", "3"]), 2);
    assert_eq!(mixedreg_cli::run(["mixedreg", "--help"]), 0);
}

#[test]
fn constant_instance_is_solved_to_high_accuracy() {
    let dir = tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["solve-kkt", "--config", &config("constant_kkt.toml"), "--level", "4"]), 0);
    assert_valid_summary(dir.path());
    let s = summary(dir.path());
    let checks = s["checks"].as_array().unwrap();
    let residuals: Vec<_> = checks.iter().filter(|c| c["name"].as_str().unwrap().starts_with("residual.")).collect();
    assert_eq!(residuals.len(), 8);
    for c in residuals {
        assert!(c["value"].as_f64().unwrap() <= 1e-9, "{c}");
    }
    let read = |name: &str| {
        let f = std::fs::File::open(dir.path().join(name)).unwrap();
        read_meshfield(std::io::BufReader::new(f)).unwrap().values
    };
    assert!(read("u.meshfield").iter().all(|u| (u + 5.67558952178453313e-1).abs() < 1e-7));
    assert!(read("psi2.meshfield").iter().all(|p| (p - 7.93700525984099792e-1).abs() < 1e-7));
    let history = std::fs::read_to_string(dir.path().join("kkt_history.csv")).unwrap();
    assert_eq!(history.lines().next(), Some(mixedreg_core::kkt::HISTORY_HEADER));
}

#[test]
fn solver_failure_still_writes_report() {
    let dir = tempdir().unwrap();
    let code = run_in(dir.path(), &["solve-kkt", "--config", &config("smooth_active.toml"), "--level", "3", "--max-iter", "2"]);
    assert_eq!(code, 3);
    let s = summary(dir.path());
    assert_eq!(s["status"], "solver_failure");
    assert!(dir.path().join("kkt_report.json").exists());
    assert!(dir.path().join("kkt_history.csv").exists());
    assert_valid_summary(dir.path());
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempdir().unwrap();
    // a negative tolerance cannot be met
    let code = run_in(dir.path(), &["gradient-check", "--tol=-1"]);
    assert_eq!(code, 1);
    assert_eq!(summary(dir.path())["status"], "fail");
}

#[test]
fn environment_selects_output_directory() {
    let dir = tempdir().unwrap();
    let out = bin()
        .args(["exponents", "--N", "3", "--p", "2", "--q", "4"])
        .env("MIXEDREG_OUT", dir.path())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("summary.json").exists());
    assert!(dir.path().join("exponents.json").exists());
}

#[test]
fn csv_outputs_have_headers_and_repeat_exactly() {
    let runs: [&[&str]; 5] = [
        &["solve-state", "--levels", "2..3", "--u", "1 + x1", "--v", "x2"],
        &["gradient-check", "--config", &config("gradient.toml"), "--level", "2", "--directions", "3"],
        &["robinson", "--config", &config("robinson.toml"), "--level", "2", "--targets", "4"],
        &["frac-norm", "--levels", "2..3"],
        &["chain-rule", "--levels", "2..3", "--fields", "4"],
    ];
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    for args in runs {
        for d in [a.path(), b.path()] {
            let mut full = args.to_vec();
            full.extend(["--threads", "1"]);
            assert_eq!(run_in(d, &full), 0, "{args:?}");
            assert_valid_summary(d);
        }
    }
    let (fa, fb) = (files_with(a.path(), &["csv", "meshfield"]), files_with(b.path(), &["csv", "meshfield"]));
    assert_eq!(fa.len(), 7);
    assert_eq!(fa, fb);
    for (name, bytes) in &fa {
        if name.ends_with(".csv") {
            let first = String::from_utf8_lossy(bytes).lines().next().unwrap().to_string();
            assert!(first.chars().next().unwrap().is_ascii_alphabetic(), "{name}: {first}");
        }
    }
}

#[test]
fn schema_validator_rejects_bad_documents() {
    let s = schema();
    let mut doc: serde_json::Value = serde_json::from_str(
        r#"{"command":"check","status":"pass","exit_code":0,"seed":42,"config":null,"levels":[0,0],"checks":[],"artifacts":[],"error":null}"#,
    )
    .unwrap();
    assert!(validate(&doc, &s, "doc").is_ok());
    doc["status"] = "maybe".into();
    assert!(validate(&doc, &s, "doc").is_err());
    doc["status"] = "pass".into();
    doc["extra"] = 1.into();
    assert!(validate(&doc, &s, "doc").is_err());
}
