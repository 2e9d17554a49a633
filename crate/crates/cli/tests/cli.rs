//! End-to-end checks of the command-line contract: exit codes, CSV shape and
//! determinism, config parsing, and JSON report emission.

use std::path::Path;
use std::process::{Command, Output};

fn confine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confine")).args(args).output().expect("spawn confine")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_exit_code_contract() {
    // power potential lambda1 = 0.6: essentially self-adjoint, exit 0
    let o = confine(&["classify", "--lambda1", "0.6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("P:M(ii)"));

    // electric-only: never essentially self-adjoint, exit 1
    let o = confine(&["classify", "--lambda0", "2.0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("L:NES"));

    // lambda1 = 0.5 numerically: designed inconclusive path, exit 2
    let o = confine(&["classify", "--lambda1", "0.5", "--numeric"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("borderline"));

    // parse errors exit above 2
    let o = confine(&["classify", "--no-such-flag"]);
    assert!(o.status.code().unwrap_or(0) > 2);
}

#[test]
fn chernoff_classification() {
    let o = confine(&["classify", "--chernoff", "--alpha", "1.0"]);
    assert_eq!(o.status.code(), Some(0));
    let o = confine(&["classify", "--chernoff", "--alpha", "2.0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_csv_contract() {
    let o = confine(&["sweep", "--axis", "lambda1:0.3:0.7:0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "param1,param2,verdict,tag,margin");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 41);
    // verdict flips at exactly 0.50, with boundary cells near threshold
    for row in &rows {
        let cols: Vec<&str> = row.split(',').collect();
        let lambda: f64 = cols[0].parse().unwrap();
        match cols[2] {
            "ESA" => assert!(lambda >= 0.5),
            "NotESA" => assert!(lambda < 0.5),
            "Boundary" => assert!((lambda - 0.5).abs() < 0.17, "boundary cell at {lambda}"),
            other => panic!("unexpected cell verdict {other}"),
        }
    }

    // byte-identical reruns
    let o2 = confine(&["sweep", "--axis", "lambda1:0.3:0.7:0.01"]);
    assert_eq!(o.stdout, o2.stdout);

    // more than two axes rejected
    let o = confine(&[
        "sweep",
        "--axis",
        "lambda1:0:1:0.5",
        "--axis",
        "lambda3:0:1:0.5",
        "--axis",
        "lambda0:0:1:0.5",
    ]);
    assert!(o.status.code().unwrap_or(0) > 2);
}

#[test]
fn em_sweep_traces_the_analytic_curve() {
    let o = confine(&["sweep", "--axis", "lambda_m:0:1.5:0.05", "--axis", "lambda_e:0:1.5:0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut cells = 0;
    for row in text.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[3], "CO.5");
        let lm: f64 = cols[0].parse().unwrap();
        let le: f64 = cols[1].parse().unwrap();
        let inside = le * le <= lm * lm - 0.25 + 1e-12;
        match cols[2] {
            "ESA" => assert!(inside, "({lm}, {le})"),
            "NotESA" => assert!(!inside, "({lm}, {le})"),
            "Boundary" => {
                assert!((le * le - (lm * lm - 0.25)).abs() <= 0.05 + 1e-12, "({lm}, {le})")
            }
            other => panic!("unexpected verdict {other}"),
        }
        cells += 1;
    }
    assert_eq!(cells, 31 * 31);
}

#[test]
fn numeric_sweep_mode_agrees_with_closed_form() {
    let closed = confine(&["sweep", "--axis", "lambda1:0.3:0.7:0.1"]);
    let numeric = confine(&["sweep", "--axis", "lambda1:0.3:0.7:0.1", "--mode", "numeric"]);
    assert_eq!(closed.status.code(), Some(0));
    assert_eq!(numeric.status.code(), Some(0));
    let parse = |o: &Output| -> Vec<(f64, String)> {
        stdout(o)
            .lines()
            .skip(1)
            .map(|row| {
                let cols: Vec<&str> = row.split(',').collect();
                (cols[0].parse().unwrap(), cols[2].to_string())
            })
            .collect()
    };
    for ((lc, vc), (ln, vn)) in parse(&closed).iter().zip(parse(&numeric).iter()) {
        assert_eq!(lc, ln);
        // the exact threshold cell may be boundary/inconclusive either way
        if (lc - 0.5).abs() > 1e-9 {
            let decide = |v: &str| v == "ESA" || (v == "Boundary" && *lc >= 0.5);
            assert_eq!(decide(vc), decide(vn), "lambda = {lc}: {vc} vs {vn}");
        }
    }
}

#[test]
fn fibers_reports_failing_fiber() {
    let o = confine(&["fibers", "--field", "pcm", "--alpha", "0.25", "--jrange", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("failing fiber: j = -1"));

    let o = confine(&["fibers", "--field", "pcm", "--alpha", "0.75", "--jrange", "4", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"aggregate\""));
}

#[test]
fn certify_exit_codes() {
    let o = confine(&["certify", "--theorem", "td1s", "--lambda", "0.5", "--convex"]);
    assert_eq!(o.status.code(), Some(0));
    let o = confine(&["certify", "--theorem", "td1s", "--lambda", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = confine(&["certify", "--theorem", "ts", "--domain", "ball", "--lambda", "1.0", "--alpha", "2.0"]);
    assert_eq!(o.status.code(), Some(0));
    let o = confine(&["certify", "--theorem", "ts", "--domain", "ball", "--lambda", "0.1", "--alpha", "1.0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identity_check_passes_with_order_table() {
    let o = confine(&["identity-check"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("orders:"));
    assert!(text.contains("diamagnetic holds"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join("confine-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        "[problem]\nlambda1 = 0.4\n\n[numerics]\ndelta0 = 0.2\n",
    )
    .unwrap();
    let o = confine(&["--config", cfg.to_str().unwrap(), "classify"]);
    assert_eq!(o.status.code(), Some(1)); // 0.4 subcritical

    // flags win over the file
    let o = confine(&["--config", cfg.to_str().unwrap(), "classify", "--lambda1", "0.7"]);
    assert_eq!(o.status.code(), Some(0));

    // unknown keys are rejected with a diagnostic
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[problem]\nlambda9 = 1.0\n").unwrap();
    let o = confine(&["--config", bad.to_str().unwrap(), "classify"]);
    assert!(o.status.code().unwrap_or(0) > 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda9"));
}

#[test]
fn evolve_writes_diagnostics_csv() {
    let dir = std::env::temp_dir().join("confine-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("diag.csv");
    let o = confine(&[
        "evolve",
        "--lambda1",
        "1.0",
        "--n",
        "512",
        "--t-final",
        "0.5",
        "--out",
        out.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(Path::new(&out)).unwrap();
    assert!(csv.starts_with("t,norm,band_prob,flux,cut_amp\n"));
    assert!(csv.lines().count() > 10);
    assert!(stdout(&o).contains("\"max_norm_drift_per_step\""));
}
