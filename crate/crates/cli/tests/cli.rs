use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grsk-toda")).args(args).output().expect("binary runs")
}

fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(run(&["verify", "nosuch"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "tau", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["flow", "--n", "3", "--lambda", "1,2"]).status.code(), Some(2));
}

#[test]
fn tau_suite_passes() {
    let out = run(&["verify", "tau"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    for check in report["checks"].as_array().unwrap() {
        assert!(check["max_residual"].as_f64().unwrap() < 1e-8, "{check}");
    }
}

#[test]
fn zero_start_gives_log_one_plus_t() {
    let out = run(&["flow", "--n", "2", "--t-end", "2", "--dt", "0.25"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["t", "x_1", "x_2"]);
    assert_eq!(rows.len(), 9);
    for r in rows {
        assert!((r[1] - (1.0 + r[0]).ln()).abs() < 1e-12);
        assert!((r[2] + (1.0 + r[0]).ln()).abs() < 1e-12);
    }
    let rk = run(&["flow", "--n", "2", "--method", "rk4", "--dt", "0.001", "--t-end", "1", "--output", "triangle"]);
    let (header, rows) = csv_rows(&rk);
    assert_eq!(header, ["t", "x_1_1", "x_2_1", "x_2_2"]);
    let last = rows.last().unwrap();
    assert!((last[2] - 2f64.ln()).abs() < 1e-9);
}

#[test]
fn identity_start_gives_log_sinh() {
    let out = run(&["flow", "--lambda=1,-1", "--start", "identity", "--t-end", "2", "--dt", "0.1"]);
    assert!(out.status.success());
    for r in csv_rows(&out).1 {
        assert!((r[1] - r[0].sinh().ln()).abs() < 1e-10, "{r:?}");
    }
}

#[test]
fn zero_spectrum_bottom_row_from_tau_partial_sums() {
    let flow = csv_rows(&run(&["flow", "--n", "3", "--start", "identity", "--t-end", "2", "--dt", "0.5"])).1;
    let tau = csv_rows(&run(&["tau", "--n", "3", "--t-end", "2", "--dt", "0.5"])).1;
    for (f, t) in flow.iter().zip(&tau) {
        assert_eq!(f[0], t[0]);
        let time = t[0];
        // τ₁ = t²/2, τ₂ = t²/2, τ₃ = 1 at λ = 0.
        assert!((t[1] - time * time / 2.0).abs() < 1e-12);
        assert!((t[2] - time * time / 2.0).abs() < 1e-12);
        assert!((t[3] - 1.0).abs() < 1e-12);
        let logs = [0.0, t[1].ln(), t[2].ln(), t[3].ln()];
        for k in 1..=3 {
            assert!((f[k] - (logs[k] - logs[k - 1])).abs() < 1e-12);
        }
    }
}

#[test]
fn toda_blow_up_exits_with_failure() {
    let out = run(&["flow", "--start", "lax", "--p=-1,1", "--q", "0.75", "--output", "lax", "--dt", "0.001"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.099"));
}

#[test]
fn too_few_replicas_emit_samples_only() {
    let out = run(&["simulate", "--test", "pi-sde", "--replicas", "10", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["set", "replica", "x_1", "x_2"]);
    assert_eq!(rows.len(), 20);
}

#[test]
fn simulation_reports_are_reproducible() {
    let args = ["simulate", "--test", "marginals", "--replicas", "1000", "--seed", "5", "--lambda=0.3,-0.3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["replicas"], 1000);
    assert_eq!(report["p_value"].as_array().unwrap().len(), 2);
    let seq = run(&[&args[..], &["--sequential"]].concat());
    assert_eq!(a.stdout, seq.stdout);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = env!("CARGO_TARGET_TMPDIR");
    let path = format!("{dir}/flow.cfg");
    std::fs::write(&path, "# two rows\nlambda = 1,-1\nt_end = 1\ndt = 0.5\n").unwrap();
    let out = run(&["flow", "--start", "identity", "--config", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out).1;
    assert_eq!(rows.len(), 2);
    assert!((rows[1][1] - 1f64.sinh().ln()).abs() < 1e-12);
    // Command-line flags win over the file.
    let rows = csv_rows(&run(&["flow", "--start", "identity", "--config", &path, "--dt", "0.25"])).1;
    assert_eq!(rows.len(), 4);
    std::fs::write(&path, "colour = blue\n").unwrap();
    assert_eq!(run(&["flow", "--config", &path]).status.code(), Some(2));
}

#[test]
fn critical_point_report() {
    let out = run(&["critical", "--x", "0,0", "--lambda=1,-1"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["residual"].as_f64().unwrap() < 1e-12);
    let g = report["grad_u"].as_array().unwrap();
    assert!((g[0].as_f64().unwrap() + 2f64.sqrt()).abs() < 1e-10);
}

#[test]
fn quick_full_verification_passes() {
    let out = run(&["verify", "all", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["suite"], "all");
    assert!(report["checks"].as_array().unwrap().len() > 25);
}
