use std::process::{Command, Output};

fn rfcw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfcw"))
        .args(args)
        .env("RFCW_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn phase_diagram_csv_to_file() {
    let dir = std::env::temp_dir().join(format!("rfcw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("line.csv");
    let o = rfcw(&[
        "phase-diagram",
        "--h-max",
        "0.49",
        "--steps",
        "50",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# rfcw v"));
    assert_eq!(lines[1], "h,beta_crit,order");
    assert_eq!(lines.len(), 2 + 51);
    assert!(lines[2].starts_with("0,1,second"));
    assert!(lines.last().unwrap().ends_with(",first"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn single_spin_marginal_matches_closed_form() {
    let o = rfcw(&[
        "marginal",
        "--field",
        "dichotomous:0.25",
        "--beta",
        "0.8",
        "--n",
        "1",
        "--k",
        "1",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    let p_up: f64 = rows[0][1].parse().unwrap();
    let a = if (p_up - 0.5) > 0.0 { 0.25 } else { -0.25 };
    let expected = (0.8f64 * a).exp() / (2.0 * (0.8f64 * a).cosh());
    assert!((p_up - expected).abs() <= 1e-12, "{p_up} vs {expected}");
}

#[test]
fn chaos_scan_single_row_and_reruns_are_identical() {
    let args = [
        "chaos-scan",
        "--beta",
        "0.8",
        "--n-grid",
        "300",
        "--replicas",
        "1",
        "--k",
        "3",
        "--seed",
        "5",
    ];
    let a = rfcw(&args);
    let b = rfcw(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "n,k,seed,j_index,kl,tv");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("300,3,"));
}

#[test]
fn json_carries_version_and_config() {
    let o = rfcw(&[
        "landscape",
        "--beta",
        "2.5",
        "--field",
        "discrete:-0.25:0.5,0.25:0.5",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["version"].as_str().unwrap().starts_with('v'));
    assert_eq!(v["config"]["common"]["beta"], 2.5);
    assert_eq!(v["records"]["maxima"].as_array().unwrap().len(), 2);
}

#[test]
fn jindex_stats_summary() {
    let o = rfcw(&[
        "jindex-stats",
        "--beta",
        "2.5",
        "--n-grid",
        "1000",
        "--replicas",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("frequencies="));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn sample_and_clt_run() {
    let o = rfcw(&["sample", "--n", "6", "--samples", "4", "--beta", "1.3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1), Some("s1,s2,s3,s4,s5,s6"));
    assert_eq!(text.lines().count(), 6);
    let o = rfcw(&["clt", "--beta", "2.5", "--n", "200", "--replicas", "100"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o).lines().nth(1),
        Some("n,replicas,y0,mean,variance,target_variance")
    );
}

#[test]
fn usage_errors_exit_two() {
    let o = rfcw(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    for args in [
        &["landscape", "--field", "uniform:3"][..],
        &["marginal", "--n", "0"],
        &["phase-diagram", "--h-max", "0.7"],
        &["chaos-scan", "--beta", "2.5"],
        &["landscape", "--format", "xml"],
        &["clt", "--replicas", "10"],
        &["marginal", "--rel-tol", "0.1"],
    ] {
        assert_eq!(rfcw(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn numerical_failures_exit_three() {
    // no refinement passes allowed: the requested accuracy is unreachable
    let o = rfcw(&[
        "marginal",
        "--n",
        "100000",
        "--rel-tol",
        "1e-16",
        "--max-refinements",
        "0",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
