use std::fs;
use std::process::{Command, Output};

use serde_json::Value;
use threshdist::finite_dist::as_mixture;
use threshdist::mc_harness::EtaRule;
use threshdist::{ComponentSpec, EstimatorKind, Scaling, VarianceMode};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_threshdist")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_record(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(err.trim()).unwrap_or_else(|_| panic!("stderr is not one JSON record: {err}"))
}

fn scalar(o: &Output, name: &str) -> f64 {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(name));
    lines.next().unwrap().parse().unwrap()
}

#[test]
fn selprob_at_tuning_rule() {
    let o = run(&["selprob", "--theta", "0", "--n", "8", "--xi", "1", "--sigma", "1", "--eta-rule", "default", "--mode", "known"]);
    assert!((scalar(&o, "deletion_probability") - 0.95).abs() < 1e-12);
}

#[test]
fn selprob_limit_uses_regime_constants() {
    // Conservative, nu = 0: 2 Phi(e) - 1.
    let o = run(&["selprob", "--limit", "--e", "1.959963984540054", "--nu", "0"]);
    assert!((scalar(&o, "deletion_probability") - 0.95).abs() < 1e-12);
    let o = run(&["selprob", "--limit", "--e", "inf", "--zeta", "0.5", "--mode", "unknown"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"], "missing_parameter");
}

#[test]
fn rate_example() {
    assert_eq!(scalar(&run(&["rate", "--n", "100", "--xi", "1", "--eta", "0.5"]), "uniform_rate"), 2.0);
}

#[test]
fn design_reports_condition_number() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = run(&["design", "--variant", "II", "--c", "2", "--n", "8", "--k", "4", "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["condition_number"].as_f64().unwrap() - 81.0).abs() < 1e-9);
    let meta: Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["condition_number"], v["condition_number"]);
    assert_eq!(v["matrix"].as_array().unwrap().len(), 8);

    // The written matrix reads back to the same design.
    let again = run(&["design", "--input", out.join("design.txt").to_str().unwrap(), "--format", "json"]);
    let w: Value = serde_json::from_str(&stdout(&again)).unwrap();
    assert_eq!(w["matrix"], v["matrix"]);
    assert_eq!(w["xi"], v["xi"]);

    let csv = stdout(&run(&["design", "--variant", "I", "--rho", "0.5", "--n", "8", "--k", "4"]));
    assert!(csv.starts_with("quantity,row,col,value\ncondition_number,,,"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("x,")).count(), 32);
}

#[test]
fn singular_design_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.txt");
    fs::write(&p, "1 2\n2 4\n3 6\n").unwrap();
    let o = run(&["design", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_record(&o)["error"], "singular_design");
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn dist_grid_round_trips_exactly() {
    let o = run(&["dist", "--kind", "adaptive", "--n", "8", "--theta", "1.5", "--eta-rule", "default", "--mode", "unknown", "--k", "4"]);
    assert!(o.status.success());
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["x", "cdf", "ac_density", "atom_location", "atom_weight"]);
    // 601 grid points plus both one-sided limits at the atom.
    assert_eq!(rows.len(), 603);

    let eta = EtaRule::Default.eta(8).unwrap();
    let spec = ComponentSpec::new(8, 1.0, 1.5, 1.0, eta, Scaling::RootNOverXi).unwrap();
    let law = as_mixture(EstimatorKind::AdaptiveSoft, VarianceMode::Unknown(4), &spec).unwrap();
    let a = law.atom_location();
    let at_atom: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == a).collect();
    assert_eq!(at_atom.len(), 2);
    assert_eq!(at_atom[0][1], law.cdf_left(a).unwrap());
    assert_eq!(at_atom[1][1], law.cdf(a).unwrap());
    for r in rows.iter().step_by(37) {
        if r[0] != a {
            assert_eq!(r[1].to_bits(), law.cdf(r[0]).unwrap().to_bits());
            assert_eq!(r[2].to_bits(), law.ac_density(r[0]).unwrap().to_bits());
        }
        assert_eq!(r[3], a);
        assert_eq!(r[4], law.atom_weight());
    }
    assert!(rows.windows(2).all(|w| w[0][0] <= w[1][0] && w[0][1] <= w[1][1] + 1e-12));
}

#[test]
fn dist_json_mirrors_csv() {
    let args = ["dist", "--kind", "hard", "--n", "10", "--theta", "0.3", "--eta", "0.4", "--points", "11"];
    let (_, rows) = parse_csv(&stdout(&run(&args)));
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&run(&json_args))).unwrap();
    let recs = v.as_array().unwrap();
    assert_eq!(recs.len(), rows.len());
    for (rec, row) in recs.iter().zip(&rows) {
        for (i, key) in ["x", "cdf", "ac_density", "atom_location", "atom_weight"].iter().enumerate() {
            assert_eq!(rec[key].as_f64().unwrap(), row[i], "{key}");
        }
    }
}

#[test]
fn limit_grid_and_coverage() {
    let o = run(&["limit", "--kind", "hard", "--e", "1", "--nu", "0.5"]);
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["x", "cdf"]);
    // The atom at -0.5 is a grid point, so only its left limit is added.
    assert_eq!(rows.len(), 602);
    let at: Vec<_> = rows.iter().filter(|r| r[0] == -0.5).collect();
    assert_eq!(at.len(), 2);
    assert!(at[1][1] - at[0][1] > 0.5);

    let o = run(&["limit", "--kind", "adaptive", "--oracle", "--zeta", "inf", "--w=-inf"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_record(&o)["error"], "not_covered");
}

#[test]
fn usage_errors_exit_2_with_a_record() {
    for args in [
        vec!["dist", "--kind", "hard", "--bogus", "1"],
        vec!["frobnicate"],
        vec!["dist", "--kind", "hard", "--n", "8", "--theta", "0", "--eta", "0.3", "--eta-rule", "default"],
        vec!["dist", "--kind", "hard", "--n", "8", "--theta", "0", "--eta", "0.3", "--mode", "unknown"],
        vec!["simulate", "--variant", "I", "--rho", "0.3", "--theta", "3,1.5,0,0", "--estimator", "lasso"],
        vec!["reproduce", "--out", "/tmp/never"],
        vec!["selfcheck"],
        vec!["rate", "--n", "100", "--eta", "-1"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let rec = error_record(&o);
        assert_eq!(rec["exit_code"], 2);
        assert!(rec["message"].as_str().is_some());
    }
}

#[test]
fn simulate_is_seeded() {
    let args = [
        "simulate", "--variant", "II", "--c", "2", "--theta", "3,1.5,0,0", "--estimator", "adaptive-lasso", "--reps", "500",
        "--seed", "4",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (header, rows) = parse_csv(&stdout(&a));
    assert_eq!(header[0], "component");
    assert_eq!(rows.len(), 4);
    assert!((rows[2][5] - 0.95).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let mut with_out = args.to_vec();
    with_out.extend(["--out", dir.path().to_str().unwrap(), "--format", "json"]);
    let o = run(&with_out);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["condition_number"].as_f64().unwrap() - 81.0).abs() < 1e-9);
    let samples = fs::read_to_string(dir.path().join("scaled_samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 501);
}

#[test]
fn reproduce_selected_panels() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "--out", dir.path().to_str().unwrap(), "--reps", "200", "--seed", "9", "--panels", "5,11"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 1 + 1 + 2 * 9);
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("panel11_lasso_design2_c2/metadata.json")).unwrap()).unwrap();
    assert!((meta["condition_number"].as_f64().unwrap() - 81.0).abs() < 1e-9);
    let o = run(&["reproduce", "--out", dir.path().to_str().unwrap(), "--seed", "9", "--panels", "13"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selfcheck_passes() {
    let o = run(&["selfcheck", "--seed", "20240601"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().count() >= 20);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
