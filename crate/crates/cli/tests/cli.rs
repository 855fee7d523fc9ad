use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ale-glue")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn eguchi_hanson_mass_routes_vanish() {
    let v = report(&run(&["mass", "--model", "eh", "--a", "1", "--radii", "10,20,40,80"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["radii"], "10,20,40,80");
    let routes = &v["report"]["routes"];
    for key in ["boundary", "asymptotic", "topological"] {
        assert!(routes[key].as_f64().unwrap().abs() < 1e-10, "{key}: {}", routes[key]);
    }
    assert!(!v["report"]["caveats"].as_array().unwrap().is_empty());
}

#[test]
fn planner_example_reaches_zero() {
    let v = report(&run(&["plan", "--m", "2", "--base-mass", "-0.01", "--target", "0", "--eps0", "0.3", "--safety", "0.9"]));
    let r = &v["report"];
    assert_eq!(r["achieved_mass"].as_f64().unwrap(), 0.0);
    assert!(r["weights"].as_array().unwrap().iter().all(|w| w.as_f64().unwrap() <= 0.27));
}

#[test]
fn exact_planner_matches_rational_target() {
    let v = report(&run(&["plan", "--m", "3", "--base-mass", "-1/50", "--target", "1/100", "--exact", "true"]));
    assert_eq!(v["report"]["achieved_mass"], "1/100");
    assert_eq!(v["report"]["exact_match"], true);
}

#[test]
fn validate_without_arguments_succeeds() {
    let out = run(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["report"]["passed"], true);
}

#[test]
fn exit_codes_follow_error_classes() {
    let below = run(&["plan", "--base-mass", "0", "--target", "-1"]);
    assert_eq!(below.status.code(), Some(1));
    let bad_model = run(&["mass", "--model", "torus"]);
    assert_eq!(bad_model.status.code(), Some(1));
    // a hopelessly coarse tolerance budget is a numerical failure
    let numerical = run(&["solve", "--tol", "1e-30", "--nodes", "256"]);
    assert_eq!(numerical.status.code(), Some(2), "{}", String::from_utf8_lossy(&numerical.stderr));
}

#[test]
fn config_file_is_merged_and_unknown_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("run.cfg");
    std::fs::write(&good, "# bubble mass\nmodel = bs\nscale = 0.5\nradii = 20,40,80,160\n").unwrap();
    let v = report(&run(&["mass", "--config", good.to_str().unwrap(), "--scale", "0.25"]));
    assert_eq!(v["config"]["model"], "bs");
    assert_eq!(v["config"]["scale"], "0.25");
    let r = &v["report"];
    let rel = (r["routes"]["boundary"].as_f64().unwrap() / r["routes"]["topological"].as_f64().unwrap() - 1.0).abs();
    assert!(rel < 1e-6, "{rel}");

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "modle = eh\n").unwrap();
    let out = run(&["mass", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn reports_are_deterministic_apart_from_timestamp() {
    let args = ["solve", "--epsilon", "0.05", "--seed", "11"];
    let a = without_timestamp(report(&run(&args)));
    let b = without_timestamp(report(&run(&args)));
    assert_eq!(a, b);
    let r = &a["report"];
    assert!(r["rel_err"].as_f64().unwrap().abs() < 0.01);
    assert_eq!(r["diagnostics"]["certified"], true);
}

#[test]
fn sweep_writes_fixed_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let status = run(&["sweep", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["rows"].as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "epsilon,r_eps,S_norm,C_est,K_est,eps0,mass_increment,prop51_prediction,rel_err"
    );
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn two_point_sweep_reports_r_star_and_caveat() {
    let v = report(&run(&["sweep", "--kind", "two-point"]));
    let r = &v["report"];
    assert_eq!(r["sweep"]["r_star"].as_f64(), Some(10.0));
    assert!(r["caveats"][0].as_str().unwrap().contains("K_p"));
    assert!(r["csv"].as_str().unwrap().starts_with("r_q,"));
}

#[test]
fn glue_exports_a_profile_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("glued.json");
    let v = report(&run(&["glue", "--epsilon", "0.05", "--export", path.to_str().unwrap()]));
    assert!(v["report"]["scalar_curvature_norm"].as_f64().unwrap() > 0.0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["m"], 2);
    let back = report(&run(&["mass", "--model", "file", "--model-file", path.to_str().unwrap(), "--radii", "10,20,40"]));
    assert!(back["report"]["routes"]["boundary"].as_f64().unwrap().is_finite());
}

#[test]
fn constants_certify_threshold() {
    let v = report(&run(&["constants", "--certify", "true"]));
    let r = &v["report"];
    assert_eq!(r["threshold"]["consistent"], true);
    assert!(r["constants"]["epsilon0"].as_f64().unwrap() > 0.0);
}
