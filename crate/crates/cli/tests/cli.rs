use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cknwfd")).args(args).output().expect("spawn cknwfd")
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cknwfd"))
        .args(args)
        .env(key, val)
        .output()
        .expect("spawn cknwfd")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn point(d: &str, beta: &str, gamma: &str, p: &str) -> Vec<String> {
    ["--d", d, "--beta", beta, "--gamma", gamma, "--p", p].iter().map(|s| s.to_string()).collect()
}

fn with<'a>(cmd: &'a str, pt: &'a [String], extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(pt.iter().map(String::as_str));
    v.extend_from_slice(extra);
    v
}

#[test]
fn classify_region_one_breaks_symmetry() {
    let pt = point("5", "-2", "-2", "1.2");
    let out = run(&with("classify", &pt, &[]));
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["region"], "1");
    assert_eq!(v["breaking"], true);
    assert_eq!(v["spectral"]["branch"], "nonradial");
    assert!((v["derived"]["n"].as_f64().unwrap() - 7.0).abs() < 1e-12);
}

#[test]
fn classify_region_three_is_radial() {
    let pt = point("5", "-0.5", "1", "1.1");
    let v = json(&run(&with("classify", &pt, &[])));
    assert_eq!(v["region"], "3");
    assert_eq!(v["breaking"], false);
    assert_eq!(v["spectral"]["branch"], "radial");
}

#[test]
fn classify_csv_matches_map_columns() {
    let pt = point("5", "-2", "-2", "1.2");
    let out = run(&with("classify", &pt, &["--format", "csv"]));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("-2.0,-2.0,true,1,"));
}

#[test]
fn inadmissible_exits_two_and_names_constraint() {
    let pt = point("5", "3", "0", "1.2");
    let out = run(&with("classify", &pt, &[]));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("beta <= ((d-2)/d) gamma"), "{err}");
    // p above p_star
    let pt = point("5", "0", "0", "2");
    assert_eq!(run(&with("simulate", &pt, &[])).status.code(), Some(2));
}

#[test]
fn map_header_is_fixed() {
    let out = run(&["map", "--d", "5", "--grid-n", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "beta,gamma,admissible,region,h_fs,lambda10,lambda01,lambda_ess,lambda_star,gap,rate,branch"
    );
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn map_output_does_not_depend_on_thread_count() {
    let args = ["map", "--d", "4", "--grid-n", "40"];
    let one = run_env(&args, "CKNWFD_THREADS", "1");
    let four = run_env(&args, "CKNWFD_THREADS", "4");
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn map_admissible_set_for_d3_p2() {
    // d = 3, p = 2: p < p_star means beta > (gamma - 1)/2, plus the cone.
    let out = run(&["map", "--d", "3", "--p", "2", "--grid-n", "30"]);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let mut seen = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let beta: f64 = rec[0].parse().unwrap();
        let gamma: f64 = rec[1].parse().unwrap();
        let admissible: bool = rec[2].parse().unwrap();
        let margin = [(gamma - 2.0, beta), (beta, gamma / 3.0), ((gamma - 1.0) / 2.0, beta), (gamma, 3.0)]
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min);
        if margin.abs() > 1e-9 {
            assert_eq!(admissible, margin > 0.0, "beta {beta} gamma {gamma}");
        }
        seen += admissible as usize;
    }
    assert!(seen > 0);
}

#[test]
fn map_writes_svg() {
    let path = std::env::temp_dir().join(format!("cknwfd-map-{}.svg", std::process::id()));
    let out = run(&["map", "--d", "5", "--p", "1.2", "--grid-n", "10", "--svg-out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(svg.starts_with("<svg") && svg.contains(r#"id="felli-schneider""#));
}

#[test]
fn map_empty_range_warns() {
    let out = run(&["map", "--d", "5", "--grid-n", "3", "--beta-min", "10", "--beta-max", "11"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("no admissible"));
}

#[test]
fn verify_boundary_point_passes() {
    let pt = point("5", "0", "0", "1.25");
    let out = run(&with("verify", &pt, &[]));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["certificate"]["breaking"], false);
}

#[test]
fn verify_region_one_certifies_breaking() {
    let pt = point("5", "-2", "-2", "1.2");
    let v = json(&run(&with("verify", &pt, &["--seed", "7"])));
    assert_eq!(v["passed"], true);
    assert_eq!(v["certificate"]["breaking"], true);
    assert_eq!(v["identity"]["agree"], true);
    assert_eq!(v["seed"], 7);
}

#[test]
fn verify_failure_exits_three() {
    let pt = point("5", "-2", "-2", "1.2");
    let out = run(&with("verify", &pt, &["--tolerance", "-1"]));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn simulate_barenblatt_datum_is_stationary() {
    let pt = point("5", "0", "0", "1.25");
    let out = run(&with("simulate", &pt, &["--c1", "1", "--c2", "1", "--grid-n", "200", "--t-final", "0.05"]));
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["stationary"], true);
    assert!(v["fitted_rate"].is_null());
}

#[test]
fn simulate_short_run_fits_rate() {
    let pt = point("5", "0", "0", "1.25");
    let path = std::env::temp_dir().join(format!("cknwfd-trace-{}.csv", std::process::id()));
    let out = run(&with(
        "simulate",
        &pt,
        &["--grid-n", "400", "--t-final", "3", "--trace-out", path.to_str().unwrap()],
    ));
    assert!(out.status.success());
    let v = json(&out);
    let fitted = v["fitted_rate"].as_f64().unwrap();
    assert!((fitted - 6.0).abs() / 6.0 < 0.05, "{fitted}");
    assert_eq!(v["bound_ok"], true);
    let trace = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(trace.lines().next().unwrap(), "t,mass,free_energy,fisher");
}
