use std::fs;
use std::process::{Command, Output};

fn spinchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinchain"))
        .args(args)
        .env_remove("SPINCHAIN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn comment(text: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}

#[test]
fn empty_boundary_matches_gibbs() {
    let out = spinchain(&[
        "stationary", "--L", "6", "--J", "1", "--bc", "empty", "--kind", "irreversible", "--compare", "gibbs",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let tv: f64 = comment(&text, "tv").unwrap().parse().unwrap();
    assert!(tv < 1e-10, "tv = {tv}");
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 64);
}

#[test]
fn plus_boundary_differs_from_gibbs() {
    let out = spinchain(&["stationary", "--L", "6", "--J", "1", "--bc", "plus", "--compare", "gibbs"]);
    assert!(out.status.success());
    let tv: f64 = comment(&stdout(&out), "tv").unwrap().parse().unwrap();
    assert!(tv > 1e-3, "tv = {tv}");
}

#[test]
fn echo_header_lists_resolved_parameters() {
    let out = spinchain(&["stationary", "--L", "4", "--c", "0.5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(comment(&text, "command").as_deref(), Some("stationary"));
    assert_eq!(comment(&text, "L").as_deref(), Some("4"));
    assert_eq!(comment(&text, "bc").as_deref(), Some("plus"));
    assert_eq!(comment(&text, "kind").as_deref(), Some("irreversible"));
    let j: f64 = comment(&text, "J").unwrap().parse().unwrap();
    assert!((j - 0.5 * 4f64.ln()).abs() < 1e-12);
}

#[test]
fn missing_length_is_usage_error() {
    let out = spinchain(&["stationary", "--J", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_kind_is_usage_error() {
    let out = spinchain(&["stationary", "--L", "3", "--kind", "metropolis"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn irreversible_chain_has_kolmogorov_loop() {
    let out = spinchain(&["currents", "--L", "3", "--J", "1", "--bc", "plus", "--kind", "irreversible", "--kolmogorov", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let states = comment(&text, "kolmogorov_loop").expect("loop reported");
    assert_eq!(states.split(' ').count(), 5);
    let div: f64 = comment(&text, "max_divergence").unwrap().parse().unwrap();
    assert!(div < 1e-12);
}

#[test]
fn glauber_has_no_kolmogorov_loop() {
    let out = spinchain(&["currents", "--L", "3", "--J", "1", "--kind", "glauber", "--kolmogorov", "6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(comment(&text, "kolmogorov_loop").as_deref(), Some("none"));
    let max: f64 = comment(&text, "max_current").unwrap().parse().unwrap();
    assert!(max < 1e-14);
}

#[test]
fn catalan_triangle_diagonal() {
    let out = spinchain(&["catalan", "--triangle", "5"]);
    assert!(out.status.success());
    let diag: Vec<String> = stdout(&out)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('n'))
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0] == f[1]).then(|| f[2].to_string())
        })
        .collect();
    assert_eq!(diag, ["1", "1", "2", "5", "14", "42"]);
}

#[test]
fn catalan_needs_a_table() {
    assert_eq!(spinchain(&["catalan"]).status.code(), Some(2));
    assert_eq!(spinchain(&["catalan", "--triangle", "2", "--lemma", "1"]).status.code(), Some(2));
}

#[test]
fn tunnel_is_reproducible() {
    let args = ["tunnel", "--kind", "glauber", "--L", "8", "--J", "2", "--replicas", "50", "--seed", "7"];
    let a = spinchain(&args);
    let b = spinchain(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = spinchain(&["tunnel", "--kind", "glauber", "--L", "8", "--J", "2", "--replicas", "50", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn tunnel_samples_need_single_length() {
    let out = spinchain(&["tunnel", "--L", "4,8", "--J", "1", "--replicas", "30", "--samples"]);
    assert_eq!(out.status.code(), Some(2));
    let out = spinchain(&["tunnel", "--L", "4", "--J", "1", "--replicas", "30", "--samples"]);
    assert!(out.status.success());
    let rows = stdout(&out).lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 30);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "L=5\nJ=0.5\nbc=empty\n").unwrap();
    let out = spinchain(&["stationary", "--config", cfg.to_str().unwrap(), "--J", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(comment(&text, "L").as_deref(), Some("5"));
    assert_eq!(comment(&text, "J").as_deref(), Some("2"));
    assert_eq!(comment(&text, "bc").as_deref(), Some("empty"));
}

#[test]
fn config_file_unknown_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "L=5\ntemperature=3\n").unwrap();
    let out = spinchain(&["stationary", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_caps_exit_3() {
    assert_eq!(spinchain(&["stationary", "--L", "23", "--J", "1"]).status.code(), Some(3));
    assert_eq!(spinchain(&["theorem1", "--L", "15"]).status.code(), Some(3));
    assert_eq!(spinchain(&["currents", "--L", "17", "--kolmogorov", "4"]).status.code(), Some(3));
    assert_eq!(spinchain(&["expansion", "--L", "15", "--k", "2"]).status.code(), Some(3));
}

#[test]
fn out_file_receives_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t3.csv");
    let out = spinchain(&["theorem3", "--L", "50,100", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "L,J,pi_leq1_m,gibbs_m,ratio");
    assert_eq!(data.len(), 3);
}

#[test]
fn theorem1_j_list_converts_to_c() {
    let out = spinchain(&["theorem1", "--L", "6", "--J", "2,3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let slope: f64 = comment(&text, "slope_log_dtv_vs_J").unwrap().parse().unwrap();
    assert!((slope + 8.0).abs() < 0.5, "slope = {slope}");
}
