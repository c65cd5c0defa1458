use std::path::PathBuf;
use std::process::{Command, Output};

fn bayescreen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayescreen"))
        .args(args)
        .env_remove("BAYESCREEN_PRECISION")
        .output()
        .expect("spawn bayescreen")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn line_value(text: &str, key: &str) -> f64 {
    let prefix = format!("{key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .parse()
        .unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut all = args.to_vec();
    all.push("--json");
    let out = bayescreen(&all);
    assert!(out.status.success(), "{}", stderr(&out));
    serde_json::from_str(&stdout(&out)).unwrap()
}

fn golden(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "golden", name].iter().collect();
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn threshold_prints_four_decimals() {
    let out = bayescreen(&["threshold", "--sens", "0.6", "--spec", "0.95"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("prevalence_threshold: 0.2240"), "{text}");
    assert!((line_value(&text, "prevalence_threshold") - 0.2240).abs() <= 5e-4);
}

#[test]
fn precision_flag_and_env() {
    let out = bayescreen(&["threshold", "--sens", "0.6", "--spec", "0.95", "--precision", "2"]);
    assert!(stdout(&out).contains("prevalence_threshold: 0.22\n"));
    let out = Command::new(env!("CARGO_BIN_EXE_bayescreen"))
        .args(["threshold", "--sens", "0.6", "--spec", "0.95"])
        .env("BAYESCREEN_PRECISION", "6")
        .output()
        .unwrap();
    assert!(stdout(&out).contains("prevalence_threshold: 0.224009\n"), "{}", stdout(&out));
}

#[test]
fn pretest_single_finding_matches_table_row() {
    let out = bayescreen(&["pretest", "--lr", "10"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!((line_value(&text, "min_bound") - 0.46).abs() <= 5e-3);
    assert!((line_value(&text, "mean") - 0.73).abs() <= 5e-3);
    assert_eq!(line_value(&text, "max_bound"), 1.0);
}

#[test]
fn pretest_labelled_findings_combine() {
    let v = json(&["pretest", "--finding", "fever=2", "--finding", "rash=5"]);
    let min = v["result"]["min_bound"].as_f64().unwrap();
    assert!((min - 10f64.ln() / 5.0).abs() < 1e-12);
}

#[test]
fn rogan_gladen_clamps_with_warning() {
    let out = bayescreen(&["estimate", "rogan-gladen", "--t", "5", "--n", "100", "--sens", "0.9", "--spec", "0.9"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(line_value(&text, "point"), 0.0);
    assert!(text.contains("clamped: true"));
    assert!(text.contains("warning: clamped"));
}

#[test]
fn tables_match_golden_files() {
    let out = bayescreen(&["tables"]);
    assert!(out.status.success());
    let expected = format!("{}\n{}", golden("table3.csv"), golden("table4.csv"));
    assert_eq!(stdout(&out), expected);
}

#[test]
fn json_round_trips_canonically() {
    for args in [
        vec!["ppv", "--sens", "0.9", "--spec", "0.8", "--pretest", "0.3"],
        vec!["posttest", "--pretest", "0.2", "--lr", "3", "--lr", "infinite"],
        vec!["nomogram", "--pretest", "0.25", "--lr", "4"],
        vec!["estimate", "beta", "--t", "7", "--n", "40"],
        vec!["simulate", "--n", "200", "--prevalence", "0.1", "--sens", "0.9", "--spec", "0.95", "--replicates", "3"],
    ] {
        let mut all = args.clone();
        all.push("--json");
        let raw = stdout(&bayescreen(&all));
        let v: serde_json::Value = serde_json::from_str(&raw).unwrap();
        assert_eq!(v["schema_version"], "1.0");
        let again = serde_json::to_string_pretty(&v).unwrap();
        assert_eq!(raw.trim_end(), again, "{args:?}");
    }
}

#[test]
fn posttest_uninformative_lr_is_identity() {
    let v = json(&["posttest", "--pretest", "0.5", "--lr", "1"]);
    assert_eq!(v["result"]["posttest"].as_f64().unwrap(), 0.5);
}

#[test]
fn simulate_is_reproducible_for_a_seed() {
    let args = [
        "simulate", "--n", "500", "--prevalence", "0.2", "--sens", "0.85", "--spec", "0.9", "--seed", "42",
        "--replicates", "8", "--json",
    ];
    let a = bayescreen(&args);
    let b = bayescreen(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut other = args;
    other[10] = "43";
    assert_ne!(bayescreen(&other).stdout, a.stdout);
}

#[test]
fn out_of_range_flag_is_usage_error() {
    let out = bayescreen(&["threshold", "--sens", "1.5", "--spec", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("OutOfRange") && err.contains("--sens"), "{err}");
}

#[test]
fn missing_flag_is_usage_error() {
    let out = bayescreen(&["threshold", "--sens", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_error_exits_one_with_name() {
    let out = bayescreen(&["estimate", "baxter", "--t", "5", "--n", "100", "--sens", "0.4", "--spec", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("UninformativeTest"));

    let out = bayescreen(&["mcgee", "--pretest", "0.6", "--target", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("InvalidTarget"));
}

#[test]
fn csv_export_of_curve_and_density() {
    let dir = std::env::temp_dir().join(format!("bayescreen-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let curve = dir.join("curve.csv");
    let out = bayescreen(&["curve", "--sens", "0.9", "--spec", "0.9", "--grid", "11", "--csv", curve.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let body = std::fs::read_to_string(&curve).unwrap();
    assert!(!body.contains('\r'));
    let lines: Vec<_> = body.lines().collect();
    assert_eq!(lines[0], "pretest_probability,ppv");
    assert_eq!(lines.len(), 12);

    let dens = dir.join("density.csv");
    let out = bayescreen(&["estimate", "beta", "--t", "3", "--n", "20", "--csv", dens.to_str().unwrap()]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&dens).unwrap();
    assert!(body.starts_with("phi,density\n"));
    assert_eq!(body.lines().count(), 2049);

    let none = dir.join("none.csv");
    let out = bayescreen(&["threshold", "--sens", "0.6", "--spec", "0.95", "--csv", none.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!none.exists());
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn every_subcommand_runs() {
    let cases: &[&[&str]] = &[
        &["lr", "--sens", "0.9", "--spec", "0.8"],
        &["mcgee", "--pretest", "0.3", "--lr", "4"],
        &["mcgee", "--pretest", "0.3", "--target", "0.6", "--constant", "5"],
        &["category", "--probability", "0.5", "--positive"],
        &["power-class", "--lr", "12"],
        &["audit", "--step", "0.01"],
        &["estimate", "baxter", "--t", "30", "--n", "200", "--sens", "0.9", "--spec", "0.95", "--grid", "512"],
        &[
            "estimate", "baxter-unknown", "--t", "30", "--n", "200", "--ta", "45", "--na", "50", "--tb", "3", "--nb", "60",
            "--grid-phi", "256", "--grid-a", "32", "--grid-b", "32",
        ],
    ];
    for args in cases {
        let out = bayescreen(args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        assert!(!stdout(&out).is_empty());
    }
}
