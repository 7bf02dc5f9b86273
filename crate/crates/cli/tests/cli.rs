use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_causal-kernels");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CHEAP_RULE: &str =
    r#"{ "rule": "relative", "outer_order": 3, "radial_order": 4, "radial_floor": 1e-8, "polar_order": 3, "polar_floor": 1e-7, "azimuth": 6 }"#;

fn chain_scenario(name: &str, chain: &str, expect: &str) -> String {
    format!(
        r#"{{ "name": "{name}", "chain": {chain},
             "xi1": {{ "centre": [0.0, 0.0, 0.6], "width": 0.4 }}, "xi2": {{ "centre": [0.2, 0.0, 0.4], "width": 0.4 }},
             "test_function": {{ "width": 2.0 }}, "quadrature": {CHEAP_RULE}, "expect": "{expect}" }}"#
    )
}

#[test]
fn natural_vacuum_polarization_vanishes_at_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("vacpol", &configs().join("vacpol.json"), tmp.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("natural.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "0,0,0"), "{csv}");
    let r = report(tmp.path());
    assert_eq!(r["command"], "vacpol");
    assert!((r["scenarios"][0]["c0"].as_f64().unwrap() - 1.0 / 15.0).abs() < 1e-12);
}

#[test]
fn empty_scenario_list_gives_an_empty_report() {
    for command in ["wick-check", "split", "vacpol", "adiabatic", "ir-probe", "gelfand-check", "decompose-1d"] {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = write_config(tmp.path(), r#"{ "scenarios": [] }"#);
        let out = tmp.path().join("out");
        let o = run(command, &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(0), "{command}: {}", stderr(&o));
        let r = report(&out);
        assert_eq!(r["scenarios"].as_array().unwrap().len(), 0, "{command}");
        assert_eq!(r["tables"].as_array().unwrap().len(), 0, "{command}");
    }
}

#[test]
fn reports_are_byte_identical_for_the_same_config_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let cfg = configs().join("decompose.json");
    for out in [&a, &b] {
        assert!(run("decompose-1d", &cfg, out, &["--seed", "7"]).status.success());
    }
    assert!(run("decompose-1d", &cfg, &c, &["--seed", "8"]).status.success());
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    for f in ["report.json", "decompose-1d.csv"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    assert_ne!(read(&a, "report.json"), read(&c, "report.json"));
    assert_eq!(report(&a)["seed"], 7);
}

#[test]
fn report_embeds_version_and_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let first = write_config(tmp.path(), r#"{ "scenarios": [] }"#);
    let o = run("split", &first, &tmp.path().join("one"), &[]);
    assert!(o.status.success());
    let second = tmp.path().join("other.json");
    std::fs::write(&second, r#"{ "seed": 3, "scenarios": [] }"#).unwrap();
    assert!(run("split", &second, &tmp.path().join("two"), &[]).status.success());
    let (one, two) = (report(&tmp.path().join("one")), report(&tmp.path().join("two")));
    assert_eq!(one["version"], env!("CARGO_PKG_VERSION"));
    let hash = one["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_ne!(one["config_sha256"], two["config_sha256"]);
    assert_eq!(two["seed"], 3);
}

#[test]
fn schema_violations_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    for (command, text) in [
        ("vacpol", r#"{ "scenarios": [{ "name": "x", "normalization": { "choice": "natural" } }] }"#),
        ("split", r#"{ "scenarios": [], "colour": "blue" }"#),
        ("gelfand-check", r#"{ "scenarios": [{ "check": "bogus", "name": "x" }] }"#),
        ("decompose-1d", "not json"),
    ] {
        let cfg = write_config(tmp.path(), text);
        let o = run(command, &cfg, &tmp.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(1), "{command}");
        assert!(stderr(&o).contains("schema"), "{command}: {}", stderr(&o));
    }
}

#[test]
fn input_errors_have_distinct_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let wick = r#"{ "grid_ref": "nowhere.json", "scenarios": [{ "name": "w", "left": ":phi:", "right": ":phi:",
                   "left_tests": [{ "width": 1.0 }], "right_tests": [{ "width": 1.0 }] }] }"#;
    let o = run("wick-check", &write_config(tmp.path(), wick), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid reference"), "{}", stderr(&o));

    let twins = r#"{ "scenarios": [{ "name": "a", "normalization": { "choice": "natural" }, "p_sq": [1.0] },
                                   { "name": "a", "normalization": { "choice": "natural" }, "p_sq": [2.0] }] }"#;
    let o = run("vacpol", &write_config(tmp.path(), twins), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("duplicate scenario name"), "{}", stderr(&o));

    // a single sample with p₁ = p₂ puts the denominator at q = 0
    let singular = r#"{ "scenarios": [{ "name": "s",
        "chain": { "k": 1, "mass": 1.0, "insertion": { "model": "massive", "normalization": { "choice": "natural" } } },
        "xi1": { "centre": [0.0, 0.0, 0.5], "width": 0.4 }, "xi2": { "centre": [0.0, 0.0, 0.5], "width": 0.4 },
        "test_function": { "width": 2.0 },
        "quadrature": { "rule": "product", "first": { "points": [[0.0, 0.0, 0.5]], "weights": [1.0] },
                        "second": { "points": [[0.0, 0.0, 0.5]], "weights": [1.0] } } }] }"#;
    let o = run("adiabatic", &write_config(tmp.path(), singular), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("singular configuration"), "{}", stderr(&o));

    let bad_grid = r#"{ "scenarios": [{ "name": "m",
        "chain": { "k": 1, "mass": 0.0, "insertion": { "model": "massive", "normalization": { "choice": "natural" } } },
        "xi1": { "centre": [0.0, 0.0, 0.5], "width": 0.4 }, "xi2": { "centre": [0.0, 0.0, 0.5], "width": 0.4 },
        "test_function": { "width": 2.0 } }] }"#;
    let o = run("adiabatic", &write_config(tmp.path(), bad_grid), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("m > 0"), "{}", stderr(&o));
}

#[test]
fn diverged_verdict_with_converged_expectation_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let jump = r#"{ "k": 1, "mass": 0.0, "insertion": { "model": "synthetic_jump" } }"#;
    let natural = r#"{ "k": 1, "mass": 1.0, "insertion": { "model": "massive", "normalization": { "choice": "natural" } } }"#;
    let text = format!(r#"{{ "scenarios": [{}] }}"#, chain_scenario("jump", jump, "converged"));
    let o = run("adiabatic", &write_config(tmp.path(), &text), &tmp.path().join("a"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = report(&tmp.path().join("a"));
    assert_eq!(r["scenarios"][0]["family"]["verdict"]["verdict"], "diverged");
    assert_eq!(r["scenarios"][0]["expectation_met"], false);

    let text = format!(
        r#"{{ "scenarios": [{}, {}] }}"#,
        chain_scenario("natural", natural, "converged"),
        chain_scenario("jump", jump, "diverged")
    );
    let o = run("adiabatic", &write_config(tmp.path(), &text), &tmp.path().join("b"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&tmp.path().join("b"));
    assert_eq!(r["scenarios"][0]["family"]["verdict"]["verdict"], "converged");
    assert!(r["scenarios"].as_array().unwrap().iter().all(|s| s["expectation_met"] == true));
    let csv = std::fs::read_to_string(tmp.path().join("b").join("natural.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("epsilon,re,im"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn refusals_are_reported_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("split", &configs().join("split.json"), &tmp.path().join("s"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&tmp.path().join("s"));
    let by_name = |n: &str| r["scenarios"].as_array().unwrap().iter().find(|s| s["name"] == n).unwrap().clone();
    assert_eq!(by_name("vacuum-polarization")["omega"], 2);
    assert!(by_name("vacuum-polarization")["max_jump_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(by_name("negative-degree")["omega"], -2);
    assert_eq!(by_name("negative-degree-with-constant")["outcome"], "refused");

    let o = run("decompose-1d", &configs().join("decompose.json"), &tmp.path().join("d"), &[]);
    assert!(o.status.success());
    let r = report(&tmp.path().join("d"));
    let scenarios = r["scenarios"].as_array().unwrap();
    assert_eq!(scenarios.len(), 8);
    assert_eq!(scenarios.iter().find(|s| s["name"] == "dipole").unwrap()["outcome"], "refused");
    for s in scenarios.iter().filter(|s| s["outcome"] == "ok") {
        assert!(s["decomposition"]["defect"].as_f64().unwrap() < 1e-10, "{s}");
    }
}

#[test]
fn shipped_wick_and_gelfand_configs_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("wick-check", &configs().join("wick.json"), &tmp.path().join("w"), &["--verbose"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("wick-check: phi-phi"));
    let r = report(&tmp.path().join("w"));
    assert!(r["scenarios"].as_array().unwrap().iter().all(|s| s["passed"] == true));

    let o = run("gelfand-check", &configs().join("gelfand.json"), &tmp.path().join("g"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&tmp.path().join("g"));
    let s = &r["scenarios"];
    assert!(s[0]["relative_error"].as_f64().unwrap() < 1e-8);
    let orders = |i: usize| s[i]["study"]["orders"].as_array().unwrap().iter().map(|o| o.as_f64().unwrap()).collect::<Vec<_>>();
    assert!(orders(1).iter().all(|o| o.abs() < 0.1));
    assert!(orders(2).iter().all(|o| (o - 2.0).abs() < 0.1));
    assert!(s[3]["max_error"].as_f64().unwrap() < 1e-3);
}

#[test]
fn shipped_ir_config_separates_the_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("ir-probe", &configs().join("ir.json"), tmp.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(tmp.path());
    assert_eq!(r["scenarios"][0]["class"], "A");
    assert_eq!(r["scenarios"][1]["class"], "B");
    assert!(r["scenarios"][0]["pairing"]["relative_changes"][0].as_f64().unwrap() < 1e-3);
}

#[test]
fn wick_grid_reference_resolves_against_the_config_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = r#"{ "species": [{ "name": "phi", "statistics": "bose", "mass": 1.0, "spins": ["0"],
                   "momentum_points": [[0.1, 0.0, 0.0], [0.0, 0.2, 0.0]], "weights": [0.6, 0.9] }] }"#;
    std::fs::write(tmp.path().join("grid.json"), grid).unwrap();
    let text = r#"{ "grid_ref": "grid.json", "scenarios": [{ "name": "w", "left": ":phi phi:", "right": ":phi phi:",
                   "left_tests": [{ "width": 1.0 }], "right_tests": [{ "width": 1.3 }], "n_max": [2] }] }"#;
    let o = run("wick-check", &write_config(tmp.path(), text), &tmp.path().join("out"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report(&tmp.path().join("out"))["scenarios"][0]["passed"], true);
}
