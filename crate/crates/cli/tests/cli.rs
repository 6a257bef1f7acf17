use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn tdual(args: &[&str]) -> Output {
    tdual_env(args, None)
}

fn tdual_env(args: &[&str], max_dim: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tdual"));
    c.args(args).env_remove("TDUAL_MAX_DIM");
    if let Some(v) = max_dim {
        c.env("TDUAL_MAX_DIM", v);
    }
    c.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

const CIRCLE: &str = r#"{"groups":{"factors":[6],"N":[[3]]},"nerve":{"vertices":3,"simplices":[[0,1],[0,2],[1,2]]},"fiber_dim":2,"seed":3,"twist":"random","command":"COMMAND"}"#;

#[test]
fn z6_fixture_passes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let start = Instant::now();
    let o = tdual(&["run", fixture("z6_circle.json").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(start.elapsed() < Duration::from_secs(60));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut unique = names.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), names.len(), "check names repeat");
    assert!(names.contains(&"crossed-glue/crossed_gluing"));
    assert!(report["certificates"]["involution"].is_array());
    // no temporary files left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn trivial_triple_has_zero_residuals() {
    let o = tdual(&["run", fixture("trivial_point.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    for c in report["checks"].as_array().unwrap() {
        let name = c["name"].as_str().unwrap();
        let r = c["residual"].as_f64().unwrap();
        // the crossed product and the Poincaré word multiply random or DFT matrices
        if name.starts_with("crossed-point/") || name.starts_with("poincare/") {
            assert!(r < 1e-12, "{name}: {r}");
        } else {
            assert_eq!(r, 0.0, "{name}");
        }
    }
}

#[test]
fn missing_edge_is_malformed_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", &CIRCLE.replace("COMMAND", "dualize").replace("\"random\"", r#"{"0,5":[1]}"#));
    let o = tdual(&["run", &s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(r#"twist."0,5""#), "{}", stderr(&o));
}

#[test]
fn type_errors_report_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = "{\n  \"groups\": {\"factors\": [6]},\n  \"nerve\": {\"vertices\": \"three\"},\n  \"command\": \"all\"\n}";
    let s = write(dir.path(), "s.json", text);
    let o = tdual(&["run", &s]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("nerve.vertices") && e.contains("line 3"), "{e}");
    let s = write(dir.path(), "t.json", "{ not json");
    assert_eq!(tdual(&["run", &s]).status.code(), Some(2));
    assert_eq!(tdual(&["run", "/nonexistent/scenario.json"]).status.code(), Some(2));
}

#[test]
fn resource_cap_exits_3() {
    let o = tdual_env(&["run", fixture("z6_circle.json").to_str().unwrap()], Some("8"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("resource cap"));
}

#[test]
fn failing_check_exits_1() {
    let o = tdual(&["run", fixture("z6_circle.json").to_str().unwrap(), "--tolerance-scale", "1e-20"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn reports_are_deterministic_across_jobs() {
    let f = fixture("z6_circle.json");
    let a = tdual(&["run", f.to_str().unwrap(), "--jobs", "1"]);
    let b = tdual(&["run", f.to_str().unwrap(), "--jobs", "4"]);
    let c = tdual(&["run", f.to_str().unwrap(), "--jobs", "4", "--seed", "8"]);
    let parse = |o: &Output| without_timings(serde_json::from_slice(&o.stdout).unwrap());
    let (a, b, c) = (parse(&a), parse(&b), parse(&c));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(c["scenario"]["seed"], 8);
    assert_ne!(a["checks"], c["checks"]);
}

#[test]
fn single_check_selection() {
    let f = fixture("z6_circle.json");
    let o = tdual(&["run", f.to_str().unwrap(), "--check", "crossed_gluing"]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["name"], "crossed-glue/crossed_gluing");
    assert_eq!(tdual(&["run", f.to_str().unwrap(), "--check", "no_such_check"]).status.code(), Some(2));
}

#[test]
fn text_format() {
    let o = tdual(&["run", fixture("z6_circle.json").to_str().unwrap(), "--format", "text"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("PASS crossed-glue/crossed_gluing"));
    assert!(text.contains("0 failed: PASS"));
}

#[test]
fn explain_lists_dual_groups_and_agrees_with_run() {
    let f = fixture("z6_circle.json");
    let o = tdual(&["explain", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("N⊥ = ⟨2⟩ (order 3)"), "{text}");
    assert!(text.contains("Ĝ/N⊥ order 2"));
    assert!(text.contains("|G/N| = 3"));
    let report: Value = serde_json::from_slice(&tdual(&["run", f.to_str().unwrap()]).stdout).unwrap();
    let dims = &report["dimensions"];
    assert!(text.contains(&format!("crossed product representation: {}", dims["crossed_representation"])));
    let lengths = dims["total_cochains"].to_string().replace(',', ", ");
    assert!(text.contains(&format!("total cochain lengths (p = 0, 1, 2): {lengths}")));
}

#[test]
fn empty_nerve_warns_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"groups":{"factors":[2]},"nerve":{"vertices":0},"command":"cohomology"}"#,
    );
    let o = tdual(&["explain", &s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("all Čech groups are zero"));
    let o = tdual(&["run", &s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn every_command_runs_on_the_circle() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["cohomology", "total-cohomology", "dualize", "involution", "poincare", "crossed-point", "crossed-glue"] {
        let s = write(dir.path(), &format!("{cmd}.json"), &CIRCLE.replace("COMMAND", cmd));
        let o = tdual(&["run", &s]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        let report: Value = serde_json::from_slice(&o.stdout).unwrap();
        let checks = report["checks"].as_array().unwrap();
        assert!(!checks.is_empty());
        assert!(checks.iter().all(|c| c["name"].as_str().unwrap().starts_with(cmd)));
    }
}

#[test]
fn schema_matches_scenario_type() {
    let schema: Value = serde_json::from_str(include_str!("../schema/scenario.schema.json")).unwrap();
    let full = r#"{"groups":{"factors":[4],"N":[[2]]},"nerve":{"vertices":1,"simplices":[]},"twist":"trivial",
        "fiber_dim":1,"seed":0,"modulus":4,"command":"all","triple":"generic",
        "tolerances":{"unitary":1e-9,"snap":1e-6,"pipeline":1e-8,"round_trip":1e-12}}"#;
    let s = tdual_cli::parse(full).unwrap();
    let echoed = serde_json::to_value(&s).unwrap();
    let keys = |v: &Value| {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(keys(&echoed), keys(&schema["properties"]));
    assert_eq!(keys(&echoed["groups"]), keys(&schema["properties"]["groups"]["properties"]));
    assert_eq!(keys(&echoed["tolerances"]), keys(&schema["properties"]["tolerances"]["properties"]));
    let commands: Vec<&str> = schema["properties"]["command"]["enum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let mut ours: Vec<&str> = tdual_cli::Command::SECTIONS.iter().map(|c| c.name()).collect();
    ours.push("all");
    assert_eq!(commands, ours);
    for c in &commands {
        let text = full.replace("\"all\"", &format!("\"{c}\""));
        assert!(tdual_cli::parse(&text).is_ok());
    }
    for required in schema["required"].as_array().unwrap() {
        let mut v: Value = serde_json::from_str(full).unwrap();
        v.as_object_mut().unwrap().remove(required.as_str().unwrap());
        assert!(tdual_cli::parse(&v.to_string()).is_err(), "{required} should be required");
    }
}
