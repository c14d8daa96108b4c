use std::path::Path;
use std::process::{Command, Output};

fn pcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcn")).args(args).env_remove("PCN_CACHE").output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn check_pair_level_holds() {
    let out = pcn(&["check-pair", "--q", "9", "--n", "21", "--level", "exact_Wq"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["holds"], true);
}

#[test]
fn check_pair_failing_level_exits_one() {
    let out = pcn(&["check-pair", "--q", "5", "--n", "6", "--level", "exact_Wq", "--no-hypotheses"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["holds"], false);
}

#[test]
fn classification_without_level() {
    let out = pcn(&["check-pair", "--q", "8", "--n", "12"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["resolution"]["kind"], "sieved");
}

#[test]
fn sieve_with_listed_primes() {
    let out = pcn(&["sieve", "--q", "8", "--n", "12", "--primes", "109,73,37,19,13"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["holds"], true);
}

#[test]
fn sieve_search_not_found() {
    let out = pcn(&["sieve", "--q", "5", "--n", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["found"], false);
}

#[test]
fn sieve_rejects_non_divisor() {
    let out = pcn(&["sieve", "--q", "8", "--n", "12", "--primes", "11"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not divide"));
}

#[test]
fn oracle_find_and_count() {
    let out = pcn(&["oracle", "find", "--q", "5", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["q"], 5);
    let out = pcn(&["oracle", "count", "--q", "2", "--n", "4", "--r", "15"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["pcn"].as_u64().unwrap() <= v["cn"].as_u64().unwrap());
    assert_eq!(v["per_r"]["15"], v["pcn"]);
}

#[test]
fn oracle_verify_bound() {
    let out = pcn(&["oracle", "verify-bound", "--q", "2", "--n", "2", "--r", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["holds"], true);
}

#[test]
fn bounds_report_hypothesis_errors() {
    let out = pcn(&["bounds", "--q", "9", "--n", "21", "--variant", "final-odd"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["coefficient"]["num"].is_string());
    let out = pcn(&["bounds", "--q", "5", "--n", "6", "--variant", "final-even"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(pcn(&["check-pair", "--q", "9"]).status.code(), Some(2));
    assert_eq!(pcn(&["bounds", "--q", "9", "--n", "21", "--variant", "nope"]).status.code(), Some(2));
    assert_eq!(pcn(&["check-pair", "--q", "6", "--n", "4"]).status.code(), Some(2));
}

#[test]
fn factor_uses_cache_file() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("factors.json");
    let out = pcn(&["factor", "--q", "8", "--n", "12", "--cache", cache.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["distinct_primes"], 8);
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cache).unwrap()).unwrap();
    assert!(saved.get("68719476735").is_some());
}

fn run_pipeline(out: &Path) -> Output {
    pcn(&["pipeline", "--parity", "odd", "--out", out.to_str().unwrap()])
}

#[test]
fn pipeline_report_roundtrips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(run_pipeline(&a).status.code(), Some(0));
    assert_eq!(run_pipeline(&b).status.code(), Some(0));
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());

    let report: serde_json::Value = serde_json::from_slice(&text).unwrap();
    assert_eq!(report["unresolved"], 0);
    let s4 = report["stages"].as_array().unwrap().iter().find(|s| s["stage"] == "S4").unwrap();
    assert_eq!(s4["count"], 7);

    let out = pcn(&["verify-report", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["problems"], serde_json::json!([]));

    let mut tampered = report.clone();
    let entry = tampered["resolutions"].as_array_mut().unwrap().iter_mut().find(|r| r["q"] == 9 && r["n"] == 21).unwrap();
    entry["resolution"] = serde_json::json!({ "kind": "completely_basic" });
    let c = dir.path().join("c.json");
    std::fs::write(&c, serde_json::to_vec(&tampered).unwrap()).unwrap();
    let out = pcn(&["verify-report", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pipeline_config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"parity":"odd","nonsense":true}"#).unwrap();
    let out = pcn(&["pipeline", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
