use std::process::{Command, Output};

fn minicogent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minicogent"))
        .args(args)
        .env_remove("MINICOGENT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn corpus(name: &str) -> String {
    format!("{}/../core/corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn sum_is_six_at_every_layer() {
    for layer in ["shallow", "value", "update", "low"] {
        let o = minicogent(&["run", &corpus("sum.cg"), "[1,2,3]", "--layer", layer]);
        assert!(o.status.success(), "{layer}: {o:?}");
        assert_eq!(stdout(&o).lines().next(), Some("6"), "{layer}");
    }
}

#[test]
fn update_and_low_layers_print_a_digest() {
    let o = minicogent(&["run", "sum", "[1,2,3]", "--layer", "update"]);
    assert!(stdout(&o).contains("store:"));
    let o = minicogent(&["run", "sum", "[1,2,3]", "--layer", "low"]);
    assert!(stdout(&o).contains("heap:"));
}

#[test]
fn binary_search_finds_the_index() {
    for layer in ["shallow", "value", "update", "low"] {
        let o = minicogent(&["run", "binsearch", "[1,3,5,7]", "5", "--layer", layer]);
        assert!(o.status.success(), "{layer}: {o:?}");
        assert_eq!(stdout(&o).lines().next(), Some("2"), "{layer}");
    }
}

#[test]
fn low_layer_can_dump_the_heap() {
    let o = minicogent(&["run", "sum", "[1,2,3]", "--layer", "low", "--dump-heap"]);
    assert!(stdout(&o).lines().any(|l| l.starts_with("00000000:") || l.starts_with("00000010:")));
}

#[test]
fn run_reports_json() {
    let o = minicogent(&["run", "sum", "[4,5]", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["result"], "9");
}

#[test]
fn unknown_layer_is_a_usage_error() {
    assert_eq!(minicogent(&["run", "sum", "[1]", "--layer", "bogus"]).status.code(), Some(2));
}

#[test]
fn ill_typed_argument_is_a_usage_error() {
    assert_eq!(minicogent(&["run", "sum", "True"]).status.code(), Some(2));
}

#[test]
fn typecheck_exit_codes() {
    assert_eq!(minicogent(&["typecheck", &corpus("sum.cg")]).status.code(), Some(0));
    let dir = std::env::temp_dir().join(format!("minicogent-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let aliasing = dir.join("alias.cg");
    std::fs::write(
        &aliasing,
        "abstract Array a\nfun dup (a : Array U32) -> (Array U32, Array U32) = (a, a)\n",
    )
    .unwrap();
    let o = minicogent(&["typecheck", aliasing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(
        minicogent(&["typecheck", dir.join("missing.cg").to_str().unwrap()]).status.code(),
        Some(2)
    );
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn check_with_a_single_trial_passes() {
    let o = minicogent(&["check", "thm3", "--trials", "1", "--format", "json", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["reports"][0]["trials"], 1);
    assert!(v.get("timestamp").is_none());
}

#[test]
fn check_rejects_zero_trials_and_unknown_suites() {
    assert_eq!(minicogent(&["check", "thm1", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(minicogent(&["check", "nope"]).status.code(), Some(2));
}

#[test]
fn timestamp_is_present_unless_suppressed() {
    let o = minicogent(&["check", "obligations", "--trials", "5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["timestamp"].is_u64());
}

#[test]
fn seed_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_minicogent"))
        .args(["check", "thm3", "--trials", "2", "--format", "json", "--no-timestamp"])
        .env("MINICOGENT_SEED", "9")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 9);
}

#[test]
fn demos_report_every_relation() {
    let o = minicogent(&["demo", "sum"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("machine heap ~ store"));
    assert!(out.contains("all relations hold"));
    let o = minicogent(&["demo", "binsearch"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("holds   array bytes unchanged"));
    assert_eq!(minicogent(&["demo", "bogus"]).status.code(), Some(2));
}
