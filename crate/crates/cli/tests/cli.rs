use std::path::PathBuf;
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples").join(name)
}

fn fwd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwd"))
        .args(args)
        .env("FWD_COLOR", "0")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(name: &str) -> String {
    example(name).to_string_lossy().into_owned()
}

#[test]
fn crisscross_checks() {
    let o = fwd(&["check", &path("crisscross.fwd")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("rules ⅋ ⅋ ⊗ Ax ⊗ Ax ⊥ 1"));
    assert!(out.contains("rules & & ⊕l ⊕l Ax"));
}

#[test]
fn synthesis_and_compatibility_succeed() {
    assert_eq!(fwd(&["synth", &path("crisscross.fwd")]).status.code(), Some(0));
    assert_eq!(fwd(&["compat", &path("crisscross.fwd")]).status.code(), Some(0));
}

#[test]
fn incompatible_environment_has_a_witness() {
    let o = fwd(&["compat", &path("incompatible.fwd")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("stuck after"));
}

#[test]
fn units_cut_has_one_conclusion() {
    let o = fwd(&["cut", "--all-gammas", &path("units.fwd")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("1 conclusion(s)"));
    assert!(out.contains("B2"));
    assert!(out.contains("result close w"));
}

#[test]
fn simulation_runs_to_a_result() {
    let o = fwd(&["sim", &path("sim.fwd")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("result w<->u"));
    assert!(out.lines().any(|l| l.trim_start().starts_with("c ")));
}

#[test]
fn stepping_reaches_the_same_result() {
    let dir = std::env::temp_dir().join(format!("fwd-step-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut state = std::fs::read_to_string(example("step.fwd")).unwrap();
    for _ in 0..20 {
        let file = dir.join("state.fwd");
        std::fs::write(&file, &state).unwrap();
        let o = fwd(&["sim", "--step", file.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        state = stdout(&o);
        if let Some(l) = state.lines().find(|l| l.starts_with("// final ")) {
            assert_eq!(l, "// final w<->u");
            return;
        }
    }
    panic!("no final result after 20 steps");
}

#[test]
fn json_is_stable_and_parses() {
    let a = fwd(&["--json", "sim", &path("sim.fwd")]);
    let b = fwd(&["--json", "sim", &path("sim.fwd")]);
    assert_eq!(a.stdout, b.stdout);
    for line in stdout(&a).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["ok"], serde_json::Value::Bool(true));
    }
}

#[test]
fn fmt_output_parses_again() {
    let o = fwd(&["fmt", &path("crisscross.fwd")]);
    let dir = std::env::temp_dir().join(format!("fwd-fmt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("again.fwd");
    std::fs::write(&file, &o.stdout).unwrap();
    let again = fwd(&["fmt", file.to_str().unwrap()]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn usage_error_prints_grammar() {
    let o = fwd(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Declaration files hold"));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(fwd(&["check", "/nonexistent/file.fwd"]).status.code(), Some(2));
    let dir = std::env::temp_dir().join(format!("fwd-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("bad.fwd");
    std::fs::write(&file, "check x<-> |- x : a;").unwrap();
    let o = fwd(&["check", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:"));
}

#[test]
fn color_follows_the_environment() {
    let plain = fwd(&["check", &path("crisscross.fwd")]);
    assert!(!stdout(&plain).contains('\x1b'));
    let colored = Command::new(env!("CARGO_BIN_EXE_fwd"))
        .args(["check", &path("crisscross.fwd")])
        .env("FWD_COLOR", "1")
        .output()
        .unwrap();
    assert!(stdout(&colored).contains('\x1b'));
}
