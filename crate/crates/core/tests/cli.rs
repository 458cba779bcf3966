use std::path::Path;
use std::process::{Command, Output};

use tropskel::report::RunReport;

const PANTS: &str = r#"
schema_version = 1
seed = 7
[instance]
vertices = [[0, 0], [1, 0], [0, 1]]
heights = [0, 1, 1]
beta = 100.0
"#;

const SKEW_QUADRATIC: &str = r#"
schema_version = 1
[instance]
vertices = [[0, 0], [0, 1], [1, 1], [-1, -2]]
heights = [0, 1, 1, 1]
beta = 100.0
[potential]
mode = "quadratic"
"#;

fn tropskel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tropskel")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn skeleton_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pants.toml", PANTS);
    let out = dir.path().join("out");
    let o = tropskel(&["skeleton", &cfg, "--out", out.to_str().unwrap()], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout.lines().any(|l| l.starts_with("PASS complexes_isomorphic")), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    for f in ["skeleton.json", "plots/amoeba.svg", "plots/skeleton.svg", "plots/critical.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(out.join("skeleton.json")).unwrap()).unwrap();
    assert!(report.pass);
    assert_eq!(report.skeleton.unwrap().liouville.euler, -1);
}

#[test]
fn non_adapted_potential_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "skew.toml", SKEW_QUADRATIC);
    let o = tropskel(&["potential-check", &cfg, "--out", "o"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(1), "{stdout}");
    let failing: Vec<&str> = stdout.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failing.len(), 1, "{stdout}");
    assert!(failing[0].contains("adapted_face"));
    assert!(stdout.contains("(-3,1) (0,1)"), "{stdout}");
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("phase.toml", PANTS.replace("beta = 100.0", "beta = 100.0\nphases = [3.14159, 0.0, 7.0]")),
        ("heights.toml", PANTS.replace("heights = [0, 1, 1]\n", "")),
        ("garbage.toml", "this is not toml".to_string()),
    ];
    for (name, text) in cases {
        let cfg = write(dir.path(), name, &text);
        let o = tropskel(&["triangulate", &cfg, "--out", "o"], dir.path());
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    let cfg = write(dir.path(), "pants.toml", PANTS);
    assert_eq!(tropskel(&["triangulate", &cfg, "--beta", "-3"], dir.path()).status.code(), Some(2));
    assert_eq!(tropskel(&["triangulate", "missing.toml"], dir.path()).status.code(), Some(2));
    // Unknown subcommands are rejected by the argument parser.
    assert_eq!(tropskel(&["levitate", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pants.toml", PANTS);
    let run = |sub: &str| {
        let out = dir.path().join(format!("{sub}-{}", rand_suffix()));
        let o = tropskel(&[sub, &cfg, "--out", out.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join(format!("{sub}.json"))).unwrap()
    };
    for sub in ["critical", "skeleton"] {
        assert_eq!(run(sub), run(sub), "{sub} output differs between runs");
    }
}

fn rand_suffix() -> u128 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap().as_nanos()
}

#[test]
fn report_json_round_trips() {
    let cfg = tropskel::config::RunConfig::from_toml_str(PANTS).unwrap();
    let report = tropskel::run(tropskel::Subcommand::Skeleton, &cfg).unwrap();
    let back: RunReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back.to_json(), report.to_json());
}

#[test]
fn three_dimensional_runs_skip_plots() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
schema_version = 1
[instance]
vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1]]
heights = [0, 1, 1, 1, 1]
beta = 100.0
"#;
    let cfg = write(dir.path(), "p3.toml", text);
    let o = tropskel(&["amoeba", &cfg, "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UnsupportedDimension"));
    assert!(dir.path().join("o/amoeba.json").is_file());
    assert!(!dir.path().join("o/plots/amoeba.svg").exists());
}
