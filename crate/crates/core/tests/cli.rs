//! End-to-end tests of the `rootbarrier` binary: exit-status contract,
//! output files, and provenance stamping.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use root_barrier::Barrier;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rootbarrier"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn base_config(out_dir: &Path) -> String {
    format!(
        r#"
output_dir = "{}"

[measures.mu0]
kind = "dirac"
loc = 0.0

[measures.target]
kind = "gaussian"
mean = 0.0
var = 1.0

[problem]
initial = "mu0"
target = "target"

[diffusion]
kind = "brownian"

[grid]
x_min = -8.5
x_max = 8.5
n_x = 300
t_cap = 2.0
n_t = 300

[sim]
dt = 1e-3
n_paths = 4000
seed = 11
t_cap = 4.0
ks_threshold = 0.08
"#,
        out_dir.display()
    )
}

fn find_output(dir: &Path, prefix: &str) -> std::path::PathBuf {
    fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix))
        })
        .unwrap_or_else(|| panic!("no {prefix}* in {}", dir.display()))
}

#[test]
fn solve_embed_verify_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "scenario.toml", &base_config(&out));

    let solve = run(&["solve", &cfg]);
    assert!(solve.status.success(), "{}", String::from_utf8_lossy(&solve.stderr));
    let barrier_path = find_output(&out, "barrier_");
    let text = fs::read_to_string(&barrier_path).unwrap();
    assert!(text.contains("# tool = rootbarrier"));
    assert!(text.contains("# config = "));
    let barrier = Barrier::read_csv_file(&barrier_path).unwrap();
    // the N(0,1) scenario solves to r close to 1 on the bulk
    assert!((barrier.eval(0.0) - 1.0).abs() < 0.1);
    assert!(find_output(&out, "residual_").exists());

    let embed = run(&["embed", &cfg, barrier_path.to_str().unwrap()]);
    assert!(embed.status.success(), "{}", String::from_utf8_lossy(&embed.stderr));
    let stdout = String::from_utf8_lossy(&embed.stdout);
    assert!(stdout.contains("KS distance"));
    assert!(find_output(&out, "law_").exists());
}

#[test]
fn embed_flags_mismatched_target() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg_text = base_config(&out).replace("mean = 0.0", "mean = 2.0");
    let cfg = write_config(tmp.path(), "shifted.toml", &cfg_text);
    // barrier solved for the centered scenario
    let centered = write_config(tmp.path(), "centered.toml", &base_config(&out));
    assert!(run(&["solve", &centered]).status.success());
    let barrier_path = find_output(&out, "barrier_");
    let embed = run(&["embed", &cfg, barrier_path.to_str().unwrap()]);
    assert_eq!(embed.status.code(), Some(1), "KS threshold breach is a check failure");
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let broken = base_config(&out).replace("initial = \"mu0\"", "initial = \"missing\"");
    let cfg = write_config(tmp.path(), "broken.toml", &broken);
    let r = run(&["solve", &cfg]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing"));

    let r = run(&["solve", "/nonexistent/config.toml"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn verify_lemmas_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg_text = format!(
        "{}\n[[checks]]\nkind = \"corridor_monotonicity\"\nx = -9.0\ny = 9.0\nt = 1.0\n\n[[checks]]\nkind = \"scan_sym\"\nmeasure = \"target\"\ny = [0.0, 0.0]\neps = [1e-2, 1e-3]\nmin_ratio = 0.5\n\n[[checks]]\nkind = \"tail_zero\"\nx = 9.0\n",
        base_config(&out)
    );
    let cfg = write_config(tmp.path(), "lemmas.toml", &cfg_text);
    let r = run(&["verify", &cfg, "--suite", "lemmas"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report = fs::read_to_string(find_output(&out, "report_lemmas_")).unwrap();
    assert!(report.contains("# seed = 11"));
    assert!(report.contains("corridor_monotonicity"));
}

#[test]
fn verify_hypothesis_violation_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // s = t = 0.2 < r(x) for x inside the solved barrier region
    let cfg_text = format!(
        "{}\n[[checks]]\nkind = \"corridor_monotonicity\"\nx = -1.0\ny = 1.0\nt = 0.2\n",
        base_config(&out)
    );
    let cfg = write_config(tmp.path(), "badcheck.toml", &cfg_text);
    let r = run(&["verify", &cfg, "--suite", "lemmas"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("hypothesis"));
}

#[test]
fn verify_theorem_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg_text = format!(
        "{}\n[theorem]\ngrid_sizes = [100, 200]\n",
        base_config(&out)
            .replace("kind = \"gaussian\"\nmean = 0.0\nvar = 1.0", "kind = \"uniform\"\na = -1.0\nb = 1.0")
            .replace("x_min = -8.5", "x_min = -1.5")
            .replace("x_max = 8.5", "x_max = 1.5")
    );
    let cfg = write_config(tmp.path(), "theorem.toml", &cfg_text);
    let r = run(&["verify", &cfg, "--suite", "theorem"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report = fs::read_to_string(find_output(&out, "report_theorem_")).unwrap();
    assert!(report.contains("density_lower_bound"));
}

#[test]
fn example_config_parses_and_solves() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sample.toml");
    let r = run(&["example", cfg.to_str().unwrap()]);
    assert!(r.status.success());
    let text = fs::read_to_string(&cfg).unwrap();
    let parsed = root_barrier::ScenarioConfig::parse(&text).unwrap();
    assert!(parsed.measure("target").is_ok());
}

#[test]
fn identical_config_gives_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "repro.toml", &base_config(&out));
    assert!(run(&["solve", &cfg]).status.success());
    let barrier_path = find_output(&out, "barrier_");
    let first = fs::read(&barrier_path).unwrap();
    assert!(run(&["solve", &cfg]).status.success());
    let second = fs::read(&barrier_path).unwrap();
    assert_eq!(first, second, "byte-identical reruns");
}
