use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scaffold")).current_dir(cwd).args(args).output().unwrap()
}

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = run(cwd, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(cwd: &Path, args: &[&str]) -> i32 {
    run(cwd, args).status.code().unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// A two-room scene and its coverage, shared by the tests below.
fn shared() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        ok(&dir, &["synth", "--scene", "two_room", "--out", "s"]);
        ok(&dir, &["coverage", "--mesh", "s/mesh.ply", "--trajectory", "s/trajectory.json", "--samples", "5000", "--out", "c"]);
        dir
    })
}

#[test]
fn coverage_of_two_room_is_mostly_observed() {
    let run = json(shared().join("c/run.json"));
    let zero = run["summary"]["zero_fraction"].as_f64().unwrap();
    assert!(zero < 0.5, "zero-weight fraction {zero}");
    assert_eq!(run["summary"]["samples"], 5000);
    assert_eq!(run["config"]["coverage"]["samples"], 5000);
}

#[test]
fn empty_trajectory_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.json"), r#"{"cameras": []}"#).unwrap();
    let mesh = shared().join("s/mesh.ply").display().to_string();
    assert_eq!(code(dir.path(), &["coverage", "--mesh", &mesh, "--trajectory", "t.json", "--out", "c"]), 3);
}

#[test]
fn missing_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(dir.path(), &["coverage", "--mesh", "nope.ply", "--trajectory", "nope.json", "--out", "c"]), 3);
}

#[test]
fn bad_flags_and_configs_are_config_errors() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("p").display().to_string();
    let base = ["place", "--coverage", "c/coverage.json", "--trajectory", "s/trajectory.json", "--out", &out];
    assert_eq!(code(s, &[&base[..], &["--basis-count", "0"]].concat()), 2);
    assert_eq!(code(s, &["place", "--bogus"]), 2);

    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[placement]\nlearning_rat = 0.1\n").unwrap();
    assert_eq!(code(s, &[&base[..], &["--config", cfg.to_str().unwrap()]].concat()), 2);
    std::fs::write(&cfg, "[eval]\nrobust = { gamma = -1.0 }\n").unwrap();
    assert_eq!(code(s, &[&base[..], &["--config", cfg.to_str().unwrap()]].concat()), 2);
}

#[test]
fn place_with_zero_iterations_passes_the_init_through() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("p").display().to_string();
    let args = ["place", "--coverage", "c/coverage.json", "--trajectory", "s/trajectory.json", "--max-iterations", "0", "--cores", "0"];
    ok(s, &[&args[..], &["--out", &out]].concat());
    let init = json(d.path().join("p/fps_init.json"));
    let opt = json(d.path().join("p/optimized.json"));
    assert_eq!(init["positions"], opt["positions"]);
    assert_eq!(opt["energy_history"].as_array().unwrap().len(), 1);
}

#[test]
fn place_beats_baselines_and_labels_three_cores() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("p").display().to_string();
    ok(s, &["place", "--coverage", "c/coverage.json", "--trajectory", "s/trajectory.json", "--mesh", "s/mesh.ply", "--out", &out]);
    let run = json(d.path().join("p/run.json"));
    let e = &run["summary"]["energies"];
    let opt = e["optimized"].as_f64().unwrap();
    assert!(opt <= e["trajectory"].as_f64().unwrap());
    assert!(opt <= e["grid"].as_f64().unwrap());
    let bases = json(d.path().join("p/optimized.json"));
    assert_eq!(bases["positions"].as_array().unwrap().len(), 8);
    let labels = bases["core_labels"].as_array().unwrap();
    assert_eq!(labels.len(), 8);
    assert!(labels.iter().all(|l| l.as_u64().unwrap() < 3));
    assert_eq!(bases["provenance"], "optimized");
}

#[test]
fn config_file_values_apply_and_flags_override_them() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.toml");
    std::fs::write(&cfg, "seed = 5\n[placement]\nbasis_count = 3\nmax_iterations = 7\n[place]\nbaseline = \"grid\"\n").unwrap();
    let out = d.path().join("p").display().to_string();
    let c = cfg.to_str().unwrap();
    let base = ["place", "--config", c, "--coverage", "c/coverage.json", "--trajectory", "s/trajectory.json", "--out", &out];
    ok(s, &[&base[..], &["--max-iterations", "4"]].concat());
    let run = json(d.path().join("p/run.json"));
    assert_eq!(run["config"]["seed"], 5);
    assert_eq!(run["config"]["placement"]["seed"], 5);
    assert_eq!(run["config"]["placement"]["basis_count"], 3);
    assert_eq!(run["config"]["placement"]["max_iterations"], 4);
    assert_eq!(run["summary"]["iterations"], 4);
    assert!(d.path().join("p/baseline_grid.json").exists());
    assert!(!d.path().join("p/baseline_trajectory.json").exists());
}

#[test]
fn json_config_is_accepted() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"placement": {"basis_count": 2, "max_iterations": 3}, "place": {"core_count": 0}}"#).unwrap();
    let out = d.path().join("p").display().to_string();
    ok(s, &["place", "--config", cfg.to_str().unwrap(), "--coverage", "c/coverage.json", "--trajectory", "s/trajectory.json", "--out", &out]);
    assert_eq!(json(d.path().join("p/optimized.json"))["positions"].as_array().unwrap().len(), 2);
}

#[test]
fn plan_with_zero_count_is_empty_and_oversized_count_fails() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("v").display().to_string();
    let base = ["plan-views", "--mesh", "s/mesh.ply", "--trajectory", "s/trajectory.json", "--features", "s/features.json", "--candidates", "50"];
    ok(s, &[&base[..], &["--count", "0", "--out", &out]].concat());
    assert!(json(d.path().join("v/plan.json"))["cameras"].as_array().unwrap().is_empty());
    assert!(json(d.path().join("v/depth/manifest.json"))["views"].as_array().unwrap().is_empty());
    assert_eq!(code(s, &[&base[..], &["--count", "51", "--out", &out]].concat()), 2);
}

#[test]
fn eval_writes_nine_rows_with_consistent_ranks() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("e").display().to_string();
    let args = ["eval", "--coverage", "c/coverage.json", "--trajectory", "s/trajectory.json", "--mesh", "s/mesh.ply"];
    ok(s, &[&args[..], &["--max-iterations", "50", "--out", &out]].concat());
    let csv = std::fs::read_to_string(d.path().join("e/placement.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for group in rows.chunks(3) {
        let mut by_energy: Vec<&Vec<&str>> = group.iter().collect();
        by_energy.sort_by(|a, b| a[2].parse::<f64>().unwrap().total_cmp(&b[2].parse().unwrap()));
        let ranks: Vec<&str> = by_energy.iter().map(|r| r[3]).collect();
        assert_eq!(ranks, ["1", "2", "3"]);
    }
}

#[test]
fn identical_depth_sets_score_zero_and_degenerate_alignment_exits_4() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let p = |x: &str| d.path().join(x).display().to_string();
    ok(s, &["plan-views", "--mesh", "s/mesh.ply", "--trajectory", "s/trajectory.json", "--features", "s/features.json", "--candidates", "40", "--count", "3", "--out", &p("v")]);
    ok(s, &["render-depth", "--mesh", "s/mesh.ply", "--cameras", &p("v/plan.json"), "--out", &p("r")]);
    ok(s, &["eval", "--reference", &p("v/depth"), "--predicted", &p("r"), "--out", &p("e")]);
    let report = json(d.path().join("e/depth.json"));
    assert_eq!(report["aggregate"]["mean_robust"], 0.0);
    assert_eq!(report["maps"].as_array().unwrap().len(), 3);

    // Predictions that miss everywhere leave nothing to align.
    std::fs::create_dir(d.path().join("blank")).unwrap();
    for e in std::fs::read_dir(d.path().join("r")).unwrap() {
        let path = e.unwrap().path();
        if path.extension().is_some_and(|x| x == "pfm") {
            let bytes = std::fs::read(&path).unwrap();
            let header = b"Pf\n160 120\n-1.0\n".len();
            let mut blank = bytes[..header].to_vec();
            blank.resize(bytes.len(), 0);
            std::fs::write(d.path().join("blank").join(path.file_name().unwrap()), blank).unwrap();
        }
    }
    assert_eq!(code(s, &["eval", "--reference", &p("v/depth"), "--predicted", &p("blank"), "--align", "--out", &p("e2")]), 4);
}

#[test]
fn render_depth_writes_png_per_camera() {
    let s = shared();
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("r").display().to_string();
    ok(s, &["render-depth", "--mesh", "s/mesh.ply", "--cameras", "s/trajectory.json", "--format", "png", "--out", &out]);
    let manifest = json(d.path().join("r/manifest.json"));
    let views = manifest["views"].as_array().unwrap();
    assert_eq!(views.len(), 120);
    assert!(views.iter().all(|v| d.path().join("r").join(v["file"].as_str().unwrap()).exists()));
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(shared(), &["--help"]), 0);
    assert_eq!(code(shared(), &["plan-views", "--help"]), 0);
}
