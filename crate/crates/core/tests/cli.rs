use std::path::Path;
use std::process::Command;

use serde_json::Value;
use shwave::report::read_csv;

fn run(config: &Path, extra: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_shwave"))
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn constant_profile_reports_nonexistence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "schema = 1\ntask = \"modes\"\nk_grid = [1.0, 2.0]\n[profile]\nkind = \"constant\"\nrho = 1.0\nmu = 1.0\n",
    )
    .unwrap();
    let (code, _) = run(&cfg, &["--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    let r = report(dir.path());
    assert_eq!(r["status"], "nonexistence");
    assert!(r["verdict"].as_str().unwrap().contains("global negative monotonicity"));
    assert!(read_csv(&dir.path().join("modes.csv")).unwrap().is_empty());
}

#[test]
fn unsorted_table_is_rejected_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("medium.txt"), "# y rho mu\n0 2 1\n1 1.5 1\n0.5 1 1\n").unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "schema = 1\ntask = \"modes\"\nk = 2.0\n[profile]\nkind = \"table\"\npath = \"medium.txt\"\n",
    )
    .unwrap();
    let (code, stderr) = run(&cfg, &["--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 4"), "{stderr}");
    assert_eq!(report(dir.path())["status"], "invalid_input");
}

#[test]
fn malformed_config_exits_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "schema = 1\ntask = \"modes\"\n").unwrap();
    let (code, _) = run(&cfg, &["--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
}

const BRANCHES: &str = r#"
schema = 1
task = "branches"
k_range = { start = 1.0, stop = 10.0, count = 10 }

[profile]
kind = "exp_density"
rho_inf = 1.0
delta_rho = 5.0
d = 1.0

[output]
dir = "out"
"#;

#[test]
fn branches_write_sorted_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, BRANCHES).unwrap();
    let (code, stderr) = run(&cfg, &["--plot"]);
    assert_eq!(code, 0, "{stderr}");
    let out = dir.path().join("out");
    let rows = read_csv(&out.join("modes.csv")).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| (w[0].k, w[0].mode_index) < (w[1].k, w[1].mode_index)));
    for r in &rows {
        assert_eq!(r.big_k, r.k * r.k);
        assert!(r.big_omega > 0.0 && r.big_omega < r.big_k, "mode above the cutoff");
        assert!(r.residual <= 1e-8);
    }
    assert_eq!(rows.iter().filter(|r| r.k == 1.0).count(), 2);
    let svg = std::fs::read_to_string(out.join("dispersion.svg")).unwrap();
    assert!(svg.contains("class=\"cutoff\"") && svg.contains("class=\"branch\""));
    assert_eq!(report(&out)["status"], "ok");
}

#[test]
fn output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, BRANCHES.replace("count = 10", "count = 4")).unwrap();
    let mut reports = Vec::new();
    for workers in ["1", "2"] {
        let out = dir.path().join(format!("w{workers}"));
        let (code, _) = run(&cfg, &["--workers", workers, "--output-dir", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        let mut r = report(&out);
        r.as_object_mut().unwrap().remove("timestamp");
        reports.push((r, std::fs::read(out.join("modes.csv")).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn fixtures_are_compared_when_given() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, BRANCHES.replace("k_range = { start = 1.0, stop = 10.0, count = 10 }", "k = 2.0").replace("branches", "modes"))
        .unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let out = dir.path().join("o");
    let (code, _) = run(&cfg, &["--fixtures", fixtures.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let cmp = report(&out)["oracle_comparison"].as_array().unwrap().clone();
    assert_eq!(cmp.len(), 2);
    for c in cmp {
        assert_eq!(c["oracle_count"], c["solver_count"]);
        assert!(c["max_rel_diff"].as_f64().unwrap() < 1e-6);
    }
}
