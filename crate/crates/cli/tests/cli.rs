use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cgfit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgfit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn cgfit")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn sim_iid(dir: &Path, seed: &str, out: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "--seed", seed, "simulate", "twoscale", "--n", "60", "--stride-time", "0.5", "--burn-in", "2", "--out", out,
    ];
    args.extend_from_slice(extra);
    cgfit(dir, &args)
}

#[test]
fn simulate_writes_meta_and_sidecar() {
    let t = TempDir::new().unwrap();
    let o = sim_iid(t.path(), "7", "d.csv", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(t.path(), "d.csv");
    for key in ["# command=simulate twoscale", "# seed=7", "# config_hash="] {
        assert!(csv.contains(key), "missing {key}");
    }
    let side: serde_json::Value = serde_json::from_str(&read(t.path(), "d.csv.meta.json")).unwrap();
    assert_eq!(side["seed"], 7);
    assert_eq!(side["command"], "simulate twoscale");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&sim_iid(t.path(), "9", "a.csv", &["--paths", "3", "--steps", "200"])), 0);
    let b = cgfit(
        t.path(),
        &["--seed", "9", "--threads", "3", "simulate", "twoscale", "--n", "60", "--stride-time", "0.5", "--burn-in", "2", "--paths", "3", "--steps", "200", "--out", "b.csv"],
    );
    assert_eq!(code(&b), 0);
    assert_eq!(read(t.path(), "a.csv"), read(t.path(), "b.csv"));

    assert_eq!(code(&sim_iid(t.path(), "9", "iid.csv", &[])), 0);
    let ci = |threads: &str, out: &str| {
        cgfit(
            t.path(),
            &["--seed", "4", "--threads", threads, "ci", "--method", "bootstrap", "--data", "iid.csv", "--B", "30", "--k", "3", "--out", out],
        )
    };
    assert_eq!(code(&ci("1", "c1.csv")), 0);
    assert_eq!(code(&ci("4", "c4.csv")), 0);
    assert_eq!(read(t.path(), "c1.csv"), read(t.path(), "c4.csv"));
}

#[test]
fn missing_seed_is_generated_and_announced() {
    let t = TempDir::new().unwrap();
    let o = cgfit(t.path(), &["simulate", "twoscale", "--n", "20", "--stride-time", "0.5", "--burn-in", "1", "--out", "d.csv"]);
    assert_eq!(code(&o), 0);
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().find(|l| l.starts_with("seed: ")).expect("seed announced");
    let seed = line.trim_start_matches("seed: ");
    assert!(read(t.path(), "d.csv").contains(&format!("# seed={seed}")));
}

#[test]
fn usage_errors_exit_2() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&cgfit(t.path(), &["fit", "nonsense", "--data", "x.csv"])), 2);
    assert_eq!(code(&cgfit(t.path(), &["--seed", "1", "validate", "coverage", "--trials", "5"])), 2);
    assert_eq!(code(&cgfit(t.path(), &["fit", "fm", "--data", "does-not-exist.csv"])), 2);
    assert_eq!(code(&cgfit(t.path(), &["--threads", "0", "fit", "fm", "--data", "x.csv"])), 2);
    std::fs::write(t.path().join("bad.toml"), "[fit]\nbogus = 1\n").unwrap();
    assert_eq!(code(&cgfit(t.path(), &["--config", "bad.toml", "fit", "fm", "--data", "x.csv"])), 2);
}

#[test]
fn numeric_failure_exits_1() {
    let t = TempDir::new().unwrap();
    // a drift that grows outward has no normalizable density
    let o = cgfit(t.path(), &["export", "density", "--theta", "0,1,0,0,0"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_values_yield_to_flags() {
    let t = TempDir::new().unwrap();
    std::fs::write(
        t.path().join("run.toml"),
        "seed = 5\n[simulate.twoscale]\nn = 30\nstride_time = 0.5\nburn_in = 1.0\n",
    )
    .unwrap();
    let o = cgfit(t.path(), &["--config", "run.toml", "simulate", "twoscale", "--n", "12", "--out", "d.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(t.path(), "d.csv");
    assert!(csv.contains("# seed=5"));
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 12);
}

#[test]
fn fit_writes_estimate_json() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&sim_iid(t.path(), "3", "d.csv", &[])), 0);
    let o = cgfit(t.path(), &["fit", "fm", "--data", "d.csv", "--k", "3", "--out", "fm.json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&read(t.path(), "fm.json")).unwrap();
    assert_eq!(v["estimate"]["theta"].as_array().unwrap().len(), 3);
    assert_eq!(v["meta"]["command"], "fit");
}

#[test]
fn ci_all_lays_out_one_column_per_estimator_and_method() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&sim_iid(t.path(), "3", "d.csv", &[])), 0);
    let o = cgfit(
        t.path(),
        &["--seed", "2", "ci", "--method", "all", "--estimator", "fm", "--data", "d.csv", "--k", "3", "--B", "20", "--out", "all.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(t.path(), "all.csv");
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "param,quantity,fm_asymptotic,fm_jackknife,fm_bootstrap-standard"
    );
    assert_eq!(lines.count(), 3 * 4);
}

#[test]
fn potential_export_accepts_a_grid_triple() {
    let t = TempDir::new().unwrap();
    let o = cgfit(t.path(), &["export", "potential", "--reference", "--grid", "0.4,1.4,6", "--out", "u.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read(t.path(), "u.csv").lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 6);
}

#[test]
fn coverage_json_schema() {
    let t = TempDir::new().unwrap();
    let o = cgfit(
        t.path(),
        &["--seed", "8", "validate", "coverage", "--n", "40", "--trials", "20", "--k", "3", "--eps", "0.05", "--out", "cov.json"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(t.path(), "cov.json")).unwrap();
    assert_eq!(v["meta"]["seed"], 8);
    let r = &v["result"];
    assert_eq!(r["trials"], 20);
    assert_eq!(r["per_param_coverage"].as_array().unwrap().len(), 3);
    let mean = r["mean_coverage"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mean));
}
