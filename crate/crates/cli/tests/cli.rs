use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use chimera_bench::analysis::{load_optimum_fits, load_scaling_fits};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chimera-bench"))
}

fn exec(args: &[&str], workers: Option<usize>) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    match workers {
        Some(n) => cmd.env("CHIMERA_BENCH_WORKERS", n.to_string()),
        None => cmd.env_remove("CHIMERA_BENCH_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = exec(args, None);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn small_config(out: &str) -> Value {
    json!({
        "instances": {"class": "logical", "sizes": [3], "count": 2, "seed": 3},
        "solvers": {"kinds": ["sa", "svmc"], "sweeps": [5, 20], "reads": 50, "seed": 1},
        "output_dir": out
    })
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn gen_smoke_run_verifies_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.json", &small_config("out_a"));
    let b = write_config(dir.path(), "b.json", &small_config("out_b"));
    ok(&["gen", "--config", a.to_str().unwrap()]);
    ok(&["gen", "--config", b.to_str().unwrap()]);
    let ma = read(&dir.path().join("out_a/instances/manifest.json"));
    assert_eq!(ma, read(&dir.path().join("out_b/instances/manifest.json")));
    let manifest: Value = serde_json::from_str(&ma).unwrap();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));

    let name = manifest["files"][0]["path"].as_str().unwrap();
    let inst: Value = serde_json::from_str(&read(&dir.path().join("out_a/instances").join(name))).unwrap();
    assert_eq!(inst["config_hash"], manifest["config_hash"]);

    let out = ok(&["verify", "--config", a.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("ok")).count(), 3, "{text}");
}

#[test]
fn verify_rejects_a_tampered_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_config("out"));
    ok(&["gen", "--config", cfg.to_str().unwrap()]);
    let inst_dir = dir.path().join("out/instances");
    let manifest: Value = serde_json::from_str(&read(&inst_dir.join("manifest.json"))).unwrap();
    let path = inst_dir.join(manifest["files"][0]["path"].as_str().unwrap());
    let mut inst: Value = serde_json::from_str(&read(&path)).unwrap();
    inst["seed"] = json!(999);
    std::fs::write(&path, inst.to_string()).unwrap();
    let out = exec(&["verify", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("hash does not match"));
}

#[test]
fn run_is_identical_across_thread_counts_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_config(dir.path(), "one.json", &small_config("one"));
    let two = write_config(dir.path(), "two.json", &small_config("two"));
    for cfg in [&one, &two] {
        ok(&["gen", "--config", cfg.to_str().unwrap()]);
    }
    assert!(exec(&["run", "--config", one.to_str().unwrap()], Some(1)).status.success());
    assert!(exec(&["run", "--config", two.to_str().unwrap()], Some(2)).status.success());
    let m1 = read(&dir.path().join("one/results/manifest.json"));
    assert_eq!(m1, read(&dir.path().join("two/results/manifest.json")));
    let manifest: Value = serde_json::from_str(&m1).unwrap();
    // 2 instances x 2 solvers x 2 sweep counts
    assert_eq!(manifest["files"].as_array().unwrap().len(), 8);

    // interrupt: one result lost, one left half written, manifest gone
    let files = manifest["files"].as_array().unwrap();
    let results = dir.path().join("one/results");
    std::fs::remove_file(results.join(files[0]["path"].as_str().unwrap())).unwrap();
    let torn = results.join(files[1]["path"].as_str().unwrap());
    let text = read(&torn);
    std::fs::write(&torn, &text[..text.len() / 2]).unwrap();
    std::fs::remove_file(results.join("manifest.json")).unwrap();
    ok(&["run", "--config", one.to_str().unwrap()]);
    assert_eq!(read(&results.join("manifest.json")), m1);
}

#[test]
fn gauge_averaging_splits_reads_and_respects_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config("out");
    cfg["solvers"] = json!({"kinds": ["sa"], "sweeps": [10, 40], "reads": 30, "gauges": 3, "read_budget": 800});
    let path = write_config(dir.path(), "g.json", &cfg);
    ok(&["gen", "--config", path.to_str().unwrap()]);
    ok(&["run", "--config", path.to_str().unwrap()]);
    let results = dir.path().join("out/results");
    let manifest: Value = serde_json::from_str(&read(&results.join("manifest.json"))).unwrap();
    let mut seen = Vec::new();
    for f in manifest["files"].as_array().unwrap() {
        let text = read(&results.join(f["path"].as_str().unwrap()));
        let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(header["gauges"], 3);
        let per_gauge = header["reads_per_gauge"].as_u64().unwrap();
        assert!(per_gauge * header["n_sweeps"].as_u64().unwrap() <= 800);
        assert_eq!(header["reads_total"].as_u64().unwrap(), 3 * per_gauge);
        assert_eq!(text.lines().count() as u64, 1 + 3 * per_gauge);
        seen.push((header["n_sweeps"].as_u64().unwrap(), per_gauge));
    }
    seen.sort();
    seen.dedup();
    assert_eq!(seen, [(10, 30), (40, 20)]);
}

#[test]
fn fit_and_report_produce_curves_and_reference_format_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "instances": {"class": "logical", "sizes": [3, 4, 5], "count": 6, "seed": 11},
        "solvers": {"kinds": ["sa"], "sweeps": [2, 4, 8, 16, 32, 64, 128, 256, 512], "reads": 200, "seed": 5},
        "analysis": {"n_boot": 200},
        "output_dir": "out"
    });
    let path = write_config(dir.path(), "f.json", &cfg);
    let p = path.to_str().unwrap();

    let out = exec(&["fit", "--config", p], None);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("no result files"));

    ok(&["gen", "--config", p]);
    ok(&["run", "--config", p]);
    ok(&["fit", "--config", p]);
    let fits = dir.path().join("out/fits");
    for side in [3, 4, 5] {
        for q in ["0.25", "0.5", "0.75"] {
            let csv = read(&fits.join(format!("curves/logical_sa_b0.132_L{side:02}_q{q}.csv")));
            let mut lines = csv.lines();
            assert!(lines.next().unwrap().starts_with("# chimera-bench"));
            assert_eq!(lines.next().unwrap(), "effort,lnTTS_q");
            assert!(lines.count() >= 4);
        }
    }
    ok(&["report", "--config", p]);
    let report = dir.path().join("out/report");
    let optimum = load_optimum_fits(&read(&report.join("optimum_fits_q0.5.csv"))).unwrap();
    assert_eq!(optimum.len(), 3);
    assert!(optimum.iter().all(|r| r.effort == "sweeps" && r.solver == "sa" && r.class == "logical"));
    let scaling = load_scaling_fits(&read(&report.join("scaling_fits.csv"))).unwrap();
    assert!(!scaling.is_empty());
    assert!(scaling.iter().all(|r| r.q.is_some() && r.fit.params.len() == 2));
}

#[test]
fn report_without_fits_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "r.json", &small_config("out"));
    let out = exec(&["report", "--config", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out/report/manifest.json").exists());
}

#[test]
fn exact_writes_spectrum_and_evolution() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exact");
    let o = out_dir.to_str().unwrap();
    ok(&["exact", "--gadget", "--points", "200", "--t-f", "0.001,0.05,1", "--out", o]);
    let spectrum = read(&out_dir.join("spectrum.csv"));
    let data: Vec<&str> = spectrum.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(data[0].starts_with("s,E0"));
    assert_eq!(data.len() - 1, 200);

    let evolution = read(&out_dir.join("evolution.csv"));
    let ps: Vec<f64> = evolution
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ps.len(), 3);
    // slower anneals track the ground state better
    assert!(ps.windows(2).all(|w| w[0] < w[1]), "{ps:?}");
    assert!(ps.iter().all(|&p| (0.0..=1.0).contains(&p)), "{ps:?}");
    let summary: Value = serde_json::from_str(&read(&out_dir.join("summary.json"))).unwrap();
    assert!(summary["min_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn exact_refuses_instances_over_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("x");
    let out = exec(&["exact", "--gadget", "--max-qubits", "4", "--out", o.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("capability"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(exec(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(exec(&["exact", "--out", "x"], None).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config("out");
    cfg["solvers"]["sweeps"] = json!([]);
    let path = write_config(dir.path(), "bad.json", &cfg);
    assert_eq!(exec(&["gen", "--config", path.to_str().unwrap()], None).status.code(), Some(1));
    assert_eq!(exec(&["gen", "--config", "/no/such/config.json"], None).status.code(), Some(1));
    let path = write_config(dir.path(), "ok.json", &small_config("out"));
    assert_eq!(exec(&["gen", "--config", path.to_str().unwrap()], Some(0)).status.code(), Some(1));
    assert_eq!(exec(&["--version"], None).status.code(), Some(0));
}
