use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use acpl::formats::{read_json, read_obj, read_profile_csv};
use acpl::Checkpoint;
use serde_json::Value;

const PUNCTURE: &str = r#"
[grid]
dim = 2
nodes = 41
side = 2.0

[gamma]
kind = "points"
points = [[0.0, 0.0]]

[solver]
eps_schedule = [0.2, 0.15]
tol_r = 1e-6
"#;

const DISK: &str = r#"
[grid]
dim = 3
nodes = 33
side = 4.0

[gamma]
kind = "circle"
radius = 1.0

[solver]
eps_schedule = [0.25]
tol_r = 1e-5
"#;

fn acpl(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acpl"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("ACPL_OUT")
        .output()
        .expect("spawn acpl")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest(out: &Path) -> Value {
    read_json(&out.join("manifest.json"), "run_manifest").unwrap()
}

#[test]
fn solve_puncture_writes_checkpoint_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", PUNCTURE);
    let out = dir.path().join("run");
    let o = acpl(&out, &["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ck = Checkpoint::load(&out.join("checkpoint.acpl")).unwrap();
    assert_eq!(ck.section.eps, 0.15);
    assert_eq!(ck.gamma.components().len(), 1);
    let report: Value = read_json(&out.join("energy.json"), "energy_report").unwrap();
    let stages = report["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 2);
    assert_eq!(stages[1]["status"], "converged");
    let m = manifest(&out);
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["config"]["grid"]["nodes"], 41);
    for p in m["artifacts"].as_array().unwrap() {
        assert!(Path::new(p.as_str().unwrap()).exists(), "{p}");
    }
    // No temporary files are left behind.
    for e in std::fs::read_dir(&out).unwrap() {
        assert!(!e.unwrap().file_name().to_string_lossy().starts_with('.'));
    }
}

#[test]
fn unknown_config_key_exits_1_naming_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &PUNCTURE.replace("tol_r = 1e-6", "tol_r = 1e-6\nstep_size = 0.5"));
    let o = acpl(&dir.path().join("run"), &["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("step_size"), "{err}");
    assert!(err.contains("line 14"), "{err}");
}

#[test]
fn iteration_cap_exits_2_with_best_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", &PUNCTURE.replace("tol_r = 1e-6", "tol_r = 1e-6\nmax_iters = 1"));
    let out = dir.path().join("run");
    let o = acpl(&out, &["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let ck = Checkpoint::load(&out.join("checkpoint.acpl")).unwrap();
    let report: Value = read_json(&out.join("energy.json"), "energy_report").unwrap();
    let last = report["stages"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["status"], "max_iters_exceeded");
    // The saved section is the reported (lowest-energy) iterate.
    let e = acpl_core::energy::energy_with_gamma(&ck.section, &ck.gamma).total;
    assert!((e - last["energy"]["total"].as_f64().unwrap()).abs() <= 1e-12 * e);
    assert_eq!(manifest(&out)["exit_code"], 2);
}

#[test]
fn diagnose_profiles_spectrum_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", PUNCTURE);
    let run = dir.path().join("run");
    assert_eq!(acpl(&run, &["solve", "--config", &cfg]).status.code(), Some(0));
    let ck = run.join("checkpoint.acpl");
    let p = Checkpoint::load(&ck).unwrap().gamma.components()[0].centroid();
    let diag = dir.path().join("diag");
    let o = acpl(
        &diag,
        &[
            "diagnose",
            ck.to_str().unwrap(),
            "--monotonicity",
            &format!("p={},{}", p[0], p[1]),
            "--radii",
            "0.2:0.8:7",
            "--spectrum",
            "k=5",
            "--nodal-mesh",
            "--discrepancy",
            "delta=0.6",
            "--density",
            &format!("p={},{};r=0.3", p[0], p[1]),
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(diag.join("monotonicity_0.csv")).unwrap();
    assert!(text.starts_with("r,E,M\n"), "{text}");
    let rows = read_profile_csv(&diag.join("monotonicity_0.csv")).unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.windows(2).all(|w| w[0].r < w[1].r && w[0].e <= w[1].e));
    for r in &rows {
        assert!((r.m - r.e / r.r).abs() <= 1e-12 * r.m);
    }
    let spec: Value = read_json(&diag.join("spectrum.json"), "spectrum").unwrap();
    let vals: Vec<f64> = spec["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(vals.len(), 5);
    assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    let mesh = read_obj(&diag.join("nodal.obj")).unwrap();
    assert!(!mesh.lines.is_empty() && mesh.faces.is_empty());
    assert!(diag.join("discrepancy.json").exists() && diag.join("density.json").exists());

    let missing = acpl(&dir.path().join("x"), &["diagnose", dir.path().join("nope.acpl").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    let junk = write(dir.path(), "junk.acpl", "not a checkpoint");
    assert_eq!(acpl(&dir.path().join("y"), &["diagnose", &junk]).status.code(), Some(1));
    let bad_opt = acpl(&dir.path().join("z"), &["diagnose", ck.to_str().unwrap(), "--spectrum", "n=5"]);
    assert_eq!(bad_opt.status.code(), Some(1));
}

/// Boundary loops of a triangle mesh, counted from edges with one incident face.
fn boundary_loops(faces: &[[usize; 3]]) -> usize {
    let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&(a, b), &c) in &count {
        if c == 1 {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut loops = 0;
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        loops += 1;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &adj[&v] {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
    }
    loops
}

#[test]
fn disk_nodal_mesh_has_one_boundary_loop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.toml", DISK);
    let run = dir.path().join("run");
    let o = acpl(&run, &["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = dir.path().join("diag");
    let o = acpl(&diag, &["diagnose", run.join("checkpoint.acpl").to_str().unwrap(), "--nodal-mesh"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mesh = read_obj(&diag.join("nodal.obj")).unwrap();
    assert!(!mesh.faces.is_empty());
    assert_eq!(boundary_loops(&mesh.faces), 1);
    let topo: Value = read_json(&diag.join("nodal_topology.json"), "nodal_topology").unwrap();
    assert_eq!(topo["boundary"], 1);
    assert_eq!(topo["components"], 1);
}

#[test]
fn experiments_exit_codes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let t = std::time::Instant::now();
    let a = dir.path().join("a");
    let o = acpl(&a, &["experiment", "heteroclinic1d"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(t.elapsed().as_secs_f64() < 10.0, "{:?}", t.elapsed());
    let b = dir.path().join("b");
    assert_eq!(acpl(&b, &["experiment", "heteroclinic1d", "--threads", "3"]).status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    assert_eq!(manifest(&a)["verdicts_failed"].as_array().unwrap().len(), 0);

    assert_eq!(acpl(&dir.path().join("c"), &["experiment", "torus"]).status.code(), Some(1));
}

#[test]
fn failed_verdicts_exit_3_and_keep_the_report() {
    // With ε comparable to the interval the profile cannot reach ±1.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("wide");
    let o = acpl(&out, &["experiment", "heteroclinic1d", "--eps", "1.0"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    let rep: Value = read_json(&out.join("report.json"), "experiment_report").unwrap();
    assert!(rep["verdicts"].as_array().unwrap().iter().any(|v| v["pass"] == false));
    assert!(!manifest(&out)["verdicts_failed"].as_array().unwrap().is_empty());
}

#[test]
fn out_dir_defaults_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", &PUNCTURE.replace("[0.2, 0.15]", "[0.2]"));
    let out = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_acpl"))
        .args(["solve", "--config", &cfg, "--seed", "7"])
        .env("ACPL_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("checkpoint.acpl").exists());
    assert_eq!(manifest(&out)["seed"], 7);
}

#[test]
fn solve_reports_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", PUNCTURE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(acpl(&a, &["solve", "--config", &cfg, "--threads", "1"]).status.code(), Some(0));
    assert_eq!(acpl(&b, &["solve", "--config", &cfg, "--threads", "4"]).status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("energy.json")).unwrap(), std::fs::read(b.join("energy.json")).unwrap());
    assert_eq!(std::fs::read(a.join("checkpoint.acpl")).unwrap(), std::fs::read(b.join("checkpoint.acpl")).unwrap());
}
