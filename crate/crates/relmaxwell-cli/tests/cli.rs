use relmaxwell::mesh::canned::OBSTACLE_TAG;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn relmaxwell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relmaxwell")).args(args).env_remove("RELMAXWELL_OUTPUT").output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relmaxwell-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_names_geometries_and_pipelines() {
    let o = relmaxwell(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for want in ["balls(N)", "hopf_link", "wormhole_obstacle", "concentric_spheres", "topology", "stress"] {
        assert!(text.contains(want), "{want}");
    }
}

#[test]
fn topology_run_reports_cohomology() {
    let dir = scratch("topology");
    let o = relmaxwell(&["run", "topology", "--geometry", "balls:2", "--output", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("[PASS] relative_h1"));
    let s = summary(&dir);
    assert_eq!(s["passed"], true);
    assert_eq!(s["results"]["dims"][1], 2);
    assert_eq!(s["results"]["dims"][2], 0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn empty_obstacle_stress_is_zero() {
    let dir = scratch("empty");
    let o = relmaxwell(&["run", "stress", "--geometry", "ball:1", "--empty", "--output", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = summary(&dir);
    let nullity = s["assertions"].as_array().unwrap().iter().find(|a| a["name"] == "nullity").unwrap();
    assert_eq!(nullity["value"], 0.0);
    let csv = std::fs::read_to_string(dir.join("cells.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "t00").unwrap();
    for l in lines {
        assert_eq!(l.split(',').nth(col).unwrap().parse::<f64>().unwrap(), 0.0);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    for d in [&a, &b] {
        let o = relmaxwell(&["run", "qft", "--geometry", "balls:1", "--seed", "5", "--output", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    assert_eq!(std::fs::read(a.join("summary.json")).unwrap(), std::fs::read(b.join("summary.json")).unwrap());
    assert_eq!(summary(&a)["seed"], 5);
    for d in [a, b] {
        std::fs::remove_dir_all(d).unwrap();
    }
}

#[test]
fn input_errors_exit_with_two() {
    let dir = scratch("errors");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 1, "pipeline": "hodge", "geometry": {"canned": "ball:1"}, "tolerances": {"wick": -1}}"#).unwrap();
    let o = relmaxwell(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/tolerances/wick"));
    assert_eq!(relmaxwell(&["run", "nonsense", "--geometry", "ball:1"]).status.code(), Some(2));
    assert_eq!(relmaxwell(&["run", "topology", "--geometry", "ball:0"]).status.code(), Some(2));
    assert_eq!(relmaxwell(&["run", "topology", "--mesh", "/nonexistent.mesh"]).status.code(), Some(2));
    assert_eq!(relmaxwell(&["run", "topology"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failed_assertions_exit_with_one() {
    let dir = scratch("fail");
    let cfg = dir.join("strict.json");
    let text = format!(
        r#"{{"schema_version": 1, "pipeline": "maxwell", "geometry": {{"canned": "ball:1"}},
            "output": "{}", "tolerances": {{"energy_drift": 1e-300}}}}"#,
        dir.join("out").display()
    );
    std::fs::write(&cfg, text).unwrap();
    let o = relmaxwell(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("[FAIL] energy_drift"));
    assert_eq!(summary(&dir.join("out"))["passed"], false);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn dumped_meshes_load_back() {
    let dir = scratch("dump");
    let o = relmaxwell(&["dump-mesh", "--geometry", "balls:1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("relmaxwell-mesh 1"));
    let file = dir.join("balls1.mesh");
    std::fs::write(&file, &text).unwrap();
    let tag = OBSTACLE_TAG.to_string();
    let out = dir.join("out");
    let o = relmaxwell(&["run", "topology", "--mesh", file.to_str().unwrap(), "--obstacle-tags", &tag, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(summary(&out)["results"]["dims"][1], 1);
    let o = relmaxwell(&["dump-mesh", "--geometry", "balls:1", "--carved", "--format", "json"]);
    let meta: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(meta.is_object());
    std::fs::remove_dir_all(&dir).unwrap();
}

fn read_triplets(path: &Path) -> (usize, usize, BTreeMap<(usize, usize), f64>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let head: Vec<usize> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    let mut m = BTreeMap::new();
    for l in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        m.insert((t[0].parse().unwrap(), t[1].parse().unwrap()), t[2].parse().unwrap());
    }
    assert_eq!(m.len(), head[2]);
    (head[0], head[1], m)
}

#[test]
fn exported_incidence_matrices_compose_to_zero() {
    let dir = scratch("export");
    let o = relmaxwell(&["export-matrices", "--geometry", "solid_torus", "--output", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for p in 0..2 {
        let (r0, c0, a) = read_triplets(&dir.join(format!("d{p}.txt")));
        let (r1, c1, b) = read_triplets(&dir.join(format!("d{}.txt", p + 1)));
        assert_eq!(c1, r0);
        let mut prod: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (&(i, k), &x) in &b {
            for (&(_, j), &y) in a.range((k, 0)..(k, c0)) {
                *prod.entry((i, j)).or_default() += x * y;
            }
        }
        assert!(prod.values().all(|v| *v == 0.0), "d{} d{p} != 0", p + 1);
        assert!(r1 > 0);
    }
    let (r, c, m) = read_triplets(&dir.join("m1.txt"));
    assert_eq!(r, c);
    for (&(i, j), &v) in &m {
        assert_eq!(m.get(&(j, i)), Some(&v));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
