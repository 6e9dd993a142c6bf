use relmaxwell::config::{Pipeline, ScenarioConfig};
use relmaxwell::pipeline::{run, write_outputs};
use relmaxwell::Error;

#[test]
fn identical_configs_give_identical_summaries() {
    for (p, g) in [(Pipeline::Topology, "balls:2"), (Pipeline::Maxwell, "ball:1"), (Pipeline::Qft, "balls:1")] {
        let mut cfg = ScenarioConfig::canned(p, g);
        cfg.seed = 17;
        let a = run(&cfg).unwrap().summary.to_json();
        let b = run(&cfg).unwrap().summary.to_json();
        assert_eq!(a, b, "{g}");
    }
}

#[test]
fn seeds_change_random_results() {
    let mut cfg = ScenarioConfig::canned(Pipeline::Maxwell, "ball:1");
    cfg.seed = 1;
    let a = run(&cfg).unwrap().summary;
    cfg.seed = 2;
    let b = run(&cfg).unwrap().summary;
    assert!(a.passed && b.passed);
    assert_ne!(a.results, b.results);
}

#[test]
fn outputs_are_written() {
    let dir = std::env::temp_dir().join(format!("relmaxwell-pipeline-{}", std::process::id()));
    let cfg = ScenarioConfig::canned(Pipeline::Stress, "slab:1");
    let out = run(&cfg).unwrap();
    assert!(out.summary.passed, "{:?}", out.summary.failures());
    let files = write_outputs(&out, &cfg, &dir).unwrap();
    let names: Vec<String> = files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for want in ["summary.json", "config.json", "cells.csv", "decay.csv"] {
        assert!(names.iter().any(|n| n == want), "{want} in {names:?}");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pipeline"], "stress");
    assert_eq!(summary["passed"], true);
    let back = ScenarioConfig::from_json(&std::fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(back, cfg);
    let csv = std::fs::read_to_string(dir.join("cells.csv")).unwrap();
    let cells = out.tables.iter().find(|t| t.name == "cells").unwrap();
    assert_eq!(csv.lines().count(), cells.rows.len() + 1);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), cells.header.len());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn empty_obstacle_skips_cohomology_expectations() {
    let mut cfg = ScenarioConfig::canned(Pipeline::Topology, "balls:2");
    cfg.empty = true;
    let s = run(&cfg).unwrap().summary;
    assert!(s.passed);
    assert!(s.assertions.iter().all(|a| !a.name.starts_with("relative_h")));
    assert_eq!(s.results["dims"][3], 1);
}

#[test]
fn invalid_geometry_is_an_error() {
    let cfg = ScenarioConfig::canned(Pipeline::Topology, "balls(0)");
    assert!(matches!(run(&cfg), Err(Error::Config { .. })));
}
