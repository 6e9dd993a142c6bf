//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//! Thresholds are pinned here rather than read from configuration defaults.

use relmaxwell::config::{Pipeline, ScenarioConfig};
use relmaxwell::forms::{DecOperators, Material};
use relmaxwell::hodge;
use relmaxwell::mesh::{canned, ObstacleScenario};
use relmaxwell::pipeline::{run, write_outputs, Summary};
use relmaxwell::topology::relative_cohomology;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const GEOMETRIES: [(&str, [usize; 2]); 6] = [
    ("balls:1", [1, 0]),
    ("balls:2", [2, 0]),
    ("balls:3", [3, 0]),
    ("solid_torus", [1, 1]),
    ("hopf_link", [2, 2]),
    ("wormhole_obstacle", [2, 1]),
];

const TOPOLOGY_BUDGET: Duration = Duration::from_secs(300);
const GAP_RATIO: f64 = 1e3;
const CAP_COARSE: f64 = 0.05;
const CAP_FINE: f64 = 0.02;
const ADJOINTNESS: f64 = 1e-12;
const HELMHOLTZ: f64 = 1e-10;
const HELMHOLTZ_SAMPLES: usize = 100;
const CONSTRAINT: f64 = 1e-8;
const DRIFT: f64 = 1e-8;
const STATIC: f64 = 1e-10;
const GAUGE: f64 = 1e-8;
const ANTISYMMETRY: f64 = 1e-8;
const POSITIVITY: f64 = -1e-10;
const POSITIVITY_SAMPLES: usize = 50;
const EXACT_PAIRING: f64 = 1e-8;
const WICK: f64 = 1e-10;
const TIME_SHIFT: f64 = 1e-8;
const IDEMPOTENCY: f64 = 1e-10;
const PSI_PAIRING: f64 = 0.02;
const COCLOSED_SPREAD: f64 = 1e-6;
const EPS_GRID: [f64; 3] = [0.8, 0.4, 0.2];
const NULLITY: f64 = 1e-10;
const TRACE_IDENTITY: f64 = 1e-10;
const TWO_PATH: f64 = 1e-8;
const T0K: f64 = 1e-8;
const DIVERGENCE_BAND: f64 = 0.5;
const DECAY_SLOPE: f64 = -3.0;

/// Collects failures of one criterion with enough detail to diagnose them.
#[derive(Default)]
struct Verdict {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Verdict {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn value(s: &Summary, name: &str) -> Option<f64> {
    s.assertions.iter().find(|a| a.name == name).map(|a| a.value)
}

/// Checks an assertion value against a pinned bound; missing values fail.
fn at_most(v: &mut Verdict, s: &Summary, name: &str, bound: f64) {
    match value(s, name) {
        Some(x) => v.check(x <= bound, format!("{}: {name} = {x:e} > {bound:e}", s.geometry)),
        None => v.check(false, format!("{}: {name} missing", s.geometry)),
    }
}

fn at_least(v: &mut Verdict, s: &Summary, name: &str, bound: f64) {
    match value(s, name) {
        Some(x) => v.check(x >= bound, format!("{}: {name} = {x:e} < {bound:e}", s.geometry)),
        None => v.check(false, format!("{}: {name} missing", s.geometry)),
    }
}

fn scenario(name: &str) -> ObstacleScenario {
    let g = canned::build(name).expect("canned geometry");
    ObstacleScenario::carve(g.reference, &g.obstacle_tags).expect("carving")
}

fn hodge_config(name: &str) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::canned(Pipeline::Hodge, name);
    cfg.params.hodge.helmholtz_samples = HELMHOLTZ_SAMPLES;
    cfg.params.hodge.eps_grid = EPS_GRID.to_vec();
    cfg
}

fn criterion_1(cohomology: &mut BTreeMap<&'static str, Vec<usize>>) -> Verdict {
    let mut v = Verdict::default();
    for (name, want) in GEOMETRIES {
        let start = Instant::now();
        let sc = scenario(name);
        let ops = DecOperators::new(&sc.carved, &Material::vacuum()).expect("operators");
        let rep = relative_cohomology(&ops).expect("cohomology");
        let took = start.elapsed();
        v.check([rep.h(1), rep.h(2)] == want, format!("{name}: got ({}, {}), want {want:?}", rep.h(1), rep.h(2)));
        v.check(took <= TOPOLOGY_BUDGET, format!("{name}: {took:?} over budget"));
        v.note(format!("{name} ({}, {}) {:.1}s", rep.h(1), rep.h(2), took.as_secs_f64()));
        cohomology.insert(name, rep.dims.clone());
    }
    v
}

fn criterion_2(hodge: &[Summary], cohomology: &BTreeMap<&'static str, Vec<usize>>) -> Verdict {
    let mut v = Verdict::default();
    for s in hodge {
        let dims = &cohomology[s.geometry.as_str()];
        let kernel = &s.results["kernel_dims"];
        for p in 1..=2 {
            let k = kernel[p].as_u64().unwrap_or(u64::MAX) as usize;
            v.check(k == dims[p], format!("{}: kernel_dim_{p} = {k}, cohomology {}", s.geometry, dims[p]));
            if dims[p] > 0 {
                at_least(&mut v, s, &format!("gap_ratio_{p}"), GAP_RATIO);
            }
        }
    }
    v
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::default();
    let exact = 16.0 * PI / 3.0;
    for (name, tol) in [("concentric_spheres:1", CAP_COARSE), ("concentric_spheres:2", CAP_FINE)] {
        let sc = scenario(name);
        let ops = DecOperators::new(&sc.carved, &Material::vacuum()).expect("operators");
        let cap = hodge::capacity(&sc.carved, &ops).expect("capacity").capacity;
        let err = (cap / exact - 1.0).abs();
        v.check(err <= tol, format!("{name}: cap = {cap:.5}, relative error {err:.4} > {tol}"));
        v.note(format!("{name} {:.2}%", 100.0 * err));
    }
    v
}

fn criterion_4(hodge: &[Summary]) -> Verdict {
    let mut v = Verdict::default();
    for s in hodge {
        v.check(value(s, "d_squared_vanishes") == Some(1.0), format!("{}: d^2 is not zero", s.geometry));
        for p in 1..=3 {
            at_most(&mut v, s, &format!("adjointness_{p}"), ADJOINTNESS);
        }
        at_most(&mut v, s, "helmholtz_orthogonality", HELMHOLTZ);
    }
    v
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::default();
    for name in ["balls:2", "solid_torus"] {
        let mut cfg = ScenarioConfig::canned(Pipeline::Maxwell, name);
        cfg.params.maxwell.horizon_factor = 10.0;
        let s = run(&cfg).expect("maxwell run").summary;
        at_most(&mut v, &s, "constraint_residual", CONSTRAINT);
        at_most(&mut v, &s, "energy_drift", DRIFT);
        at_most(&mut v, &s, "harmonic_static", STATIC);
        at_most(&mut v, &s, "gauge_residual", GAUGE);
    }
    v
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::default();
    for name in ["balls:1", "solid_torus"] {
        let mut cfg = ScenarioConfig::canned(Pipeline::Qft, name);
        cfg.params.qft.positivity_samples = POSITIVITY_SAMPLES;
        let s = run(&cfg).expect("qft run").summary;
        at_most(&mut v, &s, "antisymmetry", ANTISYMMETRY);
        at_least(&mut v, &s, "positivity_min", POSITIVITY);
        at_most(&mut v, &s, "exact_pairing", EXACT_PAIRING);
        at_most(&mut v, &s, "wick", WICK);
        at_most(&mut v, &s, "time_shift", TIME_SHIFT);
    }
    v
}

fn criterion_7(hodge: &[Summary]) -> Verdict {
    let mut v = Verdict::default();
    for s in hodge {
        let l = s.results["kernel_dims"][1].as_f64().unwrap_or(f64::NAN);
        for eps in EPS_GRID {
            at_most(&mut v, s, &format!("q_idempotent_eps_{eps}"), IDEMPOTENCY);
            let rank = value(s, &format!("q_rank_eps_{eps}"));
            v.check(rank == Some(l), format!("{}: rank {rank:?} at eps {eps}, L = {l}", s.geometry));
            at_most(&mut v, s, &format!("psi_eps_pairing_eps_{eps}"), PSI_PAIRING);
        }
        let norms: Vec<f64> = s.results["q_eps"]
            .as_array()
            .map(|a| a.iter().filter_map(|x| x["codiff_norm"].as_f64()).collect())
            .unwrap_or_default();
        v.check(
            norms.len() == EPS_GRID.len() && norms.windows(2).all(|w| w[1] < w[0]),
            format!("{}: |codiff psi_eps| over the eps grid {norms:?}", s.geometry),
        );
        at_most(&mut v, s, "coclosed_eps_spread", COCLOSED_SPREAD);
    }
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::default();
    let mut empty = ScenarioConfig::canned(Pipeline::Stress, "ball:1");
    empty.empty = true;
    let s = run(&empty).expect("empty stress run").summary;
    at_most(&mut v, &s, "nullity", NULLITY);

    let text = r#"{"schema_version": 1, "pipeline": "stress", "geometry": {"canned": "slab:1"},
        "params": {"stress": {"two_path": true, "refinements": [1, 2],
                              "divergence_region": [[3, 1, 1], [5, 2, 2]]}}}"#;
    let cfg = ScenarioConfig::from_json(text).expect("stress config");
    let s = run(&cfg).expect("stress run").summary;
    at_most(&mut v, &s, "trace_identity", TRACE_IDENTITY);
    at_most(&mut v, &s, "two_path_d1", TWO_PATH);
    at_most(&mut v, &s, "two_path_d2", TWO_PATH);
    at_most(&mut v, &s, "t0k_relative", T0K);
    at_most(&mut v, &s, "decay_slope", DECAY_SLOPE);
    let ratios: Vec<_> = s.assertions.iter().filter(|a| a.name.starts_with("divergence_ratio")).collect();
    v.check(!ratios.is_empty(), "no divergence ratio was measured");
    for a in ratios {
        let ok = a.target.is_some_and(|t| (a.value / t - 1.0).abs() <= DIVERGENCE_BAND);
        v.check(ok, format!("{} = {:.3} vs target {:?}", a.name, a.value, a.target));
        v.note(format!("{} = {:.3}", a.name, a.value));
    }
    v
}

fn criterion_9() -> Verdict {
    let mut v = Verdict::default();
    let root = std::env::temp_dir().join(format!("relmaxwell-acceptance-{}", std::process::id()));
    for (p, g) in [(Pipeline::Topology, "balls:2"), (Pipeline::Qft, "balls:1"), (Pipeline::Maxwell, "ball:1")] {
        let mut cfg = ScenarioConfig::canned(p, g);
        cfg.seed = 20260;
        let mut bytes = Vec::new();
        for k in 0..2 {
            let dir = root.join(format!("{}-{k}", p.as_str()));
            let out = run(&cfg).expect("run");
            write_outputs(&out, &cfg, &dir).expect("write");
            bytes.push(std::fs::read(dir.join("summary.json")).expect("read summary"));
        }
        v.check(bytes[0] == bytes[1], format!("{} on {g}: summaries differ", p.as_str()));
    }
    let _ = std::fs::remove_dir_all(&root);
    v
}

fn main() {
    let started = Instant::now();
    let mut cohomology = BTreeMap::new();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    results.push((1, "cohomology ground truth", criterion_1(&mut cohomology)));
    let hodge: Vec<Summary> = GEOMETRIES
        .iter()
        .map(|(name, _)| run(&hodge_config(name)).expect("hodge run").summary)
        .collect();
    results.push((2, "discrete Hodge theorem", criterion_2(&hodge, &cohomology)));
    results.push((3, "capacity", criterion_3()));
    results.push((4, "structural exactness", criterion_4(&hodge)));
    results.push((5, "evolution", criterion_5()));
    results.push((6, "quantum pairings", criterion_6()));
    results.push((7, "Q_eps suite", criterion_7(&hodge)));
    results.push((8, "stress-energy", criterion_8()));
    results.push((9, "determinism", criterion_9()));

    let mut failed = 0;
    for (n, title, v) in &results {
        let tag = if v.failures.is_empty() { "PASS" } else { "FAIL" };
        let extra = if v.notes.is_empty() { String::new() } else { format!(" [{}]", v.notes.join("; ")) };
        println!("[{tag}] criterion {n}: {title}{extra}");
        for f in &v.failures {
            println!("       {f}");
        }
        failed += usize::from(!v.failures.is_empty());
    }
    println!("acceptance: {} of {} criteria passed in {:.0}s", results.len() - failed, results.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
