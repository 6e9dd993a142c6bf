//! Scenario runs: build the geometry, execute one pipeline, collect named
//! checks and write `summary.json` plus CSV tables.
//!
//! The summary is a pure function of the configuration (no timings, keys
//! sorted), so two runs with the same seed produce identical bytes.

use crate::config::{GeometrySpec, MeshFormat, Pipeline, ScenarioConfig, StressMethod};
use crate::forms::{d_squared_vanishes, DecOperators, Material};
use crate::hodge::{self, Cutoff, ProjectorQ};
use crate::maxwell::{MaxwellSystem, PotentialSystem, Sources};
use crate::mesh::canned::{self, VoxelInfo};
use crate::mesh::{format, ObstacleScenario};
use crate::profile::Profile;
use crate::qft::{KreinVector, QuantumContext, TestForm};
use crate::spectral;
use crate::stress::{self, Method, StressContext, Which};
use crate::topology::relative_cohomology;
use crate::{linalg, Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Equal,
    /// |value / target - 1| <= tolerance
    RelativeBand,
}

/// One named check.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Default)]
struct Checks(Vec<Assertion>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, value: f64, relation: Relation, threshold: f64, target: Option<f64>) {
        let pass = value.is_finite()
            && match relation {
                Relation::AtMost => value <= threshold,
                Relation::AtLeast => value >= threshold,
                Relation::Equal => value == threshold,
                Relation::RelativeBand => target.is_some_and(|t| (value / t - 1.0).abs() <= threshold),
            };
        self.0.push(Assertion { name: name.into(), value, relation, threshold, target, pass });
    }

    fn at_most(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.push(name, value, Relation::AtMost, tol, None);
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.push(name, value, Relation::AtLeast, tol, None);
    }

    fn equal(&mut self, name: impl Into<String>, value: f64, expected: f64) {
        self.push(name, value, Relation::Equal, expected, None);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub pipeline: Pipeline,
    pub geometry: String,
    pub empty: bool,
    pub seed: u64,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub results: Value,
}

impl Summary {
    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.pass).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialises");
        s.push('\n');
        s
    }
}

/// A numeric CSV table.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::io(self.name.clone(), std::io::Error::other(e));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(self.name.clone(), std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub tables: Vec<Table>,
}

/// Geometry of a run together with canned metadata when available.
pub struct Scene {
    pub scenario: ObstacleScenario,
    /// canned name as configured, e.g. `slab:2`
    pub canned: Option<String>,
    pub voxels: Option<VoxelInfo>,
    pub expected_cohomology: Option<[usize; 2]>,
}

pub fn geometry_label(spec: &GeometrySpec) -> String {
    match spec {
        GeometrySpec::Canned { canned } => canned.clone(),
        GeometrySpec::File { mesh, .. } => mesh.display().to_string(),
    }
}

pub fn build_scene(cfg: &ScenarioConfig) -> Result<Scene> {
    let carve = |reference, tags: &[u32]| {
        if cfg.empty {
            Ok(ObstacleScenario::without_obstacle(reference))
        } else {
            ObstacleScenario::carve(reference, tags)
        }
    };
    match &cfg.geometry {
        GeometrySpec::Canned { canned } => {
            let g = canned::build(canned)?;
            Ok(Scene {
                scenario: carve(g.reference, &g.obstacle_tags)?,
                canned: Some(canned.clone()),
                voxels: g.voxels,
                expected_cohomology: if cfg.empty { None } else { g.expected_cohomology },
            })
        }
        GeometrySpec::File { mesh, format: fmt, obstacle_tags } => {
            let reference = match fmt {
                MeshFormat::Relmaxwell => format::load_complex(mesh)?,
                MeshFormat::Gmsh => {
                    let text =
                        std::fs::read_to_string(mesh).map_err(|e| Error::io(mesh.display().to_string(), e))?;
                    format::parse_gmsh(&text)?
                }
            };
            Ok(Scene { scenario: carve(reference, obstacle_tags)?, canned: None, voxels: None, expected_cohomology: None })
        }
    }
}

/// Runs the configured pipeline. Numerical failures of checks are reported
/// in the summary; errors are reserved for invalid input or broken solves.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let material = cfg.material()?;
    let scene = build_scene(cfg)?;
    material.validate(&scene.scenario.reference)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Checks::default();
    let mut tables = Vec::new();
    let results = match cfg.pipeline {
        Pipeline::Topology => run_topology(&scene, &material, &mut checks)?,
        Pipeline::Hodge => run_hodge(cfg, &scene, &material, &mut rng, &mut checks, &mut tables)?,
        Pipeline::Maxwell => run_maxwell(cfg, &scene, &material, &mut rng, &mut checks, &mut tables)?,
        Pipeline::Qft => run_qft(cfg, &scene, &material, &mut rng, &mut checks)?,
        Pipeline::Stress => run_stress(cfg, &scene, &material, &mut checks, &mut tables)?,
    };
    let passed = checks.0.iter().all(|a| a.pass);
    let summary = Summary {
        schema_version: cfg.schema_version,
        pipeline: cfg.pipeline,
        geometry: geometry_label(&cfg.geometry),
        empty: cfg.empty,
        seed: cfg.seed,
        passed,
        assertions: checks.0,
        results,
    };
    Ok(RunOutcome { summary, tables })
}

/// Writes `summary.json`, the resolved `config.json` and every table into
/// `dir`; returns the written paths.
pub fn write_outputs(outcome: &RunOutcome, cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |p: &Path, e| Error::io(p.display().to_string(), e);
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files = vec![
        (dir.join("summary.json"), outcome.summary.to_json()),
        (dir.join("config.json"), cfg.to_json() + "\n"),
    ];
    for t in &outcome.tables {
        files.push((dir.join(format!("{}.csv", t.name)), t.to_csv()?));
    }
    for (path, text) in &files {
        std::fs::write(path, text).map_err(|e| io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_bump(rng: &mut ChaCha8Rng) -> Profile {
    Profile::bump(rng.gen_range(-1.0..1.0), rng.gen_range(0.3..0.8), 4)
}

fn random_test_form(ops: &DecOperators, degree: usize, rng: &mut ChaCha8Rng) -> Result<TestForm> {
    let profile = random_bump(rng);
    let a = random_vec(rng, ops.n(degree - 1));
    let b = random_vec(rng, ops.n(degree));
    TestForm::single(ops, degree, profile, a, b)
}

fn sub_norm(ops: &DecOperators, p: usize, x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    ops.norm(p, &d)
}

fn run_topology(scene: &Scene, material: &Material, checks: &mut Checks) -> Result<Value> {
    let cx = &scene.scenario.carved;
    let ops = DecOperators::new(cx, material)?;
    let rep = relative_cohomology(&ops)?;
    let alt = |v: &[usize]| v.iter().enumerate().map(|(p, &x)| if p % 2 == 0 { x as i64 } else { -(x as i64) }).sum::<i64>();
    checks.equal("euler_characteristic", alt(&rep.dims) as f64, alt(&rep.cochains) as f64);
    if let Some(exp) = scene.expected_cohomology {
        for p in 1..=2 {
            checks.equal(format!("relative_h{p}"), rep.h(p) as f64, exp[p - 1] as f64);
        }
    }
    Ok(json!({
        "dims": rep.dims,
        "ranks": rep.ranks,
        "cochains": rep.cochains,
        "simplices": cx.counts(),
        "boundary_components": cx.boundary_components().len(),
        "connected": cx.is_connected(),
    }))
}

fn run_hodge(
    cfg: &ScenarioConfig,
    scene: &Scene,
    material: &Material,
    rng: &mut ChaCha8Rng,
    checks: &mut Checks,
    tables: &mut Vec<Table>,
) -> Result<Value> {
    let tol = &cfg.tolerances;
    let prm = &cfg.params.hodge;
    let cx = &scene.scenario.carved;
    let ops = DecOperators::new(cx, material)?;
    let d = ops.dim();
    checks.equal("d_squared_vanishes", d_squared_vanishes(cx) as u8 as f64, 1.0);
    for p in 1..=d {
        checks.at_most(format!("adjointness_{p}"), ops.adjointness_residual(p), tol.adjointness);
    }
    let rep = relative_cohomology(&ops)?;
    let mut spectrum = Table::new("spectrum", &["degree", "index", "eigenvalue"]);
    let mut decs = Vec::new();
    let mut kernels = Vec::new();
    for p in 0..=d {
        let (lap, dec) = spectral::decompose(&ops, p)?;
        checks.equal(format!("kernel_dim_{p}"), dec.kernel_dim as f64, rep.h(p) as f64);
        if dec.kernel_dim > 0 && dec.kernel_dim < dec.n() {
            checks.at_least(format!("gap_ratio_{p}"), dec.gap_ratio, tol.gap_ratio);
        }
        for (i, l) in dec.eigenvalues.iter().enumerate() {
            spectrum.rows.push(vec![p as f64, i as f64, *l]);
        }
        kernels.push(dec.kernel_dim);
        decs.push((lap, dec));
    }
    tables.push(spectrum);

    let (lap1, dec1) = &decs[1];
    let mut worst_orth: f64 = 0.0;
    let mut worst_harm: f64 = 0.0;
    for _ in 0..prm.helmholtz_samples {
        let phi = random_vec(rng, ops.n(1));
        let h = hodge::helmholtz(&ops, lap1, dec1, &phi)?;
        let n2 = ops.inner(1, &phi, &phi);
        let pairs = [(&h.exact, &h.coexact), (&h.exact, &h.harmonic), (&h.coexact, &h.harmonic)];
        for (a, b) in pairs {
            worst_orth = worst_orth.max(ops.inner(1, a, b).abs() / n2);
        }
        worst_harm = worst_harm.max(sub_norm(&ops, 1, &h.harmonic, &dec1.project_kernel(&phi)) / n2.sqrt());
    }
    checks.at_most("helmholtz_orthogonality", worst_orth, tol.helmholtz);
    checks.at_most("helmholtz_harmonic_part", worst_harm, tol.helmholtz);

    let mut results = json!({
        "cohomology": rep.dims,
        "kernel_dims": kernels,
        "gap_ratios": decs.iter().map(|(_, d)| d.gap_ratio).collect::<Vec<_>>(),
        "lambda_min_1": dec1.lambda_min(),
        "lambda_max_1": dec1.lambda_max(),
    });
    if !scene.scenario.has_obstacle() || !cx.is_connected() {
        results["capacity"] = Value::Null;
        return Ok(results);
    }
    let cap = hodge::capacity(cx, &ops)?;
    results["capacity"] = json!(cap.capacity);
    if let Some(name) = scene.canned.as_deref().filter(|n| n.starts_with("concentric_spheres")) {
        let (outer, inner) = (4.0, 1.0);
        let exact = 4.0 * std::f64::consts::PI * outer * inner / (outer - inner);
        let rel = (cap.capacity - exact).abs() / exact;
        results["capacity_exact"] = json!(exact);
        checks.at_most(format!("capacity_error_{name}"), rel, tol.capacity);
    }
    let basis = hodge::harmonic_basis_with_charges(cx, &ops, dec1, &cap)?;
    checks.at_most("harmonic_orthonormality", basis.orthonormality_defect(&ops), tol.projection);
    results["n_top"] = json!(basis.n_top);
    results["n_charge"] = json!(basis.n_charge);
    let cutoff = match Cutoff::from_geometry(cx, prm.eps_fit) {
        Ok(c) => c,
        Err(Error::Precondition(why)) => {
            results["q_eps"] = json!({ "skipped": why });
            return Ok(results);
        }
        Err(e) => return Err(e),
    };
    let (_, dec0) = &decs[0];
    let h1 = random_test_form(&ops, 2, rng)?;
    let h2 = random_test_form(&ops, 2, rng)?;
    let (c1, c2) = (h1.codiff(&ops)?, h2.codiff(&ops)?);
    let probes: Vec<Vec<f64>> = (0..basis.len() + 2).map(|_| random_vec(rng, ops.n(1))).collect();
    let mut per_eps = Vec::new();
    let mut codiff_norms = Vec::new();
    let mut coclosed = Vec::new();
    for &eps in &prm.eps_grid {
        let q = ProjectorQ::build(cx, &ops, &basis, &cap, eps, &cutoff)?;
        let pe = q.psi_eps().expect("projector built with a capacitor");
        let mut idem: f64 = 0.0;
        let images: Vec<Vec<f64>> = probes.iter().map(|x| q.apply_q0(x)).collect();
        for (x, y) in probes.iter().zip(&images) {
            idem = idem.max(sub_norm(&ops, 1, &q.apply_q0(y), y) / ops.norm(1, x));
        }
        let gram = faer::Mat::from_fn(images.len(), images.len(), |i, j| ops.inner(1, &images[i], &images[j]));
        let (vals, _) = linalg::eigh(&gram)?;
        let top = vals.iter().copied().fold(0.0, f64::max);
        let rank = vals.iter().filter(|&&v| v > 1e-10 * top).count();
        let l = basis.len();
        let pairing = basis
            .vectors
            .iter()
            .enumerate()
            .map(|(k, psi)| (ops.inner(1, pe, psi) - if k + 1 == l { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        let dn = ops.norm(0, &ops.codiff(1, pe));
        checks.at_most(format!("q_idempotent_eps_{eps}"), idem, tol.projection);
        checks.equal(format!("q_rank_eps_{eps}"), rank as f64, l as f64);
        checks.at_most(format!("psi_eps_pairing_eps_{eps}"), pairing, tol.psi_pairing);
        let ctx = QuantumContext::new(&ops, dec0, dec1, &q, basis.n_top)?;
        let z = ctx.krein_product(&ctx.kappa(&c1)?, &ctx.kappa(&c2)?)?;
        coclosed.push(z);
        codiff_norms.push((eps, dn));
        per_eps.push(json!({"eps": eps, "codiff_norm": dn, "pairing_defect": pairing, "idempotency": idem, "rank": rank}));
    }
    let mut ordered = codiff_norms.clone();
    ordered.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = ordered.windows(2).all(|w| w[1].1 < w[0].1);
    checks.equal("codiff_psi_eps_decreasing", decreasing as u8 as f64, 1.0);
    if let Some(z0) = coclosed.first() {
        let spread = coclosed.iter().map(|z| (z - z0).norm()).fold(0.0, f64::max) / z0.norm().max(f64::MIN_POSITIVE);
        checks.at_most("coclosed_eps_spread", spread, tol.coclosed_spread);
    }
    results["q_eps"] = Value::Array(per_eps);
    Ok(results)
}

fn run_maxwell(
    cfg: &ScenarioConfig,
    scene: &Scene,
    material: &Material,
    rng: &mut ChaCha8Rng,
    checks: &mut Checks,
    tables: &mut Vec<Table>,
) -> Result<Value> {
    let tol = &cfg.tolerances;
    let prm = &cfg.params.maxwell;
    let ops = DecOperators::new(&scene.scenario.carved, material)?;
    if ops.dim() < 2 {
        return Err(Error::Dimension("Maxwell evolution needs dimension two or more".into()));
    }
    let (_, dec0) = spectral::decompose(&ops, 0)?;
    let (_, dec1) = spectral::decompose(&ops, 1)?;
    let (_, dec2) = spectral::decompose(&ops, 2)?;
    let sys = MaxwellSystem::new(&ops, &dec1, &dec2)?;
    let horizon = prm.horizon_factor / dec1.lambda_min();
    let targets: Vec<f64> = (0..prm.time_samples).map(|i| horizon * i as f64 / (prm.time_samples - 1) as f64).collect();
    let none = Sources::none();
    let mut energy = Table::new("energy", &["trial", "t", "energy", "residual"]);
    let (mut drift, mut resid): (f64, f64) = (0.0, 0.0);
    let mut first_e0 = Vec::new();
    for trial in 0..prm.trials {
        let mut e0 = ops.codiff(2, &random_vec(rng, ops.n(2)));
        let mut b0 = ops.apply_d(1, &random_vec(rng, ops.n(1)));
        let s = sys.energy(&sys.state(0.0, e0.clone(), b0.clone(), &none)).sqrt();
        e0.iter_mut().chain(b0.iter_mut()).for_each(|x| *x /= s);
        let st0 = sys.state(0.0, e0.clone(), b0, &none);
        let en0 = sys.energy(&st0);
        for st in sys.evolve(&st0, &none, &targets)? {
            let r = sys.residuals(&st, &none).max();
            let en = sys.energy(&st);
            drift = drift.max((en - en0).abs() / en0);
            resid = resid.max(r);
            energy.rows.push(vec![trial as f64, st.t, en, r]);
        }
        if trial == 0 {
            first_e0 = e0;
        }
    }
    checks.at_most("energy_drift", drift, tol.energy_drift);
    checks.at_most("constraint_residual", resid, tol.constraint);
    tables.push(energy);

    let mut results = json!({
        "horizon": horizon,
        "lambda_min_1": dec1.lambda_min(),
        "energy_drift": drift,
        "max_residual": resid,
        "harmonic_dim": dec1.kernel_dim,
    });

    if dec1.kernel_dim > 0 {
        let e0 = linalg::col_vec(dec1.kernel_basis().as_ref(), 0);
        let st0 = sys.state(0.0, e0.clone(), vec![0.0; ops.n(2)], &none);
        let mut worst: f64 = 0.0;
        for st in sys.evolve(&st0, &none, &targets)? {
            worst = worst.max(sub_norm(&ops, 1, &st.e, &e0)).max(ops.norm(2, &st.b));
        }
        checks.at_most("harmonic_static", worst, tol.static_field);
        results["harmonic_static"] = json!(worst);
    }

    let src = Sources::conserved(&ops, Profile::bump(0.5 * horizon, 0.25 * horizon, 4), random_vec(rng, ops.n(1)));
    let zero = sys.state(0.0, vec![0.0; ops.n(1)], vec![0.0; ops.n(2)], &src);
    let mut src_resid: f64 = 0.0;
    for st in sys.evolve(&zero, &src, &targets)? {
        src_resid = src_resid.max(sys.residuals(&st, &src).max());
    }
    let continuity = src.continuity_defect(&ops, &targets);
    checks.at_most("sourced_residual", src_resid, tol.constraint);
    checks.at_most("continuity_defect", continuity, tol.constraint);
    results["sourced_residual"] = json!(src_resid);
    results["continuity_defect"] = json!(continuity);

    let pot = PotentialSystem::new(&ops, &dec0, &dec1)?;
    let a0 = ops.codiff(2, &random_vec(rng, ops.n(2)));
    let a_dot0: Vec<f64> = first_e0.iter().map(|x| -x).collect();
    let field0 = sys.state(0.0, first_e0.clone(), ops.apply_d(1, &a0), &none);
    let fields = sys.evolve(&field0, &none, &targets)?;
    let (mut gauge, mut agree): (f64, f64) = (0.0, 0.0);
    for (ps, fs) in pot.evolve(&a0, &a_dot0, &none, &targets)?.iter().zip(&fields) {
        gauge = gauge.max(pot.gauge_residual(ps));
        let (e, b) = pot.fields(ps);
        agree = agree.max(sub_norm(&ops, 1, &e, &fs.e)).max(sub_norm(&ops, 2, &b, &fs.b));
    }
    checks.at_most("gauge_residual", gauge, tol.gauge);
    checks.at_most("potential_field_agreement", agree, tol.constraint);
    results["gauge_residual"] = json!(gauge);
    results["potential_field_agreement"] = json!(agree);
    Ok(results)
}

fn run_qft(
    cfg: &ScenarioConfig,
    scene: &Scene,
    material: &Material,
    rng: &mut ChaCha8Rng,
    checks: &mut Checks,
) -> Result<Value> {
    let tol = &cfg.tolerances;
    let prm = &cfg.params.qft;
    let cx = &scene.scenario.carved;
    let ops = DecOperators::new(cx, material)?;
    let (_, dec0) = spectral::decompose(&ops, 0)?;
    let (_, dec1) = spectral::decompose(&ops, 1)?;
    let (basis, q) = if scene.scenario.has_obstacle() && cx.is_connected() {
        let cap = hodge::capacity(cx, &ops)?;
        let basis = hodge::harmonic_basis_with_charges(cx, &ops, &dec1, &cap)?;
        let cutoff = Cutoff::from_geometry(cx, prm.eps_fit)?;
        let q = ProjectorQ::build(cx, &ops, &basis, &cap, prm.eps, &cutoff)?;
        (basis, q)
    } else {
        let basis = hodge::harmonic_basis(&dec1);
        let q = ProjectorQ::plain(&ops, &basis);
        (basis, q)
    };
    let ctx = QuantumContext::new(&ops, &dec0, &dec1, &q, basis.n_top)?;
    let omega = |a: &TestForm, b: &TestForm| ctx.omega2_f(a, b);

    let mut min_pos = f64::INFINITY;
    let mut max_pos: f64 = 0.0;
    let mut self_im: f64 = 0.0;
    for _ in 0..prm.positivity_samples {
        let h = random_test_form(&ops, 2, rng)?;
        let w = omega(&h, &h)?;
        min_pos = min_pos.min(w.re);
        max_pos = max_pos.max(w.re);
        self_im = self_im.max(w.im.abs() / w.re.abs().max(f64::MIN_POSITIVE));
    }
    checks.at_least("positivity_min", min_pos, -tol.positivity);
    checks.at_most("self_pairing_imaginary", self_im, tol.antisymmetry);

    let (mut anti, mut exact, mut wave, mut wick, mut shift): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..prm.pair_samples {
        let h1 = random_test_form(&ops, 2, rng)?;
        let h2 = random_test_form(&ops, 2, rng)?;
        let w12 = omega(&h1, &h2)?;
        let w21 = omega(&h2, &h1)?;
        let (w11, w22) = (omega(&h1, &h1)?.re, omega(&h2, &h2)?.re);
        let scale = (w11 * w22).sqrt().max(f64::MIN_POSITIVE);
        let g = ctx.pairing_g(&h1.codiff(&ops)?, &h2.codiff(&ops)?)?;
        anti = anti.max((w12 - w21 + Complex64::new(0.0, g)).norm() / scale);

        let g1 = random_test_form(&ops, 1, rng)?;
        let dg = g1.exterior(&ops)?;
        let kd = ctx.kappa(&dg.codiff(&ops)?)?;
        let kh = ctx.kappa(&h1.codiff(&ops)?)?;
        let denom = (positive_norm(&ops, &kd) * positive_norm(&ops, &kh)).max(f64::MIN_POSITIVE);
        exact = exact.max(omega(&dg, &h1)?.re.abs() / denom);
        let kw = ctx.kappa(&g1.wave(&ops)?)?;
        let kg = ctx.kappa(&g1)?;
        wave = wave.max(positive_norm(&ops, &kw) / positive_norm(&ops, &kg).max(f64::MIN_POSITIVE));

        let h3 = random_test_form(&ops, 2, rng)?;
        let h4 = random_test_form(&ops, 2, rng)?;
        let f = [h1.clone(), h2.clone(), h3, h4];
        let w = |i: usize, j: usize| omega(&f[i], &f[j]);
        let terms = [w(0, 1)? * w(2, 3)?, w(0, 2)? * w(1, 3)?, w(0, 3)? * w(1, 2)?];
        let expect: Complex64 = terms.iter().sum();
        let size: f64 = terms.iter().map(|t| t.norm()).sum();
        wick = wick.max((ctx.wick_npoint(&f)? - expect).norm() / size.max(f64::MIN_POSITIVE));
        if ctx.wick_npoint(&f[..3])?.norm() != 0.0 {
            wick = f64::INFINITY;
        }

        for &s in &prm.shifts {
            let ws = omega(&h1.shifted(s), &h2.shifted(s))?;
            shift = shift.max((ws - w12).norm() / w12.norm().max(f64::MIN_POSITIVE));
        }
    }
    checks.at_most("antisymmetry", anti, tol.antisymmetry);
    checks.at_most("exact_pairing", exact, tol.exact_pairing);
    checks.at_most("wave_kernel", wave, tol.exact_pairing);
    checks.at_most("wick", wick, tol.wick);
    checks.at_most("time_shift", shift, tol.time_shift);
    Ok(json!({
        "harmonic_dim": basis.len(),
        "n_top": basis.n_top,
        "n_charge": basis.n_charge,
        "eps": if q.psi_eps().is_some() { json!(q.eps) } else { Value::Null },
        "positivity_min": min_pos,
        "positivity_max": max_pos,
        "antisymmetry": anti,
        "exact_pairing": exact,
        "wave_kernel": wave,
        "wick": wick,
        "time_shift": shift,
    }))
}

/// Hilbert norm of a Krein vector: both components counted positively.
fn positive_norm(ops: &DecOperators, k: &KreinVector) -> f64 {
    let sq = |p: usize, x: &[f64]| ops.inner(p, x, x);
    (sq(1, &k.vector_re) + sq(1, &k.vector_im) + sq(0, &k.scalar_re) + sq(0, &k.scalar_im)).sqrt()
}

fn method_of(cfg: &ScenarioConfig, kind: StressMethod) -> Method {
    match kind {
        StressMethod::Eigen => Method::Eigen,
        StressMethod::Quadrature => Method::Quadrature { nodes: cfg.params.stress.quadrature_nodes },
    }
}

fn relative_frobenius(a: &faer::Mat<f64>, b: &faer::Mat<f64>) -> f64 {
    let diff = a - b;
    linalg::frobenius(diff.as_ref()) / linalg::frobenius(a.as_ref()).max(linalg::frobenius(b.as_ref())).max(f64::MIN_POSITIVE)
}

fn run_stress(
    cfg: &ScenarioConfig,
    scene: &Scene,
    material: &Material,
    checks: &mut Checks,
    tables: &mut Vec<Table>,
) -> Result<Value> {
    let tol = &cfg.tolerances;
    let prm = &cfg.params.stress;
    let sc = &scene.scenario;
    let ctx = StressContext::new(sc, material)?;
    let method = method_of(cfg, prm.method);
    let d1 = ctx.operator_difference(Which::D1, method)?;
    let d2 = ctx.operator_difference(Which::D2, method)?;
    let report = ctx.assemble(&d1, &d2)?;
    let scale = report.max_abs().max(f64::MIN_POSITIVE);
    if !sc.has_obstacle() {
        checks.at_most("nullity", report.max_abs(), tol.nullity);
    }
    checks.at_most("trace_identity", report.trace_identity_residual, tol.trace_identity);
    checks.at_most("t0k_relative", report.t0k_residual, tol.t0k);
    checks.at_most("d1_asymmetry", report.d1_asymmetry, tol.symmetry);
    checks.at_most("tensor_trace", report.tensor_trace_residual / scale, tol.symmetry);
    checks.at_most("tensor_asymmetry", report.tensor_asymmetry / scale, tol.symmetry);

    let mut cells = Table::new(
        "cells",
        &[
            "cell", "x", "y", "z", "volume", "t00", "h_xx", "h_xy", "h_xz", "h_yx", "h_yy", "h_yz", "h_zx", "h_zy",
            "h_zz", "t0x", "t0y", "t0z", "near_boundary",
        ],
    );
    for c in &report.cells {
        let mut row = vec![c.cell as f64];
        row.extend(c.centroid);
        row.extend([c.volume, c.t00]);
        row.extend(c.h.iter().flatten());
        row.extend(c.t0k);
        row.push(c.near_boundary as u8 as f64);
        cells.rows.push(row);
    }
    tables.push(cells);

    let mut results = json!({
        "method": prm.method,
        "cells": report.cells.len(),
        "trace_total": report.trace_total,
        "cell_sum": report.cell_sum,
        "trace_identity_residual": report.trace_identity_residual,
        "t0k_residual": report.t0k_residual,
        "t0k_control": report.t0k_control,
        "d1_asymmetry": report.d1_asymmetry,
        "max_abs_t00": report.max_abs_t00(),
        "max_abs": report.max_abs(),
    });

    if prm.two_path {
        let other = match prm.method {
            StressMethod::Eigen => method_of(cfg, StressMethod::Quadrature),
            StressMethod::Quadrature => Method::Eigen,
        };
        let e1 = relative_frobenius(&d1.kernel, &ctx.operator_difference(Which::D1, other)?.kernel);
        let e2 = relative_frobenius(&d2.kernel, &ctx.operator_difference(Which::D2, other)?.kernel);
        checks.at_most("two_path_d1", e1, tol.two_path);
        checks.at_most("two_path_d2", e2, tol.two_path);
        results["two_path"] = json!({"d1": e1, "d2": e2});
    }

    if sc.has_obstacle() {
        let window = ctx.interior_window(prm.window_depth);
        if window.is_empty() {
            results["decay"] = Value::Null;
        } else {
            let dec = ctx.decomposition();
            let lambdas = stress::log_grid(dec.lambda_min(), dec.lambda_max(), prm.lambda_points);
            let decay = ctx.resolvent_decay(&window, &lambdas)?;
            checks.at_most("decay_slope", decay.slope_upper, -tol.decay_slope);
            let mut t = Table::new("decay", &["lambda", "norm"]);
            t.rows = decay.lambdas.iter().zip(&decay.norms).map(|(l, n)| vec![*l, *n]).collect();
            tables.push(t);
            results["decay"] =
                json!({"window": decay.window, "slope_upper": decay.slope_upper, "weighted_sum": decay.weighted_sum});
        }
    }

    if !prm.refinements.is_empty() {
        let base = scene.canned.as_deref().ok_or_else(|| Error::config("/geometry", "refinements need a canned geometry"))?;
        let base = base.split(':').next().unwrap_or(base);
        let [lo, hi] = prm.divergence_region.expect("validated with refinements");
        let mut levels = Vec::new();
        let mut table = Table::new("divergence", &["h", "vx", "vy", "vz", "div_x", "div_y", "div_z"]);
        for &r in &prm.refinements {
            let g = canned::build(&format!("{base}:{r}"))?;
            let voxels = g.voxels.ok_or_else(|| Error::Precondition(format!("{base} has no voxel structure")))?;
            let sc_r = if cfg.empty {
                ObstacleScenario::without_obstacle(g.reference)
            } else {
                ObstacleScenario::carve(g.reference, &g.obstacle_tags)?
            };
            let ctx_r = StressContext::new(&sc_r, material)?;
            let rep = ctx_r.report(method)?;
            let cv = stress::carved_cell_voxels(&sc_r, &voxels);
            let lvl = stress::divergence_residual(&rep, &sc_r.carved, material, &voxels, &cv, (lo, hi))?;
            for (v, d) in &lvl.per_voxel {
                table.rows.push(vec![lvl.h, v[0] as f64, v[1] as f64, v[2] as f64, d[0], d[1], d[2]]);
            }
            levels.push(lvl);
        }
        for w in levels.windows(2) {
            let ratio = w[1].max / w[0].max;
            let expected = w[1].h / w[0].h;
            checks.push(
                format!("divergence_ratio_h_{}_{}", w[0].h, w[1].h),
                ratio,
                Relation::RelativeBand,
                tol.divergence_band,
                Some(expected),
            );
        }
        tables.push(table);
        results["divergence"] = Value::Array(
            levels
                .iter()
                .map(|l| json!({"h": l.h, "evaluated": l.evaluated, "flagged": l.flagged, "rms": l.rms, "max": l.max}))
                .collect(),
        );
    }
    Ok(results)
}
