//! Scenario configuration files.
//!
//! A configuration is one JSON document:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "pipeline": "stress",
//!   "geometry": { "canned": "slab" },
//!   "empty": false,
//!   "materials": [ { "tag": 0, "epsilon": 1.0, "mu": 1.0 } ],
//!   "seed": 7,
//!   "output": "out/stress",
//!   "params": { "stress": { "lambda_points": 16 } },
//!   "tolerances": { "trace_identity": 1e-10 }
//! }
//! ```
//!
//! Every key except `schema_version`, `pipeline` and `geometry` is optional.
//! Errors carry JSON-pointer paths. The environment variable
//! `RELMAXWELL_OUTPUT`, when set, replaces `output`; nothing else can be
//! overridden from the environment.

use crate::forms::Material;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_ENV: &str = "RELMAXWELL_OUTPUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Topology,
    Hodge,
    Maxwell,
    Qft,
    Stress,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [Pipeline::Topology, Pipeline::Hodge, Pipeline::Maxwell, Pipeline::Qft, Pipeline::Stress];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::Topology => "topology",
            Pipeline::Hodge => "hodge",
            Pipeline::Maxwell => "maxwell",
            Pipeline::Qft => "qft",
            Pipeline::Stress => "stress",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Pipeline::Topology => "relative cohomology by exact integer elimination",
            Pipeline::Hodge => "Laplacian kernels, structural identities, capacity and the Q_eps projector",
            Pipeline::Maxwell => "spectral field and potential evolution with conservation checks",
            Pipeline::Qft => "Krein data, two-point function, Wick rule and time invariance",
            Pipeline::Stress => "renormalised T00, Maxwell tensor, energy flux and resolvent decay",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config("/pipeline", format!("unknown pipeline '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshFormat {
    Relmaxwell,
    Gmsh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GeometrySpec {
    Canned { canned: String },
    File {
        mesh: PathBuf,
        #[serde(default = "default_format")]
        format: MeshFormat,
        #[serde(default)]
        obstacle_tags: Vec<u32>,
    },
}

fn default_format() -> MeshFormat {
    MeshFormat::Relmaxwell
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialRegion {
    pub tag: u32,
    pub epsilon: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HodgeParams {
    pub eps_grid: Vec<f64>,
    pub eps_fit: f64,
    pub helmholtz_samples: usize,
}

impl Default for HodgeParams {
    fn default() -> Self {
        HodgeParams { eps_grid: vec![0.8, 0.4, 0.2], eps_fit: 0.2, helmholtz_samples: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaxwellParams {
    /// the horizon is horizon_factor / lambda_min
    pub horizon_factor: f64,
    pub time_samples: usize,
    pub trials: usize,
}

impl Default for MaxwellParams {
    fn default() -> Self {
        MaxwellParams { horizon_factor: 10.0, time_samples: 8, trials: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QftParams {
    pub positivity_samples: usize,
    pub pair_samples: usize,
    pub shifts: Vec<f64>,
    /// cutoff parameter of Q_eps when the geometry has a capacitor
    pub eps: f64,
    pub eps_fit: f64,
}

impl Default for QftParams {
    fn default() -> Self {
        QftParams { positivity_samples: 50, pair_samples: 3, shifts: vec![0.5, 1.3, -2.1], eps: 0.4, eps_fit: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StressMethod {
    Eigen,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StressParams {
    pub method: StressMethod,
    pub quadrature_nodes: usize,
    /// also build D1 and D2 by the other method and compare
    pub two_path: bool,
    pub lambda_points: usize,
    pub window_depth: usize,
    /// refinement levels of a canned geometry for the divergence study
    pub refinements: Vec<usize>,
    /// physical box [lo, hi] for the divergence study
    pub divergence_region: Option<[[f64; 3]; 2]>,
}

impl Default for StressParams {
    fn default() -> Self {
        StressParams {
            method: StressMethod::Eigen,
            quadrature_nodes: 40,
            two_path: false,
            lambda_points: 16,
            window_depth: 1,
            refinements: Vec::new(),
            divergence_region: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub hodge: HodgeParams,
    pub maxwell: MaxwellParams,
    pub qft: QftParams,
    pub stress: StressParams,
}

/// Pass thresholds; all must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub adjointness: f64,
    pub helmholtz: f64,
    pub gap_ratio: f64,
    /// relative capacity error where a closed form is known
    pub capacity: f64,
    pub constraint: f64,
    pub energy_drift: f64,
    pub static_field: f64,
    pub gauge: f64,
    pub antisymmetry: f64,
    pub positivity: f64,
    pub exact_pairing: f64,
    pub wick: f64,
    pub time_shift: f64,
    pub projection: f64,
    pub psi_pairing: f64,
    pub coclosed_spread: f64,
    pub nullity: f64,
    pub trace_identity: f64,
    pub two_path: f64,
    pub t0k: f64,
    pub symmetry: f64,
    pub decay_slope: f64,
    pub divergence_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            adjointness: 1e-12,
            helmholtz: 1e-10,
            gap_ratio: 1e3,
            capacity: 0.05,
            constraint: 1e-8,
            energy_drift: 1e-8,
            static_field: 1e-10,
            gauge: 1e-8,
            antisymmetry: 1e-8,
            positivity: 1e-10,
            exact_pairing: 1e-8,
            wick: 1e-10,
            time_shift: 1e-8,
            projection: 1e-10,
            psi_pairing: 0.02,
            coclosed_spread: 1e-6,
            nullity: 1e-10,
            trace_identity: 1e-10,
            two_path: 1e-8,
            t0k: 1e-8,
            symmetry: 1e-9,
            decay_slope: 3.0,
            divergence_band: 0.5,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 23] {
        [
            ("adjointness", self.adjointness),
            ("helmholtz", self.helmholtz),
            ("gap_ratio", self.gap_ratio),
            ("capacity", self.capacity),
            ("constraint", self.constraint),
            ("energy_drift", self.energy_drift),
            ("static_field", self.static_field),
            ("gauge", self.gauge),
            ("antisymmetry", self.antisymmetry),
            ("positivity", self.positivity),
            ("exact_pairing", self.exact_pairing),
            ("wick", self.wick),
            ("time_shift", self.time_shift),
            ("projection", self.projection),
            ("psi_pairing", self.psi_pairing),
            ("coclosed_spread", self.coclosed_spread),
            ("nullity", self.nullity),
            ("trace_identity", self.trace_identity),
            ("two_path", self.two_path),
            ("t0k", self.t0k),
            ("symmetry", self.symmetry),
            ("decay_slope", self.decay_slope),
            ("divergence_band", self.divergence_band),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub pipeline: Pipeline,
    pub geometry: GeometrySpec,
    /// drop the obstacle so that both complexes coincide
    #[serde(default)]
    pub empty: bool,
    #[serde(default)]
    pub materials: Vec<MaterialRegion>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_output() -> PathBuf {
    PathBuf::from("relmaxwell-out")
}

impl ScenarioConfig {
    /// Minimal configuration for a canned geometry.
    pub fn canned(pipeline: Pipeline, geometry: &str) -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            pipeline,
            geometry: GeometrySpec::Canned { canned: geometry.to_string() },
            empty: false,
            materials: Vec::new(),
            seed: 0,
            output: default_output(),
            params: Params::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let pointer = if path == "." {
                String::new()
            } else {
                path.replace('[', ".").replace(']', "").split('.').map(|seg| format!("/{seg}")).collect()
            };
            Error::config(pointer, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.apply_env();
        Ok(cfg)
    }

    /// Applies the output-directory override from the environment.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
            self.output = PathBuf::from(dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "/schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        for (name, v) in self.tolerances.entries() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("/tolerances/{name}"), "must be positive and finite"));
            }
        }
        for (i, m) in self.materials.iter().enumerate() {
            for (key, v) in [("epsilon", m.epsilon), ("mu", m.mu)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::config(format!("/materials/{i}/{key}"), "must be positive and finite"));
                }
            }
        }
        let h = &self.params.hodge;
        for (i, e) in h.eps_grid.iter().enumerate() {
            if !(*e > 0.0 && e.is_finite()) {
                return Err(Error::config(format!("/params/hodge/eps_grid/{i}"), "must be positive"));
            }
        }
        positive("/params/hodge/eps_fit", h.eps_fit)?;
        let m = &self.params.maxwell;
        positive("/params/maxwell/horizon_factor", m.horizon_factor)?;
        at_least("/params/maxwell/time_samples", m.time_samples, 2)?;
        at_least("/params/maxwell/trials", m.trials, 1)?;
        let q = &self.params.qft;
        at_least("/params/qft/positivity_samples", q.positivity_samples, 1)?;
        at_least("/params/qft/pair_samples", q.pair_samples, 1)?;
        positive("/params/qft/eps", q.eps)?;
        positive("/params/qft/eps_fit", q.eps_fit)?;
        if q.eps < q.eps_fit {
            return Err(Error::config("/params/qft/eps", "must not be below eps_fit"));
        }
        let s = &self.params.stress;
        at_least("/params/stress/quadrature_nodes", s.quadrature_nodes, 1)?;
        at_least("/params/stress/lambda_points", s.lambda_points, 4)?;
        for (i, &r) in s.refinements.iter().enumerate() {
            if !(1..=8).contains(&r) {
                return Err(Error::config(format!("/params/stress/refinements/{i}"), "must be in 1..=8"));
            }
        }
        if !s.refinements.is_empty() {
            if s.refinements.len() < 2 {
                return Err(Error::config("/params/stress/refinements", "needs at least two levels"));
            }
            if !matches!(self.geometry, GeometrySpec::Canned { .. }) {
                return Err(Error::config("/params/stress/refinements", "requires a canned geometry"));
            }
            if s.divergence_region.is_none() {
                return Err(Error::config("/params/stress/divergence_region", "required with refinements"));
            }
        }
        if let Some([lo, hi]) = s.divergence_region {
            if (0..3).any(|a| !(lo[a] < hi[a])) {
                return Err(Error::config("/params/stress/divergence_region", "lower corner must lie below upper corner"));
            }
        }
        self.material()?;
        Ok(())
    }

    pub fn material(&self) -> Result<Material> {
        let mut m = Material::vacuum();
        for (i, r) in self.materials.iter().enumerate() {
            m = m.with_region(r.tag, r.epsilon, r.mu).map_err(|e| Error::config(format!("/materials/{i}"), e.to_string()))?;
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, "must be positive"))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be at least {min}")))
    }
}
