use clap::{Parser, Subcommand, ValueEnum};
use relmaxwell::config::{GeometrySpec, MeshFormat, Pipeline, ScenarioConfig};
use relmaxwell::forms::DecOperators;
use relmaxwell::mesh::{canned, format};
use relmaxwell::pipeline::{self, build_scene};
use relmaxwell::{linalg, Error};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relmaxwell", version, about = "Maxwell fields and their quantisation on domains with obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct GeometryArgs {
    /// canned geometry, e.g. `ball:2`, `balls:3`, `hopf_link`
    #[arg(long, conflicts_with = "mesh")]
    geometry: Option<String>,
    /// mesh file instead of a canned geometry
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// the mesh file is a Gmsh 2.2 ASCII file
    #[arg(long, requires = "mesh")]
    gmsh: bool,
    /// cell tags forming the obstacle (mesh files only)
    #[arg(long, value_delimiter = ',', requires = "mesh")]
    obstacle_tags: Vec<u32>,
    /// drop the obstacle so both complexes coincide
    #[arg(long)]
    empty: bool,
}

impl GeometryArgs {
    fn spec(&self) -> Result<GeometrySpec, Error> {
        match (&self.geometry, &self.mesh) {
            (Some(g), None) => Ok(GeometrySpec::Canned { canned: g.clone() }),
            (None, Some(m)) => Ok(GeometrySpec::File {
                mesh: m.clone(),
                format: if self.gmsh { MeshFormat::Gmsh } else { MeshFormat::Relmaxwell },
                obstacle_tags: self.obstacle_tags.clone(),
            }),
            _ => Err(Error::config("/geometry", "give exactly one of --geometry or --mesh")),
        }
    }

    fn config(&self, pipeline: Pipeline) -> Result<ScenarioConfig, Error> {
        let mut cfg = ScenarioConfig::canned(pipeline, "");
        cfg.geometry = self.spec()?;
        cfg.empty = self.empty;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a pipeline from a JSON configuration or from flags.
    Run {
        /// configuration file, or a pipeline name when used with flags
        target: String,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// output directory (overrides the configuration)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List canned geometries and pipelines.
    List,
    /// Print a mesh in canonical text form, or its metadata as JSON.
    DumpMesh {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// print the obstacle complex instead of the reference complex
        #[arg(long)]
        carved: bool,
        #[arg(long, value_enum, default_value = "ascii")]
        format: DumpFormat,
    },
    /// Write d_p and M_p of the obstacle complex as triplet files.
    ExportMatrices {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Ascii,
    Json,
}

/// Input problems exit with 2, numerical failures with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. }
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::Orientation(_)
        | Error::DanglingFace(_)
        | Error::NonManifold(_)
        | Error::Mesh(_)
        | Error::Material(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn execute(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Run { target, geometry, seed, output } => {
            let mut cfg = if target.ends_with(".json") || Path::new(&target).is_file() {
                if geometry.geometry.is_some() || geometry.mesh.is_some() {
                    return Err(Error::config("/geometry", "a configuration file already names its geometry"));
                }
                let mut c = ScenarioConfig::load(Path::new(&target))?;
                c.empty |= geometry.empty;
                c
            } else {
                let mut c = geometry.config(Pipeline::parse(&target)?)?;
                c.apply_env();
                c
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = output {
                cfg.output = o;
            }
            let outcome = pipeline::run(&cfg)?;
            let files = pipeline::write_outputs(&outcome, &cfg, &cfg.output)?;
            let s = &outcome.summary;
            for a in &s.assertions {
                println!("[{}] {} = {:e} ({:?} {:e})", if a.pass { "PASS" } else { "FAIL" }, a.name, a.value, a.relation, a.threshold);
            }
            println!("{} on {}: {}", s.pipeline.as_str(), s.geometry, if s.passed { "passed" } else { "FAILED" });
            println!("wrote {}", files[0].display());
            Ok(if s.passed { 0 } else { 1 })
        }
        Command::List => {
            println!("geometries:");
            for (name, about) in canned::catalogue() {
                println!("  {name:<22} {about}");
            }
            println!("pipelines:");
            for p in Pipeline::ALL {
                println!("  {:<22} {}", p.as_str(), p.describe());
            }
            Ok(0)
        }
        Command::DumpMesh { geometry, carved, format: fmt } => {
            let scene = build_scene(&geometry.config(Pipeline::Topology)?)?;
            let cx = if carved { &scene.scenario.carved } else { &scene.scenario.reference };
            match fmt {
                DumpFormat::Ascii => print!("{}", format::write_complex(cx)),
                DumpFormat::Json => println!("{}", serde_json::to_string_pretty(&cx.metadata()).expect("metadata serialises")),
            }
            Ok(0)
        }
        Command::ExportMatrices { geometry, output } => {
            let cfg = geometry.config(Pipeline::Topology)?;
            let scene = build_scene(&cfg)?;
            let ops = DecOperators::new(&scene.scenario.carved, &cfg.material()?)?;
            std::fs::create_dir_all(&output).map_err(|e| Error::io(output.display().to_string(), e))?;
            let write = |name: String, text: String| {
                let p = output.join(name);
                std::fs::write(&p, text).map_err(|e| Error::io(p.display().to_string(), e))
            };
            for p in 0..=ops.dim() {
                write(format!("m{p}.txt"), triplet_text(ops.n(p), ops.n(p), &linalg::triplets(ops.mass(p))))?;
                write(format!("kept{p}.txt"), ops.kept(p).iter().map(|i| format!("{i}\n")).collect())?;
                if p < ops.dim() {
                    write(format!("d{p}.txt"), triplet_text(ops.n(p + 1), ops.n(p), &linalg::triplets(ops.d(p))))?;
                }
            }
            println!("wrote matrices for dimension {} to {}", ops.dim(), output.display());
            Ok(0)
        }
    }
}

/// `rows cols nnz` header followed by one `i j value` line per entry.
fn triplet_text(rows: usize, cols: usize, t: &[(usize, usize, f64)]) -> String {
    let mut s = format!("{rows} {cols} {}\n", t.len());
    for (i, j, v) in t {
        s.push_str(&format!("{i} {j} {v}\n"));
    }
    s
}
