//! `penner`: run any stage of the pipeline on a plumbing graph and print a JSON report.

mod commands;
mod config;
mod error;
mod export;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use penner_core::plumbing::samples;
use penner_core::PlumbingGraph;
use serde_json::json;

use commands::Outcome;
use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "penner",
    version,
    about = "Penner-type twist words on plumbings of spheres"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Plumbing graph as JSON.
    #[arg(long, global = true, conflicts_with = "sample")]
    graph: Option<PathBuf>,
    /// Built-in graph, used when no --graph is given.
    #[arg(long, global = true, value_enum, default_value_t = Sample::Chain3)]
    sample: Sample,
    /// Dimension of the spheres of a built-in graph.
    #[arg(long, global = true, default_value_t = 2)]
    dim: u32,
    /// RunConfig as JSON; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    r0: Option<f64>,
    #[arg(long, global = true)]
    r1: Option<f64>,
    #[arg(long, global = true)]
    r2: Option<f64>,
    #[arg(long, global = true)]
    trivial_scale: Option<f64>,
    #[arg(long, global = true)]
    trivial_radius: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    nr: Option<usize>,
    #[arg(long, global = true)]
    ntheta: Option<usize>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Leave out timing so repeated runs are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Sample {
    OnePoint,
    TwoPoint,
    Chain3,
    Chain3Dual,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plumbing graph checks.
    #[command(subcommand)]
    Plumb(PlumbCmd),
    /// Twist word checks.
    #[command(subcommand)]
    Twist(TwistCmd),
    /// Branched tracks.
    #[command(subcommand)]
    Track(TrackCmd),
    /// Transfer matrices and strand censuses.
    #[command(subcommand)]
    Transfer(TransferCmd),
    /// Decay and reachability of limiting strands.
    #[command(subcommand)]
    Limits(LimitsCmd),
    /// The surface shadow: stretch factors and invariant weights.
    #[command(subcommand)]
    Surface(SurfaceCmd),
    /// Crossing count of two twisted cores.
    Floer {
        #[arg(long)]
        word0: String,
        #[arg(long)]
        core0: String,
        #[arg(long)]
        word1: String,
        #[arg(long)]
        core1: String,
    },
    /// Potentials for boundary strands.
    #[command(subcommand)]
    Lamsolve(LamCmd),
    /// Numerical oracles on the local model.
    #[command(subcommand)]
    Geomlab(GeomCmd),
    /// Diagram data for matrices, censuses and decompositions.
    Export {
        #[arg(long, value_enum)]
        kind: ExportKind,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        #[arg(long)]
        word: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum PlumbCmd {
    Validate,
    FixedSurface,
}

#[derive(Subcommand, Debug)]
enum TwistCmd {
    /// Penner diagnostics and constancy of the disk choice sweep.
    Check {
        #[arg(long)]
        word: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum TrackCmd {
    Invariant {
        #[arg(long)]
        word: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum TransferCmd {
    Matrix {
        #[arg(long)]
        word: Option<String>,
        /// Show one unit factor instead of the product, leftmost is 0.
        #[arg(long)]
        factor: Option<usize>,
    },
    Census {
        #[arg(long)]
        word: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum LimitsCmd {
    Certify {
        #[arg(long)]
        word: Option<String>,
        /// Full periods of scaling prefixes to extend.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(0..=4))]
        reach: u64,
    },
}

#[derive(Subcommand, Debug)]
enum SurfaceCmd {
    Stretch {
        #[arg(long)]
        word: Option<String>,
    },
    Weights {
        #[arg(long)]
        word: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum LamCmd {
    Run {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum GeomCmd {
    Check,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ExportKind {
    Matrix,
    Census,
    Decomposition,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Dot,
    Csv,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let input = |msg: String| CliError::Input {
        path: path.display().to_string(),
        msg,
    };
    let text = std::fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| input(e.to_string()))
}

fn load_graph(g: &Global) -> Result<PlumbingGraph, CliError> {
    match &g.graph {
        Some(p) => read_json(p),
        None => Ok(match g.sample {
            Sample::OnePoint => samples::one_point(g.dim),
            Sample::TwoPoint => samples::two_point(g.dim),
            Sample::Chain3 => samples::chain3(g.dim),
            Sample::Chain3Dual => samples::chain3_dual(g.dim),
        }),
    }
}

fn overrides(g: &Global) -> Overrides {
    Overrides {
        r0: g.r0,
        r1: g.r1,
        r2: g.r2,
        trivial_scale: g.trivial_scale,
        trivial_radius: g.trivial_radius,
        epsilon: g.epsilon,
        nr: g.nr,
        ntheta: g.ntheta,
        depth: g.depth,
        tolerance: g.tol,
        samples: g.samples,
        seed: g.seed,
    }
}

enum Report {
    Json(&'static str, Outcome),
    Text(String),
}

fn run(cmd: &Command, g: &PlumbingGraph, cfg: &RunConfig) -> Result<Report, CliError> {
    use commands::*;
    Ok(match cmd {
        Command::Plumb(PlumbCmd::Validate) => Report::Json("plumb validate", plumb_validate(g)),
        Command::Plumb(PlumbCmd::FixedSurface) => {
            Report::Json("plumb fixed-surface", plumb_fixed_surface(g)?)
        }
        Command::Twist(TwistCmd::Check { word }) => {
            Report::Json("twist check", twist_check(g, word.as_deref())?)
        }
        Command::Track(TrackCmd::Invariant { word }) => {
            Report::Json("track invariant", track_invariant(g, word.as_deref())?)
        }
        Command::Transfer(TransferCmd::Matrix { word, factor }) => Report::Json(
            "transfer matrix",
            transfer_matrix(g, word.as_deref(), *factor, cfg)?,
        ),
        Command::Transfer(TransferCmd::Census { word }) => {
            Report::Json("transfer census", transfer_census(g, word.as_deref(), cfg)?)
        }
        Command::Limits(LimitsCmd::Certify { word, reach }) => Report::Json(
            "limits certify",
            limits_certify(g, word.as_deref(), *reach as usize, cfg)?,
        ),
        Command::Surface(SurfaceCmd::Stretch { word }) => {
            Report::Json("surface stretch", surface_stretch(g, word.as_deref())?)
        }
        Command::Surface(SurfaceCmd::Weights { word }) => {
            Report::Json("surface weights", surface_weights(g, word.as_deref(), cfg)?)
        }
        Command::Floer {
            word0,
            core0,
            word1,
            core1,
        } => Report::Json("floer", floer(g, word0, core0, word1, core1)?),
        Command::Lamsolve(LamCmd::Run { input }) => {
            let input: LamInput = read_json(input)?;
            Report::Json("lamsolve run", lamsolve_run(g, input, cfg)?)
        }
        Command::Geomlab(GeomCmd::Check) => Report::Json("geomlab check", geomlab_check(g, cfg)?),
        Command::Export { kind, format, word } => {
            let w = word.as_deref();
            Report::Text(match (kind, format) {
                (ExportKind::Matrix, f) => {
                    let (_, fm) = psi(g, w, cfg)?;
                    match f {
                        Format::Dot => export::matrix_dot(g, &fm.product),
                        Format::Csv => export::matrix_csv(g, &fm.product),
                    }
                }
                (ExportKind::Census, f) => {
                    let (_, fm, c) = census(g, w, cfg)?;
                    match f {
                        Format::Dot => export::census_dot(g, &fm.product, &c),
                        Format::Csv => export::census_csv(g, &fm.product, &c),
                    }
                }
                (ExportKind::Decomposition, f) => {
                    let dc = track_of(g, w)?;
                    match f {
                        Format::Dot => export::decomposition_dot(g, &dc),
                        Format::Csv => export::decomposition_csv(g, &dc),
                    }
                }
            })
        }
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io {
            path: p.display().to_string(),
            source: e,
        }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|e| CliError::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn main_inner(cli: &Cli) -> Result<bool, CliError> {
    let start = Instant::now();
    let cfg = RunConfig::load(cli.global.config.as_deref(), &overrides(&cli.global))?;
    let graph = load_graph(&cli.global)?;
    let (text, ok) = match run(&cli.command, &graph, &cfg)? {
        Report::Json(name, o) => {
            let mut env = json!({"command": name, "ok": o.ok, "result": o.result});
            if !cli.global.deterministic {
                env["elapsed_ms"] = json!(start.elapsed().as_millis() as u64);
            }
            (serde_json::to_string_pretty(&env)? + "\n", o.ok)
        }
        Report::Text(t) => (t, true),
    };
    emit(cli.global.output.as_deref(), &text)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
