use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use odeco::config::{parse_config_file, Overrides};
use odeco::export::{self, metrics_json, pretty};
use odeco::io::{read_text, MeshFormat};
use odeco::pipeline::{metrics_for_field, prepare_mesh, run_checks, run_pipeline};
use odeco::{ModePreset, OdecoError, RunConfig};

/// Integrable odeco frame fields on triangle meshes.
#[derive(Parser)]
#[command(name = "odeco", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Initialize, solve, recover and export.
    Run(Common),
    /// Only the smooth octahedral initialization.
    InitOnly(Common),
    /// Recompute frames and metrics from an exported field.bin.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Exported coefficient file.
        #[arg(long)]
        field: PathBuf,
    },
    /// Run property oracles (element identities, constraints, gradient) on a mesh.
    Check(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Input mesh (OBJ or legacy ASCII VTK).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Mesh format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<MeshFormat>,
    /// Feature file (`e v0 v1`, `c v`, `s v value`); disables dihedral detection.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Weight preset: area, area-smooth, angle, sizing-only or custom.
    #[arg(long)]
    mode: Option<ModePreset>,
    #[arg(long)]
    kappa_odeco: Option<f64>,
    #[arg(long)]
    kappa_area: Option<f64>,
    #[arg(long)]
    kappa_angle: Option<f64>,
    /// Target quad area.
    #[arg(long)]
    a0: Option<f64>,
    /// Dihedral angle (degrees) above which an edge is a feature.
    #[arg(long)]
    dihedral: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = logical cores; 1 = bitwise reproducible).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory [env: ODECO_OUT_DIR; default: odeco_out].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    max_iterations_init: Option<usize>,
    /// `key = value` configuration file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record wall-clock milliseconds in iterations.csv (makes exports run-dependent).
    #[arg(long)]
    timing: bool,
    /// Log progress to stderr (-vv: every iteration).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, OdecoError> {
        let flags = Overrides {
            mesh: self.mesh.clone(),
            format: self.format,
            features: self.features.clone(),
            mode: self.mode,
            kappa_odeco: self.kappa_odeco,
            kappa_area: self.kappa_area,
            kappa_angle: self.kappa_angle,
            a0: self.a0,
            dihedral_deg: self.dihedral,
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            verbosity: (self.verbose > 0).then_some(self.verbose),
            max_iterations_init: self.max_iterations_init,
            max_iterations: self.max_iterations,
        };
        let file = match &self.config {
            Some(path) => parse_config_file(&read_text(path)?, path)?,
            None => Overrides::default(),
        };
        let mut cfg = flags.over(&file).resolve()?;
        cfg.record_wall_time = self.timing;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<i32, OdecoError> {
    match cli.command {
        Command::Run(c) => {
            let cfg = c.resolve()?;
            let outcome = run_pipeline(&cfg)?;
            summary(&cfg, &outcome.metrics);
            Ok(outcome.exit_code())
        }
        Command::InitOnly(c) => {
            let mut cfg = c.resolve()?;
            cfg.init_only = true;
            let outcome = run_pipeline(&cfg)?;
            summary(&cfg, &outcome.metrics);
            Ok(outcome.exit_code())
        }
        Command::Metrics { common, field } => {
            let cfg = common.resolve()?;
            let (frames, metrics, _) = metrics_for_field(&cfg, &field)?;
            std::fs::create_dir_all(&cfg.out).map_err(|e| OdecoError::Io { path: cfg.out.clone(), source: e })?;
            let write = |name: &str, text: String| {
                let p = cfg.out.join(name);
                std::fs::write(&p, text).map_err(|e| OdecoError::Io { path: p, source: e })
            };
            write(export::METRICS_FILE, pretty(&serde_json::json!({ "field": metrics_json(&metrics) })))?;
            write(export::FRAMES_FILE, export::frames_text(&frames))?;
            write(export::SINGULARITIES_FILE, export::singularities_text(&frames))?;
            summary(&cfg, &metrics);
            Ok(0)
        }
        Command::Check(c) => {
            let cfg = c.resolve()?;
            let mesh = prepare_mesh(&cfg)?;
            let results = run_checks(&mesh, cfg.weights, cfg.seed);
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(if results.iter().all(|r| r.passed) { 0 } else { 1 })
        }
    }
}

fn summary(cfg: &RunConfig, m: &odeco_core::recovery::MetricsReport) {
    println!(
        "n3 = {}, n5 = {}, other singularities = {}, mean curl residual = {:.3e}, degenerate faces = {}; outputs in {}",
        m.n3,
        m.n5,
        m.other_singularities,
        m.curl_mean,
        m.degenerate_faces,
        cfg.out.display()
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
