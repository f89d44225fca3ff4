//! End to end: load → features → initialize → solve → recover → export.

use std::path::Path;
use std::time::Instant;

use odeco_core::constraints::Stage;
use odeco_core::energy::{gradient_check, random_feasible_state, EnergyWeights, FieldState, Mode, Objective};
use odeco_core::exec::{Executor, Sequential};
use odeco_core::mesh::{SurfaceMesh, GAUSS3};
use odeco_core::recovery::{compute_matchings_and_indices, field_metrics, recover_field, FaceFrameField, MetricsReport};
use odeco_core::rng::seeded;
use odeco_core::solver::{initialize, octahedral_start, solve_integrable, IterationRecord, Observer, SolveReport, StopReason};
use serde_json::json;

use crate::config::RunConfig;
use crate::exec::RayonExecutor;
use crate::export::{export_all, metrics_json, report_json, Outputs};
use crate::io::{load_features, load_mesh};
use crate::OdecoError;

/// Collects iteration records and logs progress to stderr.
pub struct Recorder {
    start: Instant,
    wall_time: bool,
    verbosity: u8,
    pub records: Vec<IterationRecord>,
}

impl Recorder {
    pub fn new(wall_time: bool, verbosity: u8) -> Self {
        Recorder { start: Instant::now(), wall_time, verbosity, records: Vec::new() }
    }
}

impl Observer for Recorder {
    fn now_ms(&self) -> f64 {
        if self.wall_time {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    }

    fn iteration(&mut self, rec: &IterationRecord) {
        if self.verbosity >= 2 {
            eprintln!("{:?} {:>5}  E = {:.6e}  H = {:.3e}  step = {:.2e}", rec.mode, rec.iteration, rec.energy, rec.terms.curl, rec.step);
        }
        self.records.push(*rec);
    }
}

/// Mesh with features from the feature file, or detected by dihedral angle.
pub fn prepare_mesh(cfg: &RunConfig) -> Result<SurfaceMesh, OdecoError> {
    let mesh = load_mesh(&cfg.mesh, cfg.format)?;
    match &cfg.features {
        Some(path) => {
            let mut mesh = mesh;
            load_features(&mut mesh, path)?;
            Ok(mesh)
        }
        None => Ok(mesh.detect_features(cfg.dihedral_deg)),
    }
}

pub fn recover(mesh: &SurfaceMesh, state: &FieldState, a0: f64) -> (FaceFrameField, MetricsReport) {
    let f = compute_matchings_and_indices(recover_field(state, mesh), mesh);
    let m = field_metrics(&f, state, mesh, a0);
    (f, m)
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub init: SolveReport,
    pub main: Option<SolveReport>,
    pub metrics: MetricsReport,
    pub state: FieldState,
}

impl Outcome {
    /// 0 when the last stage converged, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        let last = self.main.as_ref().unwrap_or(&self.init);
        match last.stop {
            StopReason::Converged => 0,
            StopReason::MaxIterations | StopReason::LineSearchFailure => 2,
        }
    }
}

fn solve<E: Executor>(mesh: &SurfaceMesh, cfg: &RunConfig, exec: &E, rec: &mut Recorder) -> Result<(FieldState, SolveReport, Option<SolveReport>), OdecoError> {
    let solver = cfg.solver_config();
    let (s0, init) = initialize(mesh, &solver, exec, rec)?;
    if cfg.verbosity >= 1 {
        eprintln!("init: {:?} after {} iterations, E = {:.6e}", init.stop, init.iterations, init.energy);
    }
    if cfg.init_only {
        return Ok((s0, init, None));
    }
    let (s, main) = solve_integrable(&s0, mesh, &solver, exec, rec)?;
    if cfg.verbosity >= 1 {
        eprintln!("main: {:?} after {} iterations, E = {:.6e}, H = {:.6e}", main.stop, main.iterations, main.energy, main.terms.curl);
    }
    Ok((s, init, Some(main)))
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<Outcome, OdecoError> {
    let mesh = prepare_mesh(cfg)?;
    if cfg.verbosity >= 1 {
        eprintln!(
            "{}: {} vertices, {} triangles, {} feature edges, {} corners",
            cfg.mesh.display(),
            mesh.vertex_count(),
            mesh.triangle_count(),
            mesh.features.feature_edge_count(),
            mesh.features.corner_count()
        );
    }
    let mut rec = Recorder::new(cfg.record_wall_time, cfg.verbosity);
    let (state, init, main) = if cfg.threads == 1 {
        solve(&mesh, cfg, &Sequential, &mut rec)?
    } else {
        let exec = RayonExecutor::new(cfg.threads).map_err(|e| OdecoError::Config(e.to_string()))?;
        solve(&mesh, cfg, &exec, &mut rec)?
    };
    let (frames, metrics) = recover(&mesh, &state, cfg.weights.a0);
    let doc = json!({
        "mesh": { "vertices": mesh.vertex_count(), "triangles": mesh.triangle_count(), "euler_characteristic": mesh.euler_characteristic() },
        "mode": cfg.mode.name(),
        "weights": weights_json(&cfg.weights),
        "seed": cfg.seed,
        "init": report_json(&init),
        "main": main.as_ref().map(report_json),
        "field": metrics_json(&metrics),
    });
    export_all(&cfg.out, &Outputs { frames: &frames, state: &state, metrics: doc, iterations: &rec.records })?;
    Ok(Outcome { init, main, metrics, state })
}

pub fn weights_json(w: &EnergyWeights) -> serde_json::Value {
    json!({ "kappa_odeco": w.kappa_odeco, "kappa_area": w.kappa_area, "kappa_angle": w.kappa_angle, "a0": w.a0 })
}

/// Recomputes recovery and metrics for an exported field.
pub fn metrics_for_field(cfg: &RunConfig, field: &Path) -> Result<(FaceFrameField, MetricsReport, FieldState), OdecoError> {
    let mesh = prepare_mesh(cfg)?;
    let state = crate::export::read_field(field)?;
    if state.vertex_count() != mesh.vertex_count() {
        return Err(OdecoError::Config(format!(
            "field has {} vertices but {} has {}",
            state.vertex_count(),
            cfg.mesh.display(),
            mesh.vertex_count()
        )));
    }
    let (f, m) = recover(&mesh, &state, cfg.weights.a0);
    Ok((f, m, state))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Property oracles on a mesh: element and quadrature identities, constraint
/// feasibility and the finite-difference gradient check.
pub fn run_checks(mesh: &SurfaceMesh, weights: EnergyWeights, seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let scale = mesh.mean_edge_length();

    let mut worst: f64 = 0.0;
    for (t, e) in mesh.elements.iter().enumerate() {
        let sum = e.gradients[0] + e.gradients[1] + e.gradients[2];
        let off = e.gradients.iter().map(|g| g.dot(&mesh.normals[t]).abs()).fold(0.0, f64::max);
        worst = worst.max(sum.norm().max(off) * scale);
    }
    out.push(CheckResult { name: "p1-gradients", passed: worst < 1e-9, detail: format!("max |Σ∇ψ|, |∇ψ·n| (scaled) = {worst:.3e}") });

    let area = mesh.integrate(&GAUSS3, |_, _, _| 1.0);
    let rel = (area - mesh.total_area()).abs() / mesh.total_area();
    out.push(CheckResult { name: "quadrature-area", passed: rel < 1e-12, detail: format!("relative error {rel:.3e}") });

    let mut rng = seeded(seed);
    match random_feasible_state(&mut rng, mesh, Stage::Main, 0.05) {
        Ok(s) => {
            let cons = odeco_core::constraints::vertex_constraints(mesh, Stage::Main).expect("built above");
            let r = cons.max_residual(&s.q);
            out.push(CheckResult { name: "constraint-feasibility", passed: r < 1e-9, detail: format!("max residual {r:.3e}") });
            let start = octahedral_start(mesh, seed);
            let init = odeco_core::constraints::vertex_constraints(mesh, Stage::Init).expect("init constraints");
            let r = init.max_residual(&start.q);
            out.push(CheckResult { name: "octahedral-start", passed: r < 1e-8, detail: format!("max residual {r:.3e}") });
            match Objective::new(mesh, weights, Mode::Main).and_then(|obj| gradient_check(&obj, &s, 15, &mut rng, &Sequential)) {
                Ok(samples) => {
                    let worst = samples.iter().map(|s| s.relative_error()).fold(0.0, f64::max);
                    out.push(CheckResult { name: "gradient", passed: worst < 1e-5, detail: format!("max relative error {worst:.3e} over 15 coordinates") });
                }
                Err(e) => out.push(CheckResult { name: "gradient", passed: false, detail: e.to_string() }),
            }
        }
        Err(e) => out.push(CheckResult { name: "constraint-feasibility", passed: false, detail: e.to_string() }),
    }
    out
}
