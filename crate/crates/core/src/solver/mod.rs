//! Two-stage optimization: smooth octahedral initialization, then the
//! integrable solve. Both stages run projected L-BFGS with Armijo
//! backtracking under the per-vertex affine constraints.

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use core::fmt;

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::constraints::{vertex_constraints, ConstraintError, Stage, VertexConstraints};
use crate::energy::{Diagnostics, EnergyError, EnergyOptions, EnergyWeights, FieldState, Mode, Objective, Terms};
use crate::exec::Executor;
use crate::mesh::{SurfaceMesh, VertexKind};
use crate::rng::{seeded, unit_vector};
use crate::tensor::{from_frame, Frame, DIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lbfgs_history: usize,
    pub max_iterations_init: usize,
    pub max_iterations: usize,
    pub rel_improvement_tol: f64,
    /// Consecutive iterations below the tolerance required to stop.
    pub stall_window: usize,
    pub weights: EnergyWeights,
    pub init_weights: EnergyWeights,
    pub armijo_c1: f64,
    pub backtrack: f64,
    pub max_trials: usize,
    pub reproject_every: usize,
    pub seed: u64,
    pub energy_options: EnergyOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lbfgs_history: 8,
            max_iterations_init: 1000,
            max_iterations: 3000,
            rel_improvement_tol: 1e-5,
            stall_window: 5,
            weights: EnergyWeights::SIZING_ONLY,
            init_weights: EnergyWeights::INIT,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_trials: 40,
            reproject_every: 50,
            seed: 0,
            energy_options: EnergyOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.lbfgs_history >= 1
            && self.rel_improvement_tol > 0.0
            && self.stall_window >= 1
            && self.armijo_c1 > 0.0
            && self.armijo_c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.max_trials >= 1;
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    InvalidConfig,
    Energy(EnergyError),
    Constraint(ConstraintError),
    ConstraintInfeasible { vertex: usize, residual: f64 },
    /// The objective became NaN; carries the offending state.
    NaNEnergy { iteration: usize, state: Vec<f64> },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::InvalidConfig => write!(f, "invalid solver configuration"),
            SolverError::Energy(e) => write!(f, "{e}"),
            SolverError::Constraint(e) => write!(f, "{e}"),
            SolverError::ConstraintInfeasible { vertex, residual } => {
                write!(f, "constraints infeasible at vertex {vertex} (residual {residual:e})")
            }
            SolverError::NaNEnergy { iteration, .. } => write!(f, "energy became NaN at iteration {iteration}"),
        }
    }
}

impl core::error::Error for SolverError {}

impl From<EnergyError> for SolverError {
    fn from(e: EnergyError) -> Self {
        match e {
            EnergyError::Constraint(c) => SolverError::Constraint(c),
            e => SolverError::Energy(e),
        }
    }
}

impl From<ConstraintError> for SolverError {
    fn from(e: ConstraintError) -> Self {
        SolverError::Constraint(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub energy: f64,
    pub initial_energy: f64,
    pub terms: Terms,
    pub initial_terms: Terms,
    pub wall_ms: f64,
    pub max_residual: f64,
    pub diagnostics: Diagnostics,
    pub stop: StopReason,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub mode: Mode,
    pub iteration: usize,
    pub energy: f64,
    pub terms: Terms,
    pub step: f64,
    pub wall_ms: f64,
}

/// Progress hook; also the solver's only source of time.
pub trait Observer {
    fn now_ms(&self) -> f64 {
        0.0
    }
    fn iteration(&mut self, _record: &IterationRecord) {}
}

/// Energies below this are round-off; the solve stops as converged.
pub const ENERGY_FLOOR: f64 = 1e-24;

/// Observer that ignores everything.
pub struct Silent;

impl Observer for Silent {}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Projected L-BFGS on `objective` restricted to the affine set of `constraints`.
pub fn minimize<E: Executor, O: Observer>(
    objective: &Objective,
    constraints: &VertexConstraints,
    x0: &[f64],
    max_iterations: usize,
    cfg: &SolverConfig,
    exec: &E,
    observer: &mut O,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    cfg.validate()?;
    let start = observer.now_ms();
    let mut x = x0.to_vec();
    constraints.project_feasible(&mut x);
    let mut eval = objective.evaluate(&x, exec, true)?;
    if eval.value.is_nan() {
        return Err(SolverError::NaNEnergy { iteration: 0, state: x });
    }
    let mut g = eval.gradient.take().unwrap();
    constraints.project_gradient(&mut g);
    let initial_energy = eval.value;
    let initial_terms = eval.terms;

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stalled = 0;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    observer.iteration(&IterationRecord {
        mode: objective.mode,
        iteration: 0,
        energy: eval.value,
        terms: eval.terms,
        step: 0.0,
        wall_ms: observer.now_ms() - start,
    });

    while iterations < max_iterations {
        if norm(&g) <= 1e-14 * (1.0 + eval.value.abs()) || eval.value.abs() <= ENERGY_FLOOR {
            stop = StopReason::Converged;
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            let d = if attempt == 0 && !history.is_empty() {
                two_loop(&g, &history)
            } else {
                history.clear();
                let s = 1.0 / norm(&g).max(1e-300);
                g.iter().map(|v| -v * s).collect()
            };
            let mut d = d;
            constraints.project_gradient(&mut d);
            let slope = dot(&g, &d);
            if !(slope < 0.0) {
                history.clear();
                continue;
            }
            let mut alpha = 1.0;
            for _ in 0..cfg.max_trials {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                let e = objective.evaluate(&trial, exec, true)?;
                if e.value.is_nan() {
                    return Err(SolverError::NaNEnergy { iteration: iterations + 1, state: trial });
                }
                if e.value <= eval.value + cfg.armijo_c1 * alpha * slope {
                    accepted = Some((trial, e, alpha));
                    break;
                }
                alpha *= cfg.backtrack;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((mut x_new, mut e_new, alpha)) = accepted else {
            stop = StopReason::LineSearchFailure;
            break;
        };
        iterations += 1;
        if cfg.reproject_every > 0 && iterations % cfg.reproject_every == 0 {
            constraints.project_feasible(&mut x_new);
            e_new = objective.evaluate(&x_new, exec, true)?;
        }
        let mut g_new = e_new.gradient.take().unwrap();
        constraints.project_gradient(&mut g_new);

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if history.len() == cfg.lbfgs_history {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let rel = (eval.value - e_new.value) / eval.value.abs().max(1e-300);
        stalled = if rel < cfg.rel_improvement_tol { stalled + 1 } else { 0 };
        x = x_new;
        g = g_new;
        eval = e_new;
        observer.iteration(&IterationRecord {
            mode: objective.mode,
            iteration: iterations,
            energy: eval.value,
            terms: eval.terms,
            step: alpha,
            wall_ms: observer.now_ms() - start,
        });
        if stalled >= cfg.stall_window || eval.value.abs() <= ENERGY_FLOOR {
            stop = StopReason::Converged;
            break;
        }
    }

    let report = SolveReport {
        iterations,
        energy: eval.value,
        initial_energy,
        terms: eval.terms,
        initial_terms,
        wall_ms: observer.now_ms() - start,
        max_residual: constraints.max_residual(&x),
        diagnostics: eval.diagnostics,
        stop,
    };
    Ok((x, report))
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let (s, y, _) = history.back().unwrap();
    let gamma = dot(s, y) / dot(y, y);
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Unit octahedral frames aligned with each vertex's constraint direction.
/// Tangential orientation follows a seeded global reference direction.
pub fn octahedral_start(mesh: &SurfaceMesh, seed: u64) -> FieldState {
    let reference = unit_vector(&mut seeded(seed));
    let mut s = FieldState::constant(mesh.vertex_count(), &from_frame(&Frame::axes([1.0; 3])));
    for v in 0..mesh.vertex_count() {
        let n = mesh.vertex_normals[v];
        let axis = match mesh.features.kind(v) {
            VertexKind::Feature => mesh.features.tangent[v].unwrap(),
            _ => n,
        };
        let t1 = tangent_towards(&axis, &reference);
        s.set_vertex(v, &from_frame(&Frame::new([1.0; 3], [axis, t1, axis.cross(&t1)])));
    }
    s
}

fn tangent_towards(axis: &Vector3<f64>, r: &Vector3<f64>) -> Vector3<f64> {
    let t = r - axis * axis.dot(r);
    if t.norm() > 1e-6 {
        t.normalize()
    } else {
        crate::rng::tangent_basis(axis).0
    }
}

/// Smooth octahedral field followed by projection onto the main-stage constraints.
pub fn initialize<E: Executor, O: Observer>(
    mesh: &SurfaceMesh,
    cfg: &SolverConfig,
    exec: &E,
    observer: &mut O,
) -> Result<(FieldState, SolveReport), SolverError> {
    let cons = vertex_constraints(mesh, Stage::Init)?;
    let start = octahedral_start(mesh, cfg.seed);
    for v in 0..mesh.vertex_count() {
        let r = cons.get(v).residual_norm(&start.q[v * DIM..(v + 1) * DIM]);
        if r > 1e-6 {
            return Err(SolverError::ConstraintInfeasible { vertex: v, residual: r });
        }
    }
    let mut obj = Objective::new(mesh, cfg.init_weights, Mode::Init)?;
    obj.options = cfg.energy_options;
    let (mut x, report) = minimize(&obj, &cons, &start.q, cfg.max_iterations_init, cfg, exec, observer)?;
    let main = vertex_constraints(mesh, Stage::Main)?;
    main.project_feasible(&mut x);
    Ok((FieldState { q: x }, report))
}

/// Main stage from a feasible state.
pub fn solve_integrable<E: Executor, O: Observer>(
    s0: &FieldState,
    mesh: &SurfaceMesh,
    cfg: &SolverConfig,
    exec: &E,
    observer: &mut O,
) -> Result<(FieldState, SolveReport), SolverError> {
    let cons = vertex_constraints(mesh, Stage::Main)?;
    let mut obj = Objective::new(mesh, cfg.weights, Mode::Main)?;
    obj.options = cfg.energy_options;
    let (x, report) = minimize(&obj, &cons, &s0.q, cfg.max_iterations, cfg, exec, observer)?;
    Ok((FieldState { q: x }, report))
}

#[cfg(test)]
mod tests;
