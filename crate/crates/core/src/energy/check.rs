//! Finite-difference validation of the analytic gradient.

use alloc::vec::Vec;

use rand::Rng;

use super::{EnergyError, FieldState, Objective};
use crate::constraints::{vertex_constraints, ConstraintError, Stage};
use crate::exec::Executor;
use crate::mesh::SurfaceMesh;
use crate::rng::random_tangent_pair;
use crate::tensor::{from_frame, Frame, ShTensor};

/// Random frames (normal eigenvalue 1, tangential eigenvalues in `[0.6, 1.8)`)
/// plus uniform coefficient noise, projected onto the `stage` constraints.
pub fn random_feasible_state<R: Rng + ?Sized>(
    rng: &mut R,
    mesh: &SurfaceMesh,
    stage: Stage,
    noise: f64,
) -> Result<FieldState, ConstraintError> {
    let cons = vertex_constraints(mesh, stage)?;
    let mut s = FieldState::constant(mesh.vertex_count(), &ShTensor::zero());
    for v in 0..mesh.vertex_count() {
        let n = mesh.vertex_normals[v];
        let (t1, t2) = random_tangent_pair(rng, &n);
        let l = [1.0, rng.random_range(0.6..1.8), rng.random_range(0.6..1.8)];
        let mut q = from_frame(&Frame::new(l, [n, t1, t2])).0;
        for x in q.iter_mut() {
            *x += noise * rng.random_range(-1.0..1.0);
        }
        s.set_vertex(v, &ShTensor(q));
    }
    cons.project_feasible(&mut s.q);
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSample {
    pub coordinate: usize,
    pub analytic: f64,
    pub finite_difference: f64,
}

impl GradientSample {
    /// `|analytic − fd| / (|fd| + 1e-8)`.
    pub fn relative_error(&self) -> f64 {
        (self.analytic - self.finite_difference).abs() / (self.finite_difference.abs() + 1e-8)
    }
}

/// Compares the analytic gradient with Richardson-extrapolated central
/// differences (steps 1e-4 and 5e-5) on `samples` random coordinates.
pub fn gradient_check<R: Rng + ?Sized, E: Executor>(
    objective: &Objective,
    state: &FieldState,
    samples: usize,
    rng: &mut R,
    exec: &E,
) -> Result<Vec<GradientSample>, EnergyError> {
    let g = objective.evaluate(&state.q, exec, true)?.gradient.expect("gradient requested");
    let f = |q: &[f64]| objective.evaluate(q, exec, false).map(|e| e.value);
    let mut out = Vec::with_capacity(samples);
    let mut p = state.q.clone();
    for _ in 0..samples {
        let i = rng.random_range(0..state.q.len());
        let mut central = |h: f64| -> Result<f64, EnergyError> {
            p[i] = state.q[i] + h;
            let fp = f(&p)?;
            p[i] = state.q[i] - h;
            let fm = f(&p)?;
            p[i] = state.q[i];
            Ok((fp - fm) / (2.0 * h))
        };
        let h = 1e-4;
        let fd = (4.0 * central(h / 2.0)? - central(h)?) / 3.0;
        out.push(GradientSample { coordinate: i, analytic: g[i], finite_difference: fd });
    }
    Ok(out)
}
