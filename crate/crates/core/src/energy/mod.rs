//! The discrete objective and its exact gradient.
//!
//! Vertex tensors are interpolated linearly over each triangle and every term
//! is integrated with the three-point rule. All terms except the curl energy
//! are divided by the triangle Jacobian so that they do not depend on the
//! triangle's size.

mod check;
mod curl;

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use core::fmt;

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix3, SMatrix, Vector3};

pub use check::{gradient_check, random_feasible_state, GradientSample};
pub use curl::{curl_density_monomial, CurlFrame, CurlGradient, Normalization, SINGULAR_PENALTY, TIKHONOV};

use crate::constraints::{build_isotropy, AffineConstraint, ConstraintError};
use crate::exec::Executor;
use crate::linalg::pairwise_sum;
use crate::mesh::{SurfaceMesh, GAUSS3};
use crate::tensor::{basis, quadrics, ShTensor, DIM};

/// Integrand value used where a term is undefined (zero tensor, det M ≤ 0).
pub const PENALTY: f64 = 1e8;
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum EnergyError {
    WrongLength { expected: usize, found: usize },
    NonFiniteState,
    NonFiniteGradient,
    NegativeWeight,
    Constraint(ConstraintError),
}

impl fmt::Display for EnergyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyError::WrongLength { expected, found } => {
                write!(f, "field has {found} coefficients, expected {expected}")
            }
            EnergyError::NonFiniteState => write!(f, "field contains non-finite coefficients"),
            EnergyError::NonFiniteGradient => write!(f, "energy gradient is not finite"),
            EnergyError::NegativeWeight => write!(f, "energy weights must be non-negative"),
            EnergyError::Constraint(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EnergyError {}

impl From<ConstraintError> for EnergyError {
    fn from(e: ConstraintError) -> Self {
        EnergyError::Constraint(e)
    }
}

/// Stacked vertex coefficients, 15 per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub q: Vec<f64>,
}

impl FieldState {
    pub fn constant(vertex_count: usize, q: &ShTensor) -> Self {
        FieldState { q: (0..vertex_count).flat_map(|_| q.0.iter().cloned()).collect() }
    }

    pub fn from_vec(q: Vec<f64>, vertex_count: usize) -> Result<Self, EnergyError> {
        if q.len() != DIM * vertex_count {
            return Err(EnergyError::WrongLength { expected: DIM * vertex_count, found: q.len() });
        }
        if !q.iter().all(|x| x.is_finite()) {
            return Err(EnergyError::NonFiniteState);
        }
        Ok(FieldState { q })
    }

    pub fn vertex_count(&self) -> usize {
        self.q.len() / DIM
    }

    pub fn vertex(&self, v: usize) -> ShTensor {
        ShTensor::from_slice(&self.q[v * DIM..(v + 1) * DIM])
    }

    pub fn set_vertex(&mut self, v: usize, q: &ShTensor) {
        self.q[v * DIM..(v + 1) * DIM].copy_from_slice(q.0.as_slice());
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWeights {
    pub kappa_odeco: f64,
    pub kappa_area: f64,
    pub kappa_angle: f64,
    /// Target quad area.
    pub a0: f64,
}

impl EnergyWeights {
    pub const fn new(kappa_odeco: f64, kappa_area: f64, kappa_angle: f64) -> Self {
        EnergyWeights { kappa_odeco, kappa_area, kappa_angle, a0: 1.0 }
    }

    /// CAD models with area preservation.
    pub const AREA: Self = Self::new(10.0, 0.1, 0.0);
    /// Smooth models with area preservation and a little angle control.
    pub const AREA_SMOOTH: Self = Self::new(10.0, 0.1, 1e-4);
    pub const ANGLE: Self = Self::new(1.0, 0.0, 0.01);
    pub const SIZING_ONLY: Self = Self::new(1.0, 0.0, 0.0);
    /// Initialization stage.
    pub const INIT: Self = Self::new(1.0, 0.0, 0.0);

    pub fn validate(&self) -> Result<(), EnergyError> {
        let ok = [self.kappa_odeco, self.kappa_area, self.kappa_angle, self.a0]
            .iter()
            .all(|w| *w >= 0.0 && w.is_finite());
        if ok && self.a0 > 0.0 {
            Ok(())
        } else {
            Err(EnergyError::NegativeWeight)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `Φ_smooth + κ_odeco Ĉ`.
    Init,
    /// `H + κ_odeco Ĉ + κ_area Φ_area + κ_angle Φ_angle`.
    Main,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Terms {
    pub curl: f64,
    pub odeco: f64,
    pub area: f64,
    pub angle: f64,
    pub smooth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    /// Quadrature points where the curl normalization needed the Tikhonov floor.
    pub regularized: usize,
    /// Quadrature points where the curl normalization failed (penalty used).
    pub singular: usize,
    pub zero_tensor: usize,
    pub nonpositive_det: usize,
}

impl Diagnostics {
    fn add(&mut self, o: &Diagnostics) {
        self.regularized += o.regularized;
        self.singular += o.singular;
        self.zero_tensor += o.zero_tensor;
        self.nonpositive_det += o.nonpositive_det;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub terms: Terms,
    pub diagnostics: Diagnostics,
    pub gradient: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Mask {
    curl: f64,
    odeco: f64,
    area: f64,
    angle: f64,
    smooth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnergyOptions {
    /// Divide the curl integrand by the triangle Jacobian like the other terms.
    pub divide_curl_by_area: bool,
}

/// Objective for one mesh, stage and weight set.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub mesh: &'a SurfaceMesh,
    pub weights: EnergyWeights,
    pub mode: Mode,
    pub options: EnergyOptions,
    isotropy: Vec<AffineConstraint>,
}

impl<'a> Objective<'a> {
    pub fn new(mesh: &'a SurfaceMesh, weights: EnergyWeights, mode: Mode) -> Result<Self, EnergyError> {
        weights.validate()?;
        let isotropy = if mode == Mode::Main && weights.kappa_angle > 0.0 {
            isotropy_constraints(mesh)?
        } else {
            Vec::new()
        };
        Ok(Objective { mesh, weights, mode, options: EnergyOptions::default(), isotropy })
    }

    fn mask(&self) -> Mask {
        let w = &self.weights;
        match self.mode {
            Mode::Init => Mask { smooth: 1.0, odeco: w.kappa_odeco, ..Mask::default() },
            Mode::Main => Mask { curl: 1.0, odeco: w.kappa_odeco, area: w.kappa_area, angle: w.kappa_angle, smooth: 0.0 },
        }
    }

    /// Weighted total of `terms` for this objective.
    pub fn combine(&self, t: &Terms) -> f64 {
        let m = self.mask();
        m.curl * t.curl + m.odeco * t.odeco + m.area * t.area + m.angle * t.angle + m.smooth * t.smooth
    }

    pub fn evaluate<E: Executor>(&self, state: &[f64], exec: &E, gradient: bool) -> Result<Evaluation, EnergyError> {
        let iso = if self.isotropy.is_empty() { None } else { Some(self.isotropy.as_slice()) };
        assemble(self.mesh, state, self.mask(), self.weights.a0, iso, self.options, exec, gradient)
    }
}

/// Per-triangle isotropy constraints about the triangle normals.
pub fn isotropy_constraints(mesh: &SurfaceMesh) -> Result<Vec<AffineConstraint>, ConstraintError> {
    let mut cache: alloc::collections::BTreeMap<[i64; 3], usize> = alloc::collections::BTreeMap::new();
    let mut unique: Vec<AffineConstraint> = Vec::new();
    let mut out = Vec::with_capacity(mesh.triangle_count());
    for n in &mesh.normals {
        let key: [i64; 3] = n.map(|x| (x * 1e12).round() as i64).into();
        let i = match cache.get(&key) {
            Some(&i) => i,
            None => {
                unique.push(build_isotropy(n)?);
                cache.insert(key, unique.len() - 1);
                unique.len() - 1
            }
        };
        out.push(unique[i].clone());
    }
    Ok(out)
}

struct TriangleResult {
    terms: [f64; 5],
    diag: Diagnostics,
    gq: [[f64; DIM]; 3],
    gu: [[f64; DIM]; 3],
}

/// `M_ij = Σ_k T_ijkk` from monomial coefficients.
fn second_order_from_monomials(u: &[f64; DIM]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| {
        (0..3)
            .map(|k| {
                let m = curl::MONO[((i * 3 + j) * 3 + k) * 3 + k];
                u[m] * curl::INV_MULT[m]
            })
            .sum()
    })
}

/// Adds the pullback of a matrix gradient through [`second_order_from_monomials`].
fn second_order_adjoint(gm: &Matrix3<f64>, gu: &mut [f64; DIM], scale: f64) {
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let m = curl::MONO[((i * 3 + j) * 3 + k) * 3 + k];
                gu[m] += scale * gm[(i, j)] * curl::INV_MULT[m];
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn triangle(
    mesh: &SurfaceMesh,
    t: usize,
    q: &[f64],
    u: &[[f64; DIM]],
    mask: Mask,
    a0: f64,
    iso: Option<&[AffineConstraint]>,
    options: EnergyOptions,
    gradient: bool,
) -> TriangleResult {
    let tri = mesh.triangles[t];
    let grads = &mesh.elements[t].gradients;
    let n = mesh.normals[t];
    let jac = mesh.jacobians[t];
    let qv: [&[f64]; 3] = tri.map(|v| &q[v * DIM..(v + 1) * DIM]);
    let uv: [&[f64; DIM]; 3] = tri.map(|v| &u[v]);

    let mut r = TriangleResult { terms: [0.0; 5], diag: Diagnostics::default(), gq: [[0.0; DIM]; 3], gu: [[0.0; DIM]; 3] };

    let du: [[f64; DIM]; 3] = core::array::from_fn(|a| core::array::from_fn(|m| (0..3).map(|i| uv[i][m] * grads[i][a]).sum()));
    let frame = (mask.curl != 0.0).then(|| CurlFrame::new(&du, &n));
    let mut gc_sum = [0.0; 27];
    let curl_scale = if options.divide_curl_by_area { 1.0 } else { jac };

    for (xi, &w) in GAUSS3.points.iter().zip(GAUSS3.weights.iter()) {
        let qk: [f64; DIM] = core::array::from_fn(|m| (0..3).map(|i| xi[i] * qv[i][m]).sum());
        let uk: [f64; DIM] = core::array::from_fn(|m| (0..3).map(|i| xi[i] * uv[i][m]).sum());
        let mut gqk = [0.0; DIM];
        let mut guk = [0.0; DIM];

        if let Some(frame) = &frame {
            let (h, status, g) = frame.density(&uk, gradient);
            match status {
                Normalization::Regular => {}
                Normalization::Regularized => r.diag.regularized += 1,
                Normalization::Failed => r.diag.singular += 1,
            }
            r.terms[0] += w * h * curl_scale;
            if let Some((gu, gc)) = g {
                let s = mask.curl * w * curl_scale;
                for m in 0..DIM {
                    guk[m] += s * gu[m];
                }
                for (acc, v) in gc_sum.iter_mut().zip(gc.iter()) {
                    *acc += s * v;
                }
            }
        }

        if mask.odeco != 0.0 {
            let n2: f64 = qk.iter().map(|x| x * x).sum();
            if n2.sqrt() < ZERO_NORM {
                r.diag.zero_tensor += 1;
                r.terms[1] += w * PENALTY;
            } else {
                let (s2, gs) = quadrics().squared_sum_with_gradient(&uk);
                let inv4 = 1.0 / (n2 * n2);
                r.terms[1] += w * s2 * inv4;
                if gradient {
                    let s = mask.odeco * w;
                    for m in 0..DIM {
                        guk[m] += s * gs[m] * inv4;
                        gqk[m] -= s * 4.0 * s2 * inv4 / n2 * qk[m];
                    }
                }
            }
        }

        if mask.area != 0.0 {
            let mm = second_order_from_monomials(&uk);
            let det = mm.determinant();
            if !(a0 * det > 0.0) {
                r.diag.nonpositive_det += 1;
                r.terms[2] += w * PENALTY;
            } else {
                let lg = (a0 * det).ln();
                r.terms[2] += w * lg * lg;
                if gradient {
                    if let Some(inv) = mm.try_inverse() {
                        second_order_adjoint(&(inv.transpose() * (2.0 * lg)), &mut guk, mask.area * w);
                    }
                }
            }
        }

        if mask.angle != 0.0 {
            if let Some(iso) = iso {
                let c = &iso[t];
                let res = c.residual(&qk);
                r.terms[3] += w * res.iter().map(|x| x * x).sum::<f64>();
                if gradient {
                    let s = mask.angle * w * 2.0;
                    for (row, rv) in c.a().iter().zip(res.iter()) {
                        for m in 0..DIM {
                            gqk[m] += s * rv * row[m];
                        }
                    }
                }
            }
        }

        if gradient {
            for i in 0..3 {
                for m in 0..DIM {
                    r.gq[i][m] += xi[i] * gqk[m];
                    r.gu[i][m] += xi[i] * guk[m];
                }
            }
        }
    }

    if mask.smooth != 0.0 {
        // ∇q is constant; the rule's weights sum to 1/2.
        let mut e = 0.0;
        let mut dq = [[0.0; 3]; DIM];
        for m in 0..DIM {
            let g: Vector3<f64> = (0..3).map(|i| grads[i] * qv[i][m]).sum();
            dq[m] = [g.x, g.y, g.z];
            e += g.norm_squared();
        }
        r.terms[4] = 0.25 * e;
        if gradient {
            for i in 0..3 {
                for m in 0..DIM {
                    let d = Vector3::from(dq[m]);
                    r.gq[i][m] += mask.smooth * 0.5 * d.dot(&grads[i]);
                }
            }
        }
    }

    if let (true, Some(frame)) = (gradient, &frame) {
        let gdu = frame.derivative_gradient(&gc_sum);
        for i in 0..3 {
            for m in 0..DIM {
                r.gu[i][m] += (0..3).map(|a| grads[i][a] * gdu[a][m]).sum::<f64>();
            }
        }
    }
    r
}

#[allow(clippy::too_many_arguments)]
fn assemble<E: Executor>(
    mesh: &SurfaceMesh,
    q: &[f64],
    mask: Mask,
    a0: f64,
    iso: Option<&[AffineConstraint]>,
    options: EnergyOptions,
    exec: &E,
    gradient: bool,
) -> Result<Evaluation, EnergyError> {
    let nv = mesh.vertex_count();
    if q.len() != DIM * nv {
        return Err(EnergyError::WrongLength { expected: DIM * nv, found: q.len() });
    }
    if !q.iter().all(|x| x.is_finite()) {
        return Err(EnergyError::NonFiniteState);
    }
    let b = &basis::tables().sh_to_monomial;
    let u: Vec<[f64; DIM]> = q
        .chunks_exact(DIM)
        .map(|c| {
            let v = b * SMatrix::<f64, DIM, 1>::from_column_slice(c);
            v.into()
        })
        .collect();

    let results = exec.map(mesh.triangle_count(), |t| triangle(mesh, t, q, &u, mask, a0, iso, options, gradient));

    let mut columns = [Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut diagnostics = Diagnostics::default();
    for r in &results {
        for (c, v) in columns.iter_mut().zip(r.terms.iter()) {
            c.push(*v);
        }
        diagnostics.add(&r.diag);
    }
    let sums: [f64; 5] = core::array::from_fn(|k| pairwise_sum(&columns[k]));
    let terms = Terms { curl: sums[0], odeco: sums[1], area: sums[2], angle: sums[3], smooth: sums[4] };
    let value = mask.curl * terms.curl + mask.odeco * terms.odeco + mask.area * terms.area + mask.angle * terms.angle + mask.smooth * terms.smooth;

    let gradient = if gradient {
        let mut gq = vec![0.0; DIM * nv];
        let mut gu = vec![[0.0; DIM]; nv];
        for (t, r) in results.iter().enumerate() {
            for (i, &v) in mesh.triangles[t].iter().enumerate() {
                for m in 0..DIM {
                    gq[v * DIM + m] += r.gq[i][m];
                    gu[v][m] += r.gu[i][m];
                }
            }
        }
        for v in 0..nv {
            let back = b.transpose() * SMatrix::<f64, DIM, 1>::from(gu[v]);
            for m in 0..DIM {
                gq[v * DIM + m] += back[m];
            }
        }
        if !gq.iter().all(|x| x.is_finite()) {
            return Err(EnergyError::NonFiniteGradient);
        }
        Some(gq)
    } else {
        None
    };
    Ok(Evaluation { value, terms, diagnostics, gradient })
}

fn single<E: Executor>(mesh: &SurfaceMesh, state: &FieldState, mask: Mask, a0: f64, iso: Option<&[AffineConstraint]>, exec: &E) -> Result<Evaluation, EnergyError> {
    assemble(mesh, &state.q, mask, a0, iso, EnergyOptions::default(), exec, false)
}

/// Normalized integrability density at one point from SH coefficients and
/// their spatial gradient (column `a` holds `∂q/∂x_a`).
pub fn curl_density(q: &ShTensor, grad_q: &SMatrix<f64, DIM, 3>, n: &Vector3<f64>) -> (f64, Normalization) {
    let b = &basis::tables().sh_to_monomial;
    let u: [f64; DIM] = (b * q.0).into();
    let du: [[f64; DIM]; 3] = core::array::from_fn(|a| (b * grad_q.column(a)).into());
    let (h, s, _) = curl_density_monomial(&u, &du, n, false);
    (h, s)
}

/// `H = Σ_T Σ_k w_k h(ξ_k) J_T`.
pub fn curl_energy<E: Executor>(state: &FieldState, mesh: &SurfaceMesh, exec: &E) -> Result<(f64, Diagnostics), EnergyError> {
    let e = single(mesh, state, Mask { curl: 1.0, ..Mask::default() }, 1.0, None, exec)?;
    Ok((e.terms.curl, e.diagnostics))
}

/// `Ĉ`, the quadric residuals of the normalized interpolated tensor.
pub fn odeco_penalty<E: Executor>(state: &FieldState, mesh: &SurfaceMesh, exec: &E) -> Result<f64, EnergyError> {
    Ok(single(mesh, state, Mask { odeco: 1.0, ..Mask::default() }, 1.0, None, exec)?.terms.odeco)
}

pub fn area_distortion<E: Executor>(state: &FieldState, mesh: &SurfaceMesh, a0: f64, exec: &E) -> Result<f64, EnergyError> {
    Ok(single(mesh, state, Mask { area: 1.0, ..Mask::default() }, a0, None, exec)?.terms.area)
}

pub fn angle_distortion<E: Executor>(state: &FieldState, mesh: &SurfaceMesh, exec: &E) -> Result<f64, EnergyError> {
    let iso = isotropy_constraints(mesh)?;
    Ok(single(mesh, state, Mask { angle: 1.0, ..Mask::default() }, 1.0, Some(&iso), exec)?.terms.angle)
}

pub fn smoothness<E: Executor>(state: &FieldState, mesh: &SurfaceMesh, exec: &E) -> Result<f64, EnergyError> {
    Ok(single(mesh, state, Mask { smooth: 1.0, ..Mask::default() }, 1.0, None, exec)?.terms.smooth)
}

/// Value and gradient of the stage objective.
pub fn total_energy_and_gradient<E: Executor>(
    state: &FieldState,
    mesh: &SurfaceMesh,
    weights: EnergyWeights,
    mode: Mode,
    exec: &E,
) -> Result<(f64, Vec<f64>), EnergyError> {
    let obj = Objective::new(mesh, weights, mode)?;
    let e = obj.evaluate(&state.q, exec, true)?;
    Ok((e.value, e.gradient.unwrap()))
}
