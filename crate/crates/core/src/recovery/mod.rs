//! Per-face frames, matchings, singularity indices and field metrics.

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Rotation3, Unit, Vector3};

use crate::energy::{curl_density_monomial, FieldState};
use crate::mesh::{SurfaceMesh, NO_FACE};
use crate::tensor::{basis, quadrics, recover_frame, ShTensor, TensorError, DIM};

/// Recovered frame of one triangle: `[∇u | ∇v]` tangent to the face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub grad_u: Vector3<f64>,
    pub grad_v: Vector3<f64>,
    pub normal_eigenvalue: f64,
    /// Deviation from 90° between the tangential axes before re-orthonormalization, degrees.
    pub skew_deg: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceFrameField {
    pub faces: Vec<FaceFrame>,
    /// Quarter turns from `edge_faces[e][0]` to `edge_faces[e][1]`; `None` on
    /// boundary edges and next to degenerate faces.
    pub matchings: Vec<Option<u8>>,
    /// Residual rotation (radians, in `(-π/4, π/4]`) across each matched edge.
    pub edge_angles: Vec<f64>,
    /// Index numerators (denominator 4); `None` when a one-ring has degenerate faces.
    pub indices: Vec<Option<i32>>,
    pub ambiguous_edges: Vec<usize>,
}

impl FaceFrameField {
    pub fn degenerate_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&t| self.faces[t].degenerate).collect()
    }

    /// Vertices with nonzero index, with their numerators.
    pub fn singularities(&self) -> Vec<(usize, i32)> {
        self.indices
            .iter()
            .enumerate()
            .filter_map(|(v, i)| i.filter(|&k| k != 0).map(|k| (v, k)))
            .collect()
    }
}

/// Tensor at the barycenter of `t`.
pub fn barycentric_tensor(state: &FieldState, mesh: &SurfaceMesh, t: usize) -> ShTensor {
    let tri = mesh.triangles[t];
    ShTensor((state.vertex(tri[0]).0 + state.vertex(tri[1]).0 + state.vertex(tri[2]).0) / 3.0)
}

fn face_frame(q: &ShTensor, n: &Vector3<f64>) -> FaceFrame {
    let (frame, degenerate) = match recover_frame(q) {
        Ok(f) => (f, false),
        Err(TensorError::DegenerateFrame { frame }) => (frame, true),
        Err(_) => {
            return FaceFrame {
                grad_u: Vector3::zeros(),
                grad_v: Vector3::zeros(),
                normal_eigenvalue: 0.0,
                skew_deg: 0.0,
                degenerate: true,
            }
        }
    };
    let k = (0..3)
        .max_by(|&a, &b| frame.eigenvectors[a].dot(n).abs().total_cmp(&frame.eigenvectors[b].dot(n).abs()))
        .unwrap();
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    let tangential = |w: &Vector3<f64>| w - n * n.dot(w);
    let (a, b) = (tangential(&frame.eigenvectors[i]), tangential(&frame.eigenvectors[j]));
    let skew_deg = if a.norm() > 1e-12 && b.norm() > 1e-12 {
        (a.normalize().dot(&b.normalize()).abs().min(1.0).acos().to_degrees() - 90.0).abs()
    } else {
        90.0
    };
    let du = if a.norm() > 1e-12 { a.normalize() } else { crate::rng::tangent_basis(n).0 };
    let dv = n.cross(&du);
    let lu = frame.eigenvalues[i];
    let lv = frame.eigenvalues[j];
    FaceFrame {
        grad_u: du * lu,
        grad_v: dv * lv,
        normal_eigenvalue: frame.eigenvalues[k],
        skew_deg,
        degenerate: degenerate || lu <= 0.0 || lv <= 0.0,
    }
}

/// Odeco projection of the barycentric tensor of every face.
pub fn recover_field(state: &FieldState, mesh: &SurfaceMesh) -> FaceFrameField {
    let faces = (0..mesh.triangle_count())
        .map(|t| face_frame(&barycentric_tensor(state, mesh, t), &mesh.normals[t]))
        .collect();
    let ne = mesh.topology.edges.len();
    FaceFrameField {
        faces,
        matchings: vec![None; ne],
        edge_angles: vec![0.0; ne],
        indices: vec![None; mesh.vertex_count()],
        ambiguous_edges: Vec::new(),
    }
}

/// Signed angle of `b` relative to `a` about `n`.
fn signed_angle(a: &Vector3<f64>, b: &Vector3<f64>, n: &Vector3<f64>) -> f64 {
    a.cross(b).dot(n).atan2(a.dot(b))
}

/// Rotation about the shared edge taking the normal of `from` to the normal of `to`.
fn edge_transport(mesh: &SurfaceMesh, e: usize, from: usize, to: usize) -> Rotation3<f64> {
    let [a, b] = mesh.topology.edges[e];
    let axis = Unit::new_normalize(mesh.vertices[b] - mesh.vertices[a]);
    let (ni, nj) = (mesh.normals[from], mesh.normals[to]);
    let phi = ni.cross(&nj).dot(&axis).atan2(ni.dot(&nj));
    Rotation3::from_axis_angle(&axis, phi)
}

/// Reduces an angle to `(-π/4, π/4]` and the number of quarter turns removed (mod 4).
fn reduce(delta: f64) -> (f64, u8) {
    let k = (delta / FRAC_PI_2).round();
    let mut eps = delta - k * FRAC_PI_2;
    let mut k = k as i64;
    if eps <= -FRAC_PI_4 {
        eps += FRAC_PI_2;
        k -= 1;
    }
    (eps, k.rem_euclid(4) as u8)
}

/// Fills matchings and vertex indices.
pub fn compute_matchings_and_indices(mut f: FaceFrameField, mesh: &SurfaceMesh) -> FaceFrameField {
    let topo = &mesh.topology;
    f.ambiguous_edges.clear();
    for e in 0..topo.edges.len() {
        let [i, j] = topo.edge_faces[e];
        f.matchings[e] = None;
        f.edge_angles[e] = 0.0;
        if j == NO_FACE || f.faces[i].degenerate || f.faces[j].degenerate {
            continue;
        }
        let moved = edge_transport(mesh, e, i, j) * f.faces[i].grad_u;
        let delta = signed_angle(&moved, &f.faces[j].grad_u, &mesh.normals[j]);
        let (mut eps, mut r) = reduce(delta);
        if (eps.abs() - FRAC_PI_4).abs() < 1e-9 {
            // Two quarter turns are equally close: keep the smaller one.
            f.ambiguous_edges.push(e);
            let (other, other_eps) = if eps > 0.0 { ((r + 1) % 4, eps - FRAC_PI_2) } else { ((r + 3) % 4, eps + FRAC_PI_2) };
            if other < r {
                r = other;
                eps = other_eps;
            }
        }
        f.matchings[e] = Some(r);
        f.edge_angles[e] = eps;
    }

    for v in 0..mesh.vertex_count() {
        let ring = &topo.vertex_faces[v];
        f.indices[v] = None;
        if ring.iter().any(|&t| f.faces[t].degenerate) {
            continue;
        }
        let angle_sum: f64 = ring
            .iter()
            .map(|&t| mesh.corner_angle(t, mesh.triangles[t].iter().position(|&x| x == v).unwrap()))
            .sum();
        // Rotation of the field across the fan's interior edges, in fan order.
        let pairs = if topo.boundary_vertex[v] { ring.len() - 1 } else { ring.len() };
        let mut turning = 0.0;
        for m in 0..pairs {
            let (a, b) = (ring[m], ring[(m + 1) % ring.len()]);
            let e = shared_edge(mesh, a, b, v);
            let eps = f.edge_angles[e];
            turning += if topo.edge_faces[e][0] == a { eps } else { -eps };
        }
        let quarters = if topo.boundary_vertex[v] {
            let first = ring[0];
            let last = ring[ring.len() - 1];
            let e0 = outgoing_boundary_direction(mesh, first, v, true);
            let e1 = outgoing_boundary_direction(mesh, last, v, false);
            let a0 = reduce(signed_angle(&e0, &f.faces[first].grad_u, &mesh.normals[first])).0;
            let a1 = reduce(signed_angle(&e1, &f.faces[last].grad_u, &mesh.normals[last])).0;
            ((a0 + turning - angle_sum - a1) / FRAC_PI_2).round() + (angle_sum / FRAC_PI_2).round()
        } else {
            let defect = 2.0 * PI - angle_sum;
            ((turning + defect) / FRAC_PI_2).round()
        };
        f.indices[v] = Some(quarters as i32);
    }
    f
}

fn shared_edge(mesh: &SurfaceMesh, a: usize, b: usize, v: usize) -> usize {
    let topo = &mesh.topology;
    topo.face_edges[a]
        .iter()
        .copied()
        .find(|&e| {
            let f = topo.edge_faces[e];
            (f[0] == b || f[1] == b) && topo.edges[e].contains(&v)
        })
        .expect("consecutive ring faces share an edge")
}

/// Direction from `v` along the boundary edge of the first (`first = true`) or last fan face.
fn outgoing_boundary_direction(mesh: &SurfaceMesh, t: usize, v: usize, first: bool) -> Vector3<f64> {
    let tri = mesh.triangles[t];
    let k = tri.iter().position(|&x| x == v).unwrap();
    // In counter-clockwise order the fan starts at the edge to the next vertex and
    // ends at the edge to the previous vertex.
    let other = if first { tri[(k + 1) % 3] } else { tri[(k + 2) % 3] };
    (mesh.vertices[other] - mesh.vertices[v]).normalize()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    /// Index +1/4 vertices.
    pub n3: usize,
    /// Index −1/4 vertices.
    pub n5: usize,
    /// Nonzero indices other than ±1/4.
    pub other_singularities: usize,
    pub singularities: Vec<(usize, i32)>,
    /// Σ index numerators over non-boundary vertices.
    pub interior_index_sum: i64,
    pub unindexed_vertices: usize,
    pub degenerate_faces: usize,
    pub ambiguous_matchings: usize,
    pub skew_mean_deg: f64,
    pub skew_max_deg: f64,
    pub area_distortion_mean: f64,
    pub angle_distortion_mean: f64,
    pub curl_mean: f64,
    pub curl_max: f64,
    pub odeco_residual_median: f64,
    pub odeco_residual_max: f64,
}

/// `Σ c_i(q/‖q‖)²` at every vertex.
pub fn vertex_odeco_residuals(state: &FieldState) -> Vec<f64> {
    let b = &basis::tables().sh_to_monomial;
    (0..state.vertex_count())
        .map(|v| {
            let q = state.vertex(v).0;
            let n2 = q.norm_squared();
            if n2 < 1e-24 {
                return f64::INFINITY;
            }
            let u: [f64; DIM] = (b * q).into();
            quadrics().squared_sum_with_gradient(&u).0 / (n2 * n2)
        })
        .collect()
}

/// Curl density at each face barycenter.
pub fn face_curl_residuals(state: &FieldState, mesh: &SurfaceMesh) -> Vec<f64> {
    let b = &basis::tables().sh_to_monomial;
    (0..mesh.triangle_count())
        .map(|t| {
            let tri = mesh.triangles[t];
            let u: [[f64; DIM]; 3] = tri.map(|v| (b * state.vertex(v).0).into());
            let g = &mesh.elements[t].gradients;
            let ub: [f64; DIM] = core::array::from_fn(|m| (u[0][m] + u[1][m] + u[2][m]) / 3.0);
            let du: [[f64; DIM]; 3] = core::array::from_fn(|a| core::array::from_fn(|m| (0..3).map(|i| u[i][m] * g[i][a]).sum()));
            curl_density_monomial(&ub, &du, &mesh.normals[t], false).0
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let all: Vec<f64> = v.collect();
    if all.is_empty() {
        0.0
    } else {
        crate::linalg::pairwise_sum(&all) / all.len() as f64
    }
}

pub fn field_metrics(f: &FaceFrameField, state: &FieldState, mesh: &SurfaceMesh, a0: f64) -> MetricsReport {
    let singularities = f.singularities();
    let good: Vec<&FaceFrame> = f.faces.iter().filter(|x| !x.degenerate).collect();
    let curl = face_curl_residuals(state, mesh);
    let odeco = vertex_odeco_residuals(state);
    MetricsReport {
        n3: singularities.iter().filter(|s| s.1 == 1).count(),
        n5: singularities.iter().filter(|s| s.1 == -1).count(),
        other_singularities: singularities.iter().filter(|s| s.1.abs() > 1).count(),
        interior_index_sum: (0..mesh.vertex_count())
            .filter(|&v| !mesh.topology.boundary_vertex[v])
            .filter_map(|v| f.indices[v])
            .map(|k| k as i64)
            .sum(),
        singularities,
        unindexed_vertices: f.indices.iter().filter(|i| i.is_none()).count(),
        degenerate_faces: f.faces.len() - good.len(),
        ambiguous_matchings: f.ambiguous_edges.len(),
        skew_mean_deg: mean(good.iter().map(|x| x.skew_deg)),
        skew_max_deg: good.iter().map(|x| x.skew_deg).fold(0.0, f64::max),
        area_distortion_mean: mean(good.iter().map(|x| {
            let area = 1.0 / (x.grad_u.norm() * x.grad_v.norm());
            (area / a0).ln().powi(2)
        })),
        angle_distortion_mean: mean(good.iter().map(|x| {
            let (a, b) = (x.grad_u.norm(), x.grad_v.norm());
            (a.max(b) / a.min(b)).ln().powi(2)
        })),
        curl_mean: mean(curl.iter().cloned()),
        curl_max: curl.iter().cloned().fold(0.0, f64::max),
        odeco_residual_median: median(odeco.clone()),
        odeco_residual_max: odeco.iter().cloned().fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests;
