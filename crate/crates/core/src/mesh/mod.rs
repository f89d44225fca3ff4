//! Triangle meshes with per-triangle P1 geometry, topology and feature curves.

mod features;
pub mod primitives;
mod quadrature;
mod topology;

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use core::fmt;

use alloc::vec::Vec;
use nalgebra::Vector3;

pub use features::{FeatureSet, VertexKind, DEFAULT_DIHEDRAL_DEG};
pub use quadrature::{QuadratureRule, GAUSS3};
pub use topology::{Topology, NO_FACE};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    IndexOutOfRange { triangle: usize, index: usize },
    /// Offending undirected edges (shared by more than two triangles or inconsistently oriented).
    NonManifoldEdges(Vec<[usize; 2]>),
    /// Vertices whose incident triangles do not form a single fan.
    NonManifoldVertices(Vec<usize>),
    DegenerateTriangles(Vec<usize>),
    IsolatedVertices(Vec<usize>),
    UnknownEdge([usize; 2]),
    InvalidSizing { vertex: usize, value: f64 },
    Empty,
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::IndexOutOfRange { triangle, index } => {
                write!(f, "triangle {triangle} references missing vertex {index}")
            }
            MeshError::NonManifoldEdges(e) => write!(f, "non-manifold mesh: edges {e:?}"),
            MeshError::NonManifoldVertices(v) => write!(f, "non-manifold mesh: vertices {v:?}"),
            MeshError::DegenerateTriangles(t) => write!(f, "degenerate triangles {t:?}"),
            MeshError::IsolatedVertices(v) => write!(f, "vertices without triangles {v:?}"),
            MeshError::UnknownEdge([a, b]) => write!(f, "no mesh edge between vertices {a} and {b}"),
            MeshError::InvalidSizing { vertex, value } => write!(f, "sizing {value} at vertex {vertex} is not positive"),
            MeshError::Empty => write!(f, "mesh has no triangles"),
        }
    }
}

impl core::error::Error for MeshError {}

/// Linear shape-function gradients of one triangle (tangent to its plane).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Element {
    pub gradients: [Vector3<f64>; 3],
}

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub normals: Vec<Vector3<f64>>,
    /// Jacobian determinant of the reference map: twice the triangle area.
    pub jacobians: Vec<f64>,
    pub elements: Vec<P1Element>,
    /// Area-weighted, normalized.
    pub vertex_normals: Vec<Vector3<f64>>,
    pub topology: Topology,
    pub features: FeatureSet,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange { triangle: t, index: i });
                }
            }
        }

        let (lo, hi) = vertices.iter().fold(
            (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)),
            |(lo, hi), v| (lo.inf(v), hi.sup(v)),
        );
        let bbox2 = (hi - lo).norm_squared();
        let mut normals = Vec::with_capacity(triangles.len());
        let mut jacobians = Vec::with_capacity(triangles.len());
        let mut elements = Vec::with_capacity(triangles.len());
        let mut degenerate = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let cross = (b - a).cross(&(c - a));
            let j = cross.norm();
            if !(0.5 * j > 1e-14 * bbox2) {
                degenerate.push(t);
                normals.push(Vector3::z());
                jacobians.push(j);
                elements.push(P1Element { gradients: [Vector3::zeros(); 3] });
                continue;
            }
            let n = cross / j;
            let x = [a, b, c];
            let gradients = core::array::from_fn(|i| n.cross(&(x[(i + 2) % 3] - x[(i + 1) % 3])) / j);
            normals.push(n);
            jacobians.push(j);
            elements.push(P1Element { gradients });
        }
        if !degenerate.is_empty() {
            return Err(MeshError::DegenerateTriangles(degenerate));
        }

        let topology = Topology::build(vertices.len(), &triangles)?;

        let mut vertex_normals = alloc::vec![Vector3::zeros(); vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                vertex_normals[i] += normals[t] * jacobians[t];
            }
        }
        for n in vertex_normals.iter_mut() {
            *n = n.normalize();
        }

        let features = FeatureSet::empty(vertices.len(), topology.edges.len());
        Ok(SurfaceMesh {
            vertices,
            triangles,
            normals,
            jacobians,
            elements,
            vertex_normals,
            topology,
            features,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        0.5 * self.jacobians[t]
    }

    pub fn total_area(&self) -> f64 {
        crate::linalg::pairwise_sum(&self.jacobians) * 0.5
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.topology.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn is_closed(&self) -> bool {
        self.topology.boundary_edges().next().is_none()
    }

    /// Point at barycentric coordinates in triangle `t`.
    pub fn point(&self, t: usize, bary: &[f64; 3]) -> Vector3<f64> {
        let tri = self.triangles[t];
        self.vertices[tri[0]] * bary[0] + self.vertices[tri[1]] * bary[1] + self.vertices[tri[2]] * bary[2]
    }

    pub fn barycenter(&self, t: usize) -> Vector3<f64> {
        self.point(t, &[1.0 / 3.0; 3])
    }

    /// Mean edge length.
    pub fn mean_edge_length(&self) -> f64 {
        let lens: Vec<f64> = self
            .topology
            .edges
            .iter()
            .map(|e| (self.vertices[e[0]] - self.vertices[e[1]]).norm())
            .collect();
        crate::linalg::pairwise_sum(&lens) / lens.len() as f64
    }

    /// Interior angle of triangle `t` at its local corner `k`.
    pub fn corner_angle(&self, t: usize, k: usize) -> f64 {
        let tri = self.triangles[t];
        let p = self.vertices[tri[k]];
        let a = self.vertices[tri[(k + 1) % 3]] - p;
        let b = self.vertices[tri[(k + 2) % 3]] - p;
        a.cross(&b).norm().atan2(a.dot(&b))
    }

    /// Uniformly scaled copy (positions multiplied by `s`), features preserved.
    pub fn scaled(&self, s: f64) -> Self {
        let mut m = SurfaceMesh::new(self.vertices.iter().map(|v| v * s).collect(), self.triangles.clone())
            .expect("scaling preserves validity");
        m.features = self.features.clone();
        m
    }

    /// Marks every vertex within `rings` edge hops of any seed.
    pub fn vertices_within(&self, seeds: &[usize], rings: usize) -> Vec<bool> {
        let mut mark = alloc::vec![false; self.vertices.len()];
        let mut front: Vec<usize> = seeds.to_vec();
        for &v in seeds {
            mark[v] = true;
        }
        for _ in 0..rings {
            let mut next = Vec::new();
            for &v in &front {
                for &t in &self.topology.vertex_faces[v] {
                    for &w in &self.triangles[t] {
                        if !mark[w] {
                            mark[w] = true;
                            next.push(w);
                        }
                    }
                }
            }
            front = next;
        }
        mark
    }

    /// Quadrature of a per-point function: `Σ_T Σ_k w_k f(T, k) J_T`.
    ///
    /// `f` receives the triangle index, the quadrature point index and its
    /// barycentric coordinates.
    pub fn integrate<F>(&self, rule: &QuadratureRule, f: F) -> f64
    where
        F: Fn(usize, usize, &[f64; 3]) -> f64,
    {
        let per_triangle: Vec<f64> = (0..self.triangles.len())
            .map(|t| {
                let mut s = 0.0;
                for (k, (xi, w)) in rule.points.iter().zip(rule.weights.iter()).enumerate() {
                    s += w * f(t, k, xi);
                }
                s * self.jacobians[t]
            })
            .collect();
        crate::linalg::pairwise_sum(&per_triangle)
    }
}
