#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector3;

use super::{MeshError, SurfaceMesh};

pub const DEFAULT_DIHEDRAL_DEG: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    Surface,
    Feature,
    Corner,
}

/// Feature curves, corners, curve tangents and tangential sizing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// Indexed like `Topology::edges`.
    pub feature_edge: Vec<bool>,
    pub corner: Vec<bool>,
    /// Unit tangent on non-corner feature vertices.
    pub tangent: Vec<Option<Vector3<f64>>>,
    /// Target tangential eigenvalue along feature curves.
    pub sizing: Vec<f64>,
}

impl FeatureSet {
    pub fn empty(vertex_count: usize, edge_count: usize) -> Self {
        FeatureSet {
            feature_edge: vec![false; edge_count],
            corner: vec![false; vertex_count],
            tangent: vec![None; vertex_count],
            sizing: vec![1.0; vertex_count],
        }
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        if self.corner[v] {
            VertexKind::Corner
        } else if self.tangent[v].is_some() {
            VertexKind::Feature
        } else {
            VertexKind::Surface
        }
    }

    pub fn feature_edge_count(&self) -> usize {
        self.feature_edge.iter().filter(|&&f| f).count()
    }

    pub fn corner_count(&self) -> usize {
        self.corner.iter().filter(|&&c| c).count()
    }
}

impl SurfaceMesh {
    /// Marks sharp and boundary edges as features and classifies vertices.
    pub fn detect_features(mut self, dihedral_threshold_deg: f64) -> Self {
        let cos_thr = dihedral_threshold_deg.to_radians().cos();
        let topo = &self.topology;
        let flags: Vec<bool> = topo
            .edge_faces
            .iter()
            .enumerate()
            .map(|(e, f)| topo.is_boundary_edge(e) || self.normals[f[0]].dot(&self.normals[f[1]]) < cos_thr)
            .collect();
        self.assign_features(flags, &[], dihedral_threshold_deg);
        self
    }

    /// Installs features given explicitly (e.g. from a features file). Boundary
    /// edges are always added; corners are the union of `corners` and the
    /// automatic rule at the default threshold.
    pub fn set_features(&mut self, edges: &[[usize; 2]], corners: &[usize], sizing: &[(usize, f64)]) -> Result<(), MeshError> {
        let topo = &self.topology;
        let mut flags: Vec<bool> = (0..topo.edges.len()).map(|e| topo.is_boundary_edge(e)).collect();
        for &[a, b] in edges {
            let e = self.edge_between(a, b).ok_or(MeshError::UnknownEdge([a, b]))?;
            flags[e] = true;
        }
        for &c in corners {
            if c >= self.vertices.len() {
                return Err(MeshError::IndexOutOfRange { triangle: usize::MAX, index: c });
            }
        }
        self.assign_features(flags, corners, DEFAULT_DIHEDRAL_DEG);
        for &(v, l) in sizing {
            self.set_sizing(v, l)?;
        }
        Ok(())
    }

    pub fn set_sizing(&mut self, v: usize, l: f64) -> Result<(), MeshError> {
        if v >= self.vertices.len() {
            return Err(MeshError::IndexOutOfRange { triangle: usize::MAX, index: v });
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(MeshError::InvalidSizing { vertex: v, value: l });
        }
        self.features.sizing[v] = l;
        Ok(())
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        let faces = &self.topology.vertex_faces.get(a)?;
        faces
            .iter()
            .flat_map(|&t| self.topology.face_edges[t])
            .find(|&e| self.topology.edges[e] == key)
    }

    fn assign_features(&mut self, flags: Vec<bool>, extra_corners: &[usize], threshold_deg: f64) {
        let n = self.vertices.len();
        let cos_thr = threshold_deg.to_radians().cos();
        let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, &f) in flags.iter().enumerate() {
            if f {
                let [a, b] = self.topology.edges[e];
                nbrs[a].push(b);
                nbrs[b].push(a);
            }
        }
        let mut corner = vec![false; n];
        for v in 0..n {
            corner[v] = match nbrs[v].len() {
                0 | 1 => false,
                2 => {
                    let d1 = (self.vertices[v] - self.vertices[nbrs[v][0]]).normalize();
                    let d2 = (self.vertices[nbrs[v][1]] - self.vertices[v]).normalize();
                    d1.dot(&d2) < cos_thr
                }
                _ => true,
            };
        }
        for &c in extra_corners {
            corner[c] = true;
        }

        // Orient each curve by walking it from its terminals, then close remaining loops.
        let terminal = |v: usize| corner[v] || nbrs[v].len() != 2;
        let mut used: Vec<Vec<bool>> = nbrs.iter().map(|l| vec![false; l.len()]).collect();
        let mut dir_sum = vec![Vector3::<f64>::zeros(); n];
        let mut walk = |start: usize, first: usize, used: &mut Vec<Vec<bool>>| {
            let (mut prev, mut slot) = (start, first);
            loop {
                if used[prev][slot] {
                    break;
                }
                let cur = nbrs[prev][slot];
                used[prev][slot] = true;
                let back = nbrs[cur].iter().position(|&x| x == prev).unwrap();
                used[cur][back] = true;
                let d = (self.vertices[cur] - self.vertices[prev]).normalize();
                dir_sum[prev] += d;
                dir_sum[cur] += d;
                if terminal(cur) {
                    break;
                }
                slot = 1 - back;
                prev = cur;
            }
        };
        for v in (0..n).filter(|&v| terminal(v)) {
            for s in 0..nbrs[v].len() {
                walk(v, s, &mut used);
            }
        }
        for v in 0..n {
            for s in 0..nbrs[v].len() {
                walk(v, s, &mut used);
            }
        }

        let tangent = (0..n)
            .map(|v| {
                if corner[v] || nbrs[v].is_empty() {
                    None
                } else {
                    Some(dir_sum[v].normalize())
                }
            })
            .collect();
        let sizing = core::mem::take(&mut self.features.sizing);
        self.features = FeatureSet { feature_edge: flags, corner, tangent, sizing };
    }
}
