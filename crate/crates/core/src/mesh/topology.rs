use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::MeshError;

pub const NO_FACE: usize = usize::MAX;

/// Edge and one-ring connectivity of a manifold, consistently oriented triangle mesh.
#[derive(Debug, Clone)]
pub struct Topology {
    /// Undirected edges with `e[0] < e[1]`.
    pub edges: Vec<[usize; 2]>,
    /// Faces on either side; the second is [`NO_FACE`] on the boundary.
    pub edge_faces: Vec<[usize; 2]>,
    /// `face_edges[t][k]` is the edge from local vertex `k` to `k + 1`.
    pub face_edges: Vec<[usize; 3]>,
    /// `face_neighbors[t][k]` is the face across local edge `k`.
    pub face_neighbors: Vec<[usize; 3]>,
    /// Incident faces of each vertex in counter-clockwise order. For boundary
    /// vertices the fan starts at the boundary.
    pub vertex_faces: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
}

impl Topology {
    pub fn build(vertex_count: usize, triangles: &[[usize; 3]]) -> Result<Self, MeshError> {
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut bad_edges = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((a, b), t).is_some() {
                    bad_edges.push([a.min(b), a.max(b)]);
                }
            }
        }
        if !bad_edges.is_empty() {
            bad_edges.sort();
            bad_edges.dedup();
            return Err(MeshError::NonManifoldEdges(bad_edges));
        }

        let mut edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut edge_faces = Vec::new();
        let mut face_edges = vec![[0usize; 3]; triangles.len()];
        let mut face_neighbors = vec![[NO_FACE; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push([NO_FACE, NO_FACE]);
                    edges.len() - 1
                });
                face_edges[t][k] = e;
                if edge_faces[e][0] == NO_FACE {
                    edge_faces[e][0] = t;
                } else {
                    edge_faces[e][1] = t;
                }
                if let Some(&o) = directed.get(&(b, a)) {
                    face_neighbors[t][k] = o;
                }
            }
        }

        let mut incident = vec![Vec::new(); vertex_count];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                incident[v].push(t);
            }
        }
        let isolated: Vec<usize> = (0..vertex_count).filter(|&v| incident[v].is_empty()).collect();
        if !isolated.is_empty() {
            return Err(MeshError::IsolatedVertices(isolated));
        }

        let local = |t: usize, v: usize| triangles[t].iter().position(|&x| x == v).unwrap();
        let mut vertex_faces = Vec::with_capacity(vertex_count);
        let mut boundary_vertex = vec![false; vertex_count];
        let mut bad_vertices = Vec::new();
        for v in 0..vertex_count {
            // The face before `t` (clockwise) lies across the edge from v to its successor in t.
            let prev_face = |t: usize| face_neighbors[t][local(t, v)];
            let next_face = |t: usize| face_neighbors[t][(local(t, v) + 2) % 3];
            let mut start = incident[v][0];
            let mut steps = 0;
            while prev_face(start) != NO_FACE && prev_face(start) != incident[v][0] {
                start = prev_face(start);
                steps += 1;
                if steps > incident[v].len() {
                    break;
                }
            }
            let open = prev_face(start) == NO_FACE;
            let mut ring = vec![start];
            let mut cur = start;
            loop {
                let n = next_face(cur);
                if n == NO_FACE || n == start || ring.len() > incident[v].len() {
                    break;
                }
                ring.push(n);
                cur = n;
            }
            if ring.len() != incident[v].len() {
                bad_vertices.push(v);
            }
            boundary_vertex[v] = open;
            vertex_faces.push(ring);
        }
        if !bad_vertices.is_empty() {
            return Err(MeshError::NonManifoldVertices(bad_vertices));
        }

        Ok(Topology {
            edges,
            edge_faces,
            face_edges,
            face_neighbors,
            vertex_faces,
            boundary_vertex,
        })
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e][1] == NO_FACE
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| self.is_boundary_edge(e))
    }
}
