//! Procedural test surfaces. All generators emit outward (counter-clockwise) triangles.

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Vector3;

use super::SurfaceMesh;

fn build(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> SurfaceMesh {
    SurfaceMesh::new(vertices, triangles).expect("generated mesh is valid")
}

/// `[0, width] × [0, height]` in the xy-plane, `nx × ny` quads split along alternating diagonals.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> SurfaceMesh {
    let mut v = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            v.push(Vector3::new(width * i as f64 / nx as f64, height * j as f64 / ny as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut t = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                t.push([a, b, c]);
                t.push([a, c, d]);
            } else {
                t.push([a, b, d]);
                t.push([b, c, d]);
            }
        }
    }
    build(v, t)
}

pub fn unit_square(n: usize) -> SurfaceMesh {
    grid(n, n, 1.0, 1.0)
}

/// Joins two closed rings of vertices (given with their polar angles) by a triangle strip.
/// `inner` is traversed counter-clockwise around +z.
fn zip_rings(inner: &[(usize, f64)], outer: &[(usize, f64)], t: &mut Vec<[usize; 3]>) {
    let (ni, no) = (inner.len(), outer.len());
    let (mut i, mut o) = (0, 0);
    let angle = |ring: &[(usize, f64)], k: usize| ring[k % ring.len()].1 + 2.0 * PI * (k / ring.len()) as f64;
    while i < ni || o < no {
        let advance_inner = o >= no || (i < ni && angle(inner, i + 1) < angle(outer, o + 1));
        if advance_inner {
            t.push([inner[i % ni].0, outer[o % no].0, inner[(i + 1) % ni].0]);
            i += 1;
        } else {
            t.push([inner[i % ni].0, outer[o % no].0, outer[(o + 1) % no].0]);
            o += 1;
        }
    }
}

fn ring(v: &mut Vec<Vector3<f64>>, r: f64, n: usize, phase: f64) -> Vec<(usize, f64)> {
    (0..n)
        .map(|k| {
            let a = phase + 2.0 * PI * k as f64 / n as f64;
            v.push(Vector3::new(r * a.cos(), r * a.sin(), 0.0));
            (v.len() - 1, a)
        })
        .collect()
}

/// Flat annulus `r_in ≤ |x| ≤ r_out` in the xy-plane.
pub fn annulus(r_in: f64, r_out: f64, radial: usize, angular: usize) -> SurfaceMesh {
    let mut v = Vec::new();
    let mut t = Vec::new();
    let rings: Vec<_> = (0..=radial)
        .map(|k| {
            let r = r_in + (r_out - r_in) * k as f64 / radial as f64;
            let phase = if k % 2 == 1 { PI / angular as f64 } else { 0.0 };
            ring(&mut v, r, angular, phase)
        })
        .collect();
    for w in rings.windows(2) {
        zip_rings(&w[0], &w[1], &mut t);
    }
    build(v, t)
}

/// Flat disk with `rings` concentric rings of 6k vertices around a center vertex.
pub fn disk(radius: f64, rings: usize) -> SurfaceMesh {
    let mut v = alloc::vec![Vector3::zeros()];
    let mut t = Vec::new();
    let first = ring(&mut v, radius / rings as f64, 6, 0.0);
    for k in 0..6 {
        t.push([0, first[k].0, first[(k + 1) % 6].0]);
    }
    let mut prev = first;
    for k in 2..=rings {
        let next = ring(&mut v, radius * k as f64 / rings as f64, 6 * k, 0.0);
        zip_rings(&prev, &next, &mut t);
        prev = next;
    }
    build(v, t)
}

/// Torus around the z-axis with tube radius `r` and center-line radius `big_r`.
pub fn torus(big_r: f64, r: f64, nu: usize, nv: usize) -> SurfaceMesh {
    let mut v = Vec::new();
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let w = 2.0 * PI * j as f64 / nv as f64;
            let rho = big_r + r * w.cos();
            v.push(Vector3::new(rho * u.cos(), rho * u.sin(), r * w.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut t = Vec::new();
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    build(v, t)
}

/// Unit icosahedron refined `subdivisions` times with vertices pushed to the unit sphere.
pub fn icosphere(subdivisions: usize) -> SurfaceMesh {
    let p = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut v: Vec<Vector3<f64>> = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Vector3::from(*c).normalize())
    .collect();
    let mut t: Vec<[usize; 3]> = alloc::vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        (v, t) = split4(v, &t);
        for x in v.iter_mut() {
            *x = x.normalize();
        }
    }
    build(v, t)
}

/// Axis-aligned unit cube `[0,1]³` with 12 triangles.
pub fn cube() -> SurfaceMesh {
    subdivided_cube(1)
}

/// Axis-aligned unit cube `[0,1]³`, each face an `n × n` grid.
pub fn subdivided_cube(n: usize) -> SurfaceMesh {
    let mut index: BTreeMap<[i64; 3], usize> = BTreeMap::new();
    let mut v = Vec::new();
    let mut t = Vec::new();
    let mut id = |c: Vector3<f64>, v: &mut Vec<Vector3<f64>>| {
        let key = [0, 1, 2].map(|k| (c[k] * n as f64).round() as i64);
        *index.entry(key).or_insert_with(|| {
            v.push(c);
            v.len() - 1
        })
    };
    for axis in 0..3 {
        for side in [0.0, 1.0] {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            let at = |i: usize, j: usize| {
                let mut c = Vector3::zeros();
                c[axis] = side;
                c[a] = i as f64 / n as f64;
                c[b] = j as f64 / n as f64;
                c
            };
            for i in 0..n {
                for j in 0..n {
                    let q = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)].map(|c| id(c, &mut v));
                    // (a, b, axis) is right-handed, so this winding faces +axis.
                    let (t1, t2) = ([q[0], q[1], q[2]], [q[0], q[2], q[3]]);
                    if side > 0.5 {
                        t.push(t1);
                        t.push(t2);
                    } else {
                        t.push([t1[0], t1[2], t1[1]]);
                        t.push([t2[0], t2[2], t2[1]]);
                    }
                }
            }
        }
    }
    build(v, t)
}

/// Closed cylinder around the z-axis, `z ∈ [0, height]`, with flat fan caps.
pub fn capped_cylinder(radius: f64, height: f64, segments: usize, stacks: usize) -> SurfaceMesh {
    let mut v = Vec::new();
    for s in 0..=stacks {
        let z = height * s as f64 / stacks as f64;
        for k in 0..segments {
            let a = 2.0 * PI * k as f64 / segments as f64;
            v.push(Vector3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let id = |s: usize, k: usize| s * segments + k % segments;
    let mut t = Vec::new();
    for s in 0..stacks {
        for k in 0..segments {
            t.push([id(s, k), id(s, k + 1), id(s + 1, k + 1)]);
            t.push([id(s, k), id(s + 1, k + 1), id(s + 1, k)]);
        }
    }
    let bottom = v.len();
    v.push(Vector3::zeros());
    let top = v.len();
    v.push(Vector3::new(0.0, 0.0, height));
    for k in 0..segments {
        t.push([bottom, id(0, k + 1), id(0, k)]);
        t.push([top, id(stacks, k), id(stacks, k + 1)]);
    }
    build(v, t)
}

fn split4(v: Vec<Vector3<f64>>, t: &[[usize; 3]]) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let mut v = v;
    let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(4 * t.len());
    for tri in t {
        let m: [usize; 3] = core::array::from_fn(|k| {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push((v[a] + v[b]) * 0.5);
                v.len() - 1
            })
        });
        out.push([tri[0], m[0], m[2]]);
        out.push([m[0], tri[1], m[1]]);
        out.push([m[2], m[1], tri[2]]);
        out.push([m[0], m[1], m[2]]);
    }
    (v, out)
}

/// Uniform 1-to-4 midpoint refinement. Features are not carried over.
pub fn refine(mesh: &SurfaceMesh) -> SurfaceMesh {
    let (v, t) = split4(mesh.vertices.clone(), &mesh.triangles);
    build(v, t)
}
