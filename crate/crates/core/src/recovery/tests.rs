use super::*;
use crate::energy::FieldState;
use crate::mesh::primitives::{annulus, cube, icosphere, torus, unit_square};
use crate::tensor::{from_frame, Frame};
use nalgebra::Matrix2;

fn frame_state(mesh: &SurfaceMesh, f: impl Fn(&Vector3<f64>, &Vector3<f64>) -> Frame) -> FieldState {
    let mut s = FieldState::constant(mesh.vertex_count(), &ShTensor::zero());
    for v in 0..mesh.vertex_count() {
        s.set_vertex(v, &from_frame(&f(&mesh.vertices[v], &mesh.vertex_normals[v])));
    }
    s
}

fn recovered(mesh: &SurfaceMesh, s: &FieldState) -> FaceFrameField {
    compute_matchings_and_indices(recover_field(s, mesh), mesh)
}

#[test]
fn constant_field_on_square_is_regular() {
    let mesh = unit_square(8);
    let s = frame_state(&mesh, |_, _| Frame::axes([2.0, 3.0, 1.0]));
    let f = recovered(&mesh, &s);
    assert!(f.singularities().is_empty(), "{:?}", f.singularities());
    assert!(f.indices.iter().all(|i| i.is_some()));
    assert!(f.matchings.iter().flatten().all(|&r| r == 0));
    for face in &f.faces {
        assert!(!face.degenerate);
        let (u, v) = (face.grad_u, face.grad_v);
        assert!(u.z.abs() < 1e-9 && v.z.abs() < 1e-9);
        assert!(u.cross(&v).z > 0.0);
        let mut l = [u.norm(), v.norm()];
        l.sort_by(f64::total_cmp);
        assert!((l[0] - 2.0).abs() < 1e-8 && (l[1] - 3.0).abs() < 1e-8, "{l:?}");
        assert!(face.skew_deg < 1e-6);
    }
}

#[test]
fn polar_map_frames_match_jacobian() {
    // u = log r, v = θ: ∇u = e_r / r, ∇v = e_θ / r.
    let mesh = annulus(1.0, 2.0, 24, 160);
    let s = frame_state(&mesh, |x, _| {
        let r = x.xy().norm();
        let er = Vector3::new(x.x / r, x.y / r, 0.0);
        Frame::new([1.0 / r, 1.0 / r, 1.0], [er, Vector3::z().cross(&er), Vector3::z()])
    });
    let f = recovered(&mesh, &s);
    let mut worst: f64 = 0.0;
    for t in 0..mesh.triangle_count() {
        let c = mesh.barycenter(t);
        let r = c.xy().norm();
        let er = Vector3::new(c.x / r, c.y / r, 0.0) / r;
        let et = Vector3::z().cross(&er);
        let g = Matrix2::new(f.faces[t].grad_u.x, f.faces[t].grad_v.x, f.faces[t].grad_u.y, f.faces[t].grad_v.y);
        let best = (0..4)
            .map(|k| {
                let (a, b) = match k {
                    0 => (er, et),
                    1 => (et, -er),
                    2 => (-er, -et),
                    _ => (-et, er),
                };
                let j = Matrix2::new(a.x, b.x, a.y, b.y);
                (g - j).norm() / j.norm()
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    assert!(worst < 1e-3, "{worst}");
    assert!(f.singularities().is_empty());
}

#[test]
fn quarter_turn_field_has_index_one_quarter() {
    // Plane with a single interior vertex at the origin (disk).
    let mesh = crate::mesh::primitives::disk(1.0, 6);
    let s = frame_state(&mesh, |x, _| {
        let r = x.xy().norm();
        if r < 1e-12 {
            return Frame::axes([1.0; 3]);
        }
        // Axis angle θ/4: a cross field of index +1/4.
        let th = x.y.atan2(x.x);
        let a = th / 4.0;
        let d = Vector3::new(a.cos(), a.sin(), 0.0);
        Frame::new([1.0; 3], [d, Vector3::z().cross(&d), Vector3::z()])
    });
    let f = recovered(&mesh, &s);
    let center = (0..mesh.vertex_count()).find(|&v| mesh.vertices[v].norm() < 1e-12).unwrap();
    assert_eq!(f.indices[center], Some(1));
    let others: Vec<_> = f.singularities().into_iter().filter(|s| s.0 != center && !mesh.topology.boundary_vertex[s.0]).collect();
    assert!(others.is_empty(), "{others:?}");
}

#[test]
fn index_sum_matches_euler_characteristic() {
    let mut rng = crate::rng::seeded(7);
    for (mesh, chi) in [(icosphere(2), 2), (torus(2.0, 0.7, 24, 12), 0), (cube(), 2)] {
        for _ in 0..3 {
            let r = crate::rng::rotation(&mut rng);
            let s = frame_state(&mesh, |x, n| {
                let w = r * Vector3::new(x.y + 0.3, x.z * x.x, 1.0 + x.x);
                let t = w - n * n.dot(&w);
                let t = if t.norm() > 1e-9 { t.normalize() } else { crate::rng::tangent_basis(n).0 };
                Frame::new([1.0; 3], [t, n.cross(&t), *n])
            });
            let f = recovered(&mesh, &s);
            let m = field_metrics(&f, &s, &mesh, 1.0);
            assert_eq!(m.unindexed_vertices, 0);
            assert_eq!(m.interior_index_sum, 4 * chi);
        }
    }
}

#[test]
fn cube_aligned_field_has_corner_singularities() {
    let mesh = cube();
    let s = frame_state(&mesh, |_, _| Frame::axes([1.0; 3]));
    let f = recovered(&mesh, &s);
    let m = field_metrics(&f, &s, &mesh, 1.0);
    assert_eq!(m.n3, 8);
    assert_eq!(m.n5, 0);
    assert_eq!(m.interior_index_sum, 8);
}

#[test]
fn square_boundary_corners_have_zero_defect() {
    let mesh = unit_square(6);
    let r = core::f64::consts::FRAC_PI_2;
    let s = frame_state(&mesh, |_, _| {
        let d = Vector3::new(r.cos(), r.sin(), 0.0);
        Frame::new([1.0; 3], [d, Vector3::z().cross(&d), Vector3::z()])
    });
    let f = recovered(&mesh, &s);
    for v in 0..mesh.vertex_count() {
        assert_eq!(f.indices[v], Some(0), "vertex {v}");
    }
}

#[test]
fn rotated_boundary_field_reports_defects() {
    let mesh = unit_square(6);
    let s = frame_state(&mesh, |x, _| {
        let a = 0.6 * x.x;
        let d = Vector3::new(a.cos(), a.sin(), 0.0);
        Frame::new([1.0; 3], [d, Vector3::z().cross(&d), Vector3::z()])
    });
    let f = recovered(&mesh, &s);
    for v in 0..mesh.vertex_count() {
        if !mesh.topology.boundary_vertex[v] {
            assert_eq!(f.indices[v], Some(0));
        }
    }
}

#[test]
fn metrics_of_anisotropic_constant_field() {
    let mesh = unit_square(4);
    let s = frame_state(&mesh, |_, _| Frame::axes([2.0, 0.5, 1.0]));
    let f = recovered(&mesh, &s);
    let m = field_metrics(&f, &s, &mesh, 1.0);
    // λu λv = 1: area distortion 0; angle distortion log²4.
    assert!(m.area_distortion_mean < 1e-12);
    assert!((m.angle_distortion_mean - 4.0f64.ln().powi(2)).abs() < 1e-9);
    assert!(m.curl_max < 1e-20);
    assert!(m.odeco_residual_max < 1e-20);
    assert_eq!(m.degenerate_faces, 0);
}

#[test]
fn zero_tensor_faces_are_degenerate() {
    let mesh = unit_square(3);
    let s = FieldState::constant(mesh.vertex_count(), &ShTensor::zero());
    let f = recovered(&mesh, &s);
    assert_eq!(f.degenerate_faces().len(), mesh.triangle_count());
    assert!(f.indices.iter().all(|i| i.is_none()));
}

#[test]
fn reduce_is_centered() {
    for k in -8..8 {
        for e in [-0.7, -0.1, 0.0, 0.3, 0.78] {
            let (eps, r) = reduce(e + k as f64 * FRAC_PI_2);
            assert!((eps - e).abs() < 1e-12);
            assert_eq!(r as i64, (k as i64).rem_euclid(4));
        }
    }
}

#[test]
fn matchings_are_antisymmetric_under_face_swap() {
    let mesh = icosphere(1);
    let s = frame_state(&mesh, |x, n| {
        let w = Vector3::new(x.y + 0.3, x.z * x.x, 1.0 + x.x);
        let t = (w - n * n.dot(&w)).normalize();
        Frame::new([1.0; 3], [t, n.cross(&t), *n])
    });
    let f = recovered(&mesh, &s);
    for e in 0..mesh.topology.edges.len() {
        let [i, j] = mesh.topology.edge_faces[e];
        let forward = f.matchings[e].unwrap();
        let back = edge_transport(&mesh, e, j, i) * f.faces[j].grad_u;
        let (_, r_back) = reduce(signed_angle(&back, &f.faces[i].grad_u, &mesh.normals[i]));
        if !f.ambiguous_edges.contains(&e) {
            assert_eq!((4 - r_back) % 4, forward);
        }
    }
}

#[test]
fn diagonal_field_matchings_tie_to_smaller_turn() {
    assert_eq!(reduce(FRAC_PI_4), (FRAC_PI_4, 0));
}
