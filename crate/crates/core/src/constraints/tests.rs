use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use super::*;
use crate::mesh::primitives;
use crate::rng::{random_tangent_pair, rotation, seeded, unit_vector};
use crate::tensor::{from_frame, rotate_sh, Frame};

fn frame_with(n: Vector3<f64>, l: [f64; 3], theta: f64) -> ShTensor {
    let (t1, t2) = crate::rng::tangent_basis(&n);
    let (s, c) = theta.sin_cos();
    from_frame(&Frame::new(l, [n, t1 * c + t2 * s, t2 * c - t1 * s]))
}

fn is_orthonormal(c: &AffineConstraint) -> bool {
    let a = c.a();
    (0..a.len()).all(|i| {
        (0..a.len()).all(|j| {
            let d: f64 = a[i].iter().zip(a[j].iter()).map(|(x, y)| x * y).sum();
            (d - (i == j) as i32 as f64).abs() < 1e-10
        })
    })
}

#[test]
fn alignment_satisfied_by_aligned_frames() {
    let c = build_alignment(&Vector3::z(), 1.0).unwrap();
    assert_eq!(c.rows(), ALIGNMENT_ROWS);
    assert!(is_orthonormal(&c));
    let mut rng = seeded(1);
    for _ in 0..50 {
        let (a, b) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let q = from_frame(&Frame::new([1.0, a, b], [Vector3::z(), Vector3::x(), Vector3::y()]));
        assert!(c.residual_norm(q.0.as_slice()) < 1e-9);
    }
}

#[test]
fn alignment_violated_by_tilted_frame() {
    let c = build_alignment(&Vector3::z(), 1.0).unwrap();
    let r = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), 10f64.to_radians());
    let q = from_frame(&Frame::from_matrix([1.0, 1.0, 1.5], &(r.matrix() * Matrix3::identity())));
    // Frame::from_matrix takes axes as columns; the first column is the tilted normal.
    assert!(c.residual_norm(q.0.as_slice()) > 1e-3);
    let wrong_size = frame_with(Vector3::z(), [1.3, 1.0, 1.0], 0.2);
    assert!(c.residual_norm(wrong_size.0.as_slice()) > 1e-3);
}

#[test]
fn alignment_rotation_covariance() {
    let mut rng = seeded(2);
    let base = build_alignment(&Vector3::z(), 1.5).unwrap();
    for _ in 0..10 {
        let r = rotation(&mut rng);
        let rotated = build_alignment(&(r * Vector3::z()), 1.5).unwrap();
        for _ in 0..5 {
            let q = ShTensor::from_slice(&core::array::from_fn::<f64, 15, _>(|_| rng.random_range(-1.0..1.0)));
            let rq = rotate_sh(&q, &r).unwrap();
            let (x, y) = (base.residual_norm(q.0.as_slice()), rotated.residual_norm(rq.0.as_slice()));
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn feature_alignment() {
    let c = build_feature_alignment(&Vector3::x(), 2.0).unwrap();
    assert!(is_orthonormal(&c));
    let mut rng = seeded(3);
    for _ in 0..20 {
        let (u, v) = random_tangent_pair(&mut rng, &Vector3::x());
        let (a, b) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let q = from_frame(&Frame::new([2.0, a, b], [Vector3::x(), u, v]));
        assert!(c.residual_norm(q.0.as_slice()) < 1e-9);
    }
    let q = from_frame(&Frame::new([1.0, 0.5, 2.0], [Vector3::x(), Vector3::y(), Vector3::z()]));
    assert!(c.residual_norm(q.0.as_slice()) > 1e-3);
    // The eigenpair condition alone leaves the same five-dimensional set as surface alignment.
    assert_eq!(c.rows(), 10);
}

#[test]
fn octahedral() {
    let c = build_octahedral().unwrap();
    assert_eq!(c.rows(), OCTAHEDRAL_ROWS);
    assert!(is_orthonormal(&c));
    let mut rng = seeded(4);
    for _ in 0..100 {
        let q = from_frame(&Frame::from_matrix([1.0; 3], &rotation(&mut rng)));
        assert!(c.residual_norm(q.0.as_slice()) < 1e-9);
    }
    let q = from_frame(&Frame::axes([1.0, 1.0, 2.0]));
    assert!(c.residual_norm(q.0.as_slice()) > 1e-3);
}

#[test]
fn octahedral_dimension_stable_across_seeds() {
    for seed in 0..5u64 {
        let mut rng = seeded(100 + seed);
        let base = from_frame(&Frame::axes([1.0; 3]));
        let mut m = DMatrix::zeros(DIM, BATCH_SIZE);
        for k in 0..BATCH_SIZE {
            m.set_column(k, &(from_frame(&Frame::from_matrix([1.0; 3], &rotation(&mut rng))).0 - base.0));
        }
        let (a, _) = left_nullspace(&m, NULLSPACE_TOL);
        assert_eq!(a.nrows(), OCTAHEDRAL_ROWS);
        assert_eq!(DIM - a.nrows(), 9);
    }
}

#[test]
fn isotropy() {
    let mut rng = seeded(5);
    let n = unit_vector(&mut rng);
    let c = build_isotropy(&n).unwrap();
    assert_eq!(c.rows(), ISOTROPY_ROWS);
    assert!(is_orthonormal(&c));
    for _ in 0..20 {
        let a = rng.random_range(0.1..3.0);
        let q = frame_with(n, [1.0, a, a], rng.random_range(0.0..6.3));
        assert!(c.residual_norm(q.0.as_slice()) < 1e-9);
    }
    let mut last = -1.0;
    for k in 0..=10 {
        let gap = k as f64 / 10.0;
        let q = frame_with(n, [1.0, 1.0, 1.0 + gap], 0.4);
        let r = c.residual_norm(q.0.as_slice());
        assert!(r > last);
        last = r;
    }
    assert!(last > 1e-3);
}

#[test]
fn projection_properties() {
    let c = build_alignment(&Vector3::new(0.6, 0.0, 0.8), 1.0).unwrap();
    let mut rng = seeded(6);
    for _ in 0..20 {
        let g: [f64; 15] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let mut p = g;
        c.project_gradient(&mut p);
        let ag: f64 = c.residual(&g).iter().zip(c.b()).map(|(r, b)| (r - b) * (r - b)).sum();
        let n2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        assert!((n2(&p) - (n2(&g) - ag)).abs() < 1e-12);
        for r in c.residual(&p).iter().zip(c.b()) {
            assert!((r.0 - r.1).abs() < 1e-12);
        }
        let mut pp = p;
        c.project_gradient(&mut pp);
        assert!(pp.iter().zip(p.iter()).all(|(a, b)| (a - b).abs() < 1e-14));
        // symmetric operator
        let h: [f64; 15] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let mut ph = h;
        c.project_gradient(&mut ph);
        let d1: f64 = ph.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        let d2: f64 = p.iter().zip(h.iter()).map(|(a, b)| a * b).sum();
        assert!((d1 - d2).abs() < 1e-12);
    }
    // a row of A projects to zero
    let mut row = c.a()[0];
    c.project_gradient(&mut row);
    assert!(row.iter().all(|x| x.abs() < 1e-14));
}

#[test]
fn feasibility_projection_is_closest_point() {
    let c = build_alignment(&Vector3::y(), 1.2).unwrap();
    let mut rng = seeded(7);
    let q: [f64; 15] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let mut p = q;
    c.project_feasible(&mut p);
    assert!(c.residual_norm(&p) < 1e-12);
    let d0: f64 = q.iter().zip(p.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    for _ in 0..20 {
        // other feasible points: p + tangent direction
        let mut t: [f64; 15] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
        c.project_gradient(&mut t);
        let d: f64 = q.iter().zip(p.iter().zip(t.iter())).map(|(a, (b, s))| (a - b - s) * (a - b - s)).sum();
        assert!(d >= d0);
    }
}

#[test]
fn resampling_defines_same_set() {
    // A batch with a different seed must describe the same affine set.
    let n = Vector3::new(1.0, 2.0, -2.0) / 3.0;
    let c = build_alignment(&n, 1.0).unwrap();
    let mut rng = seeded(99);
    let mut m = DMatrix::zeros(DIM, BATCH_SIZE);
    for k in 0..BATCH_SIZE {
        let (u, v) = random_tangent_pair(&mut rng, &n);
        let (a, b) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        m.set_column(k, &from_frame(&Frame::new([0.0, a, b], [n, u, v])).0);
    }
    let (a2, _) = left_nullspace(&m, NULLSPACE_TOL);
    let other = AffineConstraint::from_rows(ConstraintKind::SurfaceAlign, &a2, &frame_with(n, [1.0, 1.0, 1.0], 0.0));
    for _ in 0..100 {
        let q: [f64; 15] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
        assert!((c.residual_norm(&q) - other.residual_norm(&q)).abs() < 1e-8);
    }
}

#[test]
fn octahedral_alignment_rows() {
    let n = Vector3::new(0.0, 0.6, 0.8);
    let c = build_octahedral_alignment(&n).unwrap();
    assert_eq!(c.rows(), OCTAHEDRAL_ALIGNMENT_ROWS);
    assert!(is_orthonormal(&c));
    for k in 0..8 {
        let q = frame_with(n, [1.0; 3], k as f64 * 0.7);
        assert!(c.residual_norm(q.0.as_slice()) < 1e-9);
    }
}

#[test]
fn per_vertex_constraints() {
    let m = primitives::unit_square(4).detect_features(30.0);
    let init = vertex_constraints(&m, Stage::Init).unwrap();
    let main = vertex_constraints(&m, Stage::Main).unwrap();
    assert!(init.fallbacks.is_empty());
    // interior normals are all e_z, boundary tangents x or y, corners free
    assert!(main.unique.len() <= 4);
    for v in 0..m.vertex_count() {
        let expected = match m.features.kind(v) {
            crate::mesh::VertexKind::Corner => ConstraintKind::CornerFree,
            crate::mesh::VertexKind::Feature => ConstraintKind::FeatureAlign,
            crate::mesh::VertexKind::Surface => ConstraintKind::SurfaceAlign,
        };
        assert_eq!(main.get(v).kind, expected);
    }
    let mut q: Vec<f64> = (0..m.vertex_count()).flat_map(|_| from_frame(&Frame::axes([1.0; 3])).0.iter().cloned().collect::<Vec<_>>()).collect();
    assert!(init.max_residual(&q) < 1e-9);
    assert!(main.max_residual(&q) < 1e-9);
    q[3] += 0.5;
    init.project_feasible(&mut q);
    assert!(init.max_residual(&q) < 1e-12);
}

#[test]
fn invalid_inputs() {
    assert_eq!(build_alignment(&Vector3::new(1.0, 1.0, 0.0), 1.0).unwrap_err(), ConstraintError::InvalidDirection);
    assert_eq!(build_alignment(&Vector3::z(), 0.0).unwrap_err(), ConstraintError::InvalidSizing(0.0));
}
