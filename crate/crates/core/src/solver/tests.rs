use super::*;
use crate::constraints::{vertex_constraints, Stage};
use crate::energy::{curl_energy, smoothness, EnergyWeights, Mode, Objective};
use crate::exec::Sequential;
use crate::mesh::primitives::{disk, icosphere, subdivided_cube, unit_square};
use crate::mesh::DEFAULT_DIHEDRAL_DEG;
use crate::recovery::{compute_matchings_and_indices, field_metrics, recover_field};

struct Record(Vec<IterationRecord>);

impl Observer for Record {
    fn now_ms(&self) -> f64 {
        0.0
    }
    fn iteration(&mut self, rec: &IterationRecord) {
        self.0.push(*rec);
    }
}

fn solve(mesh: &crate::mesh::SurfaceMesh, cfg: &SolverConfig) -> (FieldState, SolveReport, FieldState, SolveReport, Vec<IterationRecord>) {
    let mut rec = Record(Vec::new());
    let (s0, r0) = initialize(mesh, cfg, &Sequential, &mut rec).unwrap();
    let (s, r) = solve_integrable(&s0, mesh, cfg, &Sequential, &mut rec).unwrap();
    (s0, r0, s, r, rec.0)
}

#[test]
fn flat_disk_init_is_constant() {
    let mesh = disk(1.0, 5);
    let (s0, r0) = initialize(&mesh, &SolverConfig::default(), &Sequential, &mut Silent).unwrap();
    assert!(r0.converged(), "{:?}", r0.stop);
    assert!(smoothness(&s0, &mesh, &Sequential).unwrap() < 1e-10);
}

#[test]
fn sphere_init_is_frustrated() {
    let mesh = icosphere(2);
    let (s0, r0) = initialize(&mesh, &SolverConfig::default(), &Sequential, &mut Silent).unwrap();
    assert!(r0.energy < r0.initial_energy);
    assert!(smoothness(&s0, &mesh, &Sequential).unwrap() > 1e-3);
    assert!(curl_energy(&s0, &mesh, &Sequential).unwrap().0 > 1e-6);
}

#[test]
fn cube_init_follows_faces() {
    let mesh = subdivided_cube(3).detect_features(DEFAULT_DIHEDRAL_DEG);
    let (s0, _) = initialize(&mesh, &SolverConfig::default(), &Sequential, &mut Silent).unwrap();
    let field = recover_field(&s0, &mesh);
    let cos1 = 1f64.to_radians().cos();
    for (t, f) in field.faces.iter().enumerate() {
        assert!(!f.degenerate);
        for d in [f.grad_u, f.grad_v] {
            let d = d.normalize();
            let best = d.x.abs().max(d.y.abs()).max(d.z.abs());
            assert!(best > cos1, "face {t}: {d:?}");
        }
    }
}

#[test]
fn flat_square_becomes_integrable() {
    let mesh = unit_square(8).detect_features(DEFAULT_DIHEDRAL_DEG);
    let (_, r0, s, r, _) = solve(&mesh, &SolverConfig::default());
    assert!(r0.converged() && r.converged(), "{:?} {:?}", r0.stop, r.stop);
    assert!(curl_energy(&s, &mesh, &Sequential).unwrap().0 < 1e-8);
    let f = compute_matchings_and_indices(recover_field(&s, &mesh), &mesh);
    assert!(f.singularities().is_empty());
}

#[test]
fn iterates_stay_feasible_and_energies_decrease() {
    let mesh = icosphere(1);
    let mut cfg = SolverConfig::default();
    cfg.max_iterations = 200;
    cfg.weights = EnergyWeights::AREA;
    let (s0, r0, s, r, records) = solve(&mesh, &cfg);
    let init = vertex_constraints(&mesh, Stage::Main).unwrap();
    assert!(init.max_residual(&s0.q) < 1e-8);
    assert!(init.max_residual(&s.q) < 1e-8);
    assert!(r0.max_residual < 1e-8 && r.max_residual < 1e-8);
    for mode in [Mode::Init, Mode::Main] {
        let e: Vec<f64> = records.iter().filter(|x| x.mode == mode).map(|x| x.energy).collect();
        assert!(!e.is_empty());
        for w in e.windows(2) {
            assert!(w[1] <= w[0], "{mode:?}: {} -> {}", w[0], w[1]);
        }
    }
    assert!(r.energy <= r.initial_energy);
}

#[test]
fn runs_are_deterministic() {
    let mesh = subdivided_cube(2).detect_features(DEFAULT_DIHEDRAL_DEG);
    let mut cfg = SolverConfig::default();
    cfg.max_iterations = 60;
    let a = solve(&mesh, &cfg);
    let b = solve(&mesh, &cfg);
    assert_eq!(a.2.q, b.2.q);
    assert_eq!(a.3, b.3);
    assert_eq!(a.4, b.4);
}

#[test]
fn seed_changes_only_the_reference_direction() {
    let mesh = disk(1.0, 3);
    let a = octahedral_start(&mesh, 1);
    let b = octahedral_start(&mesh, 2);
    let cons = vertex_constraints(&mesh, Stage::Init).unwrap();
    assert!(cons.max_residual(&a.q) < 1e-9 && cons.max_residual(&b.q) < 1e-9);
    assert_ne!(a.q, b.q);
}

#[test]
fn sizing_transition_reduces_curl() {
    let mesh = sizing_strip(12, 3, 4.0);
    let mut cfg = SolverConfig::default();
    cfg.max_iterations = 400;
    let (_, _, s, r, _) = solve(&mesh, &cfg);
    let h = curl_energy(&s, &mesh, &Sequential).unwrap().0;
    assert!(h < r.initial_terms.curl / 10.0, "{} -> {h}", r.initial_terms.curl);
}

#[test]
fn invalid_config_is_rejected() {
    let mesh = unit_square(2);
    let mut cfg = SolverConfig::default();
    cfg.backtrack = 1.5;
    assert_eq!(initialize(&mesh, &cfg, &Sequential, &mut Silent).unwrap_err(), SolverError::InvalidConfig);
    cfg = SolverConfig::default();
    cfg.stall_window = 0;
    assert!(cfg.validate().is_err());
}

pub(crate) fn sizing_strip(nx: usize, ny: usize, len: f64) -> crate::mesh::SurfaceMesh {
    let mut mesh = crate::mesh::primitives::grid(nx, ny, len, 1.0).detect_features(DEFAULT_DIHEDRAL_DEG);
    for v in 0..mesh.vertex_count() {
        if mesh.topology.boundary_vertex[v] {
            let l = 1.0 + mesh.vertices[v].x / len;
            mesh.set_sizing(v, l).unwrap();
        }
    }
    mesh
}

