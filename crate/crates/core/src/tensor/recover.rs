//! Frame recovery: eigendecomposition of the second-order part, refined on
//! near-degenerate eigenplanes by maximizing the quartic along the frame axes.

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use nalgebra::{Matrix3, Vector3};

use super::{from_frame, second_order_part, Frame, ShTensor, TensorError};
use crate::linalg::sym_eigen3;

/// Rotation angle within the plane `(a, b)` maximizing `p(a') + p(b')`.
///
/// The objective is exactly `A + B cos 4θ + C sin 4θ`, so three samples determine it.
fn best_plane_angle(q: &ShTensor, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        q.eval(&(a * c + b * s)) + q.eval(&(b * c - a * s))
    };
    let f0 = f(0.0);
    let f4 = f(core::f64::consts::FRAC_PI_4);
    let f8 = f(core::f64::consts::FRAC_PI_8);
    let mean = 0.5 * (f0 + f4);
    let cos_amp = 0.5 * (f0 - f4);
    let sin_amp = f8 - mean;
    sin_amp.atan2(cos_amp) / 4.0
}

fn refine_axes(q: &ShTensor, axes: &mut [Vector3<f64>; 3], sweeps: usize) {
    for _ in 0..sweeps {
        let mut moved: f64 = 0.0;
        for &(i, j) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let t = best_plane_angle(q, &axes[i], &axes[j]);
            let (s, c) = t.sin_cos();
            let a = axes[i] * c + axes[j] * s;
            let b = axes[j] * c - axes[i] * s;
            axes[i] = a;
            axes[j] = b;
            moved = moved.max(t.abs());
        }
        if moved < 1e-14 {
            break;
        }
    }
}

/// Least-squares eigenvalues for fixed orthonormal axes.
fn fit_eigenvalues(q: &ShTensor, axes: &[Vector3<f64>; 3]) -> [f64; 3] {
    let basis: [ShTensor; 3] = core::array::from_fn(|m| {
        let mut l = [0.0; 3];
        l[m] = 1.0;
        from_frame(&Frame::new(l, *axes))
    });
    let mut g = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            g[(i, j)] = basis[i].0.dot(&basis[j].0);
        }
        rhs[i] = basis[i].0.dot(&q.0);
    }
    let sol = g.lu().solve(&rhs).unwrap_or_else(Vector3::zeros);
    [sol[0], sol[1], sol[2]]
}

/// Recover the frame of `q`; exact for odeco tensors, otherwise the best of the
/// candidate frames by coefficient distance.
///
/// A frame with a non-positive eigenvalue is returned inside
/// [`TensorError::DegenerateFrame`] so callers can still use it.
pub fn recover_frame(q: &ShTensor) -> Result<Frame, TensorError> {
    let m = second_order_part(q).0;
    let (vals, vecs) = sym_eigen3(&m);
    let direct = Frame::new(vals, vecs);

    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let near_degenerate = (vals[1] - vals[0]).abs() <= REFINE_GAP * scale
        || (vals[2] - vals[1]).abs() <= REFINE_GAP * scale;

    let mut best = direct;
    if near_degenerate {
        let mut axes = vecs;
        refine_axes(q, &mut axes, 8);
        let refined = Frame::new(fit_eigenvalues(q, &axes), axes);
        let d_direct = from_frame(&direct).distance(q);
        let d_refined = from_frame(&refined).distance(q);
        if d_refined <= d_direct {
            best = refined;
        }
    }
    // Right-handed axes keep downstream orientation logic simple.
    if best.eigenvectors[0].cross(&best.eigenvectors[1]).dot(&best.eigenvectors[2]) < 0.0 {
        best.eigenvectors[2] = -best.eigenvectors[2];
    }
    if best.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(TensorError::DegenerateFrame { frame: best });
    }
    Ok(best)
}

/// Gap (relative to the largest eigenvalue) under which the quartic refinement runs.
///
/// The second-order eigenvectors lose accuracy well before the eigenvalues coincide.
pub const REFINE_GAP: f64 = 1e-2;
