//! Rotation of coefficient vectors, built by interpolation on fixed sphere points.

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use alloc::boxed::Box;

use nalgebra::{DMatrix, Matrix3, Vector3};
use once_cell::race::OnceBox;

use super::basis::{tables, Mat15, DIM, MONOMIALS};
use super::{ShTensor, TensorError};

const POINTS: usize = 64;

struct Interpolation {
    points: [Vector3<f64>; POINTS],
    /// Pseudo-inverse of the harmonic evaluation matrix at `points` (15×POINTS).
    pinv: DMatrix<f64>,
}

pub(crate) fn monomial_values(x: &Vector3<f64>) -> [f64; DIM] {
    let mut v = [0.0; DIM];
    for (i, e) in MONOMIALS.iter().enumerate() {
        v[i] = x.x.powi(e[0] as i32) * x.y.powi(e[1] as i32) * x.z.powi(e[2] as i32);
    }
    v
}

fn harmonic_row(x: &Vector3<f64>) -> [f64; DIM] {
    let m = monomial_values(x);
    let s = &tables().sh_to_monomial;
    let mut row = [0.0; DIM];
    for j in 0..DIM {
        let mut acc = 0.0;
        for i in 0..DIM {
            acc += m[i] * s[(i, j)];
        }
        row[j] = acc;
    }
    row
}

impl Interpolation {
    fn build() -> Self {
        // Fibonacci lattice: quasi-uniform, and unisolvent for quartics.
        let golden = core::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut points = [Vector3::zeros(); POINTS];
        for (k, p) in points.iter_mut().enumerate() {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / POINTS as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            *p = Vector3::new(r * phi.cos(), r * phi.sin(), z);
        }
        let mut e = DMatrix::zeros(POINTS, DIM);
        for (k, p) in points.iter().enumerate() {
            let row = harmonic_row(p);
            for j in 0..DIM {
                e[(k, j)] = row[j];
            }
        }
        let pinv = e.pseudo_inverse(1e-12).expect("evaluation matrix pseudo-inverse");
        Interpolation { points, pinv }
    }
}

static INTERP: OnceBox<Interpolation> = OnceBox::new();

fn interpolation() -> &'static Interpolation {
    INTERP.get_or_init(|| Box::new(Interpolation::build()))
}

/// 15×15 matrix `D(R)` with `p_{D q}(x) = p_q(Rᵀ x)`.
pub fn rotation_matrix(r: &Matrix3<f64>) -> Result<Mat15, TensorError> {
    let deviation = (r.transpose() * r - Matrix3::identity()).norm();
    if deviation > 1e-8 || r.determinant() < 0.0 {
        return Err(TensorError::NotARotation { deviation });
    }
    let interp = interpolation();
    let rt = r.transpose();
    let mut f = DMatrix::zeros(POINTS, DIM);
    for (k, p) in interp.points.iter().enumerate() {
        let row = harmonic_row(&(rt * p));
        for j in 0..DIM {
            f[(k, j)] = row[j];
        }
    }
    let d = &interp.pinv * f;
    Ok(Mat15::from_fn(|i, j| d[(i, j)]))
}

pub fn rotate_sh(q: &ShTensor, r: &Matrix3<f64>) -> Result<ShTensor, TensorError> {
    Ok(ShTensor(rotation_matrix(r)? * q.0))
}
