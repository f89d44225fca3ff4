//! Fourth-order symmetric tensors in three dimensions and the odeco toolbox.
//!
//! A tensor is stored by the 15 coefficients of its sphere polynomial
//! `p_T(x) = T · x⁴` in the real spherical-harmonic basis described in [`basis`].
//! Coefficient distance is the L² distance of the sphere polynomials.

pub mod basis;
mod quadrics;
mod recover;
mod rotation;

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use core::fmt;

use nalgebra::{Matrix3, SVector, Vector3};

pub use basis::{Mat15, DIM};
pub use quadrics::{odeco_residuals, quadrics, OdecoQuadrics, QUADRIC_COUNT};
pub use recover::recover_frame;
pub use rotation::{rotate_sh, rotation_matrix};

pub type Vec15 = SVector<f64, DIM>;

/// Index ranges of the three harmonic bands inside a coefficient vector.
pub const BAND0: core::ops::Range<usize> = 0..1;
pub const BAND2: core::ops::Range<usize> = 1..6;
pub const BAND4: core::ops::Range<usize> = 6..15;

/// Relative determinant threshold below which the second-order part is treated as singular.
pub const DET_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorError {
    NonInvertibleSecondOrderPart { det: f64, trace: f64 },
    DegenerateFrame { frame: Frame },
    NotARotation { deviation: f64 },
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::NonInvertibleSecondOrderPart { det, trace } => write!(
                f,
                "second-order part is not invertible (det {det:e}, trace {trace:e})"
            ),
            TensorError::DegenerateFrame { frame } => write!(
                f,
                "recovered frame has non-positive eigenvalues {:?}",
                frame.eigenvalues
            ),
            TensorError::NotARotation { deviation } => {
                write!(f, "matrix is not a rotation (|RᵀR - I| = {deviation:e})")
            }
        }
    }
}

impl core::error::Error for TensorError {}

/// Spherical-harmonic coefficients of a symmetric fourth-order tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShTensor(pub Vec15);

/// Monomial coefficients `u_{abc}` of the quartic `p_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialTensor(pub Vec15);

/// Ordered eigenpairs of an odeco tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [Vector3<f64>; 3],
}

/// `M_ij = T_ijkk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderPart(pub Matrix3<f64>);

impl Frame {
    pub fn new(eigenvalues: [f64; 3], eigenvectors: [Vector3<f64>; 3]) -> Self {
        Frame {
            eigenvalues,
            eigenvectors,
        }
    }

    /// Frame with the given eigenvalues along the columns of `r`.
    pub fn from_matrix(eigenvalues: [f64; 3], r: &Matrix3<f64>) -> Self {
        Frame {
            eigenvalues,
            eigenvectors: [
                r.column(0).into_owned(),
                r.column(1).into_owned(),
                r.column(2).into_owned(),
            ],
        }
    }

    pub fn axes(eigenvalues: [f64; 3]) -> Self {
        Self::from_matrix(eigenvalues, &Matrix3::identity())
    }

    /// Largest deviation from pairwise orthonormality of the eigenvectors.
    pub fn orthogonality_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = self.eigenvectors[i].dot(&self.eigenvectors[j]);
                let t = if i == j { 1.0 } else { 0.0 };
                e = e.max((d - t).abs());
            }
        }
        e
    }
}

impl ShTensor {
    pub fn zero() -> Self {
        ShTensor(Vec15::zeros())
    }

    pub fn from_slice(q: &[f64]) -> Self {
        ShTensor(Vec15::from_column_slice(q))
    }

    pub fn coeffs(&self) -> &Vec15 {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn distance(&self, other: &ShTensor) -> f64 {
        (self.0 - other.0).norm()
    }

    pub fn band_norm_squared(&self, band: core::ops::Range<usize>) -> f64 {
        self.0.rows(band.start, band.len()).norm_squared()
    }

    /// Value of the sphere polynomial at `x` (any vector; evaluates the quartic).
    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        sh_to_monomial(self).eval(x)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ShTensor(self.0 * s)
    }
}

impl MonomialTensor {
    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        let mut s = 0.0;
        for (i, e) in basis::MONOMIALS.iter().enumerate() {
            s += self.0[i] * x.x.powi(e[0] as i32) * x.y.powi(e[1] as i32) * x.z.powi(e[2] as i32);
        }
        s
    }

    /// Entry `T_ijkl` of the full symmetric tensor.
    pub fn entry(&self, idx: [usize; 4]) -> f64 {
        let m = basis::monomial_of_indices(&idx);
        self.0[m] / basis::multinomial(basis::MONOMIALS[m])
    }

    /// All 81 entries, flattened as `((i*3 + j)*3 + k)*3 + l`.
    pub fn full(&self) -> [f64; 81] {
        let mut t = [0.0; 81];
        for (n, v) in t.iter_mut().enumerate() {
            *v = self.entry([n / 27, (n / 9) % 3, (n / 3) % 3, n % 3]);
        }
        t
    }

    /// Symmetrizing inverse of [`MonomialTensor::full`]: sums entries into monomials.
    pub fn from_full(t: &[f64; 81]) -> Self {
        let mut u = Vec15::zeros();
        for (n, v) in t.iter().enumerate() {
            let m = basis::monomial_of_indices(&[n / 27, (n / 9) % 3, (n / 3) % 3, n % 3]);
            u[m] += v;
        }
        MonomialTensor(u)
    }
}

pub fn monomial_to_sh(t: &MonomialTensor) -> ShTensor {
    ShTensor(basis::tables().monomial_to_sh * t.0)
}

pub fn sh_to_monomial(q: &ShTensor) -> MonomialTensor {
    MonomialTensor(basis::tables().sh_to_monomial * q.0)
}

/// `Σ λ_m u_m^{⊗4}`.
pub fn from_frame(f: &Frame) -> ShTensor {
    monomial_to_sh(&frame_monomials(f))
}

pub(crate) fn frame_monomials(f: &Frame) -> MonomialTensor {
    let mut u = Vec15::zeros();
    for m in 0..3 {
        let w = f.eigenvectors[m];
        let c = basis::power4_coefficients([w.x, w.y, w.z]);
        for i in 0..DIM {
            u[i] += f.eigenvalues[m] * c[i];
        }
    }
    MonomialTensor(u)
}

pub fn second_order_part(q: &ShTensor) -> SecondOrderPart {
    let u = sh_to_monomial(q);
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += u.entry([i, j, k, k]);
            }
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    SecondOrderPart(m)
}

fn singular(m: &Matrix3<f64>) -> bool {
    let tr = m.trace() / 3.0;
    m.determinant().abs() < DET_EPS * (tr * tr * tr).abs()
}

/// `T · M^p`, symmetrized; for odeco input the eigenvalues become `λ_m^{p+1}`.
pub fn rescale_powers(q: &ShTensor, p: i32) -> Result<ShTensor, TensorError> {
    if p == 0 {
        return Ok(*q);
    }
    let m = second_order_part(q).0;
    if p < 0 && singular(&m) {
        return Err(TensorError::NonInvertibleSecondOrderPart {
            det: m.determinant(),
            trace: m.trace(),
        });
    }
    let (vals, vecs) = crate::linalg::sym_eigen3(&m);
    let mut mp = Matrix3::zeros();
    for k in 0..3 {
        mp += vecs[k] * vecs[k].transpose() * vals[k].powi(p);
    }
    let t = sh_to_monomial(q).full();
    let mut out = [0.0; 81];
    for a in 0..27 {
        for l in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += t[a * 3 + k] * mp[(k, l)];
            }
            out[a * 3 + l] = s;
        }
    }
    Ok(monomial_to_sh(&MonomialTensor::from_full(&out)))
}
