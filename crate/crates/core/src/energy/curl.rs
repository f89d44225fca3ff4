//! Normalized integrability density in Cartesian (monomial) coordinates.
//!
//! With `T` the full tensor, `C_abc = Σ_ij ω_ij ∂_i T_abcj` (ω the normal's
//! cross-product matrix), `P = M⁻²` and `S = sym(T·P)`, the density is
//! `h = Σ_l (Σ_abc S_abcl C_abc)²`. Expanding the symmetrization gives
//! `X = ¼ (P Y + 3 Z)` with `Y_p = Σ T_abcp C_abc` and
//! `Z_l = Σ T_lbcp (P C)_pbc`, which is what is evaluated below.

use nalgebra::{Matrix3, Vector3};

use crate::tensor::basis::{monomial_index, MONOMIALS};
use crate::tensor::{DET_EPS, DIM};

pub const TIKHONOV: f64 = 1e-10;
/// Density reported when the normalization cannot be formed at all.
pub const SINGULAR_PENALTY: f64 = 1e8;

const fn factorial(n: usize) -> usize {
    if n == 0 {
        1
    } else {
        n * factorial(n - 1)
    }
}

const fn build_mono() -> [usize; 81] {
    let mut mono = [0usize; 81];
    let mut n = 0;
    while n < 81 {
        let idx = [n / 27, (n / 9) % 3, (n / 3) % 3, n % 3];
        let mut e = [0usize; 3];
        let mut k = 0;
        while k < 4 {
            e[idx[k]] += 1;
            k += 1;
        }
        mono[n] = monomial_index(e[0], e[1], e[2]);
        n += 1;
    }
    mono
}

/// Reciprocal of the number of index tuples sharing each monomial.
const fn build_inv_mult() -> [f64; DIM] {
    let mut out = [0.0; DIM];
    let mut m = 0;
    while m < DIM {
        let e = MONOMIALS[m];
        out[m] = (factorial(e[0] as usize) * factorial(e[1] as usize) * factorial(e[2] as usize)) as f64 / 24.0;
        m += 1;
    }
    out
}

/// Monomial of each flattened index tuple `((i*3 + j)*3 + k)*3 + l`.
pub(crate) static MONO: [usize; 81] = build_mono();
pub(crate) static INV_MULT: [f64; DIM] = build_inv_mult();

#[inline]
pub(crate) fn full(u: &[f64; DIM], inv: &[f64; DIM]) -> [f64; 81] {
    let w: [f64; DIM] = core::array::from_fn(|m| u[m] * inv[m]);
    core::array::from_fn(|n| w[MONO[n]])
}

#[inline]
fn omega(n: &Vector3<f64>) -> [[f64; 3]; 3] {
    [[0.0, n.z, -n.y], [-n.z, 0.0, n.x], [n.y, -n.x, 0.0]]
}

/// Outcome of the normalization step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Regular,
    /// The Tikhonov floor was applied.
    Regularized,
    /// The second-order part could not be inverted; the penalty value was returned.
    Failed,
}

/// Gradient of `h` with respect to `u` and to the spatial derivatives `∂_a u`.
#[derive(Debug, Clone, Copy)]
pub struct CurlGradient {
    pub du: [f64; DIM],
    pub ddu: [[f64; DIM]; 3],
}

fn second_order(t: &[f64; 81]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| (0..3).map(|k| t[((i * 3 + j) * 3 + k) * 3 + k]).sum())
}

fn regularize(m: &Matrix3<f64>) -> (Matrix3<f64>, Normalization) {
    let tr = m.trace() / 3.0;
    if !(tr.is_finite() && m.iter().all(|x| x.is_finite())) {
        return (*m, Normalization::Failed);
    }
    if m.determinant().abs() >= DET_EPS * (tr * tr * tr).abs() && tr != 0.0 {
        return (*m, Normalization::Regular);
    }
    if tr <= 0.0 {
        return (*m, Normalization::Failed);
    }
    let r = m + Matrix3::identity() * (TIKHONOV * tr);
    if r.determinant() == 0.0 {
        return (r, Normalization::Failed);
    }
    (r, Normalization::Regularized)
}

/// The per-triangle part of the density: the curl of the derivative tensor,
/// which depends only on the (constant) spatial derivatives and the normal.
#[derive(Debug, Clone, Copy)]
pub struct CurlFrame {
    c: [f64; 27],
    w: [[f64; 3]; 3],
}

impl CurlFrame {
    pub fn new(du: &[[f64; DIM]; 3], n: &Vector3<f64>) -> Self {
        let dt: [[f64; 81]; 3] = core::array::from_fn(|a| full(&du[a], &INV_MULT));
        let w = omega(n);
        let mut c = [0.0; 27];
        for (abc, ci) in c.iter_mut().enumerate() {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    if w[i][j] != 0.0 {
                        s += w[i][j] * dt[i][abc * 3 + j];
                    }
                }
            }
            *ci = s;
        }
        CurlFrame { c, w }
    }

    /// `h` at coefficients `u`; the gradient is returned as `(∂h/∂u, ∂h/∂C)`.
    /// `∂h/∂C` is linear in everything downstream, so callers may sum it over
    /// quadrature points before [`CurlFrame::derivative_gradient`].
    pub fn density(&self, u: &[f64; DIM], want_gradient: bool) -> (f64, Normalization, Option<([f64; DIM], [f64; 27])>) {
        let c = &self.c;
        let t = full(u, &INV_MULT);
        let m = second_order(&t);
        let (mreg, status) = regularize(&m);
        let failed = |s| (SINGULAR_PENALTY, s, want_gradient.then_some(([0.0; DIM], [0.0; 27])));
        if status == Normalization::Failed {
            return failed(status);
        }
        let nn = match mreg.try_inverse() {
            Some(x) => x,
            None => return failed(Normalization::Failed),
        };
        let p = nn * nn;

        let mut y = [0.0; 3];
        for abc in 0..27 {
            for (pi, yp) in y.iter_mut().enumerate() {
                *yp += t[abc * 3 + pi] * c[abc];
            }
        }
        // d[p][bc] = Σ_a P_pa C_abc
        let mut d = [[0.0; 9]; 3];
        for pi in 0..3 {
            for bc in 0..9 {
                d[pi][bc] = (0..3).map(|a| p[(pi, a)] * c[a * 9 + bc]).sum();
            }
        }
        let mut z = [0.0; 3];
        for (l, zl) in z.iter_mut().enumerate() {
            let mut s = 0.0;
            for bc in 0..9 {
                for pi in 0..3 {
                    s += t[l * 27 + bc * 3 + pi] * d[pi][bc];
                }
            }
            *zl = s;
        }
        let x: [f64; 3] = core::array::from_fn(|l| 0.25 * ((0..3).map(|q| p[(l, q)] * y[q]).sum::<f64>() + 3.0 * z[l]));
        let h = x.iter().map(|v| v * v).sum::<f64>();
        if !want_gradient {
            return (h, status, None);
        }

        let g: [f64; 3] = x.map(|v| 2.0 * v);
        let gy: [f64; 3] = core::array::from_fn(|q| 0.25 * (0..3).map(|l| p[(l, q)] * g[l]).sum::<f64>());
        let gz: [f64; 3] = g.map(|v| 0.75 * v);
        let mut gp = Matrix3::from_fn(|l, q| 0.25 * g[l] * y[q]);
        let mut gd = [[0.0; 9]; 3];
        for pi in 0..3 {
            for bc in 0..9 {
                gd[pi][bc] = (0..3).map(|l| gz[l] * t[l * 27 + bc * 3 + pi]).sum();
            }
        }
        for pi in 0..3 {
            for a in 0..3 {
                gp[(pi, a)] += (0..9).map(|bc| gd[pi][bc] * c[a * 9 + bc]).sum::<f64>();
            }
        }
        let mut gc = [0.0; 27];
        for a in 0..3 {
            for bc in 0..9 {
                let mut s = 0.0;
                for pi in 0..3 {
                    s += gd[pi][bc] * p[(pi, a)] + gy[pi] * t[(a * 9 + bc) * 3 + pi];
                }
                gc[a * 9 + bc] = s;
            }
        }
        let mut gt = [0.0; 81];
        for abc in 0..27 {
            for pi in 0..3 {
                gt[abc * 3 + pi] += gy[pi] * c[abc];
            }
        }
        for l in 0..3 {
            for bc in 0..9 {
                for pi in 0..3 {
                    gt[l * 27 + bc * 3 + pi] += gz[l] * d[pi][bc];
                }
            }
        }
        let mut gm = -(nn * gp * p + p * gp * nn);
        if status == Normalization::Regularized {
            gm += Matrix3::identity() * (TIKHONOV / 3.0 * gm.trace());
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    gt[((i * 3 + j) * 3 + k) * 3 + k] += gm[(i, j)];
                }
            }
        }
        (h, status, Some((collapse(&gt), gc)))
    }

    /// Maps `∂h/∂C` to the gradient with respect to `∂_a u`.
    pub fn derivative_gradient(&self, gc: &[f64; 27]) -> [[f64; DIM]; 3] {
        let mut gdt = [[0.0; 81]; 3];
        for abc in 0..27 {
            for i in 0..3 {
                for j in 0..3 {
                    if self.w[i][j] != 0.0 {
                        gdt[i][abc * 3 + j] += self.w[i][j] * gc[abc];
                    }
                }
            }
        }
        core::array::from_fn(|a| collapse(&gdt[a]))
    }
}

fn collapse(g81: &[f64; 81]) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for (nidx, v) in g81.iter().enumerate() {
        out[MONO[nidx]] += v;
    }
    for (o, s) in out.iter_mut().zip(INV_MULT.iter()) {
        *o *= s;
    }
    out
}

/// `h` at one point from monomial coefficients `u`, their spatial derivatives
/// `du[a] = ∂u/∂x_a` and the unit normal. Optionally returns the gradient.
pub fn curl_density_monomial(
    u: &[f64; DIM],
    du: &[[f64; DIM]; 3],
    n: &Vector3<f64>,
    want_gradient: bool,
) -> (f64, Normalization, Option<CurlGradient>) {
    let frame = CurlFrame::new(du, n);
    let (h, status, g) = frame.density(u, want_gradient);
    let g = g.map(|(gu, gc)| CurlGradient { du: gu, ddu: frame.derivative_gradient(&gc) });
    (h, status, g)
}
