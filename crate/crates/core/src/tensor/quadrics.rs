//! The 27 quadrics cutting out the odeco variety in monomial coordinates.
//!
//! The quadrics are not transcribed; they are generated once as the space of
//! quadratic forms vanishing on a large batch of random odeco tensors and
//! orthonormalized in the Frobenius inner product.

use alloc::boxed::Box;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use once_cell::race::OnceBox;
use rand::Rng;

use super::basis::{Mat15, DIM};
use super::{frame_monomials, sh_to_monomial, Frame, MonomialTensor, ShTensor};
use crate::linalg::{left_nullspace, row_space};
use crate::rng;

pub const QUADRIC_COUNT: usize = 27;
/// Number of products `u_a u_b` with `a ≤ b`.
pub const PAIR_COUNT: usize = DIM * (DIM + 1) / 2;

const SAMPLE_COUNT: usize = 2400;
const SEED: u64 = 0x0dec0_0dec0;

pub struct OdecoQuadrics {
    /// Symmetric 15×15 matrices with `c_i(u) = uᵀ A_i u`.
    pub matrices: Vec<Mat15>,
    /// Row `i` holds the coefficients of `c_i` on the products `u_a u_b` (`a ≤ b`).
    packed: Vec<[f64; PAIR_COUNT]>,
    /// The same quadrics grouped by sign-flip parity: each class touches only
    /// the products `u_a u_b` of one parity.
    classes: Vec<ParityClass>,
    /// Singular values of the sample moment matrix (descending), kept for diagnostics.
    pub spectrum: Vec<f64>,
}

struct ParityClass {
    /// Packed product indices in this class.
    cols: Vec<usize>,
    /// Coefficients on `cols`, one row per quadric, zero-padded to a multiple of 4.
    rows: Vec<Vec<f64>>,
}

/// Parity of `x^a y^b z^c` under the sign flips of `x` and `y` (z follows, the degree is even).
fn parity(m: usize) -> usize {
    let e = super::basis::MONOMIALS[m];
    (e[0] as usize & 1) | ((e[1] as usize & 1) << 1)
}

/// `(a, b)` with `a ≤ b` in packed order.
pub fn pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..DIM).flat_map(|a| (a..DIM).map(move |b| (a, b)))
}

impl OdecoQuadrics {
    fn build() -> Self {
        let mut rng = rng::seeded(SEED);
        let mut samples = DMatrix::zeros(PAIR_COUNT, SAMPLE_COUNT);
        for s in 0..SAMPLE_COUNT {
            let r = rng::rotation(&mut rng);
            let lambdas = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let u = frame_monomials(&Frame::from_matrix(lambdas, &r)).0;
            let u = u / u.norm();
            for (k, (a, b)) in pairs().enumerate() {
                samples[(k, s)] = if a == b {
                    u[a] * u[a]
                } else {
                    core::f64::consts::SQRT_2 * u[a] * u[b]
                };
            }
        }
        let (basis, sigma) = left_nullspace(&samples, 1e-9);
        assert_eq!(
            basis.nrows(),
            QUADRIC_COUNT,
            "odeco quadric space must be 27-dimensional"
        );
        // The variety is invariant under coordinate sign flips, so the quadric
        // space splits into parity classes. Orthonormal bases of the classes
        // together form an orthonormal basis of the same space.
        let pair_list: Vec<(usize, usize)> = pairs().collect();
        let mut basis_rows: Vec<[f64; PAIR_COUNT]> = Vec::with_capacity(QUADRIC_COUNT);
        let mut classes = Vec::new();
        for class in 0..4 {
            let cols: Vec<usize> = (0..PAIR_COUNT)
                .filter(|&k| parity(pair_list[k].0) ^ parity(pair_list[k].1) == class)
                .collect();
            let sub = basis.select_columns(&cols);
            let rows = row_space(&sub, 1e-9);
            let mut packed_rows = Vec::new();
            for r in 0..rows.nrows() {
                let mut full = [0.0; PAIR_COUNT];
                for (j, &k) in cols.iter().enumerate() {
                    full[k] = rows[(r, j)];
                }
                basis_rows.push(full);
                packed_rows.push(
                    cols.iter()
                        .enumerate()
                        .map(|(j, &k)| {
                            let (a, b) = pair_list[k];
                            if a == b { rows[(r, j)] } else { rows[(r, j)] * core::f64::consts::SQRT_2 }
                        })
                        .chain(core::iter::repeat(0.0))
                        .take(padded(cols.len()))
                        .collect(),
                );
            }
            classes.push(ParityClass { cols, rows: packed_rows });
        }
        assert_eq!(basis_rows.len(), QUADRIC_COUNT, "parity classes must recover the full quadric space");
        let mut matrices = Vec::with_capacity(QUADRIC_COUNT);
        let mut packed = Vec::with_capacity(QUADRIC_COUNT);
        for full in &basis_rows {
            let mut m = Mat15::zeros();
            let mut row = [0.0; PAIR_COUNT];
            for (k, &(a, b)) in pair_list.iter().enumerate() {
                let v = full[k];
                if a == b {
                    m[(a, a)] = v;
                    row[k] = v;
                } else {
                    m[(a, b)] = v / core::f64::consts::SQRT_2;
                    m[(b, a)] = v / core::f64::consts::SQRT_2;
                    row[k] = v * core::f64::consts::SQRT_2;
                }
            }
            matrices.push(m);
            packed.push(row);
        }
        OdecoQuadrics {
            matrices,
            packed,
            classes,
            spectrum: sigma.iter().cloned().collect(),
        }
    }

    /// `c_i(u)` for all quadrics.
    pub fn residuals(&self, u: &[f64; DIM]) -> [f64; QUADRIC_COUNT] {
        let prods = products(u);
        let mut c = [0.0; QUADRIC_COUNT];
        for (ci, row) in c.iter_mut().zip(&self.packed) {
            *ci = dot_lanes(row, &prods);
        }
        c
    }

    /// `Σ_i c_i(u)²` and its gradient with respect to `u`.
    pub fn squared_sum_with_gradient(&self, u: &[f64; DIM]) -> (f64, [f64; DIM]) {
        let prods = products(u);
        let mut gp = [0.0; PAIR_COUNT];
        let mut total = 0.0;
        let mut local = [0.0; PAIR_COUNT];
        let mut glocal = [0.0; PAIR_COUNT];
        for class in &self.classes {
            let n = class.cols.len();
            let stride = padded(n);
            local[..stride].fill(0.0);
            for (l, &k) in local.iter_mut().zip(&class.cols) {
                *l = prods[k];
            }
            glocal[..stride].fill(0.0);
            for row in &class.rows {
                let mut acc = [0.0; 4];
                for (x, y) in row.chunks_exact(4).zip(local[..stride].chunks_exact(4)) {
                    for l in 0..4 {
                        acc[l] += x[l] * y[l];
                    }
                }
                let c = (acc[0] + acc[1]) + (acc[2] + acc[3]);
                total += c * c;
                let two_c = 2.0 * c;
                for (g, r) in glocal[..stride].iter_mut().zip(row) {
                    *g += two_c * r;
                }
            }
            for (g, &k) in glocal[..n].iter().zip(&class.cols) {
                gp[k] = *g;
            }
        }
        let mut g = [0.0; DIM];
        let mut k = 0;
        for a in 0..DIM {
            for b in a..DIM {
                g[a] += gp[k] * u[b];
                g[b] += gp[k] * u[a];
                k += 1;
            }
        }
        (total, g)
    }
}

fn padded(n: usize) -> usize {
    n.div_ceil(4) * 4
}

/// Dot product with four independent accumulators (vectorizes; `PAIR_COUNT` is a multiple of 4).
#[inline(always)]
fn dot_lanes(a: &[f64; PAIR_COUNT], b: &[f64; PAIR_COUNT]) -> f64 {
    let mut acc = [0.0; 4];
    for (x, y) in a.chunks_exact(4).zip(b.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

fn products(u: &[f64; DIM]) -> [f64; PAIR_COUNT] {
    let mut p = [0.0; PAIR_COUNT];
    let mut k = 0;
    for a in 0..DIM {
        for b in a..DIM {
            p[k] = u[a] * u[b];
            k += 1;
        }
    }
    p
}

static QUADRICS: OnceBox<OdecoQuadrics> = OnceBox::new();

pub fn quadrics() -> &'static OdecoQuadrics {
    QUADRICS.get_or_init(|| Box::new(OdecoQuadrics::build()))
}

/// `c_i(u)` for the monomial coefficients of `q`; all zero on the odeco variety.
pub fn odeco_residuals(q: &ShTensor) -> [f64; QUADRIC_COUNT] {
    let MonomialTensor(u) = sh_to_monomial(q);
    quadrics().residuals(&u.into())
}
