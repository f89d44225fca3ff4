//! Monomial and spherical-harmonic bases for homogeneous quartics in three variables.
//!
//! Monomials `x^a y^b z^c` with `a + b + c = 4` are ordered lexicographically by
//! descending `(a, b)`:
//!
//! ```text
//!  0 x⁴    1 x³y   2 x³z   3 x²y²  4 x²yz
//!  5 x²z²  6 xy³   7 xy²z  8 xyz²  9 xz³
//! 10 y⁴   11 y³z  12 y²z² 13 yz³  14 z⁴
//! ```
//!
//! Spherical-harmonic coefficients use real, orthonormal harmonics without the
//! Condon–Shortley phase, ordered band by band: `l = 0`, then `l = 2` with
//! `m = -2..=2`, then `l = 4` with `m = -4..=4`.

#[allow(unused_imports)] // f64 math comes from std when it is linked
use num_traits::Float;
use core::f64::consts::PI;

use nalgebra::SMatrix;
use once_cell::race::OnceBox;

use alloc::boxed::Box;

pub const DIM: usize = 15;

pub type Mat15 = SMatrix<f64, DIM, DIM>;

/// Exponents `(a, b, c)` of the quartic monomials in basis order.
pub const MONOMIALS: [[u8; 3]; DIM] = [
    [4, 0, 0],
    [3, 1, 0],
    [3, 0, 1],
    [2, 2, 0],
    [2, 1, 1],
    [2, 0, 2],
    [1, 3, 0],
    [1, 2, 1],
    [1, 1, 2],
    [1, 0, 3],
    [0, 4, 0],
    [0, 3, 1],
    [0, 2, 2],
    [0, 1, 3],
    [0, 0, 4],
];

/// Index of a quartic monomial given its exponents.
pub const fn monomial_index(a: usize, b: usize, c: usize) -> usize {
    debug_assert!(a + b + c == 4);
    // Offsets of the first monomial with a given power of x.
    let start = match a {
        4 => 0,
        3 => 1,
        2 => 3,
        1 => 6,
        _ => 10,
    };
    start + (4 - a - b)
}

/// Index of the monomial whose exponents count the axes in `idx`.
pub fn monomial_of_indices(idx: &[usize]) -> usize {
    let mut e = [0usize; 3];
    for &i in idx {
        e[i] += 1;
    }
    monomial_index(e[0], e[1], e[2])
}

/// Multinomial coefficient `4! / (a! b! c!)`.
pub fn multinomial(e: [u8; 3]) -> f64 {
    const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];
    24.0 / (FACT[e[0] as usize] * FACT[e[1] as usize] * FACT[e[2] as usize])
}

/// Labels `(l, m)` of the spherical-harmonic coefficients.
pub const SH_LABELS: [(u8, i8); DIM] = [
    (0, 0),
    (2, -2),
    (2, -1),
    (2, 0),
    (2, 1),
    (2, 2),
    (4, -4),
    (4, -3),
    (4, -2),
    (4, -1),
    (4, 0),
    (4, 1),
    (4, 2),
    (4, 3),
    (4, 4),
];

/// Dense polynomial of degree ≤ 4 in three variables.
#[derive(Clone, Copy)]
struct Poly([[[f64; 5]; 5]; 5]);

impl Poly {
    fn zero() -> Self {
        Poly([[[0.0; 5]; 5]; 5])
    }

    fn term(c: f64, a: usize, b: usize, d: usize) -> Self {
        let mut p = Self::zero();
        p.0[a][b][d] = c;
        p
    }

    fn add(mut self, o: &Poly) -> Self {
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    self.0[a][b][c] += o.0[a][b][c];
                }
            }
        }
        self
    }

    fn scale(mut self, s: f64) -> Self {
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    self.0[a][b][c] *= s;
                }
            }
        }
        self
    }

    fn mul(&self, o: &Poly) -> Self {
        let mut r = Self::zero();
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    let x = self.0[a][b][c];
                    if x == 0.0 {
                        continue;
                    }
                    for d in 0..5 - a {
                        for e in 0..5 - b {
                            for f in 0..5 - c {
                                let y = o.0[d][e][f];
                                if y != 0.0 {
                                    r.0[a + d][b + e][c + f] += x * y;
                                }
                            }
                        }
                    }
                }
            }
        }
        r
    }

    fn quartic_coefficients(&self) -> [f64; DIM] {
        let mut out = [0.0; DIM];
        for (i, e) in MONOMIALS.iter().enumerate() {
            out[i] = self.0[e[0] as usize][e[1] as usize][e[2] as usize];
        }
        out
    }
}

fn x() -> Poly {
    Poly::term(1.0, 1, 0, 0)
}
fn y() -> Poly {
    Poly::term(1.0, 0, 1, 0)
}
fn z() -> Poly {
    Poly::term(1.0, 0, 0, 1)
}
fn r2() -> Poly {
    x().mul(&x()).add(&y().mul(&y())).add(&z().mul(&z()))
}

/// Real harmonic `Y_l^m` as a quartic polynomial that agrees with it on the sphere.
fn harmonic_quartic(l: u8, m: i8) -> Poly {
    let (x, y, z, r2) = (x(), y(), z(), r2());
    let xx = x.mul(&x);
    let yy = y.mul(&y);
    let zz = z.mul(&z);
    let p = match (l, m) {
        (0, 0) => Poly::term(0.5 * (1.0 / PI).sqrt(), 0, 0, 0),
        (2, -2) => x.mul(&y).scale(0.5 * (15.0 / PI).sqrt()),
        (2, -1) => y.mul(&z).scale(0.5 * (15.0 / PI).sqrt()),
        (2, 0) => zz.scale(2.0).add(&xx.scale(-1.0)).add(&yy.scale(-1.0)).scale(0.25 * (5.0 / PI).sqrt()),
        (2, 1) => x.mul(&z).scale(0.5 * (15.0 / PI).sqrt()),
        (2, 2) => xx.add(&yy.scale(-1.0)).scale(0.25 * (15.0 / PI).sqrt()),
        (4, -4) => x
            .mul(&y)
            .mul(&xx.add(&yy.scale(-1.0)))
            .scale(0.75 * (35.0 / PI).sqrt()),
        (4, -3) => xx
            .scale(3.0)
            .add(&yy.scale(-1.0))
            .mul(&y)
            .mul(&z)
            .scale(0.75 * (35.0 / (2.0 * PI)).sqrt()),
        (4, -2) => x
            .mul(&y)
            .mul(&zz.scale(7.0).add(&r2.scale(-1.0)))
            .scale(0.75 * (5.0 / PI).sqrt()),
        (4, -1) => y
            .mul(&z)
            .mul(&zz.scale(7.0).add(&r2.scale(-3.0)))
            .scale(0.75 * (5.0 / (2.0 * PI)).sqrt()),
        (4, 0) => zz
            .mul(&zz)
            .scale(35.0)
            .add(&zz.mul(&r2).scale(-30.0))
            .add(&r2.mul(&r2).scale(3.0))
            .scale(3.0 / 16.0 * (1.0 / PI).sqrt()),
        (4, 1) => x
            .mul(&z)
            .mul(&zz.scale(7.0).add(&r2.scale(-3.0)))
            .scale(0.75 * (5.0 / (2.0 * PI)).sqrt()),
        (4, 2) => xx
            .add(&yy.scale(-1.0))
            .mul(&zz.scale(7.0).add(&r2.scale(-1.0)))
            .scale(3.0 / 8.0 * (5.0 / PI).sqrt()),
        (4, 3) => xx
            .add(&yy.scale(-3.0))
            .mul(&x)
            .mul(&z)
            .scale(0.75 * (35.0 / (2.0 * PI)).sqrt()),
        (4, 4) => xx
            .mul(&xx.add(&yy.scale(-3.0)))
            .add(&yy.mul(&xx.scale(3.0).add(&yy.scale(-1.0))).scale(-1.0))
            .scale(3.0 / 16.0 * (35.0 / PI).sqrt()),
        _ => unreachable!("only bands 0, 2, 4 are used"),
    };
    // Lift to a homogeneous quartic with powers of r² (equal to 1 on the sphere).
    let mut lifted = p;
    for _ in 0..(4 - l) / 2 {
        lifted = lifted.mul(&r2);
    }
    lifted
}

/// `(u · x)^4` expanded in quartic monomials.
pub fn power4_coefficients(w: [f64; 3]) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for (i, e) in MONOMIALS.iter().enumerate() {
        out[i] = multinomial(*e)
            * w[0].powi(e[0] as i32)
            * w[1].powi(e[1] as i32)
            * w[2].powi(e[2] as i32);
    }
    out
}

/// Precomputed change-of-basis matrices.
pub struct BasisTables {
    /// Columns are the monomial coefficients of each harmonic: `u = S q`.
    pub sh_to_monomial: Mat15,
    pub monomial_to_sh: Mat15,
}

impl BasisTables {
    fn build() -> Self {
        let mut s = Mat15::zeros();
        for (j, &(l, m)) in SH_LABELS.iter().enumerate() {
            let c = harmonic_quartic(l, m).quartic_coefficients();
            for i in 0..DIM {
                s[(i, j)] = c[i];
            }
        }
        let inv = s.try_inverse().expect("harmonic basis is invertible");
        BasisTables {
            sh_to_monomial: s,
            monomial_to_sh: inv,
        }
    }
}

static TABLES: OnceBox<BasisTables> = OnceBox::new();

pub fn tables() -> &'static BasisTables {
    TABLES.get_or_init(|| Box::new(BasisTables::build()))
}

/// Exact `∫_{S²} x^a y^b z^c` for non-negative integer exponents.
pub fn sphere_moment(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    // 2 Γ(α)Γ(β)Γ(γ)/Γ(α+β+γ) with half-integer arguments.
    let g = |k: u32| gamma_half(k + 1);
    2.0 * g(a) * g(b) * g(c) / gamma_half(a + b + c + 3)
}

/// Γ(n / 2) for positive integer n.
fn gamma_half(n: u32) -> f64 {
    if n % 2 == 0 {
        let mut f = 1.0;
        for k in 1..n / 2 {
            f *= k as f64;
        }
        f
    } else {
        let mut f = PI.sqrt();
        let mut k = 1;
        while k < n {
            f *= k as f64 / 2.0;
            k += 2;
        }
        f
    }
}
