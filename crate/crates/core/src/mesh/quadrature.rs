/// Quadrature on the reference triangle, barycentric points and weights summing to 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    pub points: [[f64; 3]; 3],
    pub weights: [f64; 3],
}

/// Symmetric three-point rule of degree 2.
pub const GAUSS3: QuadratureRule = QuadratureRule {
    points: [
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ],
    weights: [1.0 / 6.0; 3],
};
