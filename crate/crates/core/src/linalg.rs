//! Small dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};

/// Orthonormal basis of `{x : samplesᵀ x = 0}` where the columns of `samples`
/// are sample vectors. Singular values below `rel_tol * σ_max` count as zero.
///
/// Returns the basis as rows together with the singular values (descending).
pub fn left_nullspace(samples: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, DVector<f64>) {
    let dim = samples.nrows();
    // QR of the tall transpose keeps the SVD small and avoids squaring the condition number.
    let tall = samples.transpose();
    let r = if tall.nrows() > dim {
        tall.qr().r()
    } else {
        tall
    };
    let svd = r.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sigma = svd.singular_values;
    let mut full_sigma = DVector::zeros(dim);
    for (i, s) in sigma.iter().enumerate() {
        full_sigma[i] = *s;
    }
    let smax = full_sigma.iter().cloned().fold(0.0, f64::max);
    let mut rows = Vec::new();
    for i in 0..dim {
        if full_sigma[i] <= rel_tol * smax {
            rows.push(v_t.row(i).into_owned());
        }
    }
    // V may be rank-deficient in shape when there are fewer samples than the dimension.
    if v_t.nrows() < dim {
        let extra = complete_rows(&v_t, dim);
        for r in extra {
            rows.push(r);
        }
    }
    let basis = if rows.is_empty() {
        DMatrix::zeros(0, dim)
    } else {
        DMatrix::from_rows(&rows)
    };
    (basis, full_sigma)
}

fn complete_rows(v_t: &DMatrix<f64>, dim: usize) -> Vec<nalgebra::RowDVector<f64>> {
    // Project the canonical basis out of the known rows (Gram-Schmidt).
    let mut have: Vec<DVector<f64>> = v_t.row_iter().map(|r| r.transpose()).collect();
    let mut out = Vec::new();
    for k in 0..dim {
        let mut e = DVector::zeros(dim);
        e[k] = 1.0;
        for h in &have {
            let d = h.dot(&e);
            e -= h * d;
        }
        let n = e.norm();
        if n > 1e-8 {
            e /= n;
            out.push(e.transpose());
            have.push(e);
        }
        if have.len() == dim {
            break;
        }
    }
    out
}

/// Orthonormal row basis for the row space of `rows`, with rank decided by `rel_tol`.
pub fn row_space(rows: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = rows.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<_> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * smax)
        .map(|i| v_t.row(i).into_owned())
        .collect();
    if keep.is_empty() {
        DMatrix::zeros(0, rows.ncols())
    } else {
        DMatrix::from_rows(&keep)
    }
}

/// Eigenpairs of a symmetric 3×3 matrix, sorted by ascending eigenvalue.
pub fn sym_eigen3(m: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(*m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = [
        eig.eigenvalues[idx[0]],
        eig.eigenvalues[idx[1]],
        eig.eigenvalues[idx[2]],
    ];
    let vecs = [
        eig.eigenvectors.column(idx[0]).into_owned(),
        eig.eigenvectors.column(idx[1]).into_owned(),
        eig.eigenvectors.column(idx[2]).into_owned(),
    ];
    (vals, vecs)
}

/// Sum with pairwise reduction; the result depends only on the slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        s
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_rank_two_samples() {
        let samples = DMatrix::from_column_slice(3, 4, &[
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            1.0, 1.0, 0.0, //
            2.0, -1.0, 0.0,
        ]);
        let (basis, _) = left_nullspace(&samples, 1e-9);
        assert_eq!(basis.nrows(), 1);
        assert!((basis[(0, 2)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }

    #[test]
    fn eigen_sorted() {
        let m = Matrix3::new(3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0);
        let (vals, vecs) = sym_eigen3(&m);
        assert_eq!(vals, [1.0, 2.0, 3.0]);
        assert!((vecs[0].y.abs() - 1.0).abs() < 1e-12);
    }
}
