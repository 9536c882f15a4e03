//! Dense complex linear algebra shared by every module.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`.
//! Hermitian inputs are symmetrised before decomposition, so callers may
//! pass matrices that are Hermitian only to rounding error.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

/// `|a><b|`
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |U^dag U - I|`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs_diff(&(u.adjoint() * u), &identity(n))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Column `k` of the returned matrix is the eigenvector of eigenvalue `k`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigh(m).0.first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    eigh(m).0.last().copied().unwrap_or(0.0)
}

/// Rebuild `V f(Λ) V^dag` from a decomposition.
fn spectral(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let s = f(lambda);
        scaled.column_mut(k).scale_mut(s);
    }
    let out = scaled * vectors.adjoint();
    debug_assert_eq!(out.nrows(), n);
    out
}

/// Principal square root of a PSD matrix. Eigenvalues within rounding
/// distance of zero, negative ones included, are set to zero so that their
/// square roots do not inflate the noise.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = eigh(m);
    let lmax = values.iter().fold(1.0f64, |a, &b| a.max(b));
    let floor = 64.0 * f64::EPSILON * lmax;
    spectral(&values, &vectors, |l| if l > floor { l.sqrt() } else { 0.0 })
}

/// Split of a PSD matrix into its pseudoinverse and the projectors onto
/// support and kernel.
#[derive(Clone, Debug)]
pub struct PsdInverse {
    pub pinv: CMatrix,
    pub support: Vec<CVector>,
    pub kernel: Vec<CVector>,
}

impl PsdInverse {
    pub fn support_projector(&self, n: usize) -> CMatrix {
        projector(&self.support, n)
    }
}

/// Pseudoinverse of a PSD matrix. Eigenvalues at or below
/// `rel_cutoff * lambda_max` are treated as zero.
pub fn psd_pinv(m: &CMatrix, rel_cutoff: f64) -> PsdInverse {
    let n = m.nrows();
    let (values, vectors) = eigh(m);
    let lmax = values.iter().fold(0.0f64, |a, &b| a.max(b));
    let cut = rel_cutoff * lmax;
    let mut support = Vec::new();
    let mut kernel = Vec::new();
    for (k, &l) in values.iter().enumerate() {
        let v = vectors.column(k).into_owned();
        if lmax > 0.0 && l > cut {
            support.push(v);
        } else {
            kernel.push(v);
        }
    }
    let pinv = spectral(&values, &vectors, |l| {
        if lmax > 0.0 && l > cut {
            1.0 / l
        } else {
            0.0
        }
    });
    debug_assert_eq!(pinv.nrows(), n);
    PsdInverse { pinv, support, kernel }
}

/// `sum_k |v_k><v_k|`
pub fn projector(basis: &[CVector], n: usize) -> CMatrix {
    let mut p = zeros(n);
    for v in basis {
        p += outer(v, v);
    }
    p
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass. Vectors whose
/// residual norm falls below `tol` are dropped.
pub fn orthonormalize(vectors: &[CVector], tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if let Some(q) = orthogonal_residual(v, &basis, tol) {
            basis.push(q);
        }
    }
    basis
}

/// Normalised component of `v` orthogonal to the orthonormal `basis`, or
/// `None` when that component is shorter than `tol`.
pub fn orthogonal_residual(v: &CVector, basis: &[CVector], tol: f64) -> Option<CVector> {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dotc(&r);
            r.axpy(-c, q, ONE);
        }
    }
    let norm = r.norm();
    (norm > tol).then(|| r.unscale(norm))
}

/// Orthonormal basis of the span of several subspaces, each given by an
/// (approximately) orthonormal basis. Uses the eigen-decomposition of the
/// summed projectors so nearly parallel inputs do not inflate the rank.
pub fn span_basis(subspaces: &[&[CVector]], n: usize, tol: f64) -> Vec<CVector> {
    let mut sum = zeros(n);
    for s in subspaces {
        sum += projector(s, n);
    }
    let (values, vectors) = eigh(&sum);
    values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > tol)
        .map(|(k, _)| vectors.column(k).into_owned())
        .collect()
}

/// Extend an orthonormal set to a full orthonormal basis of `C^n`, taking
/// at each step the standard basis vector with the largest component
/// outside the current span.
pub fn complete_basis(partial: &[CVector], n: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = partial.to_vec();
    // columns of the complement projector are the residuals of e_k
    let mut complement = identity(n) - projector(partial, n);
    let mut added = Vec::new();
    while basis.len() < n {
        let (k, _) = complement
            .column_iter()
            .map(|c| c.norm())
            .enumerate()
            .fold((0, -1.0), |best, (k, norm)| if norm > best.1 + 1e-12 { (k, norm) } else { best });
        let q = orthogonal_residual(&unit_vector(n, k), &basis, 0.0).expect("rank below n");
        complement -= outer(&q, &q);
        basis.push(q.clone());
        added.push(q);
    }
    added
}

pub fn unit_vector(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = ONE;
    v
}

/// Block `(row_block, col_block)` of size `n x n` from a `2n x 2n` matrix.
pub fn block(m: &CMatrix, n: usize, row_block: usize, col_block: usize) -> CMatrix {
    m.view((row_block * n, col_block * n), (n, n)).into_owned()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        );
        let (vals, vecs) = eigh(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        let back = spectral(&vals, &vecs, |l| l);
        assert!(max_abs_diff(&back, &m) < 1e-13);
    }

    #[test]
    fn sqrt_of_projector_is_itself() {
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0), ZERO]).unscale(2f64.sqrt());
        let p = outer(&v, &v);
        assert!(max_abs_diff(&psd_sqrt(&p), &p) < 1e-12);
    }

    #[test]
    fn pinv_of_singular_psd() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(4.0, 0.0), ZERO, c(0.25, 0.0)]));
        let inv = psd_pinv(&m, 1e-10);
        assert_eq!(inv.support.len(), 2);
        assert_eq!(inv.kernel.len(), 1);
        assert!((inv.pinv[(0, 0)].re - 0.25).abs() < 1e-14);
        assert!((inv.pinv[(2, 2)].re - 4.0).abs() < 1e-12);
        assert!(inv.pinv[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn complete_basis_from_nothing_is_standard() {
        let added = complete_basis(&[], 3);
        for (k, v) in added.iter().enumerate() {
            assert!((v - unit_vector(3, k)).norm() < 1e-14);
        }
    }

    #[test]
    fn span_of_parallel_subspaces() {
        let a = vec![unit_vector(3, 0)];
        let b = vec![unit_vector(3, 0).scale(-1.0)];
        let cvec = vec![unit_vector(3, 2)];
        let s = span_basis(&[&a, &b, &cvec], 3, 1e-9);
        assert_eq!(s.len(), 2);
    }
}
