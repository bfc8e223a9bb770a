//! Dense complex matrix helpers shared by the operator modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_rows(rows: &[&[Complex64]]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticomm(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Largest entry modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn dist(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    max_abs(&(a - b))
}

/// Returns `(s, deviation)` where `s·I` is the closest scalar matrix in the
/// mean-of-diagonal sense and `deviation` the largest entrywise residual.
pub fn scalar_part(a: &CMat) -> (Complex64, f64) {
    let n = a.nrows();
    if n == 0 {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    let s = a.trace() / cr(n as f64);
    let dev = max_abs(&(a - eye(n) * s));
    (s, dev)
}

pub fn skew_hermitian_defect(a: &CMat) -> f64 {
    max_abs(&(a + a.adjoint()))
}

pub fn hermitian_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], CMat::zeros(0, 0));
    }
    let h = (a + a.adjoint()) * cr(0.5);
    let eig = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    eigh(a).0
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn sigma_min(a: &CMat) -> f64 {
    let s = singular_values(a);
    if a.nrows() != a.ncols() {
        return s.last().copied().unwrap_or(0.0);
    }
    s.last().copied().unwrap_or(f64::INFINITY)
}

/// Smallest |eigenvalue| of a skew-Hermitian matrix (its smallest singular value).
pub fn sigma_min_skew(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    eigvalsh(&(a * I)).iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
}

/// Orthonormal basis (columns) of the nullspace, singular values below `tol`.
pub fn nullspace(a: &CMat, tol: f64) -> CMat {
    let n = a.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let m = if a.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let cols: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] < tol).collect();
    let mut out = CMat::zeros(n, cols.len());
    for (j, &k) in cols.iter().enumerate() {
        out.set_column(j, &vt.row(k).adjoint());
    }
    out
}

/// Modified Gram–Schmidt on the columns, dropping dependent ones.
pub fn orthonormalize(a: &CMat, tol: f64) -> CMat {
    let mut cols: Vec<CVec> = Vec::new();
    for j in 0..a.ncols() {
        let mut v: CVec = a.column(j).into_owned();
        for q in &cols {
            let p = q.dotc(&v);
            v -= q * p;
        }
        let nv = v.norm();
        if nv > tol {
            cols.push(v / cr(nv));
        }
    }
    let mut out = CMat::zeros(a.nrows(), cols.len());
    for (j, q) in cols.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Rotates each column so that its largest-modulus entry is real positive.
pub fn fix_phases(a: &mut CMat) {
    for j in 0..a.ncols() {
        let mut best = Complex64::new(0.0, 0.0);
        for i in 0..a.nrows() {
            if a[(i, j)].norm() > best.norm() + 1e-12 {
                best = a[(i, j)];
            }
        }
        if best.norm() > 0.0 {
            let ph = best.conj() / cr(best.norm());
            for i in 0..a.nrows() {
                a[(i, j)] *= ph;
            }
        }
    }
}

pub fn expm(a: &CMat) -> CMat {
    a.clone().exp()
}

/// Hermitian functional calculus: f applied to the eigenvalues of `h`.
pub fn herm_fn(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&x| cr(f(x)))));
    &vecs * d * vecs.adjoint()
}

pub fn real_mat(a: &DMatrix<f64>) -> CMat {
    a.map(cr)
}

/// Inverse square root of a symmetric positive-definite real matrix.
pub fn inv_sqrt_spd(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let sym = (g + g.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let v = eig.eigenvectors.column(k);
        out += v * v.transpose() / eig.eigenvalues[k].sqrt();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_rank_one() {
        let a = from_rows(&[&[cr(1.0), cr(1.0)], &[cr(1.0), cr(1.0)]]);
        let k = nullspace(&a, 1e-9);
        assert_eq!(k.ncols(), 1);
        assert!(max_abs(&(&a * &k)) < 1e-12);
    }

    #[test]
    fn eigh_sorts_ascending() {
        let a = from_rows(&[&[cr(2.0), I], &[-I, cr(2.0)]]);
        let (v, _) = eigh(&a);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_root() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let r = inv_sqrt_spd(&g);
        assert!((r[(0, 0)] - 0.5).abs() < 1e-14 && (r[(1, 1)] - 1.0 / 3.0).abs() < 1e-14);
    }
}
