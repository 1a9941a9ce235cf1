//! Dense linear-algebra helpers on top of `faer`.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{Mat, Par, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Complex dense matrix used throughout the crate.
pub type CMat = Mat<C64>;

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `(A + A^H)/2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()))
}

/// `max |A − A^H| / max |A|`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            num = num.max((a[(i, j)] - a[(j, i)].conj()).norm());
            den = den.max(a[(i, j)].norm());
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn frobenius(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn identity(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { zero() })
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

/// Matrix-vector product.
pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    let mut y = vec![zero(); a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == zero() {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a[(i, j)] * xj;
        }
    }
    y
}

/// `A^H x`.
pub fn matvec_adjoint(a: &CMat, x: &[C64]) -> Vec<C64> {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].conj() * x[i]).sum())
        .collect()
}

/// `Σ conj(x_i) y_i`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn col_vec(a: &CMat, j: usize) -> Vec<C64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn from_cols(nrows: usize, cols: &[Vec<C64>]) -> CMat {
    CMat::from_fn(nrows, cols.len(), |i, j| cols[j][i])
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky_lower(a: &CMat, what: &str) -> Result<CMat> {
    let llt = hermitian_part(a)
        .llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Cholesky factorization of {what} failed: {e:?}")))?;
    Ok(llt.L().to_owned())
}

/// Solves `L X = B` in place for lower-triangular `L`.
pub fn solve_lower(l: &CMat, b: &mut CMat) {
    solve_lower_triangular_in_place(l.as_ref(), b.as_mut(), Par::Seq);
}

/// Solves `L^H X = B` in place for lower-triangular `L`.
pub fn solve_lower_adjoint(l: &CMat, b: &mut CMat) {
    solve_upper_triangular_in_place(l.adjoint(), b.as_mut(), Par::Seq);
}

/// Inverse of a general square matrix by partial-pivoting LU.
pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

/// Solves `A X = B` by partial-pivoting LU.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    a.partial_piv_lu().solve(b)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvectors (columns).
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let h = hermitian_part(a);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let vals = (0..h.nrows()).map(|i| evd.S()[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Generalized Hermitian-definite problem `A x = λ B x` by Cholesky
/// whitening. Eigenvectors are `B`-orthonormal. Returns `(λ, X, L)` with
/// `B = L L^H`.
pub fn generalized_hermitian_eigen(a: &CMat, b: &CMat) -> Result<(Vec<f64>, CMat, CMat)> {
    let l = cholesky_lower(b, "the metric matrix")?;
    let mut c = a.clone();
    solve_lower(&l, &mut c);
    let mut ct = adjoint(&c);
    solve_lower(&l, &mut ct);
    let (vals, u) = hermitian_eigen(&ct)?;
    let mut x = u;
    solve_lower_adjoint(&l, &mut x);
    Ok((vals, x, l))
}

/// Orthonormal basis (columns) of the complement of the real vector `w`
/// in `C^n`.
pub fn orthogonal_complement(w: &[f64]) -> CMat {
    let v: Vec<C64> = w.iter().map(|&x| C64::new(x, 0.0)).collect();
    orthogonal_complement_of(&v)
}

/// Orthonormal basis (columns) of `{x : v^H x = 0}`, built from a
/// Householder reflector.
pub fn orthogonal_complement_of(w: &[C64]) -> CMat {
    let n = w.len();
    let nw = norm(w);
    let mut v: Vec<C64> = w.iter().map(|x| x / nw).collect();
    // Reflector mapping e_0 to a multiple of w; its remaining columns span w^⊥.
    let phase = if v[0].norm() > 0.0 {
        v[0] / v[0].norm()
    } else {
        C64::new(1.0, 0.0)
    };
    v[0] += phase;
    let vn2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    CMat::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) - 2.0 * v[i] * v[col].conj() / vn2
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let w = [0.3, 1.2, -0.5, 2.0];
        let q = orthogonal_complement(&w);
        let g = q.adjoint() * &q;
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - C64::new(e, 0.0)).norm() < 1e-14);
            }
            let d: C64 = (0..4).map(|r| q[(r, i)] * w[r]).sum();
            assert!(d.norm() < 1e-14);
        }
        let v = [C64::new(0.2, -1.0), C64::new(0.0, 0.7), C64::new(-1.5, 0.1)];
        let q = orthogonal_complement_of(&v);
        for j in 0..2 {
            let col = col_vec(&q, j);
            assert!(dot(&v, &col).norm() < 1e-14);
            assert!((norm(&col) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn generalized_eigen_b_orthonormal() {
        let a = CMat::from_fn(3, 3, |i, j| C64::new((i + j) as f64, if i < j { 0.5 } else if i > j { -0.5 } else { 0.0 }));
        let b = CMat::from_fn(3, 3, |i, j| C64::new(if i == j { 3.0 } else { 0.5 }, 0.0));
        let (_, x, _) = generalized_hermitian_eigen(&a, &b).unwrap();
        let g = x.adjoint() * &b * &x;
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - C64::new(e, 0.0)).norm() < 1e-12);
            }
        }
    }
}
