//! Thin dense helpers over `faer`.
//!
//! Everything here works on `faer::Mat<f64>` and plain slices. Degenerate
//! shapes (zero rows or columns) are handled explicitly since the
//! decompositions do not accept them.

use faer::{ColRef, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type Matrix = Mat<f64>;

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Matrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("{e:?}")))?;
    let vals: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Full singular value decomposition `a = U S Vᵀ` with square `U`, `V`
/// and singular values in descending order.
pub struct FullSvd {
    pub u: Matrix,
    pub v: Matrix,
    pub s: Vec<f64>,
}

pub fn svd_full(a: MatRef<'_, f64>) -> Result<FullSvd> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(FullSvd {
            u: Mat::identity(m, m),
            v: Mat::identity(n, n),
            s: Vec::new(),
        });
    }
    let svd = a.svd().map_err(|e| Error::Numerical(format!("{e:?}")))?;
    let k = m.min(n);
    let s = (0..k).map(|i| svd.S().column_vector()[i]).collect();
    Ok(FullSvd {
        u: svd.U().to_owned(),
        v: svd.V().to_owned(),
        s,
    })
}

/// Thin SVD: `U` is `m × min(m,n)`, singular values descending.
pub fn svd_thin(a: MatRef<'_, f64>) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (m, n) = (a.nrows(), a.ncols());
    let k = m.min(n);
    if k == 0 {
        return Ok((Mat::zeros(m, 0), Vec::new(), Mat::zeros(n, 0)));
    }
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("{e:?}")))?;
    let s = (0..k).map(|i| svd.S().column_vector()[i]).collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

/// Number of singular values above `rel_tol · s_max`.
pub fn numerical_rank(s: &[f64], rel_tol: f64) -> usize {
    let smax = s.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

pub fn matvec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.ncols(), x.len());
    if a.nrows() == 0 {
        return Vec::new();
    }
    if a.ncols() == 0 {
        return vec![0.0; a.nrows()];
    }
    let y = a * ColRef::from_slice(x);
    (0..y.nrows()).map(|i| y[i]).collect()
}

/// `aᵀ x`.
pub fn matvec_t(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    matvec(a.transpose(), x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

pub fn max_abs_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

/// `max |aᵀa − I|`.
pub fn orthonormality_error(a: MatRef<'_, f64>) -> f64 {
    if a.ncols() == 0 {
        return 0.0;
    }
    let g = a.transpose() * a;
    let id = Mat::<f64>::identity(a.ncols(), a.ncols());
    max_abs_diff(g.as_ref(), id.as_ref())
}

/// `aᵀ b`, tolerating empty shapes.
pub fn mul_tn(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Matrix {
    assert_eq!(a.nrows(), b.nrows());
    if a.nrows() == 0 || a.ncols() == 0 || b.ncols() == 0 {
        return Mat::zeros(a.ncols(), b.ncols());
    }
    a.transpose() * b
}

/// `a b`, tolerating empty shapes.
pub fn mul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Matrix {
    assert_eq!(a.ncols(), b.nrows());
    if a.ncols() == 0 || a.nrows() == 0 || b.ncols() == 0 {
        return Mat::zeros(a.nrows(), b.ncols());
    }
    a * b
}

/// `a bᵀ`, tolerating empty shapes.
pub fn mul_nt(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Matrix {
    mul(a, b.transpose())
}

pub fn select_columns(a: MatRef<'_, f64>, cols: &[usize]) -> Matrix {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

pub fn select_rows(a: MatRef<'_, f64>, rows: &[usize]) -> Matrix {
    Mat::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

/// Horizontal concatenation; all blocks must share a row count.
pub fn hcat(nrows: usize, blocks: &[MatRef<'_, f64>]) -> Matrix {
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(nrows, ncols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), nrows);
        for j in 0..b.ncols() {
            for i in 0..nrows {
                out[(i, off + j)] = b[(i, j)];
            }
        }
        off += b.ncols();
    }
    out
}

/// Orthonormal basis of the range of `a` together with its null-space
/// complement, from a full SVD. Returns `(range, cokernel, coimage, kernel,
/// retained singular values)` where `range`/`cokernel` live in the row space
/// dimension of `a` and `coimage`/`kernel` in its column dimension.
pub struct FourSubspaces {
    pub range: Matrix,
    pub cokernel: Matrix,
    pub coimage: Matrix,
    pub kernel: Matrix,
    pub singular_values: Vec<f64>,
}

pub fn four_subspaces(a: MatRef<'_, f64>, cutoff: f64) -> Result<FourSubspaces> {
    let svd = svd_full(a)?;
    let r = svd.s.iter().filter(|&&v| v > cutoff).count();
    let (m, n) = (a.nrows(), a.ncols());
    // faer returns singular values descending; reverse so columns come in
    // ascending order of singular value.
    let asc: Vec<usize> = (0..r).rev().collect();
    let range = select_columns(svd.u.as_ref(), &asc);
    let coimage = select_columns(svd.v.as_ref(), &asc);
    let cokernel = select_columns(svd.u.as_ref(), &(r..m).collect::<Vec<_>>());
    let kernel = select_columns(svd.v.as_ref(), &(r..n).collect::<Vec<_>>());
    let singular_values = asc.iter().map(|&i| svd.s[i]).collect();
    Ok(FourSubspaces {
        range,
        cokernel,
        coimage,
        kernel,
        singular_values,
    })
}

/// Orthonormal basis of the column space of `a` plus the rank, using an
/// SVD cutoff relative to the largest singular value.
pub fn column_space(a: MatRef<'_, f64>, rel_tol: f64) -> Result<(Matrix, Vec<f64>)> {
    let (u, s, _) = svd_thin(a)?;
    let r = numerical_rank(&s, rel_tol);
    let cols: Vec<usize> = (0..r).collect();
    Ok((select_columns(u.as_ref(), &cols), s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_of_empty_shapes() {
        let a = Mat::<f64>::zeros(3, 0);
        let fs = four_subspaces(a.as_ref(), 1e-12).unwrap();
        assert_eq!(fs.range.ncols(), 0);
        assert_eq!(fs.cokernel.ncols(), 3);
        assert_eq!(fs.kernel.ncols(), 0);
    }

    #[test]
    fn four_subspaces_of_rank_one() {
        let a = Mat::from_fn(2, 3, |i, j| ((i + 1) * (j + 1)) as f64);
        let fs = four_subspaces(a.as_ref(), 1e-9).unwrap();
        assert_eq!(fs.range.ncols(), 1);
        assert_eq!(fs.cokernel.ncols(), 1);
        assert_eq!(fs.coimage.ncols(), 1);
        assert_eq!(fs.kernel.ncols(), 2);
        let ak = mul(a.as_ref(), fs.kernel.as_ref());
        assert!(max_abs(ak.as_ref()) < 1e-12);
    }

    #[test]
    fn eigen_is_ascending() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { (3 - i) as f64 } else { 0.0 });
        let (vals, vecs) = sym_eigen(a.as_ref()).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!(orthonormality_error(vecs.as_ref()) < 1e-14);
    }
}
