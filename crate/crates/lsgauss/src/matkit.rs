//! Small dense symmetric-matrix kernel.
//!
//! Eigendecomposition via cyclic Jacobi sweeps, PSD square roots and inverse
//! square roots, ellipticity tests, and the Frobenius / trace / operator
//! norms. Dimensions stay small (at most 64), so a dependency-free,
//! deterministic kernel is both fast enough and bit-reproducible.

use num_traits::{Float, FromPrimitive};
use std::fmt;
use thiserror::Error;

/// Scalar type for the matrix kernel: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + fmt::Debug + Send + Sync + 'static {}
impl<T: Float + FromPrimitive + fmt::Debug + Send + Sync + 'static> Scalar for T {}

/// Largest supported dimension.
pub const MAX_DIM: usize = 64;

const SWEEP_BUDGET: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatError {
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("Jacobi sweeps did not converge within the sweep budget")]
    NoConvergence,
    #[error("matrix is not positive semidefinite")]
    NotPsd,
    #[error("minimum eigenvalue is below the requested floor")]
    BelowFloor,
    #[error("bad matrix arguments: {0}")]
    BadArgs(&'static str),
}

#[inline]
fn lit<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("constant representable in scalar type")
}

/// Dense row-major matrix, used for multipliers and eigenvector tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<F>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::BadArgs("data length does not match dimensions"));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Mat { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn transpose(&self) -> Mat<F> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat<F>) -> Result<Mat<F>, MatError> {
        if self.cols != other.rows {
            return Err(MatError::BadArgs("matmul dimension mismatch"));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == F::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[F]) -> Result<Vec<F>, MatError> {
        if v.len() != self.cols {
            return Err(MatError::BadArgs("mul_vec dimension mismatch"));
        }
        let mut out = vec![F::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = F::zero();
            for j in 0..self.cols {
                acc = acc + self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: F) -> Mat<F> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &Mat<F>) -> Result<Mat<F>, MatError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatError::BadArgs("sub dimension mismatch"));
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }
}

/// Symmetric d x d matrix, symmetrized exactly on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<F> {
    dim: usize,
    data: Vec<F>,
}

impl<F: Scalar> SymMatrix<F> {
    /// Builds from row-major entries, averaging `(a_ij + a_ji) / 2` so the
    /// stored matrix is exactly symmetric.
    pub fn new(dim: usize, data: Vec<F>) -> Result<Self, MatError> {
        if data.len() != dim * dim {
            return Err(MatError::BadArgs("data length does not match dimension"));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(MatError::NonFinite);
        }
        let mut m = SymMatrix { dim, data };
        let half = lit::<F>(0.5);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = (m.get(i, j) + m.get(j, i)) * half;
                m.set_pair(i, j, avg);
            }
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![F::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, F::one())
    }

    pub fn scaled_identity(dim: usize, c: F) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.set_pair(i, i, c);
        }
        m
    }

    pub fn from_diag(diag: &[F]) -> Self {
        let mut m = SymMatrix::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set_pair(i, i, v);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.dim + j]
    }

    /// Sets entries `(i, j)` and `(j, i)` to the same value.
    #[inline]
    pub fn set_pair(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_mat(&self) -> Mat<F> {
        Mat {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn frobenius(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn trace(&self) -> F {
        (0..self.dim).fold(F::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn apply(&self, x: &[F]) -> Result<Vec<F>, MatError> {
        if x.len() != self.dim {
            return Err(MatError::BadArgs("apply dimension mismatch"));
        }
        let mut out = vec![F::zero(); self.dim];
        for i in 0..self.dim {
            let mut acc = F::zero();
            for j in 0..self.dim {
                acc = acc + self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: F) -> SymMatrix<F> {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * alpha).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix<F>) -> Result<SymMatrix<F>, MatError> {
        if self.dim != other.dim {
            return Err(MatError::BadArgs("add dimension mismatch"));
        }
        Ok(SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn min_eigenvalue(&self) -> Result<F, MatError> {
        let e = sym_eigen(self)?;
        Ok(*e.values.last().expect("nonempty spectrum"))
    }
}

/// Eigendecomposition of a symmetric matrix: values sorted descending,
/// orthogonal column eigenvectors with the first nonzero component of each
/// column made positive.
#[derive(Debug, Clone)]
pub struct EigenPair<F> {
    pub values: Vec<F>,
    pub vectors: Mat<F>,
}

impl<F: Scalar> EigenPair<F> {
    /// Reassembles `Q diag(f(lambda)) Q^T` as a symmetric matrix.
    pub fn assemble(&self, f: impl Fn(F) -> F) -> SymMatrix<F> {
        let d = self.values.len();
        let mut out = SymMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                let mut acc = F::zero();
                for (k, &lam) in self.values.iter().enumerate() {
                    acc = acc + self.vectors.get(i, k) * f(lam) * self.vectors.get(j, k);
                }
                out.set_pair(i, j, acc);
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition. Converges when the off-diagonal
/// Frobenius mass drops below `1e-14 * ||A||_F`; at most 100 sweeps.
pub fn sym_eigen<F: Scalar>(a: &SymMatrix<F>) -> Result<EigenPair<F>, MatError> {
    let d = a.dim;
    if d == 0 || d > MAX_DIM {
        return Err(MatError::BadArgs("dimension must be in 1..=64"));
    }
    if a.data.iter().any(|x| !x.is_finite()) {
        return Err(MatError::NonFinite);
    }
    let norm = a.frobenius();
    let tol = lit::<F>(1e-14) * norm;
    let mut m = a.clone();
    let mut q = Mat::identity(d);

    let off = |m: &SymMatrix<F>| -> F {
        let mut s = F::zero();
        for i in 0..d {
            for j in (i + 1)..d {
                let v = m.get(i, j);
                s = s + (v * v + v * v);
            }
        }
        s.sqrt()
    };

    let mut converged = norm == F::zero() || off(&m) <= tol;
    let mut sweeps = 0;
    while !converged && sweeps < SWEEP_BUDGET {
        for p in 0..d {
            for r in (p + 1)..d {
                let apq = m.get(p, r);
                if apq == F::zero() {
                    continue;
                }
                let theta = (m.get(r, r) - m.get(p, p)) / (lit::<F>(2.0) * apq);
                let t = {
                    let abs = theta.abs();
                    let tt = F::one() / (abs + (theta * theta + F::one()).sqrt());
                    if theta < F::zero() {
                        -tt
                    } else {
                        tt
                    }
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;

                // Rotate rows/columns p and r of m.
                let app = m.get(p, p);
                let arr = m.get(r, r);
                m.set_pair(p, p, app - t * apq);
                m.set_pair(r, r, arr + t * apq);
                m.set_pair(p, r, F::zero());
                for k in 0..d {
                    if k == p || k == r {
                        continue;
                    }
                    let akp = m.get(k, p);
                    let akr = m.get(k, r);
                    m.set_pair(k, p, c * akp - s * akr);
                    m.set_pair(k, r, s * akp + c * akr);
                }
                // Accumulate eigenvectors.
                for k in 0..d {
                    let qkp = q.get(k, p);
                    let qkr = q.get(k, r);
                    q.set(k, p, c * qkp - s * qkr);
                    q.set(k, r, s * qkp + c * qkr);
                }
            }
        }
        sweeps += 1;
        converged = off(&m) <= tol;
    }
    if !converged {
        return Err(MatError::NoConvergence);
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        m.get(j, j)
            .partial_cmp(&m.get(i, i))
            .expect("finite eigenvalues")
    });
    let values: Vec<F> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Mat::zeros(d, d);
    for (new_col, &old_col) in order.iter().enumerate() {
        let flip = (0..d)
            .map(|i| q.get(i, old_col))
            .find(|v| *v != F::zero())
            .map_or(false, |v| v < F::zero());
        for i in 0..d {
            let v = q.get(i, old_col);
            vectors.set(i, new_col, if flip { -v } else { v });
        }
    }
    Ok(EigenPair { values, vectors })
}

/// Principal square root of a PSD matrix. Eigenvalues above
/// `-1e-10 * ||A||_F` are clipped to zero; anything lower is an error.
pub fn psd_sqrt<F: Scalar>(a: &SymMatrix<F>) -> Result<SymMatrix<F>, MatError> {
    let e = sym_eigen(a)?;
    let cutoff = -lit::<F>(1e-10) * a.frobenius();
    if e.values.iter().any(|&v| v < cutoff) {
        return Err(MatError::NotPsd);
    }
    Ok(e.assemble(|lam| if lam > F::zero() { lam.sqrt() } else { F::zero() }))
}

/// Inverse square root of a symmetric matrix whose spectrum is bounded below
/// by `floor` (up to a 1e-12 relative slack).
pub fn psd_inv_sqrt<F: Scalar>(a: &SymMatrix<F>, floor: F) -> Result<SymMatrix<F>, MatError> {
    if !(floor > F::zero()) {
        return Err(MatError::BadArgs("floor must be positive"));
    }
    let e = sym_eigen(a)?;
    let cutoff = floor * (F::one() - lit::<F>(1e-12));
    if e.values.iter().any(|&v| v < cutoff) {
        return Err(MatError::BelowFloor);
    }
    Ok(e.assemble(|lam| F::one() / lam.sqrt()))
}

/// True iff the minimum eigenvalue of `a` is at least `c - 1e-12`; the
/// boundary counts as elliptic.
pub fn is_elliptic<F: Scalar>(a: &SymMatrix<F>, c: F) -> Result<bool, MatError> {
    if !(c > F::zero()) {
        return Err(MatError::BadArgs("ellipticity floor must be positive"));
    }
    let min = a.min_eigenvalue()?;
    Ok(min >= c - lit::<F>(1e-12))
}

/// Frobenius, trace, and operator norms of a general matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<F> {
    pub frobenius: F,
    pub trace_norm: F,
    pub op_norm: F,
}

/// Computes all three norms. Singular values come from the eigenvalues of
/// `A^T A` (or `A A^T`, whichever is smaller).
pub fn norms<F: Scalar>(a: &Mat<F>) -> Result<Norms<F>, MatError> {
    if a.data.iter().any(|x| !x.is_finite()) {
        return Err(MatError::NonFinite);
    }
    let gram = if a.cols <= a.rows {
        a.transpose().matmul(a)?
    } else {
        a.matmul(&a.transpose())?
    };
    let d = gram.rows;
    let sym = SymMatrix::new(d, gram.data)?;
    let e = sym_eigen(&sym)?;
    // Eigenvalues of the Gram matrix at the numerical-noise level would
    // otherwise turn into ~sqrt(eps) spurious singular values.
    let cut = lit::<F>(1e-13) * sym.frobenius();
    let mut trace_norm = F::zero();
    let mut op_norm = F::zero();
    for &lam in &e.values {
        let s = if lam > cut { lam.sqrt() } else { F::zero() };
        trace_norm = trace_norm + s;
        op_norm = op_norm.max(s);
    }
    Ok(Norms {
        frobenius: a.frobenius(),
        trace_norm,
        op_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    type M = SymMatrix<f64>;

    fn mat2(a: f64, b: f64, c: f64, d: f64) -> M {
        SymMatrix::new(2, vec![a, b, c, d]).unwrap()
    }

    #[test]
    fn eigen_identity() {
        let e = sym_eigen(&M::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert_eq!(e.vectors, Mat::identity(2));
    }

    #[test]
    fn eigen_diagonal() {
        let e = sym_eigen(&M::from_diag(&[4.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![4.0, 1.0]);
        assert_eq!(e.vectors, Mat::identity(2));
    }

    #[test]
    fn eigen_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1 with eigenvectors
        // (1,1)/sqrt(2) and (1,-1)/sqrt(2).
        let e = sym_eigen(&mat2(2.0, 1.0, 1.0, 2.0)).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let s = 1.0 / 2f64.sqrt();
        assert!((e.vectors.get(0, 0) - s).abs() < 1e-12);
        assert!((e.vectors.get(1, 0) - s).abs() < 1e-12);
        assert!((e.vectors.get(0, 1) - s).abs() < 1e-12);
        assert!((e.vectors.get(1, 1) + s).abs() < 1e-12);
    }

    #[test]
    fn eigen_rejects_nonfinite() {
        let m = M {
            dim: 2,
            data: vec![1.0, f64::NAN, f64::NAN, 1.0],
        };
        assert_eq!(sym_eigen(&m).unwrap_err(), MatError::NonFinite);
    }

    #[test]
    fn sqrt_examples() {
        let r = psd_sqrt(&M::identity(2)).unwrap();
        assert!(r.as_mat().sub(&Mat::identity(2)).unwrap().frobenius() < 1e-12);

        let r = psd_sqrt(&M::from_diag(&[4.0, 9.0])).unwrap();
        assert!((r.get(0, 0) - 2.0).abs() < 1e-12 && (r.get(1, 1) - 3.0).abs() < 1e-12);

        // Hand-solved: Q diag(sqrt(3), 1) Q^T.
        let r = psd_sqrt(&mat2(2.0, 1.0, 1.0, 2.0)).unwrap();
        let s3 = 3f64.sqrt();
        assert!((r.get(0, 0) - (s3 + 1.0) / 2.0).abs() < 1e-12);
        assert!((r.get(0, 1) - (s3 - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m = M::from_diag(&[1.0, -0.5]);
        assert_eq!(psd_sqrt(&m).unwrap_err(), MatError::NotPsd);
    }

    #[test]
    fn inv_sqrt_examples() {
        let r = psd_inv_sqrt(&M::identity(2), 0.5).unwrap();
        assert!(r.as_mat().sub(&Mat::identity(2)).unwrap().frobenius() < 1e-12);

        let r = psd_inv_sqrt(&M::from_diag(&[4.0, 9.0]), 1.0).unwrap();
        assert!((r.get(0, 0) - 0.5).abs() < 1e-12 && (r.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);

        let a = mat2(2.0, 1.0, 1.0, 2.0);
        let r = psd_inv_sqrt(&a, 0.5).unwrap();
        let rar = r
            .as_mat()
            .matmul(&a.as_mat())
            .unwrap()
            .matmul(&r.as_mat())
            .unwrap();
        assert!(rar.sub(&Mat::identity(2)).unwrap().frobenius() < 1e-10);
    }

    #[test]
    fn inv_sqrt_below_floor() {
        let m = M::from_diag(&[0.4, 2.0]);
        assert_eq!(psd_inv_sqrt(&m, 0.5).unwrap_err(), MatError::BelowFloor);
    }

    #[test]
    fn ellipticity() {
        assert!(is_elliptic(&M::identity(2), 1.0).unwrap());
        assert!(!is_elliptic(&M::from_diag(&[0.5, 2.0]), 1.0).unwrap());
        assert!(is_elliptic(&M::from_diag(&[0.5, 2.0]), 0.4).unwrap());
    }

    #[test]
    fn norm_examples() {
        let n = norms(&Mat::<f64>::identity(3)).unwrap();
        assert!((n.frobenius - 3f64.sqrt()).abs() < 1e-12);
        assert!((n.trace_norm - 3.0).abs() < 1e-12);
        assert!((n.op_norm - 1.0).abs() < 1e-12);

        // Rank one: x y^T with x = (1, 0), y = (3, 4).
        let m = Mat::from_rows(2, 2, vec![3.0, 4.0, 0.0, 0.0]).unwrap();
        let n = norms(&m).unwrap();
        assert!((n.trace_norm - 5.0).abs() < 1e-10);

        let n = norms(&SymMatrix::from_diag(&[2.0, -3.0]).as_mat()).unwrap();
        assert!((n.trace_norm - 5.0).abs() < 1e-12);
        assert!((n.op_norm - 3.0).abs() < 1e-12);
        assert!((n.frobenius - 13f64.sqrt()).abs() < 1e-12);
    }

    fn random_psd(dim: usize, seed: u64) -> M {
        // B^T B for a random square B.
        let mut b = Mat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                b.set(i, j, rng::std_normal(seed, 90, i as i64, j as u64));
            }
        }
        let g = b.transpose().matmul(&b).unwrap();
        SymMatrix::new(dim, g.data().to_vec()).unwrap()
    }

    #[test]
    fn sqrt_reconstruction_many_dims() {
        for k in 0..500u64 {
            let dim = 1 + (rng::raw_u64(77, 0, k as i64, 0) % 20) as usize;
            let a = random_psd(dim, 1000 + k);
            let r = psd_sqrt(&a).unwrap();
            let rr = r.as_mat().matmul(&r.as_mat()).unwrap();
            let err = rr.sub(&a.as_mat()).unwrap().frobenius();
            assert!(
                err <= 1e-9 * (1.0 + a.frobenius()),
                "dim {dim} rep {k}: err {err}"
            );
        }
    }

    #[test]
    fn inv_sqrt_whitening_many_dims() {
        for k in 0..200u64 {
            let dim = 1 + (rng::raw_u64(78, 0, k as i64, 0) % 20) as usize;
            let shifted = random_psd(dim, 2000 + k)
                .add(&M::scaled_identity(dim, 0.5))
                .unwrap();
            let r = psd_inv_sqrt(&shifted, 0.5).unwrap();
            let rar = r
                .as_mat()
                .matmul(&shifted.as_mat())
                .unwrap()
                .matmul(&r.as_mat())
                .unwrap();
            let err = rar.sub(&Mat::identity(dim)).unwrap().frobenius();
            assert!(err <= 1e-8, "dim {dim} rep {k}: err {err}");
        }
    }

    #[test]
    fn rank_one_trace_norm_identity() {
        for k in 0..100i64 {
            let dim = 1 + (rng::raw_u64(79, 0, k, 0) % 6) as usize;
            let x: Vec<f64> = (0..dim).map(|i| rng::std_normal(5, 1, k, i as u64)).collect();
            let y: Vec<f64> = (0..dim).map(|i| rng::std_normal(5, 2, k, i as u64)).collect();
            let mut m = Mat::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    m.set(i, j, x[i] * y[j]);
                }
            }
            let expected = x.iter().map(|v| v * v).sum::<f64>().sqrt()
                * y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let got = norms(&m).unwrap().trace_norm;
            assert!(
                (got - expected).abs() <= 1e-12 * expected.max(1.0),
                "rep {k}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn norms_absolutely_homogeneous() {
        let a = random_psd(5, 42).as_mat();
        let n1 = norms(&a).unwrap();
        let n2 = norms(&a.scaled(-2.5)).unwrap();
        assert!((n2.frobenius - 2.5 * n1.frobenius).abs() < 1e-12 * n1.frobenius);
        assert!((n2.trace_norm - 2.5 * n1.trace_norm).abs() < 1e-11 * n1.trace_norm);
        assert!((n2.op_norm - 2.5 * n1.op_norm).abs() < 1e-12 * n1.op_norm);
    }

    #[test]
    fn generic_f32_round_trip() {
        let a = SymMatrix::<f32>::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let r = psd_sqrt(&a).unwrap();
        let rr = r.as_mat().matmul(&r.as_mat()).unwrap();
        assert!(rr.sub(&a.as_mat()).unwrap().frobenius() < 1e-5);
    }

    #[test]
    fn orthogonality_and_reconstruction() {
        for k in 0..50u64 {
            let dim = 1 + (rng::raw_u64(80, 0, k as i64, 0) % 12) as usize;
            let a = random_psd(dim, 3000 + k);
            let e = sym_eigen(&a).unwrap();
            let qtq = e.vectors.transpose().matmul(&e.vectors).unwrap();
            assert!(qtq.sub(&Mat::identity(dim)).unwrap().frobenius() < 1e-10);
            let rec = e.assemble(|l| l);
            let err = rec.as_mat().sub(&a.as_mat()).unwrap().frobenius();
            assert!(err < 1e-10 * (1.0 + a.frobenius()));
        }
    }
}
