//! Dense linear algebra used across the crate.
//!
//! [`DenseMatrix`] is a plain row-major container. Factorizations delegate to
//! `faer`; the contracts enforced here (pivot reporting, ordering of
//! singular values, B-orthonormal eigenvectors) are what the other modules
//! rely on.

pub mod sparse;

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, MulAssign, Neg, Sub, SubAssign};

use faer::linalg::solvers::Solve;
use faer::traits::ComplexField;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Element types supported by [`DenseMatrix`]: `f64` and `Complex64`.
pub trait Scalar:
    ComplexField<Real = f64>
    + Copy
    + Send
    + Sync
    + Debug
    + Default
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Mul<f64, Output = Self>
{
    fn from_re(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conj_val(self) -> Self;
    fn finite(self) -> bool;
    fn to_c64(self) -> C64;
}

impl Scalar for f64 {
    fn from_re(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj_val(self) -> Self {
        self
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    fn from_re(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj_val(self) -> Self {
        self.conj()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_c64(self) -> C64 {
        self
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::from_re(1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Zero-copy `faer` view.
    pub fn as_faer(&self) -> MatRef<'_, T> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    pub fn to_faer(&self) -> Mat<T> {
        self.as_faer().to_owned()
    }

    pub fn from_faer(m: MatRef<'_, T>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn to_complex(&self) -> DenseMatrix<C64> {
        self.map(|x| x.to_c64())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj_val())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
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

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let p = self.as_faer() * other.as_faer();
        Ok(Self::from_faer(p.as_ref()))
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut s = T::default();
                for (a, &b) in self.row(i).iter().zip(x) {
                    s += *a * b;
                }
                s
            })
            .collect())
    }

    pub fn norm_fro(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.modulus().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn norm_2(&self) -> Result<f64> {
        if self.data.is_empty() {
            return Ok(0.0);
        }
        Ok(singular_values(self)?[0])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.modulus()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.finite())
    }

    /// Copy of the block with top-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Partial-pivoting LU factorization that can be reused for several
/// right-hand sides.
pub struct Lu<T: Scalar> {
    inner: faer::linalg::solvers::PartialPivLu<T>,
    n: usize,
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of a non-square {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let inner = a.as_faer().partial_piv_lu();
        let u = inner.U();
        let scale = a.max_abs();
        let tol = f64::EPSILON * scale * n.max(1) as f64 * 1e-3;
        for i in 0..n {
            let p = u[(i, i)].modulus();
            if !p.is_finite() || p <= tol {
                return Err(Error::Singular { pivot: i });
            }
        }
        Ok(Self { inner, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "rhs of length {} for a system of size {}",
                b.len(),
                self.n
            )));
        }
        let rhs = MatRef::from_column_major_slice(b, self.n, 1);
        let x = self.inner.solve(rhs);
        Ok((0..self.n).map(|i| x[(i, 0)]).collect())
    }

    pub fn solve_matrix(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if b.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "rhs with {} rows for a system of size {}",
                b.rows(),
                self.n
            )));
        }
        let x = self.inner.solve(b.as_faer());
        Ok(DenseMatrix::from_faer(x.as_ref()))
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve<T: Scalar>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    Lu::new(a)?.solve(b)
}

/// Singular value decomposition `A = U diag(values) V^H`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// Descending.
    pub values: Vec<f64>,
    pub u: DenseMatrix<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    /// Right singular vector `j` as a column.
    pub fn right_vector(&self, j: usize) -> Vec<T> {
        self.v.column(j)
    }

    pub fn left_vector(&self, j: usize) -> Vec<T> {
        self.u.column(j)
    }
}

pub fn svd<T: Scalar>(a: &DenseMatrix<T>) -> Result<Svd<T>> {
    let s = a
        .as_faer()
        .svd()
        .map_err(|e| Error::NoConvergence(format!("svd: {e:?}")))?;
    let d = s.S().column_vector();
    Ok(Svd {
        values: (0..d.nrows()).map(|i| d[i].modulus()).collect(),
        u: DenseMatrix::from_faer(s.U()),
        v: DenseMatrix::from_faer(s.V()),
    })
}

/// Singular values only, descending.
pub fn singular_values<T: Scalar>(a: &DenseMatrix<T>) -> Result<Vec<f64>> {
    a.as_faer()
        .singular_values()
        .map_err(|e| Error::NoConvergence(format!("singular values: {e:?}")))
}

/// Eigenpairs of `A x = λ B x`, ascending, with `x^T B x = 1`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// One eigenvector per column.
    pub vectors: DenseMatrix<f64>,
}

impl EigenPairs {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(b: &DenseMatrix<f64>) -> Result<DenseMatrix<f64>> {
    let llt = b
        .as_faer()
        .llt(Side::Lower)
        .map_err(|e| Error::NotPositiveDefinite(format!("{e:?}")))?;
    Ok(DenseMatrix::from_faer(llt.L()))
}

/// The `count` smallest eigenpairs of the symmetric-definite pencil `(A, B)`.
pub fn sym_generalized_eig(
    a: &DenseMatrix<f64>,
    b: &DenseMatrix<f64>,
    count: usize,
) -> Result<EigenPairs> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || b.cols() != n {
        return Err(Error::DimensionMismatch(
            "pencil matrices must be square and equal size".into(),
        ));
    }
    if count > n {
        return Err(Error::InvalidArgument(format!(
            "{count} eigenpairs requested of a size-{n} pencil"
        )));
    }
    let l = b
        .as_faer()
        .llt(Side::Lower)
        .map_err(|e| Error::NotPositiveDefinite(format!("{e:?}")))?;
    let lf = l.L();
    // C = L^{-1} A L^{-T}
    let mut c = a.to_faer();
    lf.solve_lower_triangular_in_place(c.as_mut());
    let mut ct = c.transpose().to_owned();
    lf.solve_lower_triangular_in_place(ct.as_mut());
    let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (ct[(i, j)] + ct[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("symmetric eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    let mut y = evd.U().subcols(0, count).to_owned();
    lf.transpose().solve_upper_triangular_in_place(y.as_mut());
    Ok(EigenPairs {
        values: (0..count).map(|i| s[i]).collect(),
        vectors: DenseMatrix::from_faer(y.as_ref()),
    })
}

/// Singular values of `A` measured in the inner products given by the SPD
/// Gram matrices `gl` (rows) and `gr` (columns): those of `Ll^{-1} A Lr^{-H}`.
/// Also returns the right singular vectors mapped back to coefficient space,
/// normalized in the `gr` inner product.
pub fn gram_svd(
    a: &DenseMatrix<C64>,
    gl: &DenseMatrix<f64>,
    gr: &DenseMatrix<f64>,
) -> Result<Svd<C64>> {
    let (b, ll, lr) = gram_normalized(a, gl, gr)?;
    let s = b
        .svd()
        .map_err(|e| Error::NoConvergence(format!("svd: {e:?}")))?;
    let d = s.S().column_vector();
    let mut v = s.V().to_owned();
    lr.transpose().solve_upper_triangular_in_place(v.as_mut());
    let mut u = s.U().to_owned();
    ll.transpose().solve_upper_triangular_in_place(u.as_mut());
    Ok(Svd {
        values: (0..d.nrows()).map(|i| d[i].modulus()).collect(),
        u: DenseMatrix::from_faer(u.as_ref()),
        v: DenseMatrix::from_faer(v.as_ref()),
    })
}

/// Values-only version of [`gram_svd`], descending.
pub fn gram_singular_values(
    a: &DenseMatrix<C64>,
    gl: &DenseMatrix<f64>,
    gr: &DenseMatrix<f64>,
) -> Result<Vec<f64>> {
    let (b, _, _) = gram_normalized(a, gl, gr)?;
    b.singular_values()
        .map_err(|e| Error::NoConvergence(format!("singular values: {e:?}")))
}

/// `Ll^{-1} A Lr^{-T}` together with the two Cholesky factors.
fn gram_normalized(
    a: &DenseMatrix<C64>,
    gl: &DenseMatrix<f64>,
    gr: &DenseMatrix<f64>,
) -> Result<(Mat<C64>, Mat<C64>, Mat<C64>)> {
    if gl.rows() != a.rows() || gr.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix with Gram matrices of sizes {} and {}",
            a.rows(),
            a.cols(),
            gl.rows(),
            gr.rows()
        )));
    }
    let faer_l = |g: &DenseMatrix<f64>| -> Result<Mat<C64>> {
        let l = cholesky(g)?;
        Ok(Mat::<C64>::from_fn(l.rows(), l.cols(), |i, j| {
            C64::new(l[(i, j)], 0.0)
        }))
    };
    let ll = faer_l(gl)?;
    let lr = faer_l(gr)?;
    let mut m = a.to_faer();
    ll.solve_lower_triangular_in_place(m.as_mut());
    // m Lr^{-T}: solve Lr X^T = m^T
    let mut mt = m.transpose().to_owned();
    lr.solve_lower_triangular_in_place(mt.as_mut());
    Ok((mt.transpose().to_owned(), ll, lr))
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::default();
    for (&x, &y) in a.iter().zip(b) {
        s += x.conj_val() * y;
    }
    s
}

pub fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus().powi(2)).sum::<f64>().sqrt()
}
