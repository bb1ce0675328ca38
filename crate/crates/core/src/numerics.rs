//! Dense complex linear algebra used by every other module.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * Matrices are square and addressed as `(row, column)`. Text and JSON
//!   serialization list entries row by row.
//! * The Kronecker product maps the composite index `(i_a, i_b)` to
//!   `i_a * dim(b) + i_b`, so the left factor is the slow index.
//! * Row-major vectorization `vec(X)[i * d + j] = X[i, j]` is used for
//!   superoperators, so `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QchanError, Result};

pub type C64 = Complex64;

/// Largest composite dimension `tensor_product` will build by default.
pub const TENSOR_DIM_CAP: usize = 4096;

/// Relative Frobenius tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_REL_TOL: f64 = 1e-10;

/// Eigenvalues in `[-CLAMP_TOL, 0)` are roundoff and clamp to zero.
pub const CLAMP_TOL: f64 = 1e-10;

/// Tolerance policy, overridable per call site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Scale `s` in the Frobenius tolerance `s * dim * ‖A‖_F`.
    pub frobenius_scale: f64,
    pub hermitian_rel: f64,
    pub clamp: f64,
    pub tensor_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            frobenius_scale: 1e-12,
            hermitian_rel: HERMITIAN_REL_TOL,
            clamp: CLAMP_TOL,
            tensor_cap: TENSOR_DIM_CAP,
        }
    }
}

impl Tolerances {
    pub fn frobenius(&self, dim: usize, norm: f64) -> f64 {
        self.frobenius_scale * dim as f64 * norm
    }
}

/// A dense square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Wraps a nalgebra matrix, checking shape and finiteness.
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.nrows() != inner.ncols() {
            return Err(QchanError::Validation(format!(
                "matrix must be square with dim >= 1, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QchanError::Validation(
                "matrix has a non-finite entry".into(),
            ));
        }
        Ok(Self(inner))
    }

    /// Builds a `dim × dim` matrix from entries listed row by row.
    pub fn from_row_major(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(QchanError::Validation(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, &entries))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self(DMatrix::from_diagonal(&d))
    }

    /// `|e_i⟩⟨e_j|` in dimension `dim`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = C64::new(1.0, 0.0);
        Self(m)
    }

    /// `|v⟩⟨v|` for a (not necessarily normalized) vector.
    pub fn outer(v: &DVector<C64>) -> Self {
        Self(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// Entries row by row.
    pub fn row_major(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.conjugate())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * C64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F`; panics on dimension mismatch.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖A − A†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.0[(i, j)] - self.0[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_defect() <= rel_tol * self.frobenius_norm()
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self(&u.0 * &self.0 * u.0.adjoint())
    }

    pub fn commutator_norm(&self, other: &Self) -> f64 {
        (self * other).distance(&(other * self))
    }

    /// Maximum of `‖U†U − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        Self(self.0.adjoint() * &self.0).distance(&Self::identity(self.dim()))
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Which tensor factor `partial_trace` removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Kronecker product `a ⊗ b` under the default dimension cap.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_product_capped(a, b, TENSOR_DIM_CAP)
}

pub fn tensor_product_capped(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    cap: usize,
) -> Result<ComplexMatrix> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(QchanError::Capacity { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(QchanError::Capacity { dim, cap });
    }
    Ok(ComplexMatrix(a.0.kronecker(&b.0)))
}

/// Traces out one factor of `x` on `C^{dim_left} ⊗ C^{dim_right}`.
///
/// `Side::Left` removes the left factor and returns a `dim_right` matrix.
pub fn partial_trace(
    x: &ComplexMatrix,
    dim_left: usize,
    dim_right: usize,
    side: Side,
) -> Result<ComplexMatrix> {
    if dim_left == 0 || dim_right == 0 || dim_left * dim_right != x.dim() {
        return Err(QchanError::Usage(format!(
            "cannot factor dimension {} as {dim_left} x {dim_right}",
            x.dim()
        )));
    }
    let m = &x.0;
    Ok(match side {
        Side::Left => ComplexMatrix::from_fn(dim_right, |i, j| {
            (0..dim_left)
                .map(|a| m[(a * dim_right + i, a * dim_right + j)])
                .sum()
        }),
        Side::Right => ComplexMatrix::from_fn(dim_left, |i, j| {
            (0..dim_right)
                .map(|b| m[(i * dim_right + b, j * dim_right + b)])
                .sum()
        }),
    })
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> DVector<C64> {
        self.eigenvectors.0.column(i).into_owned()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("dim >= 1")
    }

    /// `V diag(g(λ)) V†`.
    pub fn map_spectrum(&self, g: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors.0;
        let d = DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&l| C64::new(g(l), 0.0)),
        );
        ComplexMatrix(v * DMatrix::from_diagonal(&d) * v.adjoint())
    }

    /// `V diag(values) V†`, one value per eigenvalue in ascending order.
    pub fn with_spectrum(&self, values: &[f64]) -> ComplexMatrix {
        assert_eq!(values.len(), self.dim(), "one value per eigenvalue");
        let v = &self.eigenvectors.0;
        let d = DVector::from_iterator(self.dim(), values.iter().map(|&x| C64::new(x, 0.0)));
        ComplexMatrix(v * DMatrix::from_diagonal(&d) * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| l)
    }

    pub fn reconstruction_residual(&self, a: &ComplexMatrix) -> f64 {
        self.reconstruct().distance(a)
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let v = &self.eigenvectors.0;
        ComplexMatrix(v.adjoint() * v).distance(&ComplexMatrix::identity(self.dim()))
    }
}

/// Hermitian eigendecomposition under the default tolerance policy.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    hermitian_eig_with(a, &Tolerances::default())
}

pub fn hermitian_eig_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    let defect = a.hermiticity_defect();
    let norm = a.frobenius_norm();
    if defect > tol.hermitian_rel * norm {
        return Err(QchanError::Validation(format!(
            "matrix is not Hermitian: ‖A − A†‖_F = {defect:e} exceeds {:e}",
            tol.hermitian_rel * norm
        )));
    }
    let sym = a.hermitian_part();
    let dim = sym.dim();
    let eig = sym
        .0
        .try_symmetric_eigen(f64::EPSILON, 1000 * dim.max(10))
        .ok_or_else(|| QchanError::Numerical("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(QchanError::Numerical("non-finite eigenvalue".into()));
    }
    let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors: ComplexMatrix(eigenvectors),
    })
}

/// `V diag(f(λ)) V†` for Hermitian `a`.
///
/// `f` sees raw eigenvalues; clamping (see [`clamp_eigenvalue`]) is the
/// caller's job. A non-finite `f(λ)` is a numerical error.
pub fn matrix_function_hermitian(
    a: &ComplexMatrix,
    f: impl Fn(f64) -> f64,
) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let values: Vec<f64> = eig.eigenvalues.iter().map(|&l| f(l)).collect();
    if let Some((l, v)) = eig
        .eigenvalues
        .iter()
        .zip(&values)
        .find(|(_, v)| !v.is_finite())
    {
        return Err(QchanError::Numerical(format!(
            "function undefined at eigenvalue {l:e} (gave {v})"
        )));
    }
    let v = &eig.eigenvectors.0;
    let d = DVector::from_iterator(eig.dim(), values.into_iter().map(|x| C64::new(x, 0.0)));
    Ok(ComplexMatrix(v * DMatrix::from_diagonal(&d) * v.adjoint()))
}

/// Clamps roundoff-level negative eigenvalues to zero.
pub fn clamp_eigenvalue(lambda: f64, tol: f64) -> Result<f64> {
    if lambda >= 0.0 {
        Ok(lambda)
    } else if lambda >= -tol {
        Ok(0.0)
    } else {
        Err(QchanError::NotPositive {
            eigenvalue: lambda,
            tolerance: tol,
        })
    }
}

/// `x ln x` with `0 ln 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Complex column vector from `(re, im)` pairs.
pub fn cvec(entries: &[(f64, f64)]) -> DVector<C64> {
    DVector::from_iterator(entries.len(), entries.iter().map(|&(r, i)| C64::new(r, i)))
}
