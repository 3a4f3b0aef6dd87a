use nalgebra::{DMatrix, DVector};

use crate::error::{KronError, Result};
use crate::linalg::symmetrize;
use crate::scalar::Real;

/// Symmetric positive-definite matrix.
///
/// Positive definiteness means "a Cholesky factorization exists"; symmetry
/// is enforced by averaging with the transpose after a relative check.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix<T: Real> {
    m: DMatrix<T>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl<T: Real> SpdMatrix<T> {
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(KronError::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(KronError::NotSpd("empty matrix".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(KronError::NotSpd("non-finite entry".into()));
        }
        let asym = (&m - m.transpose()).norm();
        let scale = m.norm();
        if asym > T::tol(SYMMETRY_TOL) * scale {
            return Err(KronError::NotSpd(format!(
                "asymmetry {:e} exceeds relative tolerance",
                (asym / scale).as_f64()
            )));
        }
        Self::from_symmetrized(symmetrize(&m))
            .ok_or_else(|| KronError::NotSpd("Cholesky factorization failed".into()))
    }

    /// For matrices computed internally, where symmetry holds up to rounding
    /// by construction: symmetrizes without the strict tolerance check.
    pub(crate) fn from_symmetrized(m: DMatrix<T>) -> Option<Self> {
        let m = symmetrize(&m);
        if m.iter().any(|x| !x.is_finite()) {
            return None;
        }
        m.clone().cholesky()?;
        Some(SpdMatrix { m })
    }

    pub(crate) fn from_computed(m: DMatrix<T>, what: &str) -> Result<Self> {
        Self::from_symmetrized(m).ok_or_else(|| KronError::NotSpd(what.to_string()))
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(d: &[T]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.m
    }

    pub fn trace(&self) -> T {
        self.m.trace()
    }

    /// `log det` as twice the sum of the log Cholesky pivots.
    pub fn logdet(&self) -> T {
        let l = self.m.clone().cholesky().expect("SPD invariant").unpack();
        l.diagonal().iter().fold(T::zero(), |acc, &d| acc + d.ln()) * T::lit(2.0)
    }

    pub fn inverse(&self) -> Self {
        let inv = self.m.clone().cholesky().expect("SPD invariant").inverse();
        SpdMatrix {
            m: symmetrize(&inv),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        assert!(c > T::zero(), "SPD scaling factor must be positive");
        SpdMatrix { m: &self.m * c }
    }

    /// `M^t` through the symmetric eigendecomposition, with eigenvalues
    /// clamped below at [`Real::eig_floor`].
    pub fn pow(&self, t: T) -> Self {
        let eig = self.m.clone().symmetric_eigen();
        let floor = T::eig_floor();
        let vals = eig
            .eigenvalues
            .map(|v| if v > floor { v } else { floor }.powf(t));
        let m = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
        SpdMatrix { m: symmetrize(&m) }
    }

    pub fn sqrt(&self) -> Self {
        self.pow(T::lit(0.5))
    }

    /// `B · M · Bᵀ`; fails when `B` is singular.
    pub fn congruence(&self, b: &DMatrix<T>) -> Result<Self> {
        if b.ncols() != self.dim() {
            return Err(KronError::DimensionMismatch(format!(
                "congruence by {}x{} on dimension {}",
                b.nrows(),
                b.ncols(),
                self.dim()
            )));
        }
        Self::from_computed(
            b * &self.m * b.transpose(),
            "congruence by a singular matrix",
        )
    }

    pub fn smallest_eigenvalue(&self) -> T {
        self.m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| {
                if b < a {
                    b
                } else {
                    a
                }
            })
    }

    /// Row-major nested copy, for reporting.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.m)
    }
}

pub fn matrix_rows<T: Real>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].as_f64()).collect())
        .collect()
}
