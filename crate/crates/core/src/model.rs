//! Data samples, precision pairs, the log-likelihood and its profile in Ψ₂.
//!
//! The profile objective is
//!
//! ```text
//! g(Ψ) = m₂ · log det(Σᵢ Yᵢ Ψ Yᵢᵀ) − m₁ · log det Ψ
//! ```
//!
//! and minimizing it over Ψ₂ is equivalent to maximizing the likelihood.
//! Only differences of `g` carry meaning: it is invariant under `Ψ ↦ cΨ`.

use nalgebra::DMatrix;

use crate::error::{KronError, Result};
use crate::linalg::{condition_number, numerical_rank};
use crate::scalar::Real;
use crate::spd::SpdMatrix;

/// `n` observations, each an `m1 × m2` real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSample<T: Real> {
    m1: usize,
    m2: usize,
    matrices: Vec<DMatrix<T>>,
}

impl<T: Real> DataSample<T> {
    pub fn new(matrices: Vec<DMatrix<T>>) -> Result<Self> {
        let first = matrices.first().ok_or_else(|| {
            KronError::InvalidSample("sample must contain at least one matrix".into())
        })?;
        let (m1, m2) = first.shape();
        Self::with_dims(m1, m2, matrices)
    }

    pub fn with_dims(m1: usize, m2: usize, matrices: Vec<DMatrix<T>>) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(KronError::InvalidSample(
                "dimensions must be positive".into(),
            ));
        }
        if matrices.is_empty() {
            return Err(KronError::InvalidSample(
                "sample must contain at least one matrix".into(),
            ));
        }
        for (i, y) in matrices.iter().enumerate() {
            if y.shape() != (m1, m2) {
                return Err(KronError::InvalidSample(format!(
                    "matrix {i} is {}x{}, expected {m1}x{m2}",
                    y.nrows(),
                    y.ncols()
                )));
            }
            if y.iter().any(|x| !x.is_finite()) {
                return Err(KronError::InvalidSample(format!(
                    "matrix {i} has a non-finite entry"
                )));
            }
        }
        Ok(DataSample { m1, m2, matrices })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[DMatrix<T>] {
        &self.matrices
    }

    /// The sample of transposes; swaps the roles of the two factors.
    pub fn transposed(&self) -> Self {
        DataSample {
            m1: self.m2,
            m2: self.m1,
            matrices: self.matrices.iter().map(|y| y.transpose()).collect(),
        }
    }

    /// `Σᵢ Yᵢ Ψ Yᵢᵀ` (`m1 × m1`).
    pub fn row_sum(&self, psi2: &DMatrix<T>) -> DMatrix<T> {
        let mut s = DMatrix::zeros(self.m1, self.m1);
        for y in &self.matrices {
            s += y * psi2 * y.transpose();
        }
        s
    }

    /// `Σᵢ Yᵢᵀ Ψ Yᵢ` (`m2 × m2`).
    pub fn col_sum(&self, psi1: &DMatrix<T>) -> DMatrix<T> {
        let mut s = DMatrix::zeros(self.m2, self.m2);
        for y in &self.matrices {
            s += y.transpose() * psi1 * y;
        }
        s
    }

    /// The `m1 × (n·m2)` matrix `(Y₁, …, Yₙ)`.
    pub fn hstack(&self) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.m1, self.m2 * self.n());
        for (i, y) in self.matrices.iter().enumerate() {
            out.view_mut((0, i * self.m2), (self.m1, self.m2))
                .copy_from(y);
        }
        out
    }
}

/// Convention fixing the scale `c` in `(cΨ₁, c⁻¹Ψ₂)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Normalization {
    /// `tr Ψ₂ = 1`.
    #[default]
    TraceOne,
    /// `Ψ₂[0,0] = 1`.
    LeadingEntryOne,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionPair<T: Real> {
    pub psi1: SpdMatrix<T>,
    pub psi2: SpdMatrix<T>,
    pub normalization: Normalization,
}

impl<T: Real> PrecisionPair<T> {
    /// Builds the pair and rescales it to satisfy `normalization`.
    pub fn new(psi1: SpdMatrix<T>, psi2: SpdMatrix<T>, normalization: Normalization) -> Self {
        let c = match normalization {
            Normalization::TraceOne => psi2.trace(),
            Normalization::LeadingEntryOne => psi2.matrix()[(0, 0)],
            Normalization::None => T::one(),
        };
        PrecisionPair {
            psi1: psi1.scaled(c),
            psi2: psi2.scaled(T::one() / c),
            normalization,
        }
    }

    pub fn renormalized(&self, normalization: Normalization) -> Self {
        Self::new(self.psi1.clone(), self.psi2.clone(), normalization)
    }

    /// `Ψ₂ ⊗ Ψ₁`, the precision matrix of `vec(Y)`.
    pub fn kron(&self) -> DMatrix<T> {
        self.psi2.matrix().kronecker(self.psi1.matrix())
    }
}

/// Twice the log-likelihood without its additive constant:
/// `n m₂ log det Ψ₁ + n m₁ log det Ψ₂ − tr(Ψ₁ Σᵢ Yᵢ Ψ₂ Yᵢᵀ)`.
pub fn log_likelihood<T: Real>(sample: &DataSample<T>, pair: &PrecisionPair<T>) -> Result<T> {
    check_dim("psi1", pair.psi1.dim(), sample.m1())?;
    check_dim("psi2", pair.psi2.dim(), sample.m2())?;
    let n = T::lit(sample.n() as f64);
    let m1 = T::lit(sample.m1() as f64);
    let m2 = T::lit(sample.m2() as f64);
    let quad = (pair.psi1.matrix() * sample.row_sum(pair.psi2.matrix())).trace();
    Ok(n * m2 * pair.psi1.logdet() + n * m1 * pair.psi2.logdet() - quad)
}

/// The profile objective `g(Ψ)`.
pub fn profile_objective<T: Real>(sample: &DataSample<T>, psi: &SpdMatrix<T>) -> Result<T> {
    check_dim("psi", psi.dim(), sample.m2())?;
    let inner = spd_sum(sample.row_sum(psi.matrix()))?;
    let m1 = T::lit(sample.m1() as f64);
    let m2 = T::lit(sample.m2() as f64);
    Ok(m2 * inner.logdet() - m1 * psi.logdet())
}

/// `((1/(n m₂)) Σᵢ Yᵢ Ψ₂ Yᵢᵀ)⁻¹`, the maximizer of ℓ over Ψ₁ for fixed Ψ₂.
pub fn profile_psi1<T: Real>(sample: &DataSample<T>, psi2: &SpdMatrix<T>) -> Result<SpdMatrix<T>> {
    check_dim("psi2", psi2.dim(), sample.m2())?;
    let scale = T::one() / T::lit((sample.n() * sample.m2()) as f64);
    Ok(spd_sum(sample.row_sum(psi2.matrix()) * scale)?.inverse())
}

/// Point at parameter `t` on the PD-cone geodesic through `q0` (t = 0) and
/// `q1` (t = 1). Any real `t` is accepted.
pub fn geodesic<T: Real>(q0: &SpdMatrix<T>, q1: &SpdMatrix<T>, t: T) -> Result<SpdMatrix<T>> {
    check_dim("q1", q1.dim(), q0.dim())?;
    let half = q0.sqrt();
    let inv_half = q0.pow(-T::lit(0.5));
    let inner = SpdMatrix::from_computed(
        inv_half.matrix() * q1.matrix() * inv_half.matrix(),
        "geodesic inner matrix lost definiteness",
    )?;
    let mid = inner.pow(t);
    SpdMatrix::from_computed(
        half.matrix() * mid.matrix() * half.matrix(),
        "geodesic point lost definiteness",
    )
}

const ILL_CONDITIONED: f64 = 1e12;

/// `Yᵢ ↦ A Yᵢ B`.
pub fn group_transform<T: Real>(
    sample: &DataSample<T>,
    a: &DMatrix<T>,
    b: &DMatrix<T>,
) -> Result<DataSample<T>> {
    check_invertible("A", a, sample.m1())?;
    check_invertible("B", b, sample.m2())?;
    let matrices = sample.matrices().iter().map(|y| a * y * b).collect();
    DataSample::with_dims(sample.m1(), sample.m2(), matrices)
}

/// `B Ψ Bᵀ`: the substitution relating `g` on `A Y B` data to `g` on `Y`.
pub fn transport_psi2<T: Real>(b: &DMatrix<T>, psi: &SpdMatrix<T>) -> Result<SpdMatrix<T>> {
    psi.congruence(b)
}

fn check_invertible<T: Real>(name: &str, m: &DMatrix<T>, dim: usize) -> Result<()> {
    if m.shape() != (dim, dim) {
        return Err(KronError::DimensionMismatch(format!(
            "{name} is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    if numerical_rank(m, 1e-14) < dim {
        return Err(KronError::SingularTransform(format!("{name} is singular")));
    }
    let cond = condition_number(m).as_f64();
    if cond > ILL_CONDITIONED {
        log::warn!("{name} is ill-conditioned (condition number {cond:e})");
    }
    Ok(())
}

fn check_dim(name: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(KronError::DimensionMismatch(format!(
            "{name} has dimension {got}, expected {want}"
        )))
    }
}

/// Wraps a positive semidefinite sum, rejecting numerically singular ones.
pub(crate) fn spd_sum<T: Real>(s: DMatrix<T>) -> Result<SpdMatrix<T>> {
    let dim = s.nrows();
    let max_diag = s
        .diagonal()
        .iter()
        .copied()
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let chol = crate::linalg::symmetrize(&s)
        .cholesky()
        .ok_or(KronError::DegenerateSample)?;
    let min_pivot = chol.l_dirty().diagonal().iter().copied().fold(
        T::max_value().unwrap_or_else(T::one),
        |a, b| if b < a { b } else { a },
    );
    if !(max_diag > T::zero())
        || min_pivot * min_pivot <= max_diag * T::default_epsilon() * T::lit(dim as f64)
    {
        return Err(KronError::DegenerateSample);
    }
    SpdMatrix::from_symmetrized(s).ok_or(KronError::DegenerateSample)
}
