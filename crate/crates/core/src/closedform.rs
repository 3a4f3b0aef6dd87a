//! Closed-form maximizers for two samples, in canonical coordinates.

use nalgebra::DMatrix;

use crate::error::{KronError, Result};
use crate::pencil::{self, block_layout};
use crate::scalar::Real;
use crate::spd::SpdMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoByTwoCase {
    /// Distinct real eigenvalues (or `W` a multiple of `I`): the maximum is
    /// attained, but not uniquely.
    RealDiagonalizable,
    /// A repeated eigenvalue with a single eigenvector: bounded, no maximizer.
    RealDefective,
    /// Complex eigenvalues: unique maximizer.
    Complex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoByTwoClassification<T: Real> {
    pub case: TwoByTwoCase,
    /// `W = Y₁⁻¹Y₂`.
    pub w: DMatrix<T>,
    /// The unique Ψ₂, with trace one, in the complex case.
    pub mle_psi2: Option<SpdMatrix<T>>,
    /// `2 log((1 + a²)²)` with `a` the double eigenvalue, in the defective
    /// case; this is the infimum of `g` for the pair `(I, [[a, 1], [0, a]])`.
    pub infimum_g: Option<T>,
}

const REPEATED_REL: f64 = 1e-12;

/// Classifies a pair of invertible `2 × 2` matrices by the eigenvalues of `W = Y₁⁻¹Y₂`.
pub fn classify_2x2<T: Real>(
    y1: &DMatrix<T>,
    y2: &DMatrix<T>,
) -> Result<TwoByTwoClassification<T>> {
    if y1.shape() != (2, 2) || y2.shape() != (2, 2) {
        return Err(KronError::DimensionMismatch(
            "expected two 2x2 matrices".into(),
        ));
    }
    if y2.determinant() == T::zero() {
        return Err(KronError::SingularTransform("Y2 is singular".into()));
    }
    let w = y1
        .clone()
        .try_inverse()
        .ok_or_else(|| KronError::SingularTransform("Y1 is singular".into()))?
        * y2;
    let (tr, det) = (w.trace(), w.determinant());
    let disc = tr * tr - T::lit(4.0) * det;
    let scale = tr * tr + T::lit(4.0) * det.abs();
    let repeated = disc.abs() <= T::tol(REPEATED_REL) * scale;
    let mut out = TwoByTwoClassification {
        case: TwoByTwoCase::RealDiagonalizable,
        w: w.clone(),
        mle_psi2: None,
        infimum_g: None,
    };
    if repeated {
        let a = tr / T::lit(2.0);
        let nilpotent = &w - DMatrix::identity(2, 2) * a;
        if nilpotent.norm() > T::tol(1e-8) * w.norm() {
            let base = T::one() + a * a;
            out.case = TwoByTwoCase::RealDefective;
            out.infimum_g = Some(T::lit(2.0) * (base * base).ln());
        }
    } else if disc < T::zero() {
        let half = (w[(1, 1)] - w[(0, 0)]) / T::lit(2.0);
        let mut m = DMatrix::from_row_slice(2, 2, &[w[(0, 1)], half, half, -w[(1, 0)]]);
        if m.trace() < T::zero() {
            m = -m;
        }
        let tr = m.trace();
        out.case = TwoByTwoCase::Complex;
        out.mle_psi2 = Some(SpdMatrix::from_computed(m / tr, "complex-case maximizer")?);
    }
    Ok(out)
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    if n > 30 {
        return ln_binomial(n, k).exp();
    }
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 0..k as u64 {
        c = c * (n as u64 - i) / (i + 1);
    }
    c as f64
}

/// `diag(C(m−1, j−1) : j = 1..m)`, the unique maximizer Ψ₂ (with leading
/// entry one) for the canonical pair of shape `(m+1) × m`.
pub fn mle_m2_plus_1<T: Real>(m: usize) -> Result<SpdMatrix<T>> {
    if m == 0 {
        return Err(KronError::InvalidArgument("m must be positive".into()));
    }
    let d: Vec<T> = (0..m).map(|j| T::lit(binomial(m - 1, j))).collect();
    SpdMatrix::from_diagonal(&d)
}

/// `m · ln d(m) − (m+1) · ln e(m)` with
/// `d(m) = (m/(m−1))^{m−1} / Π_{j=1}^{m−1} C(m−2, j−1)` and
/// `e(m) = 1 / Π_{j=1}^{m} C(m−1, j−1)`.
///
/// For the canonical `(m+1) × m` pair this equals `g` evaluated at the
/// inverse of [`mle_m2_plus_1`], which coincides with the minimum only for
/// `m = 2`; see [`g_min_m2_plus_1`] for the minimum itself.
pub fn g0_at_optimum(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(KronError::InvalidArgument("m must be at least 2".into()));
    }
    let mf = m as f64;
    let ln_d = (mf - 1.0) * (mf / (mf - 1.0)).ln()
        - (0..m - 1).map(|j| ln_binomial(m - 2, j)).sum::<f64>();
    let ln_e = -(0..m).map(|j| ln_binomial(m - 1, j)).sum::<f64>();
    Ok(mf * ln_d - (mf + 1.0) * ln_e)
}

/// Minimum of `g` for the canonical `(m+1) × m` pair:
/// `m Σ_{j=0}^{m} ln C(m, j) − (m+1) Σ_{j=0}^{m−1} ln C(m−1, j)`.
pub fn g_min_m2_plus_1(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(KronError::InvalidArgument("m must be positive".into()));
    }
    let mf = m as f64;
    let top: f64 = (0..=m).map(|j| ln_binomial(m, j)).sum();
    let inner: f64 = (0..m).map(|j| ln_binomial(m - 1, j)).sum();
    Ok(mf * top - (mf + 1.0) * inner)
}

/// A critical point of `g` for the canonical pair when the MLE exists
/// non-uniquely (`m₁ > m₂ + 1`, `(m₁ − m₂) | m₂`).
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint<T: Real> {
    /// Diagonal Φ in block coordinates, where the data are block diagonal
    /// with `n_a` blocks `([I_{l+1}; 0], [0; I_{l+1}])`.
    pub block: SpdMatrix<T>,
    /// The same point for the stacked pair `([I; 0], [0; I])`.
    pub stacked: SpdMatrix<T>,
    /// Stacked column of each block-coordinate column.
    pub col_order: Vec<usize>,
    /// Stacked row of each block-coordinate row.
    pub row_order: Vec<usize>,
}

/// Diagonal entries `c_j · C(l, k−1)` at position `(j−1)(l+1) + k`,
/// `j = 1..n_a`, `k = 1..l+1`; `c₁` must be one.
pub fn critical_points_nonunique<T: Real>(
    m1: usize,
    m2: usize,
    c: &[T],
) -> Result<CriticalPoint<T>> {
    if !(m1 > m2 + 1 && 2 * m2 >= m1 && m2.is_multiple_of(m1 - m2)) {
        return Err(KronError::OutOfRegime(format!(
            "need m1 > m2 + 1, 2*m2 >= m1 and (m1 - m2) | m2, got ({m1},{m2})"
        )));
    }
    let idx = pencil::structure_indices_closed(m1, m2)?;
    if c.len() != idx.n_a {
        return Err(KronError::InvalidArgument(format!(
            "expected {} scales, got {}",
            idx.n_a,
            c.len()
        )));
    }
    if c[0] != T::one() {
        return Err(KronError::InvalidArgument(
            "the first scale must be one".into(),
        ));
    }
    if c.iter().any(|&v| !(v > T::zero())) {
        return Err(KronError::InvalidArgument("scales must be positive".into()));
    }
    let mut diag = Vec::with_capacity(m2);
    for &cj in c {
        for k in 0..=idx.l {
            diag.push(cj * T::lit(binomial(idx.l, k)));
        }
    }
    let layout = block_layout(m1, m2)?;
    let mut stacked = vec![T::zero(); m2];
    for (p, &col) in layout.col_order.iter().enumerate() {
        stacked[col] = diag[p];
    }
    Ok(CriticalPoint {
        block: SpdMatrix::from_diagonal(&diag)?,
        stacked: SpdMatrix::from_diagonal(&stacked)?,
        col_order: layout.col_order,
        row_order: layout.row_order,
    })
}

/// The canonical pair in block coordinates: `Yⱼ = P_rowᵀ Tⱼ P_col` for the
/// stacked pair `Tⱼ`.
pub fn block_pair<T: Real>(m1: usize, m2: usize) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let layout = block_layout(m1, m2)?;
    let (t1, t2) = pencil::canonical_pair::<T>(m1, m2);
    let permute = |t: &DMatrix<T>| {
        DMatrix::from_fn(m1, m2, |r, c| t[(layout.row_order[r], layout.col_order[c])])
    };
    Ok((permute(&t1), permute(&t2)))
}

/// `B Φ Bᵀ`: a maximizer for data `Y` when Φ is one for `A Y B`.
pub fn to_original_coordinates<T: Real>(
    b: &DMatrix<T>,
    phi: &SpdMatrix<T>,
) -> Result<SpdMatrix<T>> {
    phi.congruence(b)
}
