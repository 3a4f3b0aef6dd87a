//! Minimal ranks `r_n(m₁, m₂, k)` and the weighted deficits
//! `S_n(m₁, m₂) = min_{1≤k<m₂} (m₂ · r_n(m₁, m₂, k) − m₁ · k)`.
//!
//! The sign of `S_n` decides the fate of the MLE for generic data: positive
//! means unique existence, zero non-unique existence, negative no MLE.
//! Exact values are available for two samples (`n = 2`) with
//! `2m₂ ≥ m₁ ≥ m₂` and for `m₂ = 2`; elsewhere only numerical upper bounds
//! on `r_n` are produced.

use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{KronError, Result};
use crate::linalg::{numerical_rank, rank_threshold};
use crate::model::DataSample;
use crate::pencil::{self, EigenCase, StructureIndices};
use crate::scalar::Real;

/// Tolerance for rank reads on exact 0-1 witnesses.
const WITNESS_RANK_REL: f64 = 1e-8;
/// Tolerance for rank reads on optimized, nearly singular matrices.
const SEARCH_RANK_REL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinRankCert {
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub r: usize,
    pub a1: usize,
    pub b1: usize,
    /// `a₁ ≥ a₂ ≥ … ≥ a_{l+1}`.
    pub a: Vec<usize>,
    /// `b₁ ≥ b₂ ≥ … ≥ b_l`.
    pub b: Vec<usize>,
    /// The `k × m₂` 0-1 witness, row-major.
    pub witness: Vec<Vec<u8>>,
    /// Numerical rank of `(Y₁X, Y₂X)` for the canonical pair and `X = witnessᵀ`.
    pub verified_rank: usize,
}

impl MinRankCert {
    pub fn witness_matrix<T: Real>(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.k, self.m2, |i, j| T::lit(self.witness[i][j] as f64))
    }
}

/// `(a₁, b₁)` minimizing `a₁ + b₁` subject to `k ≤ a₁(l+1) + b₁ l`,
/// `a₁ ≤ n_a`, `b₁ ≤ n_b`; ties go to the smallest `a₁`, then `b₁`.
pub fn solve_rank_program(idx: StructureIndices, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for a1 in 0..=idx.n_a {
        for b1 in 0..=idx.n_b {
            if k <= a1 * (idx.l + 1) + b1 * idx.l && best.is_none_or(|(a, b)| a1 + b1 < a + b) {
                best = Some((a1, b1));
            }
        }
    }
    best
}

/// The structured 0-1 witness for given block occupations.
///
/// Columns split as `(X₁, X₂, …, X_{2l+1})` with odd blocks of width `n_a`
/// and even blocks of width `n_b`. The first `Σa` rows carry the odd blocks,
/// the remaining `Σb` rows the even ones.
pub fn witness(idx: StructureIndices, a: &[usize], b: &[usize]) -> Vec<Vec<u8>> {
    let d = idx.n_a + idx.n_b;
    let m2 = (idx.l + 1) * idx.n_a + idx.l * idx.n_b;
    let k_a: usize = a.iter().sum();
    let k: usize = k_a + b.iter().sum::<usize>();
    let mut x = vec![vec![0u8; m2]; k];
    let mut row = 0;
    for (i, &ai) in a.iter().enumerate() {
        for t in 0..ai {
            x[row + t][i * d + t] = 1;
        }
        row += ai;
    }
    for (i, &bi) in b.iter().enumerate() {
        for t in 0..bi {
            x[row + t][i * d + idx.n_a + t] = 1;
        }
        row += bi;
    }
    x
}

/// Fills `a₂, …` and `b₂, …` greedily (each capped by `a₁` resp. `b₁`) so
/// that all entries sum to `k`.
fn occupations(idx: StructureIndices, k: usize, a1: usize, b1: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rest = k - a1 - b1;
    let mut a = vec![a1];
    for _ in 1..=idx.l {
        let v = rest.min(a1);
        a.push(v);
        rest -= v;
    }
    let mut b = if idx.l > 0 { vec![b1] } else { Vec::new() };
    for _ in 1..idx.l {
        let v = rest.min(b1);
        b.push(v);
        rest -= v;
    }
    debug_assert_eq!(rest, 0);
    (a, b)
}

/// `r₂(m₁, m₂, k)` for `2m₂ > m₁ > m₂` and `1 ≤ k ≤ m₂`, with a witness
/// checked numerically on the canonical pair.
pub fn r2(m1: usize, m2: usize, k: usize) -> Result<MinRankCert> {
    pencil::structure_indices(m1, m2)?;
    r2_closed(m1, m2, k)
}

/// As [`r2`], also admitting `m₁ = 2m₂`.
pub fn r2_closed(m1: usize, m2: usize, k: usize) -> Result<MinRankCert> {
    let idx = pencil::structure_indices_closed(m1, m2)?;
    if k == 0 || k > m2 {
        return Err(KronError::InvalidArgument(format!(
            "need 1 <= k <= m2, got k={k}"
        )));
    }
    let (a1, b1) = solve_rank_program(idx, k).ok_or_else(|| {
        KronError::Internal(format!("rank program infeasible at ({m1},{m2},{k})"))
    })?;
    let (a, b) = occupations(idx, k, a1, b1);
    let witness = witness(idx, &a, &b);
    let mut cert = MinRankCert {
        m1,
        m2,
        k,
        r: a1 + b1 + k,
        a1,
        b1,
        a,
        b,
        witness,
        verified_rank: 0,
    };
    let (y1, y2) = pencil::canonical_pair::<f64>(m1, m2);
    let x = cert.witness_matrix::<f64>().transpose();
    cert.verified_rank = numerical_rank(&pair_image(&[y1, y2], &x), WITNESS_RANK_REL);
    if cert.verified_rank != cert.r {
        return Err(KronError::Internal(format!(
            "witness for ({m1},{m2},{k}) has rank {} instead of {}",
            cert.verified_rank, cert.r
        )));
    }
    Ok(cert)
}

/// `(Y₁X, …, YₙX)`.
fn pair_image<T: Real>(ys: &[DMatrix<T>], x: &DMatrix<T>) -> DMatrix<T> {
    let (m1, k) = (ys[0].nrows(), x.ncols());
    let mut out = DMatrix::zeros(m1, ys.len() * k);
    for (i, y) in ys.iter().enumerate() {
        out.columns_mut(i * k, k).copy_from(&(y * x));
    }
    out
}

/// `r₂(m, m, k)` for a square pair, given the eigenvalue case of `Y₁⁻¹Y₂`.
pub fn r2_square(m: usize, k: usize, eigen_case: EigenCase) -> Result<usize> {
    if m < 2 || k == 0 || k > m {
        return Err(KronError::InvalidArgument(format!(
            "need m >= 2 and 1 <= k <= m, got ({m},{k})"
        )));
    }
    Ok(if eigen_case == EigenCase::AllComplex && k % 2 == 1 {
        k + 1
    } else {
        k
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    UniqueMle,
    NonUniqueMle,
    NoMle,
}

impl Verdict {
    pub fn from_value(s: i64) -> Self {
        match s.cmp(&0) {
            std::cmp::Ordering::Greater => Verdict::UniqueMle,
            std::cmp::Ordering::Equal => Verdict::NonUniqueMle,
            std::cmp::Ordering::Less => Verdict::NoMle,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::UniqueMle => "unique",
            Verdict::NonUniqueMle => "non_unique",
            Verdict::NoMle => "no_mle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SValue {
    Exact(i64),
    ConditionalOnEigenvalues { real_case: i64, complex_case: i64 },
}

impl SValue {
    /// The value for a known eigenvalue case.
    pub fn resolve(self, case: EigenCase) -> i64 {
        match (self, case) {
            (SValue::Exact(v), _) => v,
            (SValue::ConditionalOnEigenvalues { real_case, .. }, EigenCase::HasRealEigenvalue) => {
                real_case
            }
            (SValue::ConditionalOnEigenvalues { complex_case, .. }, EigenCase::AllComplex) => {
                complex_case
            }
        }
    }
}

impl fmt::Display for SValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SValue::Exact(v) => write!(f, "{v}"),
            SValue::ConditionalOnEigenvalues {
                real_case,
                complex_case,
            } => write!(f, "{real_case}|{complex_case}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SValueReport {
    pub m1: usize,
    pub m2: usize,
    pub n: usize,
    pub value: SValue,
    /// Every `k` attaining the minimum (in all eigenvalue cases).
    pub minimizing_k: Vec<usize>,
    /// Verdict for the exact value, or for the real-eigenvalue case.
    pub verdict: Verdict,
    /// Verdict in the all-complex case, when the value is conditional.
    pub complex_verdict: Option<Verdict>,
}

impl SValueReport {
    fn exact(m1: usize, m2: usize, n: usize, v: i64, minimizing_k: Vec<usize>) -> Self {
        SValueReport {
            m1,
            m2,
            n,
            value: SValue::Exact(v),
            minimizing_k,
            verdict: Verdict::from_value(v),
            complex_verdict: None,
        }
    }

    fn conditional(
        m1: usize,
        m2: usize,
        n: usize,
        real: i64,
        complex: i64,
        minimizing_k: Vec<usize>,
    ) -> Self {
        SValueReport {
            m1,
            m2,
            n,
            value: SValue::ConditionalOnEigenvalues {
                real_case: real,
                complex_case: complex,
            },
            minimizing_k,
            verdict: Verdict::from_value(real),
            complex_verdict: Some(Verdict::from_value(complex)),
        }
    }

    /// Verdict for a known eigenvalue case.
    pub fn verdict_for(&self, case: EigenCase) -> Verdict {
        Verdict::from_value(self.value.resolve(case))
    }
}

/// Closed form of `S₂` for `2m₂ ≥ m₁ > m₂`.
pub fn s2_closed_form(m1: usize, m2: usize) -> Result<i64> {
    let idx = pencil::structure_indices_closed(m1, m2)?;
    Ok(if m1 == m2 + 1 {
        1
    } else if m2.is_multiple_of(m1 - m2) {
        0
    } else {
        -((idx.n_a * idx.n_b) as i64)
    })
}

/// `S₂(m₁, m₂)` for `2m₂ ≥ m₁ ≥ m₂ ≥ 2`.
///
/// Rectangular cells come from the rank program and are checked against
/// the closed form. Square cells depend on the eigenvalues of `Y₁⁻¹Y₂` only
/// for `m = 2`.
pub fn s2(m1: usize, m2: usize) -> Result<SValueReport> {
    if m2 < 2 || m1 < m2 || m1 > 2 * m2 {
        return Err(KronError::OutOfRegime(format!(
            "need 2*m2 >= m1 >= m2 >= 2, got ({m1},{m2})"
        )));
    }
    if m1 == m2 {
        let m = m1 as i64;
        let deficit = |case| -> Result<Vec<i64>> {
            (1..m2)
                .map(|k| Ok(m * r2_square(m2, k, case)? as i64 - m * k as i64))
                .collect()
        };
        let real = deficit(EigenCase::HasRealEigenvalue)?;
        let complex = deficit(EigenCase::AllComplex)?;
        let (real_min, complex_min) = (*real.iter().min().unwrap(), *complex.iter().min().unwrap());
        let ks: Vec<usize> = (1..m2)
            .filter(|&k| real[k - 1] == real_min && complex[k - 1] == complex_min)
            .collect();
        return Ok(if real_min == complex_min {
            SValueReport::exact(m1, m2, 2, real_min, ks)
        } else {
            SValueReport::conditional(m1, m2, 2, real_min, complex_min, ks)
        });
    }
    let mut values = Vec::with_capacity(m2 - 1);
    for k in 1..m2 {
        let cert = r2_closed(m1, m2, k)?;
        values.push((m2 * cert.r) as i64 - (m1 * k) as i64);
    }
    let min = *values.iter().min().unwrap();
    let closed = s2_closed_form(m1, m2)?;
    if min != closed {
        return Err(KronError::Internal(format!(
            "rank program gives S2({m1},{m2}) = {min}, closed form gives {closed}"
        )));
    }
    let ks = (1..m2).filter(|&k| values[k - 1] == min).collect();
    Ok(SValueReport::exact(m1, m2, 2, min, ks))
}

/// `S_n(m₁, 2)` for `2 ≤ m₁ < 2n`. When `m₁ = n` the value depends on
/// whether `W` (see [`eigen_case_m2_equals_2`]) has a real eigenvalue; if
/// `eigen_case` is `None` there, both cases are reported.
pub fn sn_m2_equals_2(m1: usize, n: usize, eigen_case: Option<EigenCase>) -> Result<SValueReport> {
    if m1 < 2 || m1 >= 2 * n {
        return Err(KronError::OutOfRegime(format!(
            "need 2 <= m1 < 2n, got m1={m1}, n={n}"
        )));
    }
    let (mi, ni) = (m1 as i64, n as i64);
    Ok(match m1.cmp(&n) {
        std::cmp::Ordering::Greater => SValueReport::exact(m1, 2, n, 2 * ni - mi, vec![1]),
        std::cmp::Ordering::Less => SValueReport::exact(m1, 2, n, mi, vec![1]),
        std::cmp::Ordering::Equal => match eigen_case {
            Some(EigenCase::HasRealEigenvalue) => SValueReport::exact(m1, 2, n, mi - 2, vec![1]),
            Some(EigenCase::AllComplex) => SValueReport::exact(m1, 2, n, mi, vec![1]),
            None => SValueReport::conditional(m1, 2, n, mi - 2, mi, vec![1]),
        },
    })
}

/// Eigenvalue case of `W = Y₍₁₎⁻¹ Y₍₂₎` for an `m × 2` sample of size `n = m`,
/// where `Y₍ⱼ₎` collects the `j`-th columns of all observations.
pub fn eigen_case_m2_equals_2<T: Real>(sample: &DataSample<T>) -> Result<EigenCase> {
    if sample.m2() != 2 || sample.m1() != sample.n() {
        return Err(KronError::OutOfRegime("need m2 = 2 and m1 = n".into()));
    }
    let col =
        |j: usize| DMatrix::from_fn(sample.m1(), sample.n(), |r, i| sample.matrices()[i][(r, j)]);
    Ok(pencil::pencil_eigenvalues(&col(0), &col(1))?.case())
}

/// One row of the `S₂` table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct S2Cell {
    pub m1: usize,
    pub m2: usize,
    /// `None` for `m₁ > 2m₂`, where the MLE never exists for two samples.
    pub value: Option<SValue>,
    pub verdict: String,
}

/// Cells `2 ≤ m₂ ≤ min(m₁, max_m1 − 1)`, `2 ≤ m₁ ≤ max_m1`.
pub fn table2(max_m1: usize) -> Result<Vec<S2Cell>> {
    let mut out = Vec::new();
    for m1 in 2..=max_m1 {
        for m2 in 2..=m1.min(max_m1.saturating_sub(1).max(2)) {
            if m1 > 2 * m2 {
                out.push(S2Cell {
                    m1,
                    m2,
                    value: None,
                    verdict: Verdict::NoMle.label().into(),
                });
                continue;
            }
            let rep = s2(m1, m2)?;
            let verdict = match rep.complex_verdict {
                Some(c) if c != rep.verdict => format!("{}|{}", rep.verdict.label(), c.label()),
                _ => rep.verdict.label().to_string(),
            };
            out.push(S2Cell {
                m1,
                m2,
                value: Some(rep.value),
                verdict,
            });
        }
    }
    Ok(out)
}

/// The `S₂` table as CSV with header `m1,m2,s2,verdict`; cells with
/// `m₁ > 2m₂` have an empty value.
pub fn table2_csv(max_m1: usize) -> Result<String> {
    let mut out = String::from("m1,m2,s2,verdict\n");
    for c in table2(max_m1)? {
        let v = c.value.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", c.m1, c.m2, v, c.verdict));
    }
    Ok(out)
}

/// Upper bound on `r_n(m₁, m₂, k)` for the given data.
///
/// For two samples in the canonical regime every structured witness is
/// mapped back through the canonical transform and its rank read off.
/// Independently, each restart runs an alternating subspace iteration: `U`
/// spans the top-`r` left singular vectors of `(Y₁X, …, YₙX)` and `X` the
/// bottom-`k` eigenvectors of `Σᵢ Yᵢᵀ(I − UUᵀ)Yᵢ`, stopping once progress
/// stalls. Target ranks `r` are tried in increasing order, restart `i` is
/// seeded with `seed + i`.
pub fn numeric_min_rank_search<T: Real>(
    sample: &DataSample<T>,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<usize> {
    let (m1, m2, n) = (sample.m1(), sample.m2(), sample.n());
    if k == 0 || k > m2 {
        return Err(KronError::InvalidArgument(format!(
            "need 1 <= k <= m2, got k={k}"
        )));
    }
    if restarts == 0 {
        return Err(KronError::InvalidArgument(
            "restarts must be at least 1".into(),
        ));
    }
    let ys = sample.matrices();
    let rank_of = |x: &DMatrix<T>| numerical_rank(&pair_image(ys, x), SEARCH_RANK_REL);
    let mut best = m1.min(n * k);
    if let Some(r) = structured_bound(sample, k) {
        best = best.min(r);
    }
    for target in k..best {
        for i in 0..restarts {
            let x = alternating_search(ys, k, target, seed.wrapping_add(i as u64));
            if rank_of(&x) <= target {
                return Ok(target);
            }
        }
    }
    Ok(best)
}

fn structured_bound<T: Real>(sample: &DataSample<T>, k: usize) -> Option<usize> {
    let (m1, m2) = (sample.m1(), sample.m2());
    if sample.n() != 2 || !(2 * m2 >= m1 && m1 > m2) {
        return None;
    }
    let ys = sample.matrices();
    let canon =
        pencil::canonicalize_pair(&ys[0], &ys[1], T::lit(pencil::DEFAULT_CANONICAL_TOL)).ok()?;
    let idx = canon.indices;
    let mut best: Option<usize> = None;
    for a1 in 0..=idx.n_a {
        for b1 in 0..=idx.n_b {
            if a1 + b1 > k || k > a1 * (idx.l + 1) + b1 * idx.l {
                continue;
            }
            let (a, b) = occupations(idx, k, a1, b1);
            let w = witness(idx, &a, &b);
            let x = &canon.b * DMatrix::from_fn(m2, k, |i, j| T::lit(w[j][i] as f64));
            let r = numerical_rank(&pair_image(ys, &x), SEARCH_RANK_REL);
            best = Some(best.map_or(r, |b| b.min(r)));
        }
    }
    best
}

const SEARCH_ITERATIONS: usize = 5000;
/// Progress check: abandon a restart when `σ_{r+1}/σ₁` shrank by less than
/// `STALL_FACTOR` over the last `STALL_WINDOW` iterations.
const STALL_WINDOW: usize = 50;
const STALL_FACTOR: f64 = 0.99;

fn alternating_search<T: Real>(
    ys: &[DMatrix<T>],
    k: usize,
    target: usize,
    seed: u64,
) -> DMatrix<T> {
    let (m1, m2) = ys[0].shape();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let start = DMatrix::from_fn(m2, k, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        T::lit(z)
    });
    let mut x = start.qr().q();
    let id = DMatrix::<T>::identity(m1, m1);
    let mut history: Vec<T> = Vec::new();
    for it in 0..SEARCH_ITERATIONS {
        let img = pair_image(ys, &x);
        let (sv, u_all) = crate::linalg::left_svd(&img);
        if sv.len() <= target
            || sv[target] <= rank_threshold(&sv, img.nrows(), img.ncols(), SEARCH_RANK_REL)
        {
            break;
        }
        history.push(sv[target] / sv[0]);
        if it >= STALL_WINDOW && history[it] > history[it - STALL_WINDOW] * T::lit(STALL_FACTOR) {
            break;
        }
        let u = u_all.columns(0, target).into_owned();
        let proj = &id - &u * u.transpose();
        let mut s = DMatrix::zeros(m2, m2);
        for y in ys {
            s += y.transpose() * &proj * y;
        }
        let eig = crate::linalg::symmetrize(&s).symmetric_eigen();
        let mut asc: Vec<usize> = (0..m2).collect();
        asc.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        x = DMatrix::from_fn(m2, k, |r, c| eig.eigenvectors[(r, asc[c])]);
    }
    x
}
