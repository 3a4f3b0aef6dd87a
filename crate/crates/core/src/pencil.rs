//! Canonical forms for pairs of matrices under `(Y₁, Y₂) ↦ (A Y₁ B, A Y₂ B)`.
//!
//! For tall pairs with `2 m₂ ≥ m₁ > m₂` a generic pair reduces to
//! `A Y₁ B = [I; 0]`, `A Y₂ B = [0; I]` (the zero block has `d = m₁ − m₂`
//! rows). For square pairs the reduction is to `(I, real Jordan form of W)`
//! with `W = Y₁⁻¹ Y₂`.
//!
//! The tall reduction works through chains: the target form means the
//! columns `b_j` of `B` satisfy `Y₁ b_{j+d} = Y₂ b_j`, so `B` splits into
//! `d` chains `(b_s, b_{s+d}, …)`. Chains of length `L` are the kernel of
//! the block matrix with rows `[… −Y₂ Y₁ …]`; for generic data there are
//! exactly `n_a` chains of length `l+1` and `n_b` of length `l`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{KronError, Result};
use crate::linalg::{column_basis, numerical_rank, right_svd};
use crate::scalar::Real;

/// `(l, n_a, n_b)`: `n_a` blocks of width `l+1` and `n_b` of width `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructureIndices {
    pub l: usize,
    pub n_a: usize,
    pub n_b: usize,
}

/// Structure indices for `2 m₂ > m₁ > m₂`.
pub fn structure_indices(m1: usize, m2: usize) -> Result<StructureIndices> {
    if !(2 * m2 > m1 && m1 > m2) {
        return Err(KronError::OutOfRegime(format!(
            "need 2*m2 > m1 > m2, got ({m1},{m2})"
        )));
    }
    Ok(indices_unchecked(m1, m2))
}

/// As [`structure_indices`], also admitting `m₁ = 2 m₂` (where `l = 0`).
pub fn structure_indices_closed(m1: usize, m2: usize) -> Result<StructureIndices> {
    if !(2 * m2 >= m1 && m1 > m2) {
        return Err(KronError::OutOfRegime(format!(
            "need 2*m2 >= m1 > m2, got ({m1},{m2})"
        )));
    }
    Ok(indices_unchecked(m1, m2))
}

fn indices_unchecked(m1: usize, m2: usize) -> StructureIndices {
    let d = m1 - m2;
    let l = m2.div_ceil(d) - 1;
    StructureIndices {
        l,
        n_a: (l + 1) * m2 - l * m1,
        n_b: (l + 1) * m1 - (l + 2) * m2,
    }
}

/// `([I_{m₂}; 0], [0; I_{m₂}])`, both `m1 × m2`, for `m1 ≥ m2`.
pub fn canonical_pair<T: Real>(m1: usize, m2: usize) -> (DMatrix<T>, DMatrix<T>) {
    assert!(m1 >= m2, "canonical pair needs m1 >= m2");
    let d = m1 - m2;
    let mut y1 = DMatrix::zeros(m1, m2);
    let mut y2 = DMatrix::zeros(m1, m2);
    for j in 0..m2 {
        y1[(j, j)] = T::one();
        y2[(j + d, j)] = T::one();
    }
    (y1, y2)
}

#[derive(Clone, Debug)]
pub struct PencilCanonicalization<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub indices: StructureIndices,
    /// `max(‖A Y₁ B − [I; 0]‖_F, ‖A Y₂ B − [0; I]‖_F)`.
    pub residual: T,
}

pub const DEFAULT_CANONICAL_TOL: f64 = 1e-8;
const KERNEL_REL: f64 = 1e-12;
const COMPLEMENT_REL: f64 = 1e-9;

/// Reduces a generic tall pair to `([I; 0], [0; I])`.
pub fn canonicalize_pair<T: Real>(
    y1: &DMatrix<T>,
    y2: &DMatrix<T>,
    tol: T,
) -> Result<PencilCanonicalization<T>> {
    let (m1, m2) = y1.shape();
    if y2.shape() != (m1, m2) {
        return Err(KronError::DimensionMismatch(
            "the two matrices differ in shape".into(),
        ));
    }
    let idx = structure_indices_closed(m1, m2)?;
    let d = m1 - m2;
    let mut stacked = DMatrix::zeros(m1, 2 * m2);
    stacked.columns_mut(0, m2).copy_from(y1);
    stacked.columns_mut(m2, m2).copy_from(y2);
    if numerical_rank(&stacked, KERNEL_REL) < m1 {
        return Err(KronError::NonGenericPencil(
            "the stacked pair is rank deficient".into(),
        ));
    }

    let long = chain_kernel(y1, y2, idx.l + 1, idx.n_a)?;
    let short = if idx.n_b > 0 {
        short_chains(y1, y2, &long, idx)?
    } else {
        DMatrix::zeros(0, 0)
    };

    let mut b = DMatrix::zeros(m2, m2);
    for s in 0..d {
        let (chain, len) = if s < idx.n_a {
            (long.column(s), idx.l + 1)
        } else {
            (short.column(s - idx.n_a), idx.l)
        };
        let norm = chain.norm();
        for k in 0..len {
            let v = chain.rows(k * m2, m2) / norm;
            b.set_column(s + k * d, &v);
        }
    }
    if numerical_rank(&b, KERNEL_REL) < m2 {
        return Err(KronError::NonGenericPencil(
            "chain vectors are linearly dependent".into(),
        ));
    }

    let y1b = y1 * &b;
    let y2b = y2 * &b;
    let mut a_inv = DMatrix::zeros(m1, m1);
    a_inv.columns_mut(0, m2).copy_from(&y1b);
    a_inv.columns_mut(m2, d).copy_from(&y2b.columns(m2 - d, d));
    let a = a_inv
        .try_inverse()
        .ok_or_else(|| KronError::NonGenericPencil("left transform is singular".into()))?;

    let (t1, t2) = canonical_pair::<T>(m1, m2);
    let r1 = (&a * &y1b - t1).norm();
    let r2 = (&a * &y2b - t2).norm();
    let residual = if r1 > r2 { r1 } else { r2 };
    if !(residual <= tol) {
        return Err(KronError::NonGenericPencil(format!(
            "residual {:e} exceeds tolerance {:e}",
            residual.as_f64(),
            tol.as_f64()
        )));
    }
    Ok(PencilCanonicalization {
        a,
        b,
        indices: idx,
        residual,
    })
}

/// Block matrix whose kernel is the set of chains `(v₀, …, v_{len−1})` with
/// `Y₁ v_{k+1} = Y₂ v_k`.
fn chain_matrix<T: Real>(y1: &DMatrix<T>, y2: &DMatrix<T>, len: usize) -> DMatrix<T> {
    let (m1, m2) = y1.shape();
    let mut k = DMatrix::zeros((len - 1) * m1, len * m2);
    for r in 0..len - 1 {
        k.view_mut((r * m1, r * m2), (m1, m2)).copy_from(&(-y2));
        k.view_mut((r * m1, (r + 1) * m2), (m1, m2)).copy_from(y1);
    }
    k
}

/// Kernel of the chain matrix, required to have exactly `expected` dimensions.
fn chain_kernel<T: Real>(
    y1: &DMatrix<T>,
    y2: &DMatrix<T>,
    len: usize,
    expected: usize,
) -> Result<DMatrix<T>> {
    let m2 = y1.ncols();
    if len == 1 {
        return if expected == m2 {
            Ok(DMatrix::identity(m2, m2))
        } else {
            Err(KronError::Internal(
                "unexpected chain count for length one".into(),
            ))
        };
    }
    let k = chain_matrix(y1, y2, len);
    let (sv, v) = right_svd(&k);
    let thr = crate::linalg::rank_threshold(&sv, k.nrows(), k.ncols(), KERNEL_REL);
    let rank = sv.iter().filter(|&&s| s > thr).count();
    let dim = k.ncols() - rank;
    if dim != expected {
        return Err(KronError::NonGenericPencil(format!(
            "found {dim} chains of length {len}, expected {expected}"
        )));
    }
    Ok(v.columns(rank, dim).into_owned())
}

/// Chains of length `l` that are not prefixes or suffixes of the long chains.
fn short_chains<T: Real>(
    y1: &DMatrix<T>,
    y2: &DMatrix<T>,
    long: &DMatrix<T>,
    idx: StructureIndices,
) -> Result<DMatrix<T>> {
    let m2 = y1.ncols();
    let l = idx.l;
    let all = chain_kernel(y1, y2, l, 2 * idx.n_a + idx.n_b)?;
    let mut spanned = DMatrix::zeros(l * m2, 2 * idx.n_a);
    for c in 0..idx.n_a {
        spanned.set_column(c, &long.column(c).rows(0, l * m2));
        spanned.set_column(idx.n_a + c, &long.column(c).rows(m2, l * m2));
    }
    let (q, _) = column_basis(&spanned, KERNEL_REL);
    if q.ncols() != 2 * idx.n_a {
        return Err(KronError::NonGenericPencil(
            "long chains have dependent truncations".into(),
        ));
    }
    let rest = &all - &q * (q.transpose() * &all);
    let (basis, _) = column_basis(&rest, COMPLEMENT_REL);
    if basis.ncols() != idx.n_b {
        return Err(KronError::NonGenericPencil(format!(
            "found {} short chains, expected {}",
            basis.ncols(),
            idx.n_b
        )));
    }
    Ok(basis)
}

/// Row and column orders that turn `([I; 0], [0; I])` into block-diagonal
/// form with `n_a` blocks `(U_{l+1}, L_{l+1})` followed by `n_b` blocks
/// `(U_l, L_l)`, where `U_k = [I_k; 0]` and `L_k = [0; I_k]` are `(k+1) × k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
    /// `(rows, cols)` of each diagonal block, in order.
    pub blocks: Vec<(usize, usize)>,
}

pub fn block_layout(m1: usize, m2: usize) -> Result<BlockLayout> {
    let idx = structure_indices_closed(m1, m2)?;
    let d = m1 - m2;
    let mut layout = BlockLayout {
        row_order: Vec::new(),
        col_order: Vec::new(),
        blocks: Vec::new(),
    };
    for s in 0..d {
        let len = if s < idx.n_a { idx.l + 1 } else { idx.l };
        layout.col_order.extend((0..len).map(|k| s + k * d));
        layout.row_order.extend((0..=len).map(|k| s + k * d));
        layout.blocks.push((len + 1, len));
    }
    Ok(layout)
}

/// Whether `W = Y₁⁻¹Y₂` has at least one real eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenCase {
    HasRealEigenvalue,
    AllComplex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JordanBlock<T> {
    Real(T),
    /// Eigenvalues `re ± i·im` with `im > 0`; block `[[re, im], [−im, re]]`.
    Complex {
        re: T,
        im: T,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenInfo<T> {
    pub blocks: Vec<JordanBlock<T>>,
    /// Smallest distance between two eigenvalues.
    pub separation: T,
}

impl<T: Real> EigenInfo<T> {
    pub fn real_count(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| matches!(b, JordanBlock::Real(_)))
            .count()
    }

    pub fn case(&self) -> EigenCase {
        if self.real_count() > 0 {
            EigenCase::HasRealEigenvalue
        } else {
            EigenCase::AllComplex
        }
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .map(|b| {
                if matches!(b, JordanBlock::Real(_)) {
                    1
                } else {
                    2
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct RealJordanPair<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub eigen: EigenInfo<T>,
}

const SEPARATION_REL: f64 = 1e-8;

/// Eigenvalues of `Y₁⁻¹Y₂` grouped into real values and conjugate pairs.
pub fn pencil_eigenvalues<T: Real>(y1: &DMatrix<T>, y2: &DMatrix<T>) -> Result<EigenInfo<T>> {
    let m = y1.nrows();
    if !y1.is_square() || y2.shape() != (m, m) || m == 0 {
        return Err(KronError::DimensionMismatch(
            "expected two square matrices of equal size".into(),
        ));
    }
    let y1_inv = y1
        .clone()
        .try_inverse()
        .ok_or_else(|| KronError::SingularTransform("Y1 is singular".into()))?;
    let w = y1_inv * y2;
    let eig: Vec<Complex<T>> = w.complex_eigenvalues().iter().copied().collect();
    let scale = eig
        .iter()
        .map(|&z| modulus(z))
        .fold(T::one(), |a, b| if b > a { b } else { a });
    let mut separation = T::max_value().unwrap_or_else(T::one);
    for i in 0..eig.len() {
        for j in i + 1..eig.len() {
            let s = modulus(eig[i] - eig[j]);
            if s < separation {
                separation = s;
            }
        }
    }
    if eig.len() > 1 && separation < T::tol(SEPARATION_REL) * scale {
        return Err(KronError::RepeatedEigenvalues {
            separation: separation.as_f64(),
        });
    }
    // Eigenvalues are well separated, so anything with a tiny imaginary part
    // is real up to rounding.
    let real_tol = T::tol(SEPARATION_REL) * scale;
    let mut reals: Vec<T> = eig
        .iter()
        .filter(|z| z.im.abs() <= real_tol)
        .map(|z| z.re)
        .collect();
    let mut pairs: Vec<(T, T)> = eig
        .iter()
        .filter(|z| z.im > real_tol)
        .map(|z| (z.re, z.im))
        .collect();
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut blocks: Vec<JordanBlock<T>> = reals.into_iter().map(JordanBlock::Real).collect();
    blocks.extend(
        pairs
            .into_iter()
            .map(|(re, im)| JordanBlock::Complex { re, im }),
    );
    Ok(EigenInfo { blocks, separation })
}

/// `(A, B)` with `A Y₁ B = I` and `A Y₂ B` in real Jordan form.
pub fn real_jordan_pair<T: Real>(y1: &DMatrix<T>, y2: &DMatrix<T>) -> Result<RealJordanPair<T>> {
    let eigen = pencil_eigenvalues(y1, y2)?;
    let m = y1.nrows();
    let y1_inv = y1.clone().try_inverse().expect("checked above");
    let w = &y1_inv * y2;
    let id = DMatrix::<T>::identity(m, m);
    let mut b = DMatrix::zeros(m, m);
    let mut col = 0;
    for block in &eigen.blocks {
        match *block {
            JordanBlock::Real(lambda) => {
                let v = smallest_right_vector(&(&w - &id * lambda));
                b.set_column(col, &(&v / v.norm()));
                col += 1;
            }
            JordanBlock::Complex { re, im } => {
                let shifted = &w - &id * re;
                let mut big = DMatrix::zeros(2 * m, 2 * m);
                big.view_mut((0, 0), (m, m)).copy_from(&shifted);
                big.view_mut((m, m), (m, m)).copy_from(&shifted);
                big.view_mut((0, m), (m, m)).copy_from(&(&id * im));
                big.view_mut((m, 0), (m, m)).copy_from(&(&id * -im));
                let v = smallest_right_vector(&big);
                let v = &v / v.norm();
                b.set_column(col, &v.rows(0, m));
                b.set_column(col + 1, &v.rows(m, m));
                col += 2;
            }
        }
    }
    let b_inv = b
        .clone()
        .try_inverse()
        .ok_or_else(|| KronError::Internal("eigenvector matrix is singular".into()))?;
    let a = b_inv * y1_inv;
    Ok(RealJordanPair { a, b, eigen })
}

fn modulus<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

fn smallest_right_vector<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    let (_, v) = right_svd(m);
    v.column(v.ncols() - 1).into_owned()
}

/// The real Jordan matrix described by `info`.
pub fn jordan_matrix<T: Real>(info: &EigenInfo<T>) -> DMatrix<T> {
    let m: usize = info.block_sizes().iter().sum();
    let mut j = DMatrix::zeros(m, m);
    let mut at = 0;
    for block in &info.blocks {
        match *block {
            JordanBlock::Real(v) => {
                j[(at, at)] = v;
                at += 1;
            }
            JordanBlock::Complex { re, im } => {
                j[(at, at)] = re;
                j[(at + 1, at + 1)] = re;
                j[(at, at + 1)] = im;
                j[(at + 1, at)] = -im;
                at += 2;
            }
        }
    }
    j
}
