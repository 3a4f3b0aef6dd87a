//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, Dyn, SVD};

use crate::scalar::Real;

struct Decomposition<T: Real> {
    u: Option<DMatrix<T>>,
    sv: Vec<T>,
    v_t: Option<DMatrix<T>>,
}

/// Unordered SVD of `Q·m` for a fixed dense orthogonal `Q`, which leaves
/// `Σ` and `V` unchanged. The bidiagonal iteration can stall or produce NaN
/// on exactly structured input such as 0-1 matrices; the mixing avoids it.
fn decompose<T: Real>(m: &DMatrix<T>, want_u: bool, want_v: bool) -> Decomposition<T> {
    let eps = T::default_epsilon() * T::lit(5.0);
    let max_iter = 200 * m.nrows().max(m.ncols()).max(10);
    let healthy = |svd: &SVD<T, Dyn, Dyn>| {
        svd.singular_values.iter().all(|x| x.is_finite())
            && svd.u.as_ref().is_none_or(is_finite)
            && svd.v_t.as_ref().is_none_or(is_finite)
    };
    for salt in 1..=4 {
        let q = mixing_rotation::<T>(m.nrows(), salt);
        if let Some(svd) =
            SVD::try_new_unordered(&q * m, want_u, want_v, eps, max_iter).filter(healthy)
        {
            return Decomposition {
                u: svd.u.map(|u| q.transpose() * u),
                sv: svd.singular_values.iter().copied().collect(),
                v_t: svd.v_t,
            };
        }
    }
    panic!(
        "SVD failed to converge on a {}x{} matrix",
        m.nrows(),
        m.ncols()
    );
}

/// A deterministic dense orthogonal matrix.
fn mixing_rotation<T: Real>(n: usize, salt: usize) -> DMatrix<T> {
    let golden = 0.618_033_988_749_895_f64;
    DMatrix::from_fn(n, n, |i, j| {
        T::lit((((i * n + j + 1) * (salt + 1)) as f64 * golden).fract() - 0.5)
    })
    .qr()
    .q()
}

fn descending<T: Real>(sv: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| {
        sv[b]
            .partial_cmp(&sv[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Singular values sorted in decreasing order.
pub fn singular_values<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = decompose(m, false, false).sv;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Threshold below which a singular value counts as zero: `σ₁ · max(rows, cols) · rel`.
pub fn rank_threshold<T: Real>(sv: &[T], rows: usize, cols: usize, rel: f64) -> T {
    let top = sv.first().copied().unwrap_or_else(T::zero);
    top * T::lit(rows.max(cols) as f64) * T::tol(rel)
}

pub fn numerical_rank<T: Real>(m: &DMatrix<T>, rel: f64) -> usize {
    let sv = singular_values(m);
    let thr = rank_threshold(&sv, m.nrows(), m.ncols(), rel);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Full SVD with all right singular vectors available, sorted by decreasing
/// singular value. Wide inputs are padded with zero rows, which leaves the
/// right singular vectors and the nonzero spectrum unchanged.
///
/// Returns `(singular values (length = cols), V)` where `V` is `cols × cols`.
pub fn right_svd<T: Real>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let (rows, cols) = m.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::<T>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let d = decompose(&padded, false, true);
    let vt = d.v_t.expect("requested V");
    let order = descending(&d.sv);
    let s = order.iter().map(|&i| d.sv[i]).collect();
    let v = DMatrix::from_fn(cols, cols, |r, j| vt[(order[j], r)]);
    (s, v)
}

/// Left singular vectors and singular values, sorted by decreasing
/// singular value; `U` has `min(rows, cols)` columns.
pub fn left_svd<T: Real>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let d = decompose(m, true, false);
    let u = d.u.expect("requested U");
    let order = descending(&d.sv);
    let s = order.iter().map(|&i| d.sv[i]).collect();
    let u = DMatrix::from_fn(m.nrows(), order.len(), |r, j| u[(r, order[j])]);
    (s, u)
}

/// Orthonormal basis of the right null space. The threshold is relative to
/// the largest singular value (see [`rank_threshold`]).
pub fn null_space<T: Real>(m: &DMatrix<T>, rel: f64) -> DMatrix<T> {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let (sv, v) = right_svd(m);
    let thr = rank_threshold(&sv, m.nrows(), cols, rel);
    let rank = sv.iter().filter(|&&s| s > thr).count();
    v.columns(rank, cols - rank).into_owned()
}

/// Orthonormal basis of the column space together with the singular values.
pub fn column_basis<T: Real>(m: &DMatrix<T>, rel: f64) -> (DMatrix<T>, Vec<T>) {
    let (sv, u) = left_svd(m);
    let thr = rank_threshold(&sv, m.nrows(), m.ncols(), rel);
    let rank = sv.iter().filter(|&&s| s > thr).count();
    (u.columns(0, rank).into_owned(), sv)
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn rel_frobenius<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    (a - b).norm() / b.norm()
}

pub fn is_finite<T: Real>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number<T: Real>(m: &DMatrix<T>) -> T {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::max_value().unwrap_or_else(T::one),
    }
}

/// Permutation matrix `P` with `P[perm[j], j] = 1`, so `M·P` reorders the
/// columns of `M` as `perm`.
pub fn permutation_matrix<T: Real>(perm: &[usize]) -> DMatrix<T> {
    let n = perm.len();
    let mut p = DMatrix::<T>::zeros(n, n);
    for (j, &i) in perm.iter().enumerate() {
        p[(i, j)] = T::one();
    }
    p
}
