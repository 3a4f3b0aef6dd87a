//! Sample-size thresholds for the matrix normal MLE.
//!
//! `N_b`: likelihood bounded a.s.; `N_e`: MLE exists a.s.; `N_u`: MLE exists
//! uniquely a.s. Values are resolved from closed-form results where those
//! apply, from the embedded table of small cases, and otherwise reported as
//! an interval.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use crate::error::{KronError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threshold {
    Exact(usize),
    Bounds { lo: usize, hi: usize },
}

impl Threshold {
    pub fn exact(self) -> Option<usize> {
        match self {
            Threshold::Exact(v) => Some(v),
            Threshold::Bounds { .. } => None,
        }
    }

    /// `(lo, hi)`; both equal the value when exact.
    pub fn range(self) -> (usize, usize) {
        match self {
            Threshold::Exact(v) => (v, v),
            Threshold::Bounds { lo, hi } => (lo, hi),
        }
    }

    fn shifted(self, by: usize) -> Self {
        match self {
            Threshold::Exact(v) => Threshold::Exact(v + by),
            Threshold::Bounds { lo, hi } => Threshold::Bounds {
                lo: lo + by,
                hi: hi + by,
            },
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Exact(v) => write!(f, "{v}"),
            Threshold::Bounds { lo, hi } => write!(f, "{lo}-{hi}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    VectorCase,
    SquareCase,
    Divisible,
    MainTheorem,
    LargeRatioCorollary,
    EmbeddedTable,
    BoundsOnly,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::VectorCase => "VectorCase",
            Source::SquareCase => "SquareCase",
            Source::Divisible => "Divisible",
            Source::MainTheorem => "MainTheorem",
            Source::LargeRatioCorollary => "LargeRatioCorollary",
            Source::EmbeddedTable => "EmbeddedTable",
            Source::BoundsOnly => "BoundsOnly",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdReport {
    pub m1: usize,
    pub m2: usize,
    pub n_b: Threshold,
    pub n_e: Threshold,
    pub n_u: Threshold,
    pub source: Source,
    pub mean_adjusted: bool,
}

/// `(N_b, N_e, N_u)` for `m1 ≥ m2`.
type Exact3 = (usize, usize, usize);

/// Exact thresholds from every closed-form result whose hypotheses hold,
/// in resolution order. Expects `m1 ≥ m2 ≥ 1`.
pub fn theorem_values(m1: usize, m2: usize) -> Vec<(Source, Exact3)> {
    let mut out = Vec::new();
    if m2 == 1 {
        out.push((Source::VectorCase, (m1, m1, m1)));
        return out;
    }
    if m1 == m2 {
        out.push((Source::SquareCase, (1, 1, 3)));
    }
    if 2 * m2 >= m1 && m1 > m2 {
        let nu = if m1 == m2 + 1 { 2 } else { 3 };
        let ne = if m2.is_multiple_of(m1 - m2) { 2 } else { 3 };
        out.push((Source::MainTheorem, (ne, ne, nu)));
    }
    if m1.is_multiple_of(m2) {
        let q = m1 / m2;
        let nu = if m1 == m2 { 3 } else { q + 1 };
        out.push((Source::Divisible, (q, q, nu)));
    }
    let (h, r) = (m1 / m2, m1 % m2);
    // ⌊m1/m2⌋ > 1 + r²/(m2(m2−r)), cleared of denominators.
    if r >= 1 && (h - 1) * m2 * (m2 - r) > r * r {
        out.push((Source::LargeRatioCorollary, (h + 1, h + 1, h + 1)));
    }
    out
}

/// `(lo, hi)` with `lo = ⌈m1/m2⌉` and `hi = ⌊m1/m2 + m2/m1⌋ + 1`, for `m1 ≥ m2 ≥ 1`.
pub fn bounds(m1: usize, m2: usize) -> Result<(usize, usize)> {
    check_order(m1, m2)?;
    let lo = m1.div_ceil(m2);
    let hi = (m1 * m1 + m2 * m2) / (m1 * m2) + 1;
    Ok((lo, hi))
}

/// Thresholds for `m1 × m2` observations. The dimensions may be given in
/// either order; the report keeps them as given.
pub fn thresholds(m1: usize, m2: usize, mean_unknown: bool) -> Result<ThresholdReport> {
    if m1 == 0 || m2 == 0 {
        return Err(KronError::InvalidArgument(
            "dimensions must be positive".into(),
        ));
    }
    let (big, small) = if m1 >= m2 { (m1, m2) } else { (m2, m1) };
    let theorems = theorem_values(big, small);
    let table = table1_lookup(big, small);
    let reference = theorems.first().map(|&(_, v)| v).or(table);
    for &(source, v) in &theorems {
        if Some(v) != reference || table.is_some_and(|t| t != v) {
            return Err(KronError::Internal(format!(
                "threshold sources disagree at ({big},{small}): {} gives {v:?}, table {table:?}",
                source.name()
            )));
        }
    }
    let (n_b, n_e, n_u, source) = match (theorems.first(), table) {
        (Some(&(source, (b, e, u))), _) => (
            Threshold::Exact(b),
            Threshold::Exact(e),
            Threshold::Exact(u),
            source,
        ),
        (None, Some((b, e, u))) => (
            Threshold::Exact(b),
            Threshold::Exact(e),
            Threshold::Exact(u),
            Source::EmbeddedTable,
        ),
        (None, None) => {
            let (lo, hi) = bounds(big, small)?;
            let t = Threshold::Bounds { lo, hi };
            (t, t, t, Source::BoundsOnly)
        }
    };
    let shift = usize::from(mean_unknown);
    Ok(ThresholdReport {
        m1,
        m2,
        n_b: n_b.shifted(shift),
        n_e: n_e.shifted(shift),
        n_u: n_u.shifted(shift),
        source,
        mean_adjusted: mean_unknown,
    })
}

fn check_order(m1: usize, m2: usize) -> Result<()> {
    if m2 == 0 || m1 < m2 {
        return Err(KronError::InvalidArgument(format!(
            "need m1 >= m2 >= 1, got ({m1},{m2})"
        )));
    }
    Ok(())
}

const TABLE1_CSV: &str = include_str!("../data/table1.csv");

/// Largest dimension covered by the embedded table.
pub const TABLE1_MAX: usize = 10;

/// The embedded table of small cases, keyed by `(m1, m2)` with `m1 ≥ m2`.
fn table1() -> &'static BTreeMap<(usize, usize), Exact3> {
    static TABLE: OnceLock<BTreeMap<(usize, usize), Exact3>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut nu = BTreeMap::new();
        let mut ne = BTreeMap::new();
        for line in TABLE1_CSV.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let key = (f[1].parse().unwrap(), f[2].parse().unwrap());
            let v: usize = f[3].parse().unwrap();
            match f[0] {
                "n_u" => nu.insert(key, v),
                _ => ne.insert(key, v),
            };
        }
        nu.into_iter()
            .map(|(k, u)| (k, (ne[&k], ne[&k], u)))
            .collect()
    })
}

/// `(N_b, N_e, N_u)` from the embedded table, for `m1 ≥ m2`.
pub fn table1_lookup(m1: usize, m2: usize) -> Option<Exact3> {
    table1().get(&(m1, m2)).copied()
}

/// The embedded table exactly as stored.
pub fn table1_embedded_csv() -> &'static str {
    TABLE1_CSV
}

/// Both panels of the threshold table for `1 ≤ m2 ≤ m1 ≤ max_dim`, in long
/// form (`panel,m1,m2,value`). Interval cells are written `lo-hi`. For
/// `max_dim = 10` this reproduces the embedded table byte for byte.
pub fn table1_csv(max_dim: usize, mean_unknown: bool) -> Result<String> {
    let mut rows: Vec<[String; 4]> = Vec::new();
    let mut right = Vec::new();
    for m1 in 1..=max_dim {
        for m2 in 1..=m1 {
            let r = thresholds(m1, m2, mean_unknown)?;
            rows.push([
                "n_u".into(),
                m1.to_string(),
                m2.to_string(),
                r.n_u.to_string(),
            ]);
            right.push([
                "n_b_n_e".into(),
                m1.to_string(),
                m2.to_string(),
                r.n_e.to_string(),
            ]);
        }
    }
    rows.extend(right);
    let mut out = String::from("panel,m1,m2,value\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    Ok(out)
}
