//! Reproducible simulation: matrix normal draws, the probability that
//! `Y₁⁻¹Y₂` has real eigenvalues, and empirical MLE outcome frequencies.
//!
//! Trial `i` of a run with seed `s` draws from its own Xoshiro256++ stream
//! seeded with `splitmix64(s ⊕ i)`, so results do not depend on scheduling.
//! Trials run on the current rayon pool.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{KronError, Result};
use crate::flipflop::{fit, FitStatus, FlipFlopConfig};
use crate::model::DataSample;
use crate::scalar::Real;
use crate::spd::SpdMatrix;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_rng(seed: u64, trial: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(splitmix64(seed ^ trial))
}

pub fn standard_normal_matrix<T: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DMatrix<T> {
    // Filled column by column.
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        T::lit(z)
    })
}

/// `Σ₁^{1/2} Z Σ₂^{1/2}` with `Z` standard normal, so that `vec(Y)` has
/// covariance `Σ₂ ⊗ Σ₁`.
pub fn sample_matrix_normal<T: Real, R: Rng + ?Sized>(
    m1: usize,
    m2: usize,
    sigma1: &SpdMatrix<T>,
    sigma2: &SpdMatrix<T>,
    rng: &mut R,
) -> Result<DMatrix<T>> {
    if sigma1.dim() != m1 || sigma2.dim() != m2 {
        return Err(KronError::DimensionMismatch(format!(
            "covariances of dimension {} and {} for a {m1}x{m2} matrix",
            sigma1.dim(),
            sigma2.dim()
        )));
    }
    let z = standard_normal_matrix::<T, R>(m1, m2, rng);
    Ok(sigma1.sqrt().matrix() * z * sigma2.sqrt().matrix())
}

/// `n` independent standard normal `m1 × m2` matrices.
pub fn standard_sample<T: Real, R: Rng + ?Sized>(
    m1: usize,
    m2: usize,
    n: usize,
    rng: &mut R,
) -> Result<DataSample<T>> {
    DataSample::with_dims(
        m1,
        m2,
        (0..n)
            .map(|_| standard_normal_matrix(m1, m2, rng))
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub trials: usize,
    pub seed: u64,
    pub counts: BTreeMap<String, usize>,
    pub estimate: f64,
    /// `sqrt(p̂(1 − p̂) / trials)`.
    pub stderr: f64,
    /// Draws rejected and repeated because they were numerically singular.
    pub redraws: usize,
}

impl SimulationReport {
    fn from_labels(
        trials: usize,
        seed: u64,
        labels: &[&'static str],
        hit: &str,
        redraws: usize,
    ) -> Self {
        let mut counts = BTreeMap::new();
        for &l in labels {
            *counts.entry(l.to_string()).or_insert(0) += 1;
        }
        let p = counts.get(hit).copied().unwrap_or(0) as f64 / trials as f64;
        SimulationReport {
            trials,
            seed,
            counts,
            estimate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            redraws,
        }
    }
}

const SINGULAR_DET: f64 = 1e-12;

/// Fraction of standard normal `2 × 2` pairs for which `Y₁⁻¹Y₂` has real
/// eigenvalues (discriminant `(tr W)² − 4 det W ≥ 0`). Outcomes are
/// labelled `real` and `complex`.
pub fn prob_real_eigs_2x2(trials: usize, seed: u64) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(KronError::InvalidArgument(
            "trials must be at least 1".into(),
        ));
    }
    let results: Vec<(&'static str, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut redraws = 0;
            loop {
                let y1: DMatrix<f64> = standard_normal_matrix(2, 2, &mut rng);
                let y2: DMatrix<f64> = standard_normal_matrix(2, 2, &mut rng);
                let det = y1.determinant();
                if det.abs() < SINGULAR_DET {
                    redraws += 1;
                    continue;
                }
                let w = y1.try_inverse().expect("nonsingular") * y2;
                let disc = w.trace().powi(2) - 4.0 * w.determinant();
                return (if disc >= 0.0 { "real" } else { "complex" }, redraws);
            }
        })
        .collect();
    let labels: Vec<&'static str> = results.iter().map(|r| r.0).collect();
    let redraws = results.iter().map(|r| r.1).sum();
    Ok(SimulationReport::from_labels(
        trials, seed, &labels, "real", redraws,
    ))
}

/// Outcome counts of [`fit`] over standard normal samples of size `n`.
/// Labels are the status names plus `StepIllDefined`; the estimate is the
/// `UniqueMax` fraction.
pub fn empirical_threshold<T: Real>(
    m1: usize,
    m2: usize,
    n: usize,
    trials: usize,
    seed: u64,
    config: &FlipFlopConfig<T>,
) -> Result<SimulationReport> {
    if trials == 0 || m1 == 0 || m2 == 0 || n == 0 {
        return Err(KronError::InvalidArgument(
            "trials and dimensions must be positive".into(),
        ));
    }
    config.validate()?;
    let labels: Vec<&'static str> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let sample = standard_sample::<T, _>(m1, m2, n, &mut rng)?;
            match fit(&sample, config) {
                Ok(r) => Ok(r.status.name()),
                Err(KronError::StepIllDefined(_)) => Ok("StepIllDefined"),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(SimulationReport::from_labels(
        trials,
        seed,
        &labels,
        FitStatus::UniqueMax.name(),
        0,
    ))
}
