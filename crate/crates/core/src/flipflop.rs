//! The flip-flop algorithm: alternate the exact maximizers
//! `Ψ₁ = (Σ YᵢΨ₂Yᵢᵀ / (n m₂))⁻¹` and `Ψ₂ = (Σ YᵢᵀΨ₁Yᵢ / (n m₁))⁻¹`,
//! tracking the profile objective `g(Ψ₂)`, which never increases.
//!
//! Outcomes are classified as converged (then unique or not), diverged
//! (`g → −∞`, visible as a one-step decrease that settles at a negative
//! constant) or out of iterations.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{KronError, Result};
use crate::linalg::rel_frobenius;
use crate::minrank::{self, SValueReport};
use crate::model::{profile_objective, spd_sum, DataSample, Normalization, PrecisionPair};
use crate::pencil::{self, EigenCase};
use crate::scalar::Real;
use crate::spd::SpdMatrix;
use crate::thresholds::{self, Threshold, ThresholdReport};

#[derive(Clone, Debug, PartialEq)]
pub enum Init<T: Real> {
    Identity,
    RandomSpd(u64),
    Given(SpdMatrix<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlipFlopConfig<T: Real> {
    pub max_iterations: usize,
    /// Objective test: `|Δg| ≤ rel_tol · (1 + |g|)`.
    pub rel_tol: f64,
    /// Parameter test: change of the normalized Ψ₂ measured in the metric of
    /// the previous iterate, `‖L⁻¹ Ψ₂′ L⁻ᵀ − I‖_F` with `Ψ₂ = L Lᵀ`.
    pub param_tol: f64,
    pub divergence_window: usize,
    pub divergence_slope: f64,
    pub init: Init<T>,
    pub normalization: Normalization,
    /// Random restarts for the dispersion test of uniqueness.
    pub restarts: usize,
    pub dispersion_tol: f64,
}

impl<T: Real> Default for FlipFlopConfig<T> {
    fn default() -> Self {
        FlipFlopConfig {
            max_iterations: 500,
            rel_tol: 1e-10,
            param_tol: 1e-10,
            divergence_window: 20,
            divergence_slope: 1e-6,
            init: Init::Identity,
            normalization: Normalization::TraceOne,
            restarts: 5,
            dispersion_tol: 1e-6,
        }
    }
}

impl<T: Real> FlipFlopConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(KronError::InvalidArgument(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.rel_tol > 0.0) || !(self.param_tol > 0.0) {
            return Err(KronError::InvalidArgument(
                "tolerances must be positive".into(),
            ));
        }
        if self.divergence_window < 2 {
            return Err(KronError::InvalidArgument(
                "divergence_window must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStatus {
    UniqueMax,
    NonUniqueMax,
    Diverged,
    MaxIterations,
}

impl FitStatus {
    pub fn name(self) -> &'static str {
        match self {
            FitStatus::UniqueMax => "UniqueMax",
            FitStatus::NonUniqueMax => "NonUniqueMax",
            FitStatus::Diverged => "Diverged",
            FitStatus::MaxIterations => "MaxIterations",
        }
    }

    pub fn converged(self) -> bool {
        matches!(self, FitStatus::UniqueMax | FitStatus::NonUniqueMax)
    }
}

/// What theory says about generic data of the sample's shape.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryVerdict {
    /// Likelihood bounded above almost surely.
    pub bounded: Option<bool>,
    /// MLE exists uniquely almost surely.
    pub unique: Option<bool>,
    pub source: TheorySource,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TheorySource {
    /// Two samples with `2m₂ ≥ m₁ ≥ m₂` (dimensions oriented so).
    TwoSamples(SValueReport),
    /// `m₂ = 2`, `m₁ < 2n`.
    ColumnsTwo(SValueReport),
    Thresholds(ThresholdReport),
}

#[derive(Clone, Debug)]
pub struct FitReport<T: Real> {
    pub status: FitStatus,
    /// Last iterate; the MLE when the status is a converged one.
    pub estimate: PrecisionPair<T>,
    /// `g` at the start and after each iteration.
    pub g_trace: Vec<T>,
    /// `g_trace[i+1] − g_trace[i]`.
    pub delta_trace: Vec<T>,
    pub iterations: usize,
    pub theory: Option<TheoryVerdict>,
    /// Largest relative distance between restart limits, when the
    /// dispersion test decided uniqueness.
    pub dispersion: Option<T>,
    /// Set when a step failed and the failure was read as divergence.
    pub terminated_by_step_failure: bool,
}

impl<T: Real> FitReport<T> {
    /// `(iteration, g, Δg)` rows; iteration 0 has no difference.
    pub fn trace_rows(&self) -> Vec<(usize, T, Option<T>)> {
        self.g_trace
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                (
                    i,
                    g,
                    if i == 0 {
                        None
                    } else {
                        Some(self.delta_trace[i - 1])
                    },
                )
            })
            .collect()
    }
}

fn check_step_dims<T: Real>(sample: &DataSample<T>) -> Result<()> {
    let (m1, m2, n) = (sample.m1(), sample.m2(), sample.n());
    if n * m2 < m1 || n * m1 < m2 {
        return Err(KronError::StepIllDefined(format!(
            "need n*m2 >= m1 and n*m1 >= m2, got n={n}, m1={m1}, m2={m2}"
        )));
    }
    Ok(())
}

/// One sweep: `(Ψ₁, Ψ₂′)` from `Ψ₂`.
pub fn flipflop_step<T: Real>(
    sample: &DataSample<T>,
    psi2: &SpdMatrix<T>,
) -> Result<(SpdMatrix<T>, SpdMatrix<T>)> {
    check_step_dims(sample)?;
    if psi2.dim() != sample.m2() {
        return Err(KronError::DimensionMismatch(
            "psi2 does not match the sample".into(),
        ));
    }
    let ill = |what: &str| KronError::StepIllDefined(format!("{what} is singular"));
    let s1 = T::one() / T::lit((sample.n() * sample.m2()) as f64);
    let psi1 = spd_sum(sample.row_sum(psi2.matrix()) * s1)
        .map_err(|_| ill("sum of Y psi2 Y^T"))?
        .inverse();
    let s2 = T::one() / T::lit((sample.n() * sample.m1()) as f64);
    let next = spd_sum(sample.col_sum(psi1.matrix()) * s2)
        .map_err(|_| ill("sum of Y^T psi1 Y"))?
        .inverse();
    Ok((psi1, next))
}

pub fn random_spd<T: Real>(dim: usize, seed: u64) -> SpdMatrix<T> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        T::lit(v)
    });
    let m = &z * z.transpose() / T::lit(dim as f64) + DMatrix::identity(dim, dim) * T::lit(0.1);
    SpdMatrix::from_computed(m, "random SPD draw").expect("Gram matrix plus a ridge is SPD")
}

/// Theoretical outcome for generic data of this shape, when known.
pub fn theory_verdict<T: Real>(sample: &DataSample<T>) -> Option<TheoryVerdict> {
    let oriented;
    let s = if sample.m1() >= sample.m2() {
        sample
    } else {
        oriented = sample.transposed();
        &oriented
    };
    let (m1, m2, n) = (s.m1(), s.m2(), s.n());
    let from_s = |rep: &SValueReport, case: Option<EigenCase>| {
        let v = match case {
            Some(c) => Some(rep.value.resolve(c)),
            None => match rep.value {
                minrank::SValue::Exact(v) => Some(v),
                _ => None,
            },
        };
        (v.map(|v| v >= 0), v.map(|v| v > 0))
    };
    if n == 2 && m2 >= 2 && m1 <= 2 * m2 {
        let rep = minrank::s2(m1, m2).ok()?;
        let case = if m1 == m2 && m1 == 2 {
            pencil::pencil_eigenvalues(&s.matrices()[0], &s.matrices()[1])
                .ok()
                .map(|e| e.case())
        } else {
            None
        };
        let (bounded, unique) = from_s(&rep, case);
        return Some(TheoryVerdict {
            bounded,
            unique,
            source: TheorySource::TwoSamples(rep),
        });
    }
    if m2 == 2 && m1 >= 2 && m1 < 2 * n {
        let case = if m1 == n {
            minrank::eigen_case_m2_equals_2(s).ok()
        } else {
            None
        };
        let rep = minrank::sn_m2_equals_2(m1, n, case).ok()?;
        let (bounded, unique) = from_s(&rep, case);
        return Some(TheoryVerdict {
            bounded,
            unique,
            source: TheorySource::ColumnsTwo(rep),
        });
    }
    let rep = thresholds::thresholds(m1, m2, false).ok()?;
    let at_least = |t: Threshold| {
        let (lo, hi) = t.range();
        if n >= hi {
            Some(true)
        } else if n < lo {
            Some(false)
        } else {
            None
        }
    };
    Some(TheoryVerdict {
        bounded: at_least(rep.n_b),
        unique: at_least(rep.n_u),
        source: TheorySource::Thresholds(rep),
    })
}

struct Run<T: Real> {
    status: FitStatus,
    pair: PrecisionPair<T>,
    g_trace: Vec<T>,
    delta_trace: Vec<T>,
    step_failure: bool,
}

fn initial_psi2<T: Real>(sample: &DataSample<T>, init: &Init<T>) -> Result<SpdMatrix<T>> {
    match init {
        Init::Identity => Ok(SpdMatrix::identity(sample.m2())),
        Init::RandomSpd(seed) => Ok(random_spd(sample.m2(), *seed)),
        Init::Given(m) if m.dim() == sample.m2() => Ok(m.clone()),
        Init::Given(_) => Err(KronError::DimensionMismatch(
            "initial psi2 does not match the sample".into(),
        )),
    }
}

/// `‖L⁻¹ Q L⁻ᵀ − I‖_F` for `P = L Lᵀ`: the change from `P` to `Q` measured
/// in the metric of `P`, blind to the overall scale of either.
fn affine_step<T: Real>(p: &SpdMatrix<T>, q: &SpdMatrix<T>) -> T {
    let Some(chol) = p.matrix().clone().cholesky() else {
        return T::max_value().unwrap_or_else(T::one);
    };
    let l = chol.l();
    let Some(a) = l.solve_lower_triangular(q.matrix()) else {
        return T::max_value().unwrap_or_else(T::one);
    };
    match l.solve_lower_triangular(&a.transpose()) {
        Some(w) => (w - DMatrix::identity(p.dim(), p.dim())).norm(),
        None => T::max_value().unwrap_or_else(T::one),
    }
}

/// Flip-flop iterations with convergence and divergence detection. The
/// returned status is `UniqueMax` for any convergence; classification of
/// uniqueness happens in [`fit`].
fn run<T: Real>(
    sample: &DataSample<T>,
    config: &FlipFlopConfig<T>,
    bounded: Option<bool>,
) -> Result<Run<T>> {
    check_step_dims(sample)?;
    let psi2 = initial_psi2(sample, &config.init)?;
    let psi2 = psi2.scaled(T::one() / psi2.trace());
    let mut g = profile_objective(sample, &psi2).map_err(|e| match e {
        KronError::DegenerateSample => {
            KronError::StepIllDefined("initial objective is undefined".into())
        }
        e => e,
    })?;
    let psi1 = crate::model::profile_psi1(sample, &psi2)
        .map_err(|_| KronError::StepIllDefined("sum of Y psi2 Y^T is singular".into()))?;
    let mut pair = PrecisionPair::new(psi1, psi2, Normalization::TraceOne);
    let mut g_trace = vec![g];
    let mut delta_trace: Vec<T> = Vec::new();
    let slope = T::lit(config.divergence_slope);
    let window = config.divergence_window;

    let sustained_decrease = |deltas: &[T], len: usize| {
        len >= 2 && deltas.len() >= len && deltas[deltas.len() - len..].iter().all(|&d| d <= -slope)
    };

    for _ in 0..config.max_iterations {
        let step = flipflop_step(sample, &pair.psi2).and_then(|(p1, p2)| {
            let next = PrecisionPair::new(p1, p2, Normalization::TraceOne);
            let g_next = profile_objective(sample, &next.psi2).map_err(|_| {
                KronError::StepIllDefined("objective undefined at the new iterate".into())
            })?;
            if g_next.is_finite() {
                Ok((next, g_next))
            } else {
                Err(KronError::StepIllDefined("objective is not finite".into()))
            }
        });
        let (next, g_next) = match step {
            Ok(v) => v,
            Err(e) => {
                let trend = sustained_decrease(&delta_trace, window.min(delta_trace.len()));
                if bounded == Some(false) || (bounded != Some(true) && trend) {
                    return Ok(Run {
                        status: FitStatus::Diverged,
                        pair,
                        g_trace,
                        delta_trace,
                        step_failure: true,
                    });
                }
                return Err(e);
            }
        };
        let delta = g_next - g;
        let change = affine_step(&pair.psi2, &next.psi2);
        pair = next;
        g = g_next;
        g_trace.push(g);
        delta_trace.push(delta);

        if delta.abs() <= T::tol(config.rel_tol) * (T::one() + g.abs())
            && change <= T::tol(config.param_tol)
        {
            return Ok(Run {
                status: FitStatus::UniqueMax,
                pair,
                g_trace,
                delta_trace,
                step_failure: false,
            });
        }
        if bounded != Some(true) && sustained_decrease(&delta_trace, window) {
            let first = delta_trace[delta_trace.len() - window];
            if delta.abs() >= first.abs() * T::lit(0.5) {
                return Ok(Run {
                    status: FitStatus::Diverged,
                    pair,
                    g_trace,
                    delta_trace,
                    step_failure: false,
                });
            }
        }
    }
    Ok(Run {
        status: FitStatus::MaxIterations,
        pair,
        g_trace,
        delta_trace,
        step_failure: false,
    })
}

/// Runs the flip-flop algorithm and classifies the outcome.
///
/// Uniqueness of a converged fit is read from theory when the shape of the
/// sample is covered, and otherwise from the spread of the limits reached
/// from `config.restarts` random starting points.
pub fn fit<T: Real>(sample: &DataSample<T>, config: &FlipFlopConfig<T>) -> Result<FitReport<T>> {
    config.validate()?;
    let theory = theory_verdict(sample);
    let bounded = theory.as_ref().and_then(|t| t.bounded);
    let main = run(sample, config, bounded)?;
    let mut dispersion = None;
    let status = if main.status.converged() {
        match theory.as_ref().and_then(|t| t.unique) {
            Some(true) => FitStatus::UniqueMax,
            Some(false) => FitStatus::NonUniqueMax,
            None => {
                let spread = restart_spread(sample, config, bounded, &main.pair)?;
                dispersion = Some(spread);
                if spread > T::lit(config.dispersion_tol) {
                    FitStatus::NonUniqueMax
                } else {
                    FitStatus::UniqueMax
                }
            }
        }
    } else {
        main.status
    };
    let iterations = main.delta_trace.len();
    Ok(FitReport {
        status,
        estimate: main.pair.renormalized(config.normalization),
        g_trace: main.g_trace,
        delta_trace: main.delta_trace,
        iterations,
        theory,
        dispersion,
        terminated_by_step_failure: main.step_failure,
    })
}

/// Largest relative Frobenius distance between the normalized `Ψ₂ ⊗ Ψ₁`
/// of `reference` and of the limits from random restarts (seeds
/// `0..restarts`). Restarts that fail to converge are ignored.
fn restart_spread<T: Real>(
    sample: &DataSample<T>,
    config: &FlipFlopConfig<T>,
    bounded: Option<bool>,
    reference: &PrecisionPair<T>,
) -> Result<T> {
    let reference = reference.kron();
    let limits: Vec<Option<DMatrix<T>>> = (0..config.restarts as u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = FlipFlopConfig {
                init: Init::RandomSpd(seed),
                ..config.clone()
            };
            run(sample, &cfg, bounded)
                .ok()
                .filter(|r| r.status.converged())
                .map(|r| r.pair.kron())
        })
        .collect();
    Ok(limits
        .iter()
        .flatten()
        .map(|k| rel_frobenius(k, &reference))
        .fold(T::zero(), |a, b| if b > a { b } else { a }))
}
