//! Maximum likelihood estimation in the matrix normal model, where the
//! covariance of `vec(Y)` is a Kronecker product `Σ₂ ⊗ Σ₁`.
//!
//! - [`model`]: samples, precision pairs, the log-likelihood, the profile
//!   objective `g`, geodesics of the positive-definite cone and the group
//!   action `Y ↦ A Y B`.
//! - [`flipflop`]: the flip-flop algorithm with outcome classification.
//! - [`thresholds`]: sample sizes at which the MLE is bounded, exists, and
//!   is unique.
//! - [`pencil`]: canonical forms of pairs of data matrices.
//! - [`minrank`]: minimal ranks, the deficits `S_n` and their certificates.
//! - [`closedform`]: explicit maximizers for two samples.
//! - [`montecarlo`]: seeded simulation.
//!
//! Numeric code is generic over [`Real`] (`f32`, `f64`); the `*64` aliases
//! fix the scalar to `f64`.

pub mod closedform;
pub mod error;
pub mod flipflop;
pub mod io;
pub mod linalg;
pub mod minrank;
pub mod model;
pub mod montecarlo;
pub mod pencil;
pub mod scalar;
pub mod spd;
pub mod thresholds;

pub use error::{KronError, Result};
pub use flipflop::{fit, flipflop_step, FitReport, FitStatus, FlipFlopConfig, Init};
pub use model::{
    geodesic, group_transform, log_likelihood, profile_objective, profile_psi1, transport_psi2,
    DataSample, Normalization, PrecisionPair,
};
pub use scalar::Real;
pub use spd::SpdMatrix;

pub type DataSample64 = DataSample<f64>;
pub type SpdMatrix64 = SpdMatrix<f64>;
pub type PrecisionPair64 = PrecisionPair<f64>;
pub type FitReport64 = FitReport<f64>;
pub type FlipFlopConfig64 = FlipFlopConfig<f64>;
pub type PencilCanonicalization64 = pencil::PencilCanonicalization<f64>;
pub type TwoByTwoClassification64 = closedform::TwoByTwoClassification<f64>;

pub type DataSample32 = DataSample<f32>;
pub type SpdMatrix32 = SpdMatrix<f32>;
