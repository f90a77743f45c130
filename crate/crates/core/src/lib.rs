//! Simulation engine for optimal-policy learning on dynamic networks with
//! treatment interference.
//!
//! Rewards are additive in a per-group direct effect and a pooled
//! treated-neighbor-count effect, which makes the per-node reward vector
//! linear in one shared parameter vector. The crate provides:
//!
//! - [`netgen`]: stochastic block model and latent-space graph sampling;
//! - [`reward`]: the ground-truth environment, including a non-additive
//!   variant for misspecification studies;
//! - [`design`]: the 0/1 regression matrix linking treatments to rewards;
//! - [`posterior`]: conjugate Gaussian inference over the parameters;
//! - [`optimize`]: budget-constrained treatment selection (exhaustive
//!   search, branch-and-bound over an integer-linear encoding with an
//!   in-repo bounded-variable simplex, and hill-climbing local search);
//! - [`agents`]: Thompson sampling, a UCB-style policy over a confidence
//!   ellipsoid, and baselines;
//! - [`harness`]: seeded, replicable experiments with regret accounting.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below pin the common `f64` instantiation.

pub mod agents;
pub mod design;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod netgen;
pub mod optimize;
pub mod posterior;
pub mod reward;
pub mod scalar;

pub use error::{Error, Result};
pub use netgen::{Graph, TreatmentVector};
pub use scalar::Scalar;

pub type SbmParams64 = netgen::SbmParams<f64>;
pub type LatentSpaceParams64 = netgen::LatentSpaceParams<f64>;
pub type Theta64 = reward::Theta<f64>;
pub type MisspecTheta64 = reward::MisspecTheta<f64>;
pub type NoiseSpec64 = reward::NoiseSpec<f64>;
pub type DesignMatrix64 = design::DesignMatrix<f64>;
pub type PosteriorState64 = posterior::PosteriorState<f64>;
pub type BudgetedProblem64<'a> = optimize::BudgetedProblem<'a, f64>;
pub type Solution64 = optimize::Solution<f64>;
pub type ConfidenceParams64 = agents::ConfidenceParams<f64>;
pub type ExperimentConfig64 = harness::ExperimentConfig<f64>;
