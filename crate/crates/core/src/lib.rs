//! Behavioral simulator for randomized cache organizations.
//!
//! The centerpiece is [`cache::Cache`] configured as [`Model::Chameleon`]: a
//! randomized skewed cache (RSC) whose evicted lines land in a small fully
//! associative victim cache that immediately reinserts them into the RSC under
//! a different division's mapping. Baselines (fully associative, plain
//! set-associative, CEASER, CEASER-S) and the no-reinsert / CEASER+VC variants
//! share the same state machine.
//!
//! Around the simulator live:
//!
//! * [`idf`]: keyed index derivation (one set index per division).
//! * [`attacker`]: Prime+Prune+Probe profiling and eviction-set evaluation,
//!   restricted to the hit/miss interface.
//! * [`metrics`]: Welch's t, relative eviction entropy and closed-form
//!   collision probabilities, generic over the scalar type.
//! * [`trace`]: trace-driven miss-rate comparison.
//! * [`experiments`]: the seeded sweeps behind the command line tool.

pub mod address;
pub mod attacker;
pub mod cache;
pub mod error;
pub mod experiments;
pub mod idf;
pub mod metrics;
pub mod report;
pub mod seed;
pub mod trace;

pub use address::Address;
pub use cache::{AccessOutcome, Cache, CacheConfig, HitKind, Model, Replacement};
pub use error::{Error, Result};
pub use idf::{Idf, IdfKey, IndexVector};
pub use metrics::{ProbabilityModel, SampleSet, Scalar};

/// Default floating point type for statistics.
pub type Real = f64;

/// Exact rational scalar for the closed-form probabilities.
pub type Exact = num_rational::BigRational;

/// Sample set over [`Real`].
pub type Samples = SampleSet<Real>;

/// Single-precision sample set, mainly for memory-bound sweeps.
pub type Samples32 = SampleSet<f32>;
