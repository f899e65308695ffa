//! Leakage measures: Welch's t, relative eviction entropy, closed-form
//! collision probabilities and the Monte-Carlo oracles that check them.

mod closed_form;
mod entropy;
pub mod oracle;
mod stats;

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num};

pub use closed_form::{Closed, ProbabilityModel};
pub use entropy::{
    miller_madow_bits, plugin_bits, relative_eviction_entropy, EntropyEstimate, EntropyParams,
    MIN_ENTROPY_TRIALS,
};
pub use stats::{t_interval, welch_t, SampleSet};

/// Scalar the statistics are generic over: `f32`, `f64` or an exact rational.
pub trait Scalar: Num + Clone + FromPrimitive + PartialOrd + Debug {}

impl<T: Num + Clone + FromPrimitive + PartialOrd + Debug> Scalar for T {}
