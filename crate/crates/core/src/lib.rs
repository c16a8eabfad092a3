//! Covert communication over the additive white Gaussian noise channel.
//!
//! The crate evaluates the asymptotic covert-throughput bounds, constructs
//! the keyed BPSK random code with zero-codeword augmentation that achieves
//! them, and estimates by Monte Carlo the decoding error and the divergence
//! between code-induced and noise-only output distributions at finite
//! blocklength.
//!
//! Everything random is drawn from counter-based streams keyed by a user
//! seed, a domain tag and the sample index, so results do not depend on how
//! work is scheduled. With the default `parallel` feature the Monte Carlo
//! loops run on rayon; without it they run on the calling thread and give the
//! same numbers.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Oracle constants are kept at the precision they were computed with.
#![allow(clippy::excessive_precision)]

pub mod channel;
pub mod checks;
pub mod codebook;
pub mod covertness;
pub mod deviation;
pub mod error;
pub mod mc;
pub mod params;
pub mod rng;
pub mod special;

pub use channel::{estimate_error_probability, ml_decode, threshold_decode, DecodeOutcome, Decoder, ErrorEstimate};
pub use codebook::{build_lemma_code, generate_bpsk_codebook, Codebook, LemmaOptions};
pub use covertness::{estimate_divergences, DivergenceEstimates};
pub use error::{Error, Result};
pub use mc::{EstimateWithError, Execution, McRun};
pub use params::{
    asymptotic_bounds, bound_curve, epsilon_grid, scaling_parameters, AsymptoticBounds, ChannelParams, CovertBudget,
    ScalingParams,
};
pub use rng::{NoiseKind, Seed};
