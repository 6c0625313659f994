//! Capacity-distortion analysis for discrete memoryless state-dependent channels.
//!
//! A destination that must both decode a message and estimate the per-symbol
//! channel state faces a tradeoff: informative inputs are not always the inputs
//! that reveal the state best. For finite alphabets this tradeoff reduces to a
//! channel-coding problem with a linear input constraint, where each input
//! symbol carries an *estimation cost* — the minimum one-shot expected
//! distortion achievable when that symbol is sent.
//!
//! The crate provides:
//!
//! - [`channel`]: channel descriptions, Bayes posteriors over the state, and
//!   the per-input estimation-cost profile.
//! - [`solver`]: the constrained capacity solver (alternating maximization
//!   with dual bisection) for distortion and input-cost constraints.
//! - [`closed_form`]: closed-form curves for the binary multiplicative
//!   (on/off state) channel and the Gaussian-state channel, used as oracles.
//! - [`rayleigh`]: analytic capacity-distortion bounds for the non-coherent
//!   memoryless Rayleigh fading channel at high SNR.
//! - [`mac`]: the two-user multiple-access rate region under a coupled
//!   estimation-cost constraint.
//! - [`sim`]: Monte-Carlo simulation of the decode-then-estimate scheme with
//!   constant-composition random codebooks.
//!
//! All rates and entropies are tracked internally in nats; conversion to bits
//! is a presentation concern.
//!
//! ## Example
//!
//! ```
//! use capdist::{closed_form::BmcParams, solver};
//!
//! // on/off channel: the state gates the input through to the output
//! let spec = BmcParams::new(1, 0.4).unwrap().build_channel().unwrap();
//!
//! // capacity under an average state-estimation distortion budget of 0.1
//! let sol = solver::capacity_distortion(&spec, 0.1).unwrap();
//! assert!((sol.value - 0.1061055518).abs() < 1e-9);
//! assert!(sol.distortion_attained <= 0.1 + 1e-9);
//! ```

pub mod channel;
pub mod closed_form;
pub mod mac;
pub mod rayleigh;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod special;

pub use channel::{
    estimation_profile, marginal_channel, posterior_state, ChannelSpec, EstimationProfile,
    Posterior, SpecError,
};
pub use closed_form::{BmcParams, BmcRegime};
pub use mac::{MacChannelSpec, MacError, MacRegion};
pub use rayleigh::{RayleighError, RayleighQuery};
pub use sim::{Codebook, SimError, SimReport};
pub use solver::{CapDistSolution, SolverError};

/// Natural log of 2; multiply a bit count by this to get nats.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Convert nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}
