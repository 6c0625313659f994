//! Discrete memoryless state-dependent channels.
//!
//! A channel is described by a transition tensor `P(y|x,s)`, a state prior
//! `P_S(s)`, and a distortion matrix `d(s, s_hat)` on state pairs. From these
//! we derive the marginal channel `P(y|x)`, the Bayes posterior over the state
//! given an (input, output) pair, and the estimation-cost profile: for each
//! input `x`, the minimum expected distortion `d*(x)` over all one-shot
//! estimators mapping `(x, y)` to a state, together with the estimator table
//! that attains it.
//!
//! Specs are validated strictly on construction (absolute tolerance
//! [`PROB_TOL`] on probability sums); inputs that fail validation are
//! rejected, never renormalized.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for probability-vector sums.
pub const PROB_TOL: f64 = 1e-12;

/// Validation failure for a channel description. The message names the first
/// offending field in input order.
#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{field}: alphabet must be non-empty")]
    EmptyAlphabet { field: &'static str },
    #[error("{field}: expected length {expected}, got {got}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        got: usize,
    },
    #[error("{field}: entry {value} is not a finite number")]
    NonFinite { field: String, value: f64 },
    #[error("{field}: entry {value} outside [0, 1]")]
    ProbabilityRange { field: String, value: f64 },
    #[error("{field}: sums to {sum}, expected 1 within {PROB_TOL:e}")]
    SumNotOne { field: String, sum: f64 },
    #[error("{field}: entry {value} is negative")]
    NegativeEntry { field: String, value: f64 },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A finite-alphabet state-dependent channel.
///
/// `transition[x][s][y]` is `P(y|x,s)`; `state_pmf[s]` is the state prior;
/// `distortion[s][t]` is the cost of estimating state `t` when the truth is
/// `s`; `input_cost`, when present, is an extra nonnegative per-input cost
/// used by the cost-constrained solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub input_alphabet: Vec<String>,
    pub state_alphabet: Vec<String>,
    pub output_alphabet: Vec<String>,
    pub state_pmf: Vec<f64>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub distortion: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_cost: Option<Vec<f64>>,
}

impl ChannelSpec {
    pub fn num_inputs(&self) -> usize {
        self.input_alphabet.len()
    }

    pub fn num_states(&self) -> usize {
        self.state_alphabet.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_alphabet.len()
    }

    /// Largest distortion entry; finite by validation.
    pub fn max_distortion(&self) -> f64 {
        self.distortion
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Parse and validate a spec from its JSON representation.
    pub fn from_json(json: &str) -> Result<Self, SpecError> {
        let spec: ChannelSpec = serde_json::from_str(json)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Serialize to the canonical JSON representation.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel spec serializes")
    }

    /// Check every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), SpecError> {
        for (name, alphabet) in [
            ("input_alphabet", &self.input_alphabet),
            ("state_alphabet", &self.state_alphabet),
            ("output_alphabet", &self.output_alphabet),
        ] {
            if alphabet.is_empty() {
                return Err(SpecError::EmptyAlphabet { field: name });
            }
        }
        let (nx, ns, ny) = (self.num_inputs(), self.num_states(), self.num_outputs());

        validate_pmf("state_pmf", &self.state_pmf, ns)?;

        if self.transition.len() != nx {
            return Err(SpecError::DimensionMismatch {
                field: "transition".into(),
                expected: nx,
                got: self.transition.len(),
            });
        }
        for (x, per_state) in self.transition.iter().enumerate() {
            if per_state.len() != ns {
                return Err(SpecError::DimensionMismatch {
                    field: format!("transition[{x}]"),
                    expected: ns,
                    got: per_state.len(),
                });
            }
            for (s, row) in per_state.iter().enumerate() {
                validate_pmf(&format!("transition[{x}][{s}]"), row, ny)?;
            }
        }

        if self.distortion.len() != ns {
            return Err(SpecError::DimensionMismatch {
                field: "distortion".into(),
                expected: ns,
                got: self.distortion.len(),
            });
        }
        for (s, row) in self.distortion.iter().enumerate() {
            if row.len() != ns {
                return Err(SpecError::DimensionMismatch {
                    field: format!("distortion[{s}]"),
                    expected: ns,
                    got: row.len(),
                });
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(SpecError::NonFinite {
                        field: format!("distortion[{s}]"),
                        value: v,
                    });
                }
                if v < 0.0 {
                    return Err(SpecError::NegativeEntry {
                        field: format!("distortion[{s}]"),
                        value: v,
                    });
                }
            }
        }

        if let Some(costs) = &self.input_cost {
            if costs.len() != nx {
                return Err(SpecError::DimensionMismatch {
                    field: "input_cost".into(),
                    expected: nx,
                    got: costs.len(),
                });
            }
            for &v in costs {
                if !v.is_finite() {
                    return Err(SpecError::NonFinite {
                        field: "input_cost".into(),
                        value: v,
                    });
                }
                if v < 0.0 {
                    return Err(SpecError::NegativeEntry {
                        field: "input_cost".into(),
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

fn validate_pmf(field: &str, pmf: &[f64], expected_len: usize) -> Result<(), SpecError> {
    if pmf.len() != expected_len {
        return Err(SpecError::DimensionMismatch {
            field: field.into(),
            expected: expected_len,
            got: pmf.len(),
        });
    }
    let mut sum = 0.0;
    for &v in pmf {
        if !v.is_finite() {
            return Err(SpecError::NonFinite {
                field: field.into(),
                value: v,
            });
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(SpecError::ProbabilityRange {
                field: field.into(),
                value: v,
            });
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(SpecError::SumNotOne {
            field: field.into(),
            sum,
        });
    }
    Ok(())
}

/// Bayes posterior over the state given one (input, output) observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    /// `P(s | x, y)`, a valid PMF. Falls back to the prior for unreachable
    /// outputs.
    pub probs: Vec<f64>,
    /// Set when `P(y|x) = 0`, i.e. the conditioning event has probability
    /// zero and the prior was returned instead.
    pub unreachable: bool,
}

/// Per-input optimal one-shot estimator table and its expected costs.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationProfile {
    /// `estimator[x][y]` is the state index minimizing posterior expected
    /// distortion; ties break toward the smallest index. For unreachable
    /// outputs the prior-optimal state is stored.
    pub estimator: Vec<Vec<usize>>,
    /// `cost[x] = d*(x)`, the minimum expected distortion when `x` is sent.
    pub cost: Vec<f64>,
    pub d_min: f64,
    pub d_max: f64,
}

/// State-marginalized channel `P(y|x) = sum_s P_S(s) P(y|x,s)`.
pub fn marginal_channel(spec: &ChannelSpec) -> Vec<Vec<f64>> {
    let (nx, ns, ny) = (spec.num_inputs(), spec.num_states(), spec.num_outputs());
    let mut w = vec![vec![0.0; ny]; nx];
    for x in 0..nx {
        for s in 0..ns {
            let ps = spec.state_pmf[s];
            for y in 0..ny {
                w[x][y] += ps * spec.transition[x][s][y];
            }
        }
    }
    w
}

/// Posterior over the state after observing output `y` under input `x`,
/// proportional to `P(y|x,s) P_S(s)`.
pub fn posterior_state(spec: &ChannelSpec, x: usize, y: usize) -> Posterior {
    let ns = spec.num_states();
    let mut probs: Vec<f64> = (0..ns)
        .map(|s| spec.transition[x][s][y] * spec.state_pmf[s])
        .collect();
    let norm: f64 = probs.iter().sum();
    if norm > 0.0 {
        for p in &mut probs {
            *p /= norm;
        }
        Posterior {
            probs,
            unreachable: false,
        }
    } else {
        Posterior {
            probs: spec.state_pmf.clone(),
            unreachable: true,
        }
    }
}

/// Compute the optimal one-shot estimator and the estimation-cost vector.
///
/// For each pair `(x, y)` the estimate is the state minimizing the posterior
/// expected distortion; `d*(x)` sums those minima weighted by `P(y|x)`.
/// The per-pair construction equals the global minimum over all estimator
/// maps because the objective decomposes across observed pairs.
pub fn estimation_profile(spec: &ChannelSpec) -> EstimationProfile {
    let (nx, ns, ny) = (spec.num_inputs(), spec.num_states(), spec.num_outputs());
    let mut estimator = vec![vec![0usize; ny]; nx];
    let mut cost = vec![0.0; nx];

    // Prior-optimal estimate, used for outputs with P(y|x) = 0. These
    // contribute nothing to d*(x).
    let prior_best = argmin_expected_distortion(&spec.state_pmf, &spec.distortion);

    for x in 0..nx {
        let mut total = 0.0;
        for y in 0..ny {
            // Unnormalized posterior weights P(y|x,s) P_S(s); their sum is
            // P(y|x), so the per-y minimum accumulates directly into d*(x).
            let weights: Vec<f64> = (0..ns)
                .map(|s| spec.transition[x][s][y] * spec.state_pmf[s])
                .collect();
            let norm: f64 = weights.iter().sum();
            if norm > 0.0 {
                let (best, value) = min_expected_distortion(&weights, &spec.distortion);
                estimator[x][y] = best;
                total += value;
            } else {
                estimator[x][y] = prior_best;
            }
        }
        cost[x] = total;
    }

    let d_min = cost.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = cost.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    EstimationProfile {
        estimator,
        cost,
        d_min,
        d_max,
    }
}

fn min_expected_distortion(weights: &[f64], distortion: &[Vec<f64>]) -> (usize, f64) {
    let ns = weights.len();
    let mut best = 0usize;
    let mut best_value = f64::INFINITY;
    for cand in 0..ns {
        let mut v = 0.0;
        for s in 0..ns {
            v += weights[s] * distortion[s][cand];
        }
        if v < best_value {
            best_value = v;
            best = cand;
        }
    }
    (best, best_value)
}

fn argmin_expected_distortion(weights: &[f64], distortion: &[Vec<f64>]) -> usize {
    min_expected_distortion(weights, distortion).0
}
