//! Closed-form capacity-distortion curves used as solver oracles.
//!
//! Two channel families admit exact answers. The block on/off channel
//! (`Y = S * X` over length-K binary blocks with a Bernoulli(r) state held
//! fixed per block, Hamming state distortion) has a piecewise closed form in
//! the distortion budget. The additive Gaussian-state channel has a threshold
//! form under squared error. Both are evaluated in nats.

use crate::channel::ChannelSpec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClosedFormError {
    #[error("state probability r = {0} must lie strictly inside (0, 0.5)")]
    StateProbability(f64),
    #[error("block length K must be at least 1")]
    BlockLength,
    #[error("distortion target {0} must be nonnegative")]
    NegativeDistortion(f64),
    #[error("block length {0} too large to materialize (limit 8)")]
    BlockTooLarge(u32),
}

/// Binary entropy in nats, with H2(0) = H2(1) = 0 by continuity.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

/// Which branch of the block on/off channel solution applies.
///
/// For long enough blocks the unconstrained optimum already avoids the
/// all-zero block, so the distortion constraint never binds; otherwise the
/// all-zero block keeps positive mass and the constraint can become active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmcRegime {
    /// The all-zero input is never used at the optimum (indicator 1).
    ZeroBlockUnused,
    /// The all-zero input keeps positive probability (indicator 2).
    ZeroBlockUsed,
}

impl BmcRegime {
    /// Conventional 1/2 indicator.
    pub fn index(self) -> u8 {
        match self {
            BmcRegime::ZeroBlockUnused => 1,
            BmcRegime::ZeroBlockUsed => 2,
        }
    }
}

/// Capacity-distortion value for the block on/off channel, in nats per
/// channel use, together with the total probability of non-zero blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmcCapDist {
    pub value: f64,
    pub p_star: f64,
}

/// Block on/off channel parameters: block length `k` and `r = Pr[S = 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmcParams {
    pub k: u32,
    pub r: f64,
}

impl BmcParams {
    pub fn new(k: u32, r: f64) -> Result<Self, ClosedFormError> {
        if k < 1 {
            return Err(ClosedFormError::BlockLength);
        }
        if !(r > 0.0 && r < 0.5) {
            return Err(ClosedFormError::StateProbability(r));
        }
        Ok(Self { k, r })
    }

    fn nonzero_count(&self) -> f64 {
        2f64.powi(self.k as i32) - 1.0
    }

    /// Regime test: the zero block drops out exactly when
    /// `2^K > 1 + (1 - r)^(-1/r)`.
    pub fn regime(&self) -> BmcRegime {
        let threshold = 1.0 + (1.0 - self.r).powf(-1.0 / self.r);
        if 2f64.powi(self.k as i32) > threshold {
            BmcRegime::ZeroBlockUnused
        } else {
            BmcRegime::ZeroBlockUsed
        }
    }

    /// Mutual information per channel use at non-zero-block probability `p`.
    fn rate_at(&self, p: f64) -> f64 {
        let r = self.r;
        (binary_entropy(p * r) + p * (r * self.nonzero_count().ln() - binary_entropy(r)))
            / self.k as f64
    }

    /// Capacity-distortion value at budget `d`.
    ///
    /// In the zero-block-unused regime the curve is flat at
    /// `r log(2^K - 1) / K` for every `d >= 0`. Otherwise the unconstrained
    /// optimizer `p_u = (1/r) / (1 + e^{H2(r)/r} / (2^K - 1))` applies while
    /// its distortion `(1 - p_u) r` fits the budget, and the constrained
    /// branch `p* = 1 - d/r` applies below that threshold.
    pub fn capdist(&self, d: f64) -> Result<BmcCapDist, ClosedFormError> {
        if d < 0.0 {
            return Err(ClosedFormError::NegativeDistortion(d));
        }
        let r = self.r;
        match self.regime() {
            BmcRegime::ZeroBlockUnused => Ok(BmcCapDist {
                value: r * self.nonzero_count().ln() / self.k as f64,
                p_star: 1.0,
            }),
            BmcRegime::ZeroBlockUsed => {
                let q = (binary_entropy(r) / r).exp() / self.nonzero_count();
                let p_unconstrained = (1.0 / r) / (1.0 + q);
                let threshold = r - 1.0 / (1.0 + q);
                let p_star = if d >= threshold {
                    p_unconstrained
                } else {
                    // here d < threshold < r, so p_star lands in (0, 1]
                    1.0 - d / r
                };
                Ok(BmcCapDist {
                    value: self.rate_at(p_star),
                    p_star,
                })
            }
        }
    }

    /// Rate of the train-then-transmit baseline at zero distortion: spend one
    /// channel use per block on a known symbol, leaving `K - 1` for data.
    pub fn training_rate(&self) -> f64 {
        self.r * (self.k as f64 - 1.0) * std::f64::consts::LN_2 / self.k as f64
    }

    /// Materialize the super-symbol channel: inputs and outputs are the 2^K
    /// binary blocks, the state multiplies the whole block, distortion is
    /// Hamming on the state. Rates from a solver on this spec are per block
    /// and must be divided by K.
    pub fn build_channel(&self) -> Result<ChannelSpec, ClosedFormError> {
        if self.k > 8 {
            return Err(ClosedFormError::BlockTooLarge(self.k));
        }
        let k = self.k as usize;
        let n = 1usize << k;
        let labels: Vec<String> = (0..n).map(|i| format!("{i:0k$b}")).collect();
        let mut transition = vec![vec![vec![0.0; n]; 2]; n];
        for (x, row) in transition.iter_mut().enumerate() {
            row[0][0] = 1.0; // state 0 blanks the block
            row[1][x] = 1.0; // state 1 passes it through
        }
        let spec = ChannelSpec {
            input_alphabet: labels.clone(),
            state_alphabet: vec!["0".into(), "1".into()],
            output_alphabet: labels,
            state_pmf: vec![1.0 - self.r, self.r],
            transition,
            distortion: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            input_cost: None,
        };
        debug_assert!(spec.validate().is_ok());
        Ok(spec)
    }
}

/// Slope of the single-use on/off capacity-distortion curve at `d -> 0`:
/// `-ln(1 - r) / r`.
pub fn bmc_small_d_slope(r: f64) -> Result<f64, ClosedFormError> {
    if !(r > 0.0 && r < 0.5) {
        return Err(ClosedFormError::StateProbability(r));
    }
    // ln_1p keeps the r -> 0 limit accurate
    Ok(-(-r).ln_1p() / r)
}

/// Capacity-distortion of the additive Gaussian-state channel
/// `Y = X + S + Z`, `S ~ N(0, Q)`, `Z ~ N(0, N)`, power limit `P`, squared
/// error on the state. The estimation cost is the same for every input, so
/// the curve is all-or-nothing: `log(1 + P/(Q+N))` once `d` exceeds the
/// joint-estimation floor `QN/(Q+N)`, and zero below it.
pub fn gaussian_state_cd(p: f64, q: f64, n: f64, d: f64) -> f64 {
    debug_assert!(p > 0.0 && q > 0.0 && n > 0.0 && d >= 0.0);
    if d > q * n / (q + n) {
        (1.0 + p / (q + n)).ln()
    } else {
        0.0
    }
}

/// Rate/distortion pair achievable when the encoder knows the state
/// non-causally and splits power with fraction `gamma` on the message.
pub fn known_state_tradeoff(gamma: f64, p: f64, q: f64, n: f64) -> (f64, f64) {
    debug_assert!((0.0..=1.0).contains(&gamma) && p > 0.0 && q > 0.0 && n > 0.0);
    let rate = 0.5 * (1.0 + gamma * p / n).ln();
    let denom = (q.sqrt() + ((1.0 - gamma) * p).sqrt()).powi(2) + gamma * p + n;
    let distortion = q * (gamma * p + n) / denom;
    (rate, distortion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::estimation_profile;

    #[test]
    fn regime_thresholds() {
        // small r: the zero block drops out already at K = 2
        assert_eq!(BmcParams::new(2, 0.1).unwrap().regime().index(), 1);
        // larger r: K = 2 keeps the zero block, K = 3 drops it
        assert_eq!(BmcParams::new(2, 0.3).unwrap().regime().index(), 2);
        assert_eq!(BmcParams::new(3, 0.3).unwrap().regime().index(), 1);
        // single use is always in the mixed regime
        assert_eq!(BmcParams::new(1, 0.1).unwrap().regime().index(), 2);
        assert_eq!(BmcParams::new(1, 0.45).unwrap().regime().index(), 2);
    }

    #[test]
    fn flat_curve_when_zero_block_unused() {
        let p = BmcParams::new(2, 0.1).unwrap();
        let expected = 0.1 * 3f64.ln() / 2.0; // 0.054930614...
        for &d in &[0.0, 0.03, 0.1, 2.0] {
            let out = p.capdist(d).unwrap();
            assert!((out.value - expected).abs() < 1e-15);
            assert!((out.p_star - 1.0).abs() < 1e-15);
        }
        assert!((expected - 0.05493061443340549).abs() < 1e-15);
        // zero-distortion capacity stays strictly positive for K >= 2
        assert!(p.capdist(0.0).unwrap().value > 0.0);
        // same zero-distortion expression holds in the mixed regime: the
        // constrained branch at d = 0 forces p* = 1
        let mixed = BmcParams::new(2, 0.3).unwrap();
        let at_zero = mixed.capdist(0.0).unwrap();
        assert!((at_zero.p_star - 1.0).abs() < 1e-15);
        assert!((at_zero.value - 0.3 * 3f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_use_constrained_branch() {
        // K = 1, r = 0.4, D = 0.1: p* = 1 - D/r = 0.75,
        // value = H2(0.3) - 0.75 H2(0.4)
        let p = BmcParams::new(1, 0.4).unwrap();
        let out = p.capdist(0.1).unwrap();
        assert!((out.p_star - 0.75).abs() < 1e-15);
        let expected = binary_entropy(0.3) - 0.75 * binary_entropy(0.4);
        assert!((out.value - expected).abs() < 1e-15);
        assert!((out.value - 0.10610555179795111).abs() < 1e-12);
    }

    #[test]
    fn single_use_slack_branch_matches_unconstrained_optimum() {
        // K = 1, r = 0.4, generous D: p* = (1/r)/(1 + e^{H2(r)/r})
        let p = BmcParams::new(1, 0.4).unwrap();
        let out = p.capdist(0.4).unwrap();
        assert!((out.p_star - 0.39190214).abs() < 1e-7);
        assert!((out.value - 0.17050468).abs() < 1e-7);
        // grid check: no interior p beats it
        for i in 0..=1000 {
            let cand = i as f64 / 1000.0;
            assert!(p.rate_at(cand) <= out.value + 1e-12);
        }
    }

    #[test]
    fn branch_boundary_is_continuous() {
        for &(k, r) in &[(1u32, 0.4f64), (2, 0.3), (2, 0.45), (1, 0.1)] {
            let p = BmcParams::new(k, r).unwrap();
            if p.regime() == BmcRegime::ZeroBlockUnused {
                continue;
            }
            let q = (binary_entropy(r) / r).exp() / p.nonzero_count();
            let threshold = r - 1.0 / (1.0 + q);
            let below = p.capdist((threshold - 1e-12).max(0.0)).unwrap().value;
            let above = p.capdist(threshold + 1e-12).unwrap().value;
            assert!((below - above).abs() < 1e-9, "k={k} r={r}");
        }
    }

    #[test]
    fn training_rate_values() {
        assert_eq!(BmcParams::new(1, 0.3).unwrap().training_rate(), 0.0);
        let got = BmcParams::new(2, 0.1).unwrap().training_rate();
        assert!((got - 0.03465735902799726).abs() < 1e-15);
    }

    #[test]
    fn joint_scheme_dominates_training_and_ratio_tends_to_one() {
        let r = 0.1;
        let mut prev_ratio = f64::INFINITY;
        for k in 2..=22 {
            let p = BmcParams::new(k, r).unwrap();
            let joint = p.capdist(0.0).unwrap().value;
            let training = p.training_rate();
            assert!(joint >= training - 1e-15, "K = {k}");
            let ratio = joint / training;
            assert!(ratio <= prev_ratio + 1e-12, "ratio not shrinking at K = {k}");
            prev_ratio = ratio;
        }
        // the gap closes like K/(K-1): about 5.3% at K = 20, under 5% by K = 22
        let ratio20 = {
            let p = BmcParams::new(20, r).unwrap();
            p.capdist(0.0).unwrap().value / p.training_rate()
        };
        assert!((ratio20 - 1.0).abs() < 0.055);
        let ratio22 = {
            let p = BmcParams::new(22, r).unwrap();
            p.capdist(0.0).unwrap().value / p.training_rate()
        };
        assert!((ratio22 - 1.0).abs() < 0.05);
    }

    #[test]
    fn small_d_slope_values() {
        let slope = bmc_small_d_slope(0.4).unwrap();
        assert!((slope - 1.2770640594149772).abs() < 1e-12);
        // r -> 0 limit is 1
        assert!((bmc_small_d_slope(1e-9).unwrap() - 1.0).abs() < 1e-8);
        // finite difference against the K = 1 curve
        let p = BmcParams::new(1, 0.4).unwrap();
        let d = 1e-4;
        let fd = p.capdist(d).unwrap().value / d;
        assert!((fd - slope).abs() / slope < 0.02);
    }

    #[test]
    fn gaussian_state_threshold() {
        // below the joint-estimation floor the problem is infeasible-ish: 0
        assert_eq!(gaussian_state_cd(1.0, 1.0, 1.0, 0.5), 0.0);
        assert_eq!(gaussian_state_cd(1.0, 1.0, 1.0, 0.2), 0.0);
        let v = gaussian_state_cd(1.0, 1.0, 1.0, 0.6);
        assert!((v - 1.5f64.ln()).abs() < 1e-15);
        // vanishing power gives vanishing rate
        assert!(gaussian_state_cd(1e-12, 1.0, 1.0, 0.6) < 1e-11);
    }

    #[test]
    fn known_state_endpoints() {
        let (rate, dist) = known_state_tradeoff(1.0, 2.0, 1.0, 0.5);
        assert!((rate - 0.5 * (1.0f64 + 2.0 / 0.5).ln()).abs() < 1e-15);
        assert!((dist - 1.0 * 2.5 / (1.0 + 2.5)).abs() < 1e-15);
        let (rate, _) = known_state_tradeoff(0.0, 2.0, 1.0, 0.5);
        assert_eq!(rate, 0.0);
        // mid split, unit parameters, checked against independent arithmetic
        let (rate, dist) = known_state_tradeoff(0.5, 1.0, 1.0, 1.0);
        assert!((rate - 0.2027325540540822).abs() < 1e-15);
        let denom = (1.0 + 0.5f64.sqrt()).powi(2) + 1.5;
        assert!((dist - 1.5 / denom).abs() < 1e-15);
    }

    #[test]
    fn built_channel_profile() {
        let spec = BmcParams::new(1, 0.35).unwrap().build_channel().unwrap();
        let profile = estimation_profile(&spec);
        assert!((profile.cost[0] - 0.35).abs() < 1e-15);
        assert!(profile.cost[1].abs() < 1e-15);

        let spec = BmcParams::new(3, 0.2).unwrap().build_channel().unwrap();
        assert_eq!(spec.num_inputs(), 8);
        let profile = estimation_profile(&spec);
        assert!((profile.cost[0] - 0.2).abs() < 1e-15);
        for x in 1..8 {
            assert!(profile.cost[x].abs() < 1e-15, "x = {x}");
        }
        // the all-zero row maps to output 0 under both states
        assert_eq!(spec.transition[0][0][0], 1.0);
        assert_eq!(spec.transition[0][1][0], 1.0);

        assert_eq!(
            BmcParams::new(9, 0.2).unwrap().build_channel(),
            Err(ClosedFormError::BlockTooLarge(9))
        );
    }

    #[test]
    fn parameter_validation() {
        assert!(BmcParams::new(0, 0.3).is_err());
        assert!(BmcParams::new(1, 0.5).is_err());
        assert!(BmcParams::new(1, 0.0).is_err());
        assert!(BmcParams::new(3, 0.3).unwrap().capdist(-0.1).is_err());
    }
}
