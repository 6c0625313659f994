//! Monte-Carlo harness for the decode-then-estimate scheme.
//!
//! Codebooks are constant-composition: every codeword is an independent
//! uniform permutation of one fixed symbol multiset derived from the target
//! input distribution by largest-remainder rounding. Decoding is maximum
//! likelihood under the state-marginalized memoryless law (the decoder never
//! sees the state), ties resolved toward the smallest message index. The
//! state estimate then applies the per-symbol optimal estimator to the
//! re-encoded decision, exactly as the receiver would.
//!
//! Reports carry the empirical error rate, the empirical average state
//! distortion, the genie variant that estimates from the true codeword, and
//! the analytic distortion bound
//! `(1/(nM)) sum_m sum_i d*(x_i(m)) + Dmax * pe_hat`.
//! Trials run in parallel but accumulate in trial order with compensated
//! summation, so reports are bit-identical for a given (spec, codebook,
//! trials, seed) regardless of thread count.

use crate::channel::{estimation_profile, marginal_channel, ChannelSpec};
use crate::rng::{substream, DOMAIN_CODEWORD, DOMAIN_TRIAL};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Codebook size guard for rate sweeps: `M * n` may not exceed this.
pub const DEFAULT_CODEBOOK_BUDGET: u64 = 1 << 26;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("input distribution has {got} entries, channel has {expected} inputs")]
    CompositionMismatch { expected: usize, got: usize },
    #[error("input distribution does not sum to 1 (sum = {0})")]
    CompositionInfeasible(f64),
    #[error("{messages} messages at block length {n} exceed the codebook budget")]
    TooManyMessages { messages: u64, n: usize },
    #[error("block length and message count must be positive")]
    EmptyCode,
    #[error("codebook of {cells} symbols exceeds the budget of {budget}")]
    MemoryBudget { cells: u64, budget: u64 },
    #[error("rate must be positive, got {0}")]
    InvalidRate(f64),
}

/// A constant-composition random codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub n: usize,
    pub num_messages: usize,
    /// `codewords[m][i]` is the input index sent at position `i` of message `m`.
    pub codewords: Vec<Vec<usize>>,
    /// Target input distribution the composition was rounded from.
    pub composition: Vec<f64>,
    pub seed: u64,
}

/// Outcome of one batch of simulation trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub trials: u64,
    pub pe_hat: f64,
    pub pe_std_err: f64,
    pub dbar_hat: f64,
    pub dbar_std_err: f64,
    /// Average distortion when the true codeword (not the decoded one) feeds
    /// the per-symbol estimator.
    pub genie_dbar_hat: f64,
    pub genie_std_err: f64,
    /// Analytic bound: per-codebook mean estimation cost plus `Dmax * pe_hat`.
    pub bound: f64,
}

/// Symbol counts for one codeword: largest-remainder rounding of `n * pmf`.
fn composition_counts(pmf: &[f64], n: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = pmf.iter().map(|&p| (p * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut remainders: Vec<(usize, f64)> = pmf
        .iter()
        .enumerate()
        .map(|(x, &p)| (x, p * n as f64 - counts[x] as f64))
        .collect();
    // largest remainder first; ties toward the smallest symbol index
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..(n - assigned) {
        counts[remainders[k].0] += 1;
    }
    counts
}

/// Draw a constant-composition codebook. Deterministic in `seed`.
pub fn build_codebook(
    input_pmf: &[f64],
    n: usize,
    num_messages: usize,
    seed: u64,
) -> Result<Codebook, SimError> {
    if n == 0 || num_messages == 0 {
        return Err(SimError::EmptyCode);
    }
    let sum: f64 = input_pmf.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || input_pmf.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(SimError::CompositionInfeasible(sum));
    }
    // codewords are drawn independently and may repeat (forced whenever the
    // rate exceeds log |X|); only the total size is guarded
    if (num_messages as u64).saturating_mul(n as u64) > DEFAULT_CODEBOOK_BUDGET {
        return Err(SimError::TooManyMessages {
            messages: num_messages as u64,
            n,
        });
    }

    let counts = composition_counts(input_pmf, n);
    let mut base = Vec::with_capacity(n);
    for (symbol, &count) in counts.iter().enumerate() {
        base.extend(std::iter::repeat_n(symbol, count));
    }

    let codewords = (0..num_messages)
        .map(|m| {
            let mut word = base.clone();
            let mut rng = substream(seed, DOMAIN_CODEWORD, m as u64);
            // Fisher-Yates
            for i in (1..word.len()).rev() {
                let j = rng.random_range(0..=i);
                word.swap(i, j);
            }
            word
        })
        .collect();

    Ok(Codebook {
        n,
        num_messages,
        codewords,
        composition: input_pmf.to_vec(),
        seed,
    })
}

/// Maximum-likelihood decoding under the per-symbol log-likelihood table
/// `ln_w[x][y]`; ties break toward the smallest message index.
pub fn ml_decode(ln_w: &[Vec<f64>], codebook: &Codebook, received: &[usize]) -> usize {
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (m, word) in codebook.codewords.iter().enumerate() {
        let mut score = 0.0;
        for (i, &x) in word.iter().enumerate() {
            score += ln_w[x][received[i]];
        }
        if score > best_score {
            best_score = score;
            best = m;
        }
    }
    best
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    match cdf.iter().position(|&c| u < c) {
        Some(i) => i,
        None => cdf.len() - 1,
    }
}

fn cdf_of(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    pmf.iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect()
}

/// Neumaier compensated sum over a fixed sequence.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / t;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean)));
    (mean, (ss / (t * (t - 1.0))).sqrt())
}

/// Run `trials` independent transmissions of uniformly drawn messages.
pub fn simulate(
    spec: &ChannelSpec,
    codebook: &Codebook,
    trials: u64,
    seed: u64,
) -> Result<SimReport, SimError> {
    if codebook.composition.len() != spec.num_inputs() {
        return Err(SimError::CompositionMismatch {
            expected: spec.num_inputs(),
            got: codebook.composition.len(),
        });
    }
    if trials == 0 {
        return Err(SimError::EmptyCode);
    }

    let w = marginal_channel(spec);
    let ln_w: Vec<Vec<f64>> = w
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
                .collect()
        })
        .collect();
    let profile = estimation_profile(spec);
    let state_cdf = cdf_of(&spec.state_pmf);
    let output_cdf: Vec<Vec<Vec<f64>>> = spec
        .transition
        .iter()
        .map(|per_state| per_state.iter().map(|row| cdf_of(row)).collect())
        .collect();
    let n = codebook.n;
    let nf = n as f64;

    // (error indicator, average distortion, genie average distortion)
    let per_trial: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(seed, DOMAIN_TRIAL, trial);
            let message = rng.random_range(0..codebook.num_messages);
            let word = &codebook.codewords[message];
            let mut states = vec![0usize; n];
            let mut outputs = vec![0usize; n];
            for i in 0..n {
                states[i] = sample_index(&state_cdf, rng.random::<f64>());
                outputs[i] = sample_index(&output_cdf[word[i]][states[i]], rng.random::<f64>());
            }
            let decoded = ml_decode(&ln_w, codebook, &outputs);
            let decoded_word = &codebook.codewords[decoded];
            let mut distortion = 0.0;
            let mut genie = 0.0;
            for i in 0..n {
                let est = profile.estimator[decoded_word[i]][outputs[i]];
                distortion += spec.distortion[states[i]][est];
                let genie_est = profile.estimator[word[i]][outputs[i]];
                genie += spec.distortion[states[i]][genie_est];
            }
            (
                if decoded != message { 1.0 } else { 0.0 },
                distortion / nf,
                genie / nf,
            )
        })
        .collect();

    let errors: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    let distortions: Vec<f64> = per_trial.iter().map(|t| t.1).collect();
    let genies: Vec<f64> = per_trial.iter().map(|t| t.2).collect();
    let (pe_hat, pe_std_err) = mean_and_std_err(&errors);
    let (dbar_hat, dbar_std_err) = mean_and_std_err(&distortions);
    let (genie_dbar_hat, genie_std_err) = mean_and_std_err(&genies);

    let codebook_cost = compensated_sum(
        codebook
            .codewords
            .iter()
            .map(|word| word.iter().map(|&x| profile.cost[x]).sum::<f64>()),
    ) / (nf * codebook.num_messages as f64);
    let bound = codebook_cost + spec.max_distortion() * pe_hat;

    Ok(SimReport {
        trials,
        pe_hat,
        pe_std_err,
        dbar_hat,
        dbar_std_err,
        genie_dbar_hat,
        genie_std_err,
        bound,
    })
}

/// One simulation per block length with `M = ceil(e^{n R})` messages.
pub fn rate_sweep(
    spec: &ChannelSpec,
    input_pmf: &[f64],
    block_lengths: &[usize],
    rate: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<SimReport>, SimError> {
    rate_sweep_with_budget(
        spec,
        input_pmf,
        block_lengths,
        rate,
        trials,
        seed,
        DEFAULT_CODEBOOK_BUDGET,
    )
}

pub fn rate_sweep_with_budget(
    spec: &ChannelSpec,
    input_pmf: &[f64],
    block_lengths: &[usize],
    rate: f64,
    trials: u64,
    seed: u64,
    budget: u64,
) -> Result<Vec<SimReport>, SimError> {
    if !(rate > 0.0) {
        return Err(SimError::InvalidRate(rate));
    }
    let mut reports = Vec::with_capacity(block_lengths.len());
    for &n in block_lengths {
        let messages_f = (n as f64 * rate).exp().ceil();
        let messages = if messages_f > u64::MAX as f64 {
            u64::MAX
        } else {
            messages_f as u64
        };
        let cells = messages.saturating_mul(n as u64);
        if cells > budget {
            return Err(SimError::MemoryBudget { cells, budget });
        }
        let codebook = build_codebook(input_pmf, n, messages as usize, seed)?;
        reports.push(simulate(spec, &codebook, trials, seed)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::test_support::on_off_channel;
    use crate::solver::unconstrained_capacity;

    fn noiseless_identity() -> ChannelSpec {
        ChannelSpec {
            input_alphabet: vec!["0".into(), "1".into()],
            state_alphabet: vec!["s".into()],
            output_alphabet: vec!["0".into(), "1".into()],
            state_pmf: vec![1.0],
            transition: vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            distortion: vec![vec![0.0]],
            input_cost: None,
        }
    }

    #[test]
    fn composition_is_exact() {
        let cb = build_codebook(&[0.5, 0.5], 4, 6, 9).unwrap();
        for word in &cb.codewords {
            assert_eq!(word.iter().filter(|&&x| x == 0).count(), 2);
        }
        // counts stay within one of n * p
        let cb = build_codebook(&[0.2, 0.8], 128, 3, 9).unwrap();
        for word in &cb.codewords {
            let zeros = word.iter().filter(|&&x| x == 0).count() as f64;
            assert!((zeros - 0.2 * 128.0).abs() < 1.0);
        }
    }

    #[test]
    fn point_mass_composition() {
        let cb = build_codebook(&[0.0, 1.0], 5, 1, 1).unwrap();
        assert_eq!(cb.codewords, vec![vec![1, 1, 1, 1, 1]]);
    }

    #[test]
    fn codebooks_are_seed_deterministic() {
        let a = build_codebook(&[0.3, 0.7], 32, 8, 42).unwrap();
        let b = build_codebook(&[0.3, 0.7], 32, 8, 42).unwrap();
        assert_eq!(a, b);
        let c = build_codebook(&[0.3, 0.7], 32, 8, 43).unwrap();
        assert_ne!(a.codewords, c.codewords);
    }

    #[test]
    fn message_count_guard() {
        // repeated codewords are allowed past |X|^n ...
        assert!(build_codebook(&[0.5, 0.5], 3, 9, 0).is_ok());
        // ... but the total size is capped
        assert!(matches!(
            build_codebook(&[0.5, 0.5], 1 << 20, 1 << 20, 0),
            Err(SimError::TooManyMessages { .. })
        ));
    }

    #[test]
    fn noiseless_channel_is_error_free() {
        let spec = noiseless_identity();
        // distinct codewords guaranteed by hand
        let codebook = Codebook {
            n: 4,
            num_messages: 2,
            codewords: vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0]],
            composition: vec![0.5, 0.5],
            seed: 0,
        };
        let report = simulate(&spec, &codebook, 500, 7).unwrap();
        assert_eq!(report.pe_hat, 0.0);
        assert_eq!(report.dbar_hat, 0.0);
        assert_eq!(report.bound, 0.0);
    }

    #[test]
    fn reports_are_bit_deterministic() {
        let spec = on_off_channel(0.3);
        let cb = build_codebook(&[0.2, 0.8], 32, 4, 11).unwrap();
        let a = simulate(&spec, &cb, 400, 5).unwrap();
        let b = simulate(&spec, &cb, 400, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_rate_code_estimates_its_own_cost() {
        // single message: decoding never fails, distortion concentrates on
        // the codeword's average estimation cost
        let spec = on_off_channel(0.3);
        let cb = build_codebook(&[0.25, 0.75], 64, 1, 3).unwrap();
        let report = simulate(&spec, &cb, 4000, 17).unwrap();
        assert_eq!(report.pe_hat, 0.0);
        let zeros = cb.codewords[0].iter().filter(|&&x| x == 0).count() as f64;
        let expected = zeros * 0.3 / 64.0;
        assert!(
            (report.dbar_hat - expected).abs() <= 3.0 * report.dbar_std_err,
            "dbar {} expected {expected} (3se = {})",
            report.dbar_hat,
            3.0 * report.dbar_std_err
        );
    }

    #[test]
    fn distortion_bound_holds_empirically() {
        let spec = on_off_channel(0.3);
        let cb = build_codebook(&[0.2, 0.8], 128, 2, 21).unwrap();
        let report = simulate(&spec, &cb, 3000, 23).unwrap();
        assert!(
            report.dbar_hat <= report.bound + 3.0 * report.dbar_std_err,
            "dbar {} vs bound {}",
            report.dbar_hat,
            report.bound
        );
        // genie estimation can only improve on decode-then-estimate
        assert!(report.genie_dbar_hat <= report.dbar_hat + 3.0 * report.genie_std_err);
    }

    #[test]
    fn rate_sweep_guards() {
        let spec = on_off_channel(0.3);
        assert!(matches!(
            rate_sweep(&spec, &[0.2, 0.8], &[16], -0.5, 10, 0),
            Err(SimError::InvalidRate(_))
        ));
        assert!(matches!(
            rate_sweep_with_budget(&spec, &[0.2, 0.8], &[64], 0.5, 10, 0, 1024),
            Err(SimError::MemoryBudget { .. })
        ));
    }

    #[test]
    fn error_rate_improves_with_block_length_below_capacity() {
        let spec = on_off_channel(0.3);
        let capacity = unconstrained_capacity(&spec).value;
        let reports = rate_sweep(
            &spec,
            &[0.6151428428571429, 0.3848571571428571],
            &[16, 48],
            0.5 * capacity,
            1500,
            29,
        )
        .unwrap();
        let slack = 2.0 * (reports[0].pe_std_err + reports[1].pe_std_err);
        assert!(
            reports[1].pe_hat <= reports[0].pe_hat + slack,
            "pe did not improve: {} -> {}",
            reports[0].pe_hat,
            reports[1].pe_hat
        );
    }

    #[test]
    fn reliable_configurations_respect_the_converse() {
        // desk-scale sanity: whenever decoding is reliable and the empirical
        // distortion fits a budget D, the operating rate cannot beat the
        // constrained capacity at D (up to finite-blocklength slack)
        let spec = on_off_channel(0.3);
        let mut checked = 0;
        for &(n, m, seed) in &[(64usize, 4usize, 43u64), (128, 2, 47), (96, 8, 53)] {
            let cb = build_codebook(&[0.3, 0.7], n, m, seed).unwrap();
            let report = simulate(&spec, &cb, 4000, seed + 1).unwrap();
            if report.pe_hat >= 0.01 {
                continue;
            }
            checked += 1;
            let budget = report.dbar_hat; // the tightest D this run satisfies
            let rate = (m as f64).ln() / n as f64;
            let cap = crate::solver::capacity_distortion(
                &spec,
                budget + 2.0 * report.dbar_std_err,
            )
            .unwrap()
            .value;
            assert!(
                rate <= cap + 0.15,
                "n={n} M={m}: rate {rate:.4} beats C({budget:.4}) = {cap:.4}"
            );
        }
        assert!(checked >= 2, "too few reliable configurations to check");
    }

    #[test]
    fn rates_above_log_alphabet_are_hopeless() {
        let spec = on_off_channel(0.3);
        let rate = 1.5 * std::f64::consts::LN_2;
        let reports = rate_sweep(&spec, &[0.2, 0.8], &[8], rate, 400, 31).unwrap();
        assert!(reports[0].pe_hat > 0.5, "pe = {}", reports[0].pe_hat);
    }

    #[test]
    fn simulation_matches_exact_enumeration_at_tiny_scale() {
        // full enumeration of (s^n, y^n) for each message at n = 8
        let spec = on_off_channel(0.3);
        let cb = build_codebook(&[0.25, 0.75], 8, 2, 37).unwrap();
        assert_ne!(cb.codewords[0], cb.codewords[1], "degenerate draw");
        let w = marginal_channel(&spec);
        let ln_w: Vec<Vec<f64>> = w
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect();
        let n = 8;
        let mut exact_pe = 0.0;
        for (m, word) in cb.codewords.iter().enumerate() {
            for pattern in 0..(1u32 << (2 * n)) {
                let mut prob = 1.0;
                let mut outputs = vec![0usize; n];
                for i in 0..n {
                    let s = ((pattern >> (2 * i)) & 1) as usize;
                    let y = ((pattern >> (2 * i + 1)) & 1) as usize;
                    prob *= spec.state_pmf[s] * spec.transition[word[i]][s][y];
                    outputs[i] = y;
                }
                if prob == 0.0 {
                    continue;
                }
                if ml_decode(&ln_w, &cb, &outputs) != m {
                    exact_pe += prob;
                }
            }
        }
        exact_pe /= cb.num_messages as f64;

        let report = simulate(&spec, &cb, 20_000, 41).unwrap();
        assert!(
            (report.pe_hat - exact_pe).abs() <= 3.0 * report.pe_std_err.max(1e-4),
            "simulated {} exact {exact_pe}",
            report.pe_hat
        );
    }
}
