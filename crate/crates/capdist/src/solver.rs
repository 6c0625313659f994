//! Constrained capacity solver.
//!
//! Maximizes I(X; Y) over the state-marginalized channel subject to up to two
//! linear input constraints: the estimation-cost budget `sum_x P(x) d*(x) <= D`
//! and an optional per-input cost budget `sum_x P(x) v(x) <= V`.
//!
//! The inner engine is alternating maximization on the Lagrangian surrogate
//! `I(X; Y) - sum_j lambda_j <c_j, P>`: linear penalties enter the classic
//! closed-form input update through the exponent, so each inner problem keeps
//! the usual per-iteration upper/lower capacity bracket. The multipliers are
//! found by bisection — the distortion multiplier in the inner loop, the input
//! cost multiplier (when present) in an outer loop around it — with the
//! lambda = 0 shortcut whenever the unconstrained optimum is already feasible.

use crate::channel::{estimation_profile, marginal_channel, ChannelSpec};
use thiserror::Error;

/// Bracket width (nats) at which the inner alternating maximization stops.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Inner iteration cap; hitting it is reported through `converged = false`.
pub const MAX_ITERATIONS: u64 = 100_000;
/// Constraint slack accepted as feasible.
const FEAS_TOL: f64 = 1e-9;
/// Bisection stops once the attained cost is within this of the budget.
const SLACK_ABS: f64 = 1e-8;
/// ... and the complementary-slackness product is below this.
const SLACK_PROD: f64 = 1e-7;
/// Relative multiplier-interval width at which bisection gives up.
const LAMBDA_INTERVAL_REL: f64 = 1e-12;
/// Multiplier doubling cap.
const LAMBDA_CAP: f64 = 1e18;
/// Probability floor keeping exponent updates defined.
const PMF_FLOOR: f64 = 1e-300;
/// Reported PMF entries below this are truncated to exactly zero.
const REPORT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("distortion target {target} below the minimum achievable {d_min}")]
    InfeasibleDistortion { target: f64, d_min: f64 },
    #[error("no input distribution satisfies both budgets (D = {d}, V = {v})")]
    InfeasibleConstraints { d: f64, v: f64 },
    #[error("channel spec has no input_cost vector")]
    MissingInputCost,
}

/// Solution of one constrained capacity problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CapDistSolution {
    /// Optimal mutual information, nats per channel use.
    pub value: f64,
    /// Maximizing input distribution (entries below 1e-12 reported as 0).
    pub input_pmf: Vec<f64>,
    pub lambda_d: f64,
    pub lambda_v: f64,
    pub distortion_attained: f64,
    pub cost_attained: f64,
    pub active_d: bool,
    pub active_v: bool,
    /// Total inner iterations across all multiplier evaluations.
    pub iterations: u64,
    pub converged: bool,
}

/// Mutual information I(X; Y) in nats for input `pmf` over channel rows `w`.
pub fn mutual_information(pmf: &[f64], w: &[Vec<f64>]) -> f64 {
    let ny = w[0].len();
    let mut out_dist = vec![0.0; ny];
    for (x, row) in w.iter().enumerate() {
        for y in 0..ny {
            out_dist[y] += pmf[x] * row[y];
        }
    }
    let mut info = 0.0;
    for (x, row) in w.iter().enumerate() {
        if pmf[x] == 0.0 {
            continue;
        }
        let mut kl = 0.0;
        for y in 0..ny {
            if row[y] > 0.0 {
                kl += row[y] * (row[y] / out_dist[y]).ln();
            }
        }
        info += pmf[x] * kl;
    }
    info.max(0.0)
}

struct BaOutcome {
    pmf: Vec<f64>,
    iterations: u64,
    converged: bool,
}

/// One alternating-maximization run for the surrogate
/// `I(X; Y) - <penalty, P>` at fixed penalty.
fn alternating_max(w: &[Vec<f64>], penalty: &[f64], start: Option<&[f64]>) -> BaOutcome {
    ba_with_limit(w, penalty, start, MAX_ITERATIONS)
}

fn ba_with_limit(
    w: &[Vec<f64>],
    penalty: &[f64],
    start: Option<&[f64]>,
    max_iterations: u64,
) -> BaOutcome {
    let nx = w.len();
    let ny = w[0].len();
    let mut pmf: Vec<f64> = match start {
        Some(p) => p.iter().map(|&v| v.max(PMF_FLOOR)).collect(),
        None => vec![1.0 / nx as f64; nx],
    };
    // per-row sum of w ln w, reused every iteration
    let row_neg_entropy: Vec<f64> = w
        .iter()
        .map(|row| {
            row.iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| v * v.ln())
                .sum()
        })
        .collect();

    let mut exponent = vec![0.0; nx];
    let mut out_dist = vec![0.0; ny];
    let mut ln_out = vec![0.0; ny];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        iterations += 1;
        out_dist.iter_mut().for_each(|v| *v = 0.0);
        for (x, row) in w.iter().enumerate() {
            let px = pmf[x];
            for y in 0..ny {
                out_dist[y] += px * row[y];
            }
        }
        for y in 0..ny {
            ln_out[y] = if out_dist[y] > 0.0 {
                out_dist[y].ln()
            } else {
                0.0 // output unreachable under the floor: its w column is all zero
            };
        }
        let mut upper = f64::NEG_INFINITY;
        for (x, row) in w.iter().enumerate() {
            let mut cross = 0.0;
            for y in 0..ny {
                if row[y] > 0.0 {
                    cross += row[y] * ln_out[y];
                }
            }
            let e = row_neg_entropy[x] - cross - penalty[x];
            exponent[x] = e;
            upper = upper.max(e);
        }
        // multiplicative update, shifted by the max exponent for stability;
        // ln(sum p e^exponent) is the standard per-iteration lower bound
        let mut z = 0.0;
        for x in 0..nx {
            pmf[x] *= (exponent[x] - upper).exp();
            z += pmf[x];
        }
        let lower = z.ln() + upper;
        for p in pmf.iter_mut() {
            *p = (*p / z).max(PMF_FLOOR);
        }
        if upper - lower <= CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }
    BaOutcome {
        pmf,
        iterations,
        converged,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of a single-constraint dual search at a fixed extra penalty.
struct OneConstraintResult {
    pmf: Vec<f64>,
    lambda: f64,
    iterations: u64,
    converged: bool,
}

/// Maximize the surrogate `I - <extra, P>` subject to `<cost, P> <= limit`
/// via bisection on the cost multiplier.
fn solve_one_constraint(
    w: &[Vec<f64>],
    cost: &[f64],
    limit: f64,
    extra: &[f64],
) -> OneConstraintResult {
    let nx = w.len();
    let penalty_at = |lambda: f64| -> Vec<f64> {
        (0..nx).map(|x| extra[x] + lambda * cost[x]).collect()
    };

    let mut iterations = 0;
    let mut all_converged = true;

    let base = alternating_max(w, extra, None);
    iterations += base.iterations;
    all_converged &= base.converged;
    let base_attained = dot(cost, &base.pmf);
    if base_attained <= limit + FEAS_TOL {
        return OneConstraintResult {
            pmf: base.pmf,
            lambda: 0.0,
            iterations,
            converged: all_converged,
        };
    }

    // double until the constraint is met
    let mut lo = 0.0;
    let mut lo_pmf = base.pmf;
    let mut lo_attained = base_attained;
    let mut hi = 1.0;
    let (mut hi_pmf, mut hi_attained);
    loop {
        let run = alternating_max(w, &penalty_at(hi), Some(&lo_pmf));
        iterations += run.iterations;
        all_converged &= run.converged;
        let attained = dot(cost, &run.pmf);
        if attained <= limit + FEAS_TOL {
            hi_pmf = run.pmf;
            hi_attained = attained;
            break;
        }
        lo = hi;
        lo_pmf = run.pmf;
        lo_attained = attained;
        hi *= 2.0;
        if hi > LAMBDA_CAP {
            // constraint unreachable by penalization; report the best iterate
            return OneConstraintResult {
                pmf: lo_pmf,
                lambda: lo,
                iterations,
                converged: false,
            };
        }
    }

    loop {
        let slack = limit - hi_attained; // >= -FEAS_TOL by construction
        if slack <= SLACK_ABS && hi * slack <= SLACK_PROD {
            return OneConstraintResult {
                pmf: hi_pmf,
                lambda: hi,
                iterations,
                converged: all_converged,
            };
        }
        if hi - lo <= LAMBDA_INTERVAL_REL * hi.max(1.0) {
            // kink in the capacity-cost curve: both endpoints maximize the
            // same surrogate, so their exact-budget mixture is optimal too
            let t = (limit - hi_attained) / (lo_attained - hi_attained);
            let pmf: Vec<f64> = (0..nx)
                .map(|x| t * lo_pmf[x] + (1.0 - t) * hi_pmf[x])
                .collect();
            return OneConstraintResult {
                pmf,
                lambda: hi,
                iterations,
                converged: all_converged,
            };
        }
        let mid = 0.5 * (lo + hi);
        let run = alternating_max(w, &penalty_at(mid), Some(&hi_pmf));
        iterations += run.iterations;
        all_converged &= run.converged;
        let attained = dot(cost, &run.pmf);
        if attained <= limit + FEAS_TOL {
            hi = mid;
            hi_pmf = run.pmf;
            hi_attained = attained;
        } else {
            lo = mid;
            lo_pmf = run.pmf;
            lo_attained = attained;
        }
    }
}

/// Zero out reported dust and renormalize.
fn clean_pmf(mut pmf: Vec<f64>) -> Vec<f64> {
    for p in pmf.iter_mut() {
        if *p < REPORT_FLOOR {
            *p = 0.0;
        }
    }
    let sum: f64 = pmf.iter().sum();
    for p in pmf.iter_mut() {
        *p /= sum;
    }
    pmf
}

fn finalize(
    spec: &ChannelSpec,
    w: &[Vec<f64>],
    d_cost: &[f64],
    pmf: Vec<f64>,
    lambda_d: f64,
    lambda_v: f64,
    iterations: u64,
    converged: bool,
) -> CapDistSolution {
    let pmf = clean_pmf(pmf);
    let value = mutual_information(&pmf, w);
    let distortion_attained = dot(d_cost, &pmf);
    let cost_attained = spec
        .input_cost
        .as_ref()
        .map(|v| dot(v, &pmf))
        .unwrap_or(0.0);
    CapDistSolution {
        value,
        input_pmf: pmf,
        lambda_d,
        lambda_v,
        distortion_attained,
        cost_attained,
        active_d: lambda_d > 0.0,
        active_v: lambda_v > 0.0,
        iterations,
        converged,
    }
}

/// Unconstrained channel capacity of the state-marginalized channel.
pub fn unconstrained_capacity(spec: &ChannelSpec) -> CapDistSolution {
    let w = marginal_channel(spec);
    let profile = estimation_profile(spec);
    let zeros = vec![0.0; spec.num_inputs()];
    let run = alternating_max(&w, &zeros, None);
    finalize(
        spec,
        &w,
        &profile.cost,
        run.pmf,
        0.0,
        0.0,
        run.iterations,
        run.converged,
    )
}

/// Capacity-distortion value `C(D)`: maximum I(X; Y) over input laws whose
/// average estimation cost fits the budget `d`.
pub fn capacity_distortion(spec: &ChannelSpec, d: f64) -> Result<CapDistSolution, SolverError> {
    let profile = estimation_profile(spec);
    if d < profile.d_min {
        return Err(SolverError::InfeasibleDistortion {
            target: d,
            d_min: profile.d_min,
        });
    }
    let w = marginal_channel(spec);
    let zeros = vec![0.0; spec.num_inputs()];
    let run = solve_one_constraint(&w, &profile.cost, d, &zeros);
    Ok(finalize(
        spec,
        &w,
        &profile.cost,
        run.pmf,
        run.lambda,
        0.0,
        run.iterations,
        run.converged,
    ))
}

/// Smallest value of `<aux, P>` over the distortion-feasible simplex face.
/// The minimum sits at a vertex or on an edge crossing the budget plane.
fn min_aux_over_feasible(d_cost: &[f64], d_limit: f64, aux: &[f64]) -> f64 {
    let n = d_cost.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        if d_cost[i] <= d_limit + FEAS_TOL {
            best = best.min(aux[i]);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if d_cost[i] < d_limit && d_cost[j] > d_limit {
                let t = (d_limit - d_cost[j]) / (d_cost[i] - d_cost[j]);
                best = best.min(t * aux[i] + (1.0 - t) * aux[j]);
            }
        }
    }
    best
}

/// Capacity-distortion-cost value `C(D, V)` with both budgets enforced.
pub fn capacity_distortion_cost(
    spec: &ChannelSpec,
    d: f64,
    v_limit: f64,
) -> Result<CapDistSolution, SolverError> {
    let input_cost = spec
        .input_cost
        .as_ref()
        .ok_or(SolverError::MissingInputCost)?
        .clone();
    let profile = estimation_profile(spec);
    if d < profile.d_min {
        return Err(SolverError::InfeasibleDistortion {
            target: d,
            d_min: profile.d_min,
        });
    }
    if min_aux_over_feasible(&profile.cost, d, &input_cost) > v_limit + FEAS_TOL {
        return Err(SolverError::InfeasibleConstraints { d, v: v_limit });
    }
    let w = marginal_channel(spec);
    let nx = spec.num_inputs();

    let mut iterations = 0;
    let mut all_converged = true;
    // inner problem: distortion-constrained surrogate at a fixed cost penalty
    let inner = |lambda_v: f64, total: &mut u64, ok: &mut bool| -> OneConstraintResult {
        let extra: Vec<f64> = (0..nx).map(|x| lambda_v * input_cost[x]).collect();
        let run = solve_one_constraint(&w, &profile.cost, d, &extra);
        *total += run.iterations;
        *ok &= run.converged;
        run
    };

    let base = inner(0.0, &mut iterations, &mut all_converged);
    let base_cost = dot(&input_cost, &base.pmf);
    if base_cost <= v_limit + FEAS_TOL {
        return Ok(finalize(
            spec,
            &w,
            &profile.cost,
            base.pmf,
            base.lambda,
            0.0,
            iterations,
            all_converged,
        ));
    }

    let mut lo = 0.0;
    let mut lo_run = base;
    let mut lo_cost = base_cost;
    let mut hi = 1.0;
    let (mut hi_run, mut hi_cost);
    loop {
        let run = inner(hi, &mut iterations, &mut all_converged);
        let attained = dot(&input_cost, &run.pmf);
        if attained <= v_limit + FEAS_TOL {
            hi_run = run;
            hi_cost = attained;
            break;
        }
        lo = hi;
        lo_run = run;
        lo_cost = attained;
        hi *= 2.0;
        if hi > LAMBDA_CAP {
            return Ok(finalize(
                spec,
                &w,
                &profile.cost,
                lo_run.pmf,
                lo_run.lambda,
                lo,
                iterations,
                false,
            ));
        }
    }

    loop {
        let slack = v_limit - hi_cost;
        if slack <= SLACK_ABS && hi * slack <= SLACK_PROD {
            return Ok(finalize(
                spec,
                &w,
                &profile.cost,
                hi_run.pmf,
                hi_run.lambda,
                hi,
                iterations,
                all_converged,
            ));
        }
        if hi - lo <= LAMBDA_INTERVAL_REL * hi.max(1.0) {
            let t = (v_limit - hi_cost) / (lo_cost - hi_cost);
            let pmf: Vec<f64> = (0..nx)
                .map(|x| t * lo_run.pmf[x] + (1.0 - t) * hi_run.pmf[x])
                .collect();
            return Ok(finalize(
                spec,
                &w,
                &profile.cost,
                pmf,
                hi_run.lambda,
                hi,
                iterations,
                all_converged,
            ));
        }
        let mid = 0.5 * (lo + hi);
        let run = inner(mid, &mut iterations, &mut all_converged);
        let attained = dot(&input_cost, &run.pmf);
        if attained <= v_limit + FEAS_TOL {
            hi = mid;
            hi_run = run;
            hi_cost = attained;
        } else {
            lo = mid;
            lo_run = run;
            lo_cost = attained;
        }
    }
}

/// Pointwise capacity-distortion curve; each target keeps its own result so
/// infeasible points are identified without aborting the sweep.
pub fn cd_curve(
    spec: &ChannelSpec,
    d_values: &[f64],
) -> Vec<(f64, Result<CapDistSolution, SolverError>)> {
    d_values
        .iter()
        .map(|&d| (d, capacity_distortion(spec, d)))
        .collect()
}
