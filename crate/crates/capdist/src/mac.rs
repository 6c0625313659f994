//! Two-user multiple-access rate region under a coupled estimation-cost
//! constraint.
//!
//! Both encoders pick independent input distributions, but the average
//! estimation cost `sum p1(x1) p2(x2) d*(x1, x2)` couples them: it is a
//! single budget spent jointly, not a per-user constraint. The region is
//! computed by enumerating product-distribution pairs on a simplex grid,
//! recording each pair's rate pentagon and cost, and convexifying the
//! resulting cloud in (R1, R2, cost) space — the convexification realizes
//! the time-sharing variable. The feasible set of product pairs is nonconvex
//! jointly, so grid enumeration plus hulling is preferred over alternating
//! maximization; accuracy is limited only by the grid and degrades with
//! alphabet size.

use crate::channel::{ChannelSpec, SpecError};
use crate::solver::mutual_information;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MacError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("distortion target {target} below the minimum achievable {min_cost}")]
    InfeasibleDistortion { target: f64, min_cost: f64 },
    #[error("grid_steps must be at least 10, got {0}")]
    GridTooCoarse(usize),
    #[error("weights must be nonnegative and not both zero")]
    InvalidWeights,
}

/// A two-user discrete memoryless state-dependent MAC.
///
/// `transition[x1][x2][s][y]` is `P(y | x1, x2, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacChannelSpec {
    pub input_alphabet_1: Vec<String>,
    pub input_alphabet_2: Vec<String>,
    pub state_alphabet: Vec<String>,
    pub output_alphabet: Vec<String>,
    pub state_pmf: Vec<f64>,
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
    pub distortion: Vec<Vec<f64>>,
}

impl MacChannelSpec {
    pub fn num_inputs_1(&self) -> usize {
        self.input_alphabet_1.len()
    }

    pub fn num_inputs_2(&self) -> usize {
        self.input_alphabet_2.len()
    }

    pub fn from_json(json: &str) -> Result<Self, SpecError> {
        let spec: MacChannelSpec = serde_json::from_str(json)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mac spec serializes")
    }

    /// Validation piggybacks on the single-user checks by flattening the
    /// input pair into one alphabet.
    pub fn validate(&self) -> Result<(), SpecError> {
        self.flatten().validate()
    }

    /// View the MAC as a single-user channel over input pairs, ordered
    /// `(x1, x2) -> x1 * |X2| + x2`.
    pub fn flatten(&self) -> ChannelSpec {
        let mut labels = Vec::with_capacity(self.num_inputs_1() * self.num_inputs_2());
        let mut transition = Vec::with_capacity(labels.capacity());
        for (x1, a1) in self.input_alphabet_1.iter().enumerate() {
            for (x2, a2) in self.input_alphabet_2.iter().enumerate() {
                labels.push(format!("{a1}|{a2}"));
                transition.push(
                    self.transition
                        .get(x1)
                        .and_then(|t| t.get(x2))
                        .cloned()
                        .unwrap_or_default(),
                );
            }
        }
        ChannelSpec {
            input_alphabet: labels,
            state_alphabet: self.state_alphabet.clone(),
            output_alphabet: self.output_alphabet.clone(),
            state_pmf: self.state_pmf.clone(),
            transition,
            distortion: self.distortion.clone(),
            input_cost: None,
        }
    }
}

/// Per-pair minimum one-shot estimation cost `d*(x1, x2)`, computed exactly
/// as in the single-user case with the pair as the input.
pub fn mac_estimation_cost(spec: &MacChannelSpec) -> Vec<Vec<f64>> {
    let flat = spec.flatten();
    let profile = crate::channel::estimation_profile(&flat);
    let n2 = spec.num_inputs_2();
    profile
        .cost
        .chunks(n2)
        .map(|chunk| chunk.to_vec())
        .collect()
}

/// Rate pentagon of one product input pair, all in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacPentagon {
    /// `I(X1; Y | X2)`
    pub i1: f64,
    /// `I(X2; Y | X1)`
    pub i2: f64,
    /// `I(X1, X2; Y)`
    pub i12: f64,
    /// `sum p1 p2 d*`
    pub avg_cost: f64,
}

/// State-marginalized MAC law `P(y | x1, x2)`.
fn mac_marginal(spec: &MacChannelSpec) -> Vec<Vec<Vec<f64>>> {
    let (n1, n2) = (spec.num_inputs_1(), spec.num_inputs_2());
    let ny = spec.output_alphabet.len();
    let ns = spec.state_alphabet.len();
    let mut w = vec![vec![vec![0.0; ny]; n2]; n1];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            for s in 0..ns {
                let ps = spec.state_pmf[s];
                for y in 0..ny {
                    w[x1][x2][y] += ps * spec.transition[x1][x2][s][y];
                }
            }
        }
    }
    w
}

fn pentagon_from_parts(
    w: &[Vec<Vec<f64>>],
    costs: &[Vec<f64>],
    p1: &[f64],
    p2: &[f64],
) -> MacPentagon {
    let (n1, n2) = (w.len(), w[0].len());

    // I(X1; Y | X2 = x2) averaged over p2, and symmetrically
    let mut i1 = 0.0;
    for x2 in 0..n2 {
        if p2[x2] == 0.0 {
            continue;
        }
        let rows: Vec<Vec<f64>> = (0..n1).map(|x1| w[x1][x2].clone()).collect();
        i1 += p2[x2] * mutual_information(p1, &rows);
    }
    let mut i2 = 0.0;
    for x1 in 0..n1 {
        if p1[x1] == 0.0 {
            continue;
        }
        i2 += p1[x1] * mutual_information(p2, &w[x1]);
    }

    // joint mutual information over the flattened pair
    let mut joint_pmf = Vec::with_capacity(n1 * n2);
    let mut joint_rows = Vec::with_capacity(n1 * n2);
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            joint_pmf.push(p1[x1] * p2[x2]);
            joint_rows.push(w[x1][x2].clone());
        }
    }
    let i12 = mutual_information(&joint_pmf, &joint_rows);

    let mut avg_cost = 0.0;
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            avg_cost += p1[x1] * p2[x2] * costs[x1][x2];
        }
    }
    MacPentagon {
        i1,
        i2,
        i12,
        avg_cost,
    }
}

/// Pentagon of a single product pair.
pub fn mac_pentagon(spec: &MacChannelSpec, p1: &[f64], p2: &[f64]) -> MacPentagon {
    let w = mac_marginal(spec);
    let costs = mac_estimation_cost(spec);
    pentagon_from_parts(&w, &costs, p1, p2)
}

/// One time-sharing atom of a boundary certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacAtom {
    pub weight: f64,
    pub input_pmf_1: Vec<f64>,
    pub input_pmf_2: Vec<f64>,
    pub rate_1: f64,
    pub rate_2: f64,
    pub cost: f64,
}

/// A Pareto boundary point with the product distributions achieving it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacBoundaryPoint {
    pub r1: f64,
    pub r2: f64,
    pub certificate: Vec<MacAtom>,
}

/// Rate region at one distortion budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacRegion {
    pub distortion: f64,
    /// Pareto-nondominated boundary points, sorted by increasing `r1`.
    pub points: Vec<MacBoundaryPoint>,
    pub grid_steps: usize,
    pub directions: usize,
    /// Set when fewer than three boundary points were found.
    pub grid_too_coarse: bool,
}

struct Atom {
    p1: Vec<f64>,
    p2: Vec<f64>,
    pentagon: MacPentagon,
}

/// All PMFs on `dim` symbols whose entries are multiples of
/// `1 / (steps - 1)`.
fn simplex_grid(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    let ticks = steps - 1;
    let mut out = Vec::new();
    let mut current = vec![0usize; dim];
    fn recurse(
        slot: usize,
        remaining: usize,
        ticks: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<f64>>,
    ) {
        if slot == current.len() - 1 {
            current[slot] = remaining;
            out.push(
                current
                    .iter()
                    .map(|&c| c as f64 / ticks as f64)
                    .collect(),
            );
            return;
        }
        for c in 0..=remaining {
            current[slot] = c;
            recurse(slot + 1, remaining - c, ticks, current, out);
        }
    }
    recurse(0, ticks, ticks, &mut current, &mut out);
    out
}

/// Supported rate pair of one pentagon in direction (w1, w2): the dominant
/// corner, or the corner midpoint on ties (still inside the pentagon).
fn supported_corner(p: &MacPentagon, w1: f64, w2: f64) -> (f64, f64) {
    let a = (p.i1, (p.i12 - p.i1).min(p.i2).max(0.0));
    let b = ((p.i12 - p.i2).min(p.i1).max(0.0), p.i2);
    let sa = w1 * a.0 + w2 * a.1;
    let sb = w1 * b.0 + w2 * b.1;
    if (sa - sb).abs() <= 1e-12 {
        (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))
    } else if sa > sb {
        a
    } else {
        b
    }
}

/// Best mixture of cloud points in direction (w1, w2) under the cost budget:
/// the non-decreasing concave envelope of (cost, score) evaluated at `d`.
/// Returns the achieved rate pair and the (at most two) atoms used.
fn support_at(
    atoms: &[Atom],
    d: f64,
    w1: f64,
    w2: f64,
) -> (f64, f64, Vec<(usize, f64, (f64, f64))>) {
    struct Entry {
        cost: f64,
        score: f64,
        idx: usize,
        rate: (f64, f64),
    }
    let mut entries: Vec<Entry> = atoms
        .iter()
        .enumerate()
        .map(|(idx, atom)| {
            let rate = supported_corner(&atom.pentagon, w1, w2);
            Entry {
                cost: atom.pentagon.avg_cost,
                score: w1 * rate.0 + w2 * rate.1,
                idx,
                rate,
            }
        })
        .collect();

    // global optimum already affordable: single atom
    let best = entries
        .iter()
        .max_by(|a, b| a.score.partial_cmp(&b.score).unwrap().then(b.cost.partial_cmp(&a.cost).unwrap()))
        .expect("non-empty grid");
    if best.cost <= d {
        return (best.rate.0, best.rate.1, vec![(best.idx, 1.0, best.rate)]);
    }

    // frontier: strictly increasing score as cost grows
    entries.sort_by(|a, b| {
        a.cost
            .partial_cmp(&b.cost)
            .unwrap()
            .then(b.score.partial_cmp(&a.score).unwrap())
    });
    let mut frontier: Vec<Entry> = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    for e in entries {
        if e.score > best_score {
            best_score = e.score;
            frontier.push(e);
        }
    }
    // upper concave hull over the frontier (costs and scores both increasing)
    let mut hull: Vec<Entry> = Vec::new();
    for e in frontier {
        while hull.len() >= 2 {
            let p = &hull[hull.len() - 1];
            let q = &hull[hull.len() - 2];
            let slope_pq = (p.score - q.score) / (p.cost - q.cost);
            let slope_pe = (e.score - p.score) / (e.cost - p.cost);
            if slope_pe >= slope_pq {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(e);
    }

    // locate the budget on the hull; the caller guarantees d >= min cost
    let mut right = 0;
    while right < hull.len() && hull[right].cost <= d {
        right += 1;
    }
    if right == hull.len() {
        let last = hull.last().unwrap();
        return (last.rate.0, last.rate.1, vec![(last.idx, 1.0, last.rate)]);
    }
    let lo = &hull[right - 1];
    let hi = &hull[right];
    let t = (d - lo.cost) / (hi.cost - lo.cost);
    let r1 = (1.0 - t) * lo.rate.0 + t * hi.rate.0;
    let r2 = (1.0 - t) * lo.rate.1 + t * hi.rate.1;
    (
        r1,
        r2,
        vec![(lo.idx, 1.0 - t, lo.rate), (hi.idx, t, hi.rate)],
    )
}

fn build_atoms(spec: &MacChannelSpec, grid_steps: usize) -> (Vec<Atom>, f64) {
    let w = mac_marginal(spec);
    let costs = mac_estimation_cost(spec);
    let grid1 = simplex_grid(spec.num_inputs_1(), grid_steps);
    let grid2 = simplex_grid(spec.num_inputs_2(), grid_steps);
    let pairs: Vec<(usize, usize)> = (0..grid1.len())
        .flat_map(|i| (0..grid2.len()).map(move |j| (i, j)))
        .collect();
    let atoms: Vec<Atom> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let pentagon = pentagon_from_parts(&w, &costs, &grid1[i], &grid2[j]);
            Atom {
                p1: grid1[i].clone(),
                p2: grid2[j].clone(),
                pentagon,
            }
        })
        .collect();
    let min_cost = costs
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    (atoms, min_cost)
}

fn certificate_of(atoms: &[Atom], parts: &[(usize, f64, (f64, f64))]) -> Vec<MacAtom> {
    parts
        .iter()
        .map(|&(idx, weight, rate)| MacAtom {
            weight,
            input_pmf_1: atoms[idx].p1.clone(),
            input_pmf_2: atoms[idx].p2.clone(),
            rate_1: rate.0,
            rate_2: rate.1,
            cost: atoms[idx].pentagon.avg_cost,
        })
        .collect()
}

/// Number of support directions swept per region.
const DIRECTIONS: usize = 129;

/// Compute the Pareto boundary of the rate region at distortion budget `d`.
pub fn mac_region_compute(
    spec: &MacChannelSpec,
    d: f64,
    grid_steps: usize,
) -> Result<MacRegion, MacError> {
    spec.validate()?;
    if grid_steps < 10 {
        return Err(MacError::GridTooCoarse(grid_steps));
    }
    let (atoms, min_cost) = build_atoms(spec, grid_steps);
    if d < min_cost {
        return Err(MacError::InfeasibleDistortion {
            target: d,
            min_cost,
        });
    }

    let mut points: Vec<MacBoundaryPoint> = Vec::new();
    for k in 0..DIRECTIONS {
        let phi = std::f64::consts::FRAC_PI_2 * k as f64 / (DIRECTIONS - 1) as f64;
        let (w1, w2) = (phi.cos(), phi.sin());
        let (r1, r2, parts) = support_at(&atoms, d, w1, w2);
        points.push(MacBoundaryPoint {
            r1,
            r2,
            certificate: certificate_of(&atoms, &parts),
        });
    }

    // dedupe and keep the Pareto-nondominated set
    points.sort_by(|a, b| {
        a.r1.partial_cmp(&b.r1)
            .unwrap()
            .then(b.r2.partial_cmp(&a.r2).unwrap())
    });
    points.dedup_by(|a, b| (a.r1 - b.r1).abs() < 1e-12 && (a.r2 - b.r2).abs() < 1e-12);
    let mut pareto: Vec<MacBoundaryPoint> = Vec::new();
    for p in points.into_iter().rev() {
        // descending r1: keep when r2 strictly grows
        if pareto
            .last()
            .map(|kept: &MacBoundaryPoint| p.r2 > kept.r2 + 1e-12)
            .unwrap_or(true)
        {
            pareto.push(p);
        }
    }
    pareto.reverse();
    let grid_too_coarse = pareto.len() < 3;
    Ok(MacRegion {
        distortion: d,
        points: pareto,
        grid_steps,
        directions: DIRECTIONS,
        grid_too_coarse,
    })
}

/// Maximize `w1 R1 + w2 R2` over the region at distortion `d`.
pub fn mac_weighted_sum(
    spec: &MacChannelSpec,
    d: f64,
    w1: f64,
    w2: f64,
    grid_steps: usize,
) -> Result<MacBoundaryPoint, MacError> {
    if !(w1 >= 0.0 && w2 >= 0.0) || (w1 == 0.0 && w2 == 0.0) {
        return Err(MacError::InvalidWeights);
    }
    spec.validate()?;
    if grid_steps < 10 {
        return Err(MacError::GridTooCoarse(grid_steps));
    }
    let (atoms, min_cost) = build_atoms(spec, grid_steps);
    if d < min_cost {
        return Err(MacError::InfeasibleDistortion {
            target: d,
            min_cost,
        });
    }
    let (r1, r2, parts) = support_at(&atoms, d, w1, w2);
    Ok(MacBoundaryPoint {
        r1,
        r2,
        certificate: certificate_of(&atoms, &parts),
    })
}
