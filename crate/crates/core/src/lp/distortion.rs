//! Worst-case distortion as a family of linear programs.
//!
//! For a fixed winning distribution `p` and reference candidate `y`, the
//! ratio `E[cost(W)] / cost(y)` is linear-fractional in the distances. Since
//! any consistent metric can be rescaled, fixing `cost(y) = 1` and maximising
//! the numerator yields the supremum of the ratio against `y`; the distortion
//! is the maximum over all `y`. If some LP is unbounded the reference can be
//! driven to zero cost while the winner's cost stays positive, so the
//! distortion is infinite.

use super::simplex::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::election::{CandidateDistribution, CandidateId, Ranking, VoteProfile};
use crate::metric::{Distortion, Metric};
use crate::rational::to_f64;
use crate::rules::{RuleOutcome, RuleSpec};
use crate::{Error, Result};
use rayon::prelude::*;
use std::collections::HashMap;

/// Default solver tolerance.
pub const DEFAULT_LP_TOL: f64 = 1e-9;

/// Tolerance from `MVD_LP_TOL` if it parses to a positive number, otherwise
/// [`DEFAULT_LP_TOL`].
pub fn lp_tolerance() -> f64 {
    std::env::var("MVD_LP_TOL")
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|t| t.is_finite() && *t > 0.0)
        .unwrap_or(DEFAULT_LP_TOL)
}

fn check_inputs(profile: &VoteProfile, dist: &CandidateDistribution, reference: CandidateId) -> Result<()> {
    let n = profile.num_candidates();
    if dist.len() != n {
        return Err(Error::DimensionMismatch(format!("distribution over {} candidates, profile has {n}", dist.len())));
    }
    if reference.index() >= n {
        return Err(Error::DimensionMismatch(format!("reference {reference} out of range")));
    }
    Ok(())
}

fn add_objective_and_normalization(lp: &mut LinearProgram, n: usize, weights: &[f64], p: &[f64], reference: usize) {
    for (v, &w) in weights.iter().enumerate() {
        for (x, &px) in p.iter().enumerate() {
            if px != 0.0 {
                lp.add_objective(v * n + x, px * w);
            }
        }
    }
    let norm = weights.iter().enumerate().map(|(v, &w)| (v * n + reference, w)).collect();
    lp.add_constraint(norm, Relation::Eq, 1.0);
}

fn add_consistency(lp: &mut LinearProgram, n: usize, rankings: &[&Ranking]) {
    for (v, r) in rankings.iter().enumerate() {
        for pair in r.order().windows(2) {
            lp.add_constraint(vec![(v * n + pair[0].index(), 1.0), (v * n + pair[1].index(), -1.0)], Relation::Le, 0.0);
        }
    }
}

/// The LP over distance variables `d(v, x)` (index `v * n + x`) with
/// consistency rows, one quadrilateral row for every `v != v'` and `x != y`,
/// the normalisation `sum_v w_v d(v, reference) = 1`, and objective
/// `sum_x p_x sum_v w_v d(v, x)`. Weights are normalised to sum to one.
pub fn build_worstcase_lp(profile: &VoteProfile, winning_dist: &CandidateDistribution, reference: CandidateId) -> Result<LinearProgram> {
    check_inputs(profile, winning_dist, reference)?;
    let n = profile.num_candidates();
    let m = profile.len();
    let weights: Vec<f64> = profile.normalized_weights()?.iter().map(to_f64).collect();
    let rankings: Vec<&Ranking> = profile.ballots().iter().map(|b| &b.ranking).collect();
    let mut lp = LinearProgram::new(m * n);
    add_consistency(&mut lp, n, &rankings);
    for v in 0..m {
        for vp in (0..m).filter(|&vp| vp != v) {
            for x in 0..n {
                for y in (0..n).filter(|&y| y != x) {
                    lp.add_constraint(
                        vec![(v * n + x, 1.0), (v * n + y, -1.0), (vp * n + y, -1.0), (vp * n + x, -1.0)],
                        Relation::Le,
                        0.0,
                    );
                }
            }
        }
    }
    add_objective_and_normalization(&mut lp, n, &weights, &winning_dist.to_f64(), reference.index());
    Ok(lp)
}

fn pair_index(n: usize, x: usize, y: usize) -> usize {
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// An equivalent LP with far fewer rows. One extra variable `D_xy` per
/// unordered candidate pair stands for the candidate-candidate distance, with
/// `d(v, b) - d(v, a) <= D_xy <= d(v, a) + d(v, b)` for every voter `v`
/// ranking `a` above `b`. Given consistency, a feasible `D` exists iff every
/// quadrilateral inequality holds, so the optimum is unchanged.
pub fn build_compact_worstcase_lp(
    rankings: &[&Ranking],
    weights: &[f64],
    p: &[f64],
    reference: CandidateId,
) -> LinearProgram {
    let n = p.len();
    let m = rankings.len();
    let base = m * n;
    let mut lp = LinearProgram::new(base + n * (n - 1) / 2);
    add_consistency(&mut lp, n, rankings);
    for (v, r) in rankings.iter().enumerate() {
        let order = r.order();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (order[i].index(), order[j].index());
                let dxy = base + pair_index(n, a, b);
                lp.add_constraint(vec![(v * n + b, 1.0), (v * n + a, -1.0), (dxy, -1.0)], Relation::Le, 0.0);
                lp.add_constraint(vec![(dxy, 1.0), (v * n + a, -1.0), (v * n + b, -1.0)], Relation::Le, 0.0);
            }
        }
    }
    add_objective_and_normalization(&mut lp, n, weights, p, reference.index());
    lp
}

/// Worst case for a distribution, with the metric attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionResult {
    pub distortion: Distortion,
    /// Reference candidate attaining the maximum (the first unbounded one if
    /// infinite).
    pub reference: CandidateId,
    /// A consistent metric, normalised so the reference costs 1, attaining
    /// the value. `None` when unbounded.
    pub witness: Option<Metric>,
}

/// Ballots sharing a ranking are merged with summed weight. An optimal metric
/// can give all voters of one ranking the same distances (copying one voter's
/// row keeps every constraint, and by the mediant inequality one of the rows
/// does at least as well), so this does not change the optimum.
struct Merged<'a> {
    rankings: Vec<&'a Ranking>,
    weights: Vec<f64>,
    class_of: Vec<usize>,
}

fn merge(profile: &VoteProfile) -> Result<Merged<'_>> {
    let total = profile.total_weight();
    if total == num_traits::Zero::zero() {
        return Err(Error::ZeroTotalWeight);
    }
    let mut index: HashMap<&Ranking, usize> = HashMap::new();
    let mut rankings = Vec::new();
    let mut sums = Vec::new();
    let mut class_of = Vec::with_capacity(profile.len());
    for b in profile.ballots() {
        let id = *index.entry(&b.ranking).or_insert_with(|| {
            rankings.push(&b.ranking);
            sums.push(num_traits::Zero::zero());
            rankings.len() - 1
        });
        sums[id] += &b.weight;
        class_of.push(id);
    }
    let weights = sums.iter().map(|s: &crate::Rational| to_f64(&(s / &total))).collect();
    Ok(Merged { rankings, weights, class_of })
}

/// Worst-case distortion of `winning_dist` on `profile` over all consistent
/// metrics. References are solved in parallel; the result does not depend on
/// scheduling.
pub fn distortion_of(profile: &VoteProfile, winning_dist: &CandidateDistribution) -> Result<DistortionResult> {
    distortion_of_tol(profile, winning_dist, lp_tolerance())
}

pub fn distortion_of_tol(profile: &VoteProfile, winning_dist: &CandidateDistribution, tol: f64) -> Result<DistortionResult> {
    let n = profile.num_candidates();
    check_inputs(profile, winning_dist, CandidateId(0))?;
    let merged = merge(profile)?;
    let p = winning_dist.to_f64();
    let point = winning_dist.as_point_mass();

    let solved: Vec<(usize, LpStatus, f64, Option<Vec<f64>>)> = (0..n)
        .into_par_iter()
        .filter(|&y| point != Some(CandidateId(y)))
        .map(|y| {
            let lp = build_compact_worstcase_lp(&merged.rankings, &merged.weights, &p, CandidateId(y));
            solve_lp(&lp, tol).map(|r| (y, r.status, r.value, r.witness))
        })
        .collect::<Result<_>>()?;

    if let Some(&(y, ..)) = solved.iter().find(|s| s.1 == LpStatus::Unbounded) {
        return Ok(DistortionResult { distortion: Distortion::Unbounded, reference: CandidateId(y), witness: None });
    }
    if let Some(s) = solved.iter().find(|s| s.1 == LpStatus::Infeasible) {
        // Unit distances are always feasible, so this is a numerical failure.
        return Err(Error::InvalidMetric(format!("distortion LP for reference {} reported infeasible", s.0)));
    }

    // A point-mass winner measured against itself has ratio exactly 1,
    // witnessed by putting every voter at distance 1 from every candidate.
    let mut best = point.map(|w| (w.index(), 1.0, None));
    for (y, _, value, x) in solved {
        if best.as_ref().map_or(true, |b| value > b.1) {
            best = Some((y, value, x));
        }
    }
    let (y, value, x) = best.expect("n >= 1 references");
    let rows = (0..profile.len())
        .map(|v| match &x {
            Some(x) => {
                let c = merged.class_of[v];
                x[c * n..(c + 1) * n].iter().map(|d| d.max(0.0)).collect()
            }
            None => vec![1.0; n],
        })
        .collect();
    Ok(DistortionResult {
        distortion: Distortion::Finite(value.max(1.0)),
        reference: CandidateId(y),
        witness: Some(Metric::Approx(rows)),
    })
}

/// Rule outcome together with its worst-case distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleDistortion {
    pub outcome: RuleOutcome,
    pub result: DistortionResult,
}

pub fn rule_distortion(rule: RuleSpec, profile: &VoteProfile) -> Result<RuleDistortion> {
    let outcome = rule.evaluate(profile)?;
    let result = distortion_of(profile, &outcome.to_distribution(profile.num_candidates()))?;
    Ok(RuleDistortion { outcome, result })
}
