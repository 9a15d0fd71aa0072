//! Voter-candidate pseudo-metrics: validation, consistency, social cost and
//! explicit cost ratios.
//!
//! Only voter-to-candidate distances exist. The triangle condition that can
//! be stated on them is the quadrilateral inequality
//! `d(v,x) <= d(v,y) + d(v',y) + d(v',x)`, checked for every ordered pair of
//! distinct ballots and every ordered pair of distinct candidates.

use crate::election::{CandidateId, VoteProfile};
use crate::rational::{to_f64, Rational};
use crate::{Error, Result};
use num_traits::{Signed, Zero};
use std::fmt;

/// Absolute slack granted to floating-point metrics, scaled by the largest
/// entry.
pub const FLOAT_TOL: f64 = 1e-9;

/// Distance matrix indexed by (ballot, candidate).
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// Rational entries; every check on them is exact.
    Exact(Vec<Vec<Rational>>),
    /// Floating-point entries, e.g. an LP witness; checks use a tolerance.
    Approx(Vec<Vec<f64>>),
}

impl Metric {
    pub fn num_ballots(&self) -> usize {
        match self {
            Metric::Exact(rows) => rows.len(),
            Metric::Approx(rows) => rows.len(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Metric::Exact(_))
    }

    pub fn get_f64(&self, v: usize, x: usize) -> f64 {
        match self {
            Metric::Exact(rows) => to_f64(&rows[v][x]),
            Metric::Approx(rows) => rows[v][x],
        }
    }

    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        match self {
            Metric::Exact(rows) => rows.iter().map(|r| r.iter().map(to_f64).collect()).collect(),
            Metric::Approx(rows) => rows.clone(),
        }
    }

    pub fn max_entry_f64(&self) -> f64 {
        self.rows_f64().iter().flatten().fold(0.0, |a, &b| a.max(b))
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: &Rational) -> Metric {
        match self {
            Metric::Exact(rows) => Metric::Exact(rows.iter().map(|r| r.iter().map(|d| d * c).collect()).collect()),
            Metric::Approx(rows) => {
                let c = to_f64(c);
                Metric::Approx(rows.iter().map(|r| r.iter().map(|d| d * c).collect()).collect())
            }
        }
    }

    fn row_lengths_ok(&self, n: usize) -> bool {
        match self {
            Metric::Exact(rows) => rows.iter().all(|r| r.len() == n),
            Metric::Approx(rows) => rows.iter().all(|r| r.len() == n),
        }
    }
}

fn check_dims(metric: &Metric, profile: &VoteProfile) -> Result<()> {
    let n = profile.num_candidates();
    if metric.num_ballots() != profile.len() || !metric.row_lengths_ok(n) {
        return Err(Error::DimensionMismatch(format!(
            "metric has {} rows, profile has {} ballots over {n} candidates",
            metric.num_ballots(),
            profile.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative { ballot: usize, candidate: usize, value: f64 },
    /// `d(v,x) > d(v,y) + d(v',y) + d(v',x)`; `slack` is right side minus left
    /// side and therefore negative.
    Quadrilateral { v: usize, v_prime: usize, x: usize, y: usize, slack: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { ballot, candidate, value } => {
                write!(f, "negative distance d({ballot},{candidate}) = {value}")
            }
            Violation::Quadrilateral { v, v_prime, x, y, slack } => write!(
                f,
                "d({v},{x}) > d({v},{y}) + d({v_prime},{y}) + d({v_prime},{x}) (slack {slack:e})"
            ),
        }
    }
}

/// All violations of non-negativity and of the quadrilateral inequality.
/// Floating-point metrics get `FLOAT_TOL` slack relative to the largest entry.
pub fn validate_metric(metric: &Metric, profile: &VoteProfile) -> Result<Vec<Violation>> {
    let tol = FLOAT_TOL * (1.0 + metric.max_entry_f64());
    validate_metric_tol(metric, profile, tol)
}

/// As [`validate_metric`] with an explicit absolute tolerance. Exact metrics
/// ignore `tol`.
pub fn validate_metric_tol(metric: &Metric, profile: &VoteProfile, tol: f64) -> Result<Vec<Violation>> {
    check_dims(metric, profile)?;
    let n = profile.num_candidates();
    match metric {
        Metric::Exact(d) => Ok(collect_violations(d.len(), n, |v, x| d[v][x].is_negative(), |v, x| to_f64(&d[v][x]), |v, vp, x, y| {
            let rhs = &d[v][y] + &d[vp][y] + &d[vp][x];
            if d[v][x] > rhs {
                Some(to_f64(&(rhs - &d[v][x])))
            } else {
                None
            }
        })),
        Metric::Approx(d) => Ok(collect_violations(d.len(), n, |v, x| d[v][x] < -tol, |v, x| d[v][x], |v, vp, x, y| {
            let slack = d[v][y] + d[vp][y] + d[vp][x] - d[v][x];
            (slack < -tol).then_some(slack)
        })),
    }
}

fn collect_violations(
    m: usize,
    n: usize,
    negative: impl Fn(usize, usize) -> bool,
    value: impl Fn(usize, usize) -> f64,
    quad: impl Fn(usize, usize, usize, usize) -> Option<f64>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for v in 0..m {
        for x in 0..n {
            if negative(v, x) {
                out.push(Violation::Negative { ballot: v, candidate: x, value: value(v, x) });
            }
        }
    }
    for v in 0..m {
        for v_prime in (0..m).filter(|&w| w != v) {
            for x in 0..n {
                for y in (0..n).filter(|&y| y != x) {
                    if let Some(slack) = quad(v, v_prime, x, y) {
                        out.push(Violation::Quadrilateral { v, v_prime, x, y, slack });
                    }
                }
            }
        }
    }
    out
}

/// Whether every ballot lists candidates by non-decreasing distance.
pub fn is_consistent(metric: &Metric, profile: &VoteProfile) -> Result<bool> {
    let tol = FLOAT_TOL * (1.0 + metric.max_entry_f64());
    is_consistent_tol(metric, profile, tol)
}

pub fn is_consistent_tol(metric: &Metric, profile: &VoteProfile, tol: f64) -> Result<bool> {
    check_dims(metric, profile)?;
    let ok = profile.ballots().iter().enumerate().all(|(v, b)| {
        b.ranking.order().windows(2).all(|w| {
            let (a, c) = (w[0].index(), w[1].index());
            match metric {
                Metric::Exact(d) => d[v][a] <= d[v][c],
                Metric::Approx(d) => d[v][a] <= d[v][c] + tol,
            }
        })
    });
    Ok(ok)
}

/// Social cost of every candidate, weighted by normalized ballot weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Costs {
    Exact(Vec<Rational>),
    Approx(Vec<f64>),
}

impl Costs {
    pub fn get_f64(&self, x: CandidateId) -> f64 {
        match self {
            Costs::Exact(c) => to_f64(&c[x.index()]),
            Costs::Approx(c) => c[x.index()],
        }
    }

    /// Cheapest candidate, ties to the lowest index.
    pub fn argmin(&self) -> CandidateId {
        let idx = match self {
            Costs::Exact(c) => argmin_by(c.len(), |a, b| c[a] < c[b]),
            Costs::Approx(c) => argmin_by(c.len(), |a, b| c[a] < c[b]),
        };
        CandidateId(idx)
    }
}

fn argmin_by(len: usize, less: impl Fn(usize, usize) -> bool) -> usize {
    (1..len).fold(0, |best, i| if less(i, best) { i } else { best })
}

pub fn costs(metric: &Metric, profile: &VoteProfile) -> Result<Costs> {
    check_dims(metric, profile)?;
    let weights = profile.normalized_weights()?;
    let n = profile.num_candidates();
    Ok(match metric {
        Metric::Exact(d) => Costs::Exact(
            (0..n).map(|x| weights.iter().zip(d).map(|(w, row)| w * &row[x]).sum()).collect(),
        ),
        Metric::Approx(d) => {
            let w: Vec<f64> = weights.iter().map(to_f64).collect();
            Costs::Approx((0..n).map(|x| w.iter().zip(d).map(|(w, row)| w * row[x]).sum()).collect())
        }
    })
}

/// `sum_v w_v d(v, x)` with weights normalized to sum to one.
pub fn cost(metric: &Metric, profile: &VoteProfile, x: CandidateId) -> Result<f64> {
    Ok(costs(metric, profile)?.get_f64(x))
}

/// Exact social cost; requires an exact metric.
pub fn cost_exact(metric: &Metric, profile: &VoteProfile, x: CandidateId) -> Result<Rational> {
    match costs(metric, profile)? {
        Costs::Exact(c) => Ok(c[x.index()].clone()),
        Costs::Approx(_) => Err(Error::InvalidMetric("exact cost requested for a floating-point metric".into())),
    }
}

/// Cheapest candidate (lowest index on ties) and its cost.
pub fn optimal_candidate(metric: &Metric, profile: &VoteProfile) -> Result<(CandidateId, f64)> {
    let c = costs(metric, profile)?;
    let best = c.argmin();
    Ok((best, c.get_f64(best)))
}

/// A cost ratio or distortion value; infinity is explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distortion {
    Finite(f64),
    Unbounded,
}

impl Distortion {
    pub fn is_finite(&self) -> bool {
        matches!(self, Distortion::Finite(_))
    }

    /// The value as a float, with `f64::INFINITY` for `Unbounded`.
    pub fn as_f64(&self) -> f64 {
        match self {
            Distortion::Finite(v) => *v,
            Distortion::Unbounded => f64::INFINITY,
        }
    }

    pub fn at_least(&self, bound: f64) -> bool {
        self.as_f64() >= bound
    }

    pub fn max(self, other: Distortion) -> Distortion {
        match (self, other) {
            (Distortion::Finite(a), Distortion::Finite(b)) => Distortion::Finite(a.max(b)),
            _ => Distortion::Unbounded,
        }
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distortion::Finite(v) => write!(f, "{v}"),
            Distortion::Unbounded => write!(f, "inf"),
        }
    }
}

/// A profile together with an optional metric consistent with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    profile: VoteProfile,
    metric: Option<Metric>,
}

impl Instance {
    /// Checks dimensions and consistency of the metric, if any. Use
    /// [`validate_metric`] separately for the quadrilateral inequality.
    pub fn new(profile: VoteProfile, metric: Option<Metric>) -> Result<Self> {
        if let Some(m) = &metric {
            if !is_consistent(m, &profile)? {
                return Err(Error::InvalidMetric("metric is not consistent with the rankings".into()));
            }
        }
        Ok(Self { profile, metric })
    }

    pub fn profile(&self) -> &VoteProfile {
        &self.profile
    }

    pub fn metric(&self) -> Option<&Metric> {
        self.metric.as_ref()
    }

    fn certified_metric(&self) -> Result<&Metric> {
        let metric = self.metric.as_ref().ok_or(Error::MissingMetric)?;
        let violations = validate_metric(metric, &self.profile)?;
        if let Some(first) = violations.first() {
            return Err(Error::InvalidMetric(format!("{} violation(s), first: {first}", violations.len())));
        }
        Ok(metric)
    }
}

/// `cost(winner) / cost(optimum)` under the instance's own metric. A zero
/// optimum against a positive winner cost is `Unbounded`; `0/0` is 1.
pub fn ratio_of(instance: &Instance, winner: CandidateId) -> Result<Distortion> {
    let metric = instance.certified_metric()?;
    Ok(match costs(metric, &instance.profile)? {
        Costs::Exact(c) => match exact_ratio(&c, winner) {
            Some(r) => Distortion::Finite(to_f64(&r)),
            None => Distortion::Unbounded,
        },
        Costs::Approx(c) => {
            let best = c.iter().copied().fold(f64::INFINITY, f64::min);
            let w = c[winner.index()];
            if best == 0.0 {
                if w == 0.0 {
                    Distortion::Finite(1.0)
                } else {
                    Distortion::Unbounded
                }
            } else {
                Distortion::Finite(w / best)
            }
        }
    })
}

/// Exact version of [`ratio_of`] for rational metrics; `None` means unbounded.
pub fn exact_ratio_of(instance: &Instance, winner: CandidateId) -> Result<Option<Rational>> {
    let metric = instance.certified_metric()?;
    match costs(metric, &instance.profile)? {
        Costs::Exact(c) => Ok(exact_ratio(&c, winner)),
        Costs::Approx(_) => Err(Error::InvalidMetric("exact ratio requested for a floating-point metric".into())),
    }
}

fn exact_ratio(c: &[Rational], winner: CandidateId) -> Option<Rational> {
    let best = c.iter().min().expect("at least one candidate");
    let w = &c[winner.index()];
    if best.is_zero() {
        if w.is_zero() {
            Some(Rational::from_integer(1.into()))
        } else {
            None
        }
    } else {
        Some(w / best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn two_voters() -> VoteProfile {
        VoteProfile::from_rankings(2, &[vec![0, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn uniform_metric_is_valid_and_consistent() {
        let p = VoteProfile::from_rankings(3, &[vec![0, 1, 2], vec![2, 1, 0], vec![1, 0, 2]]).unwrap();
        let m = Metric::Exact(vec![vec![int(1); 3]; 3]);
        assert!(validate_metric(&m, &p).unwrap().is_empty());
        assert!(is_consistent(&m, &p).unwrap());
        assert_eq!(cost(&m, &p, CandidateId(2)).unwrap(), 1.0);
        assert_eq!(optimal_candidate(&m, &p).unwrap(), (CandidateId(0), 1.0));
    }

    #[test]
    fn forced_quadrilateral_violation_is_reported() {
        let p = two_voters();
        // d(0,0) = 3 while d(0,1) = d(1,1) = d(1,0) = 0.
        let m = Metric::Exact(vec![vec![int(3), int(0)], vec![int(0), int(0)]]);
        let v = validate_metric(&m, &p).unwrap();
        assert!(v.contains(&Violation::Quadrilateral { v: 0, v_prime: 1, x: 0, y: 1, slack: -3.0 }));
    }

    #[test]
    fn negative_entries_are_reported() {
        let m = Metric::Approx(vec![vec![-1.0, 0.0], vec![0.0, 0.0]]);
        let v = validate_metric(&m, &two_voters()).unwrap();
        assert!(matches!(v[0], Violation::Negative { ballot: 0, candidate: 0, .. }));
    }

    #[test]
    fn dimension_mismatch() {
        let m = Metric::Exact(vec![vec![int(1), int(1)]]);
        assert!(matches!(validate_metric(&m, &two_voters()), Err(Error::DimensionMismatch(_))));
        assert!(matches!(is_consistent(&m, &two_voters()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn consistency_examples() {
        let p = VoteProfile::from_rankings(2, &[vec![0, 1]]).unwrap();
        assert!(is_consistent(&Metric::Exact(vec![vec![int(1), int(1)]]), &p).unwrap());
        assert!(!is_consistent(&Metric::Exact(vec![vec![int(2), int(1)]]), &p).unwrap());
    }

    #[test]
    fn half_weight_cost() {
        let p = two_voters();
        let m = Metric::Exact(vec![vec![int(0), int(1)], vec![int(1), int(1)]]);
        assert_eq!(cost_exact(&m, &p, CandidateId(0)).unwrap(), ratio(1, 2));
    }

    #[test]
    fn zero_distance_candidate_is_optimal() {
        let p = VoteProfile::from_rankings(2, &[vec![1, 0], vec![1, 0]]).unwrap();
        let m = Metric::Exact(vec![vec![int(1), int(0)], vec![int(1), int(0)]]);
        assert_eq!(optimal_candidate(&m, &p).unwrap(), (CandidateId(1), 0.0));
    }

    #[test]
    fn ratio_examples() {
        let p = two_voters();
        let m = Metric::Exact(vec![vec![int(1), int(2)], vec![int(2), int(1)]]);
        let inst = Instance::new(p.clone(), Some(m)).unwrap();
        assert_eq!(ratio_of(&inst, CandidateId(0)).unwrap(), Distortion::Finite(1.0));

        // cost(0) = 2, cost(1) = 1.
        let p = VoteProfile::from_rankings(2, &[vec![1, 0], vec![1, 0]]).unwrap();
        let m = Metric::Exact(vec![vec![int(1), int(1)], vec![int(3), int(1)]]);
        let inst = Instance::new(p, Some(m)).unwrap();
        assert_eq!(ratio_of(&inst, CandidateId(0)).unwrap(), Distortion::Finite(2.0));
        assert_eq!(exact_ratio_of(&inst, CandidateId(0)).unwrap(), Some(int(2)));
    }

    #[test]
    fn zero_optimum_ratio_conventions() {
        let p = VoteProfile::from_rankings(2, &[vec![1, 0]]).unwrap();
        let inst = Instance::new(p.clone(), Some(Metric::Exact(vec![vec![int(1), int(0)]]))).unwrap();
        assert_eq!(ratio_of(&inst, CandidateId(0)).unwrap(), Distortion::Unbounded);
        let inst = Instance::new(p, Some(Metric::Exact(vec![vec![int(0), int(0)]]))).unwrap();
        assert_eq!(ratio_of(&inst, CandidateId(0)).unwrap(), Distortion::Finite(1.0));
    }

    #[test]
    fn ratio_requires_valid_metric() {
        let p = two_voters();
        let inst = Instance::new(p.clone(), None).unwrap();
        assert_eq!(ratio_of(&inst, CandidateId(0)), Err(Error::MissingMetric));
        let bad = Metric::Exact(vec![vec![int(0), int(5)], vec![int(0), int(0)]]);
        let inst = Instance::new(p, Some(bad)).unwrap();
        assert!(matches!(ratio_of(&inst, CandidateId(0)), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn inconsistent_instance_is_rejected() {
        let p = VoteProfile::from_rankings(2, &[vec![0, 1]]).unwrap();
        assert!(Instance::new(p, Some(Metric::Exact(vec![vec![int(2), int(1)]]))).is_err());
    }
}
