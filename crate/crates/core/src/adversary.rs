//! Lower-bound constructions.
//!
//! Each generator queries a [`BoundedRule`] exactly once on a profile it
//! builds, then places voters and candidates so the chosen winner is as bad
//! as possible. All emitted metrics are exact rationals; the reports carry
//! the ratio the metric certifies next to the limit the construction
//! approaches as `epsilon -> 0`.
//!
//! Tie-breaking offsets are `eps_i = eps * i / (n + 1)` for ranking position
//! `i` (1-based). Candidates pushed to the bottom of every ranking sit at the
//! voter-independent distance `M + position`, with `M` a million times the
//! largest remaining distance.

use crate::communication::{BoundedRule, MessageId, PositionSet};
use crate::election::{CandidateId, Ranking, VoteProfile, WeightedBallot};
use crate::metric::{exact_ratio_of, ratio_of, Distortion, Instance, Metric};
use crate::perm::{all_rankings, check_cap};
use crate::rational::{int, ratio, Rational};
use crate::{Error, Result};
use num_traits::{One, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    KEntry,
    General,
    Unbounded,
}

impl AdversaryKind {
    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::KEntry => "k-entry",
            AdversaryKind::General => "general",
            AdversaryKind::Unbounded => "unbounded",
        }
    }
}

/// One step of a construction.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceStep {
    /// A candidate is pushed to the last remaining position of every
    /// ranking, leaving `remaining` candidates in play.
    Sacrifice { candidate: CandidateId, remaining: usize, live_classes: Option<(usize, usize)> },
    /// The k-entry profile: `types` ballots over `remaining` candidates with
    /// positions `positions`, `winner_in_type` of which show the winner.
    KEntryProfile { remaining: usize, positions: PositionSet, types: usize, winner_in_type: usize, limit: Distortion },
    /// The final profile of the general construction: `live_classes`
    /// ballots, `winner_last` of which can rank the winner last.
    GeneralProfile { remaining: usize, live_classes: usize, winner_last: usize },
    /// Every ballot places the winner last; the ratio grows without bound
    /// as `epsilon -> 0`.
    UnboundedFamily,
    /// The rule chose a candidate that every voter ranks below all others.
    WinnerSacrificed { winner: CandidateId },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdversaryParams {
    pub epsilon: Option<Rational>,
    /// `eps_i` for `i = 1..=n`.
    pub eps_schedule: Vec<Rational>,
    pub big_m: Option<Rational>,
    pub delta: Option<Rational>,
    pub beta: Option<usize>,
    pub gamma: Option<f64>,
    /// `(2n - 4) / ln(beta) - 1`, the closed form the general bound implies.
    pub log_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryReport {
    pub kind: AdversaryKind,
    pub rule: String,
    pub instance: Instance,
    pub winner: CandidateId,
    pub certified_ratio: Distortion,
    pub exact_ratio: Option<Rational>,
    pub theoretical_limit: Distortion,
    pub params: AdversaryParams,
    pub trace: Vec<TraceStep>,
}

impl AdversaryReport {
    /// Whether the certified ratio reaches the limit up to `slack`.
    pub fn meets_limit(&self, slack: f64) -> bool {
        match self.theoretical_limit {
            Distortion::Unbounded => !self.certified_ratio.is_finite() || self.trace.contains(&TraceStep::UnboundedFamily),
            Distortion::Finite(l) => self.certified_ratio.at_least(l - slack),
        }
    }
}

fn check_epsilon(eps: &Rational) -> Result<()> {
    if *eps <= Rational::zero() || *eps >= ratio(1, 8) {
        return Err(Error::BadEpsilon(crate::rational::format_rational(eps)));
    }
    Ok(())
}

fn eps_schedule(eps: &Rational, n: usize) -> Vec<Rational> {
    (1..=n).map(|i| eps * Rational::new(i.into(), (n + 1).into())).collect()
}

/// Per-ballot distances over the first `remaining` positions, before the
/// sacrificed suffix is appended.
enum Row {
    /// Winner last at distance 1, position `i` at `eps + eps_i`.
    Near,
    /// Position `i` at `1/2 + eps + eps_i`.
    Halfway,
}

fn row_distances(kind: &Row, remaining: usize, eps: &Rational, sched: &[Rational]) -> Vec<Rational> {
    let half = ratio(1, 2);
    (0..remaining)
        .map(|p| match kind {
            Row::Near if p + 1 == remaining => Rational::one(),
            Row::Near => eps + &sched[p],
            Row::Halfway => &half + eps + &sched[p],
        })
        .collect()
}

/// Orders each ballot's distances by its ranking and appends the sacrificed
/// suffix at `M + position`. Returns the metric and `M`.
fn assemble(rankings: &[Ranking], heads: Vec<Vec<Rational>>, n: usize) -> (Metric, Rational) {
    let largest = heads.iter().flatten().max().cloned().unwrap_or_else(Rational::one);
    let big_m = largest * int(1_000_000);
    let rows = rankings
        .iter()
        .zip(heads)
        .map(|(r, head)| {
            let mut row = vec![Rational::zero(); n];
            for p in 0..n {
                row[r.at(p).index()] = match head.get(p) {
                    Some(d) => d.clone(),
                    None => &big_m + int(p as i64 + 1),
                };
            }
            row
        })
        .collect();
    (Metric::Exact(rows), big_m)
}

fn certify(profile: VoteProfile, metric: Metric, winner: CandidateId) -> Result<(Instance, Distortion, Option<Rational>)> {
    let instance = Instance::new(profile, Some(metric))?;
    let certified = ratio_of(&instance, winner)?;
    let exact = exact_ratio_of(&instance, winner)?;
    Ok((instance, certified, exact))
}

/// Ordered `k`-tuples of distinct elements of `0..n`, lexicographically.
fn ordered_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for c in 0..n {
            if !used[c] {
                used[c] = true;
                cur.push(c);
                rec(n, k, cur, used, out);
                cur.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Fills positions `1..=remaining` with `tuple` at `positions` and
/// `last` (if any) at position `remaining`; other slots take the unused
/// candidates of `0..remaining` in ascending order. Candidates
/// `remaining..n` follow in ascending order.
fn complete(n: usize, remaining: usize, positions: &PositionSet, tuple: &[usize], last: Option<usize>) -> Ranking {
    let mut slots: Vec<Option<usize>> = vec![None; remaining];
    for (&p, &c) in positions.positions().iter().zip(tuple) {
        slots[p - 1] = Some(c);
    }
    if let Some(w) = last {
        slots[remaining - 1] = Some(w);
    }
    let mut rest = (0..remaining).filter(|c| !tuple.contains(c) && Some(*c) != last);
    let mut order: Vec<usize> = slots.into_iter().map(|s| s.unwrap_or_else(|| rest.next().expect("enough candidates"))).collect();
    order.extend(remaining..n);
    Ranking::from_indices(&order).expect("a permutation")
}

fn k_entry_limit(n: usize, k: usize) -> Distortion {
    if k == 0 {
        Distortion::Unbounded
    } else {
        Distortion::Finite((2 * n - k) as f64 / k as f64)
    }
}

/// The k-entry construction against `rule`, whose partition must be
/// generated by `positions`.
///
/// While the last remaining position is observed, the highest-index
/// remaining candidate is sent to the bottom of every ranking and the
/// position dropped. Then one ballot of weight `1/t` per type (ordered
/// assignment of candidates to the observed positions) is submitted. Voters
/// whose type omits the winner `w` move `w` to their last remaining position
/// and sit next to everyone else; the others sit halfway.
pub fn gen_k_entry_adversary(rule: &BoundedRule, positions: &PositionSet, eps: &Rational) -> Result<AdversaryReport> {
    check_epsilon(eps)?;
    let n = rule.partition().num_candidates();
    if n < 2 {
        return Err(Error::BadN { n, min: 2 });
    }
    if !rule.partition().is_generated_by(positions) {
        return Err(Error::NotKEntry(positions.to_string()));
    }
    let sched = eps_schedule(eps, n);
    let mut trace = Vec::new();
    let (mut remaining, mut observed) = (n, positions.clone());
    while observed.contains(remaining) && remaining > 2 {
        observed = observed.without(remaining);
        remaining -= 1;
        trace.push(TraceStep::Sacrifice { candidate: CandidateId(remaining), remaining, live_classes: None });
    }
    if observed.contains(remaining) {
        return Err(Error::BadParams(format!("positions {positions} reveal every ranking; no construction applies")));
    }

    let tuples = ordered_tuples(remaining, observed.len());
    let t = tuples.len();
    let weight = Rational::new(1.into(), (t as i64).into());
    let query: Vec<Ranking> = tuples.iter().map(|s| complete(n, remaining, &observed, s, None)).collect();
    let query_profile = VoteProfile::new(n, query.iter().map(|r| WeightedBallot::new(r.clone(), weight.clone())).collect())?;
    let winner = rule.apply(&query_profile)?;

    let mut rankings = Vec::with_capacity(t);
    let mut heads = Vec::with_capacity(t);
    let mut winner_in_type = 0;
    for (tuple, q) in tuples.iter().zip(&query) {
        let w = winner.index();
        if w < remaining && !tuple.contains(&w) {
            rankings.push(complete(n, remaining, &observed, tuple, Some(w)));
            heads.push(row_distances(&Row::Near, remaining, eps, &sched));
        } else {
            winner_in_type += usize::from(tuple.contains(&w));
            rankings.push(q.clone());
            heads.push(row_distances(&Row::Halfway, remaining, eps, &sched));
        }
    }
    let (metric, big_m) = assemble(&rankings, heads, n);
    let profile = VoteProfile::new(n, rankings.into_iter().map(|r| WeightedBallot::new(r, weight.clone())).collect())?;

    trace.push(TraceStep::KEntryProfile {
        remaining,
        positions: observed.clone(),
        types: t,
        winner_in_type,
        limit: k_entry_limit(remaining, observed.len()),
    });
    if winner.index() >= remaining {
        trace.push(TraceStep::WinnerSacrificed { winner });
    } else if observed.is_empty() {
        trace.push(TraceStep::UnboundedFamily);
    }
    let (instance, certified_ratio, exact_ratio) = certify(profile, metric, winner)?;
    Ok(AdversaryReport {
        kind: AdversaryKind::KEntry,
        rule: rule.name(),
        instance,
        winner,
        certified_ratio,
        exact_ratio,
        theoretical_limit: k_entry_limit(n, positions.len()),
        params: AdversaryParams {
            epsilon: Some(eps.clone()),
            eps_schedule: sched,
            big_m: (remaining < n).then_some(big_m),
            ..AdversaryParams::default()
        },
        trace,
    })
}

/// A single ballot from a message class holding rankings with different
/// tops, parameterised by how close the voter sits to the better candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct UnboundedFamily {
    pub rule: String,
    pub message: MessageId,
    /// First ranking of the class; its top is `x`.
    pub pi: Ranking,
    /// A ranking of the same class whose top `y` differs from `x`.
    pub pi_prime: Ranking,
    pub winner: CandidateId,
}

impl UnboundedFamily {
    /// The candidate the voter sits next to: `y` if the winner is `x`,
    /// otherwise `x`.
    pub fn near(&self) -> CandidateId {
        if self.winner == self.pi.top() {
            self.pi_prime.top()
        } else {
            self.pi.top()
        }
    }

    /// The member at `delta`: distance `delta` to [`Self::near`] and
    /// `1 + delta * i / (n + 1)` to the candidate at position `i >= 2`.
    pub fn instantiate(&self, delta: &Rational) -> Result<AdversaryReport> {
        if *delta <= Rational::zero() || *delta >= Rational::one() {
            return Err(Error::BadParams(format!("delta must lie in (0, 1), got {}", crate::rational::format_rational(delta))));
        }
        let ranking = if self.winner == self.pi.top() { self.pi_prime.clone() } else { self.pi.clone() };
        let n = ranking.len();
        let mut row = vec![Rational::zero(); n];
        for p in 0..n {
            row[ranking.at(p).index()] =
                if p == 0 { delta.clone() } else { Rational::one() + delta * Rational::new((p as i64 + 1).into(), (n as i64 + 1).into()) };
        }
        let profile = VoteProfile::new(n, vec![WeightedBallot::new(ranking, Rational::one())])?;
        let (instance, certified_ratio, exact_ratio) = certify(profile, Metric::Exact(vec![row]), self.winner)?;
        Ok(AdversaryReport {
            kind: AdversaryKind::Unbounded,
            rule: self.rule.clone(),
            instance,
            winner: self.winner,
            certified_ratio,
            exact_ratio,
            theoretical_limit: Distortion::Unbounded,
            params: AdversaryParams { delta: Some(delta.clone()), ..AdversaryParams::default() },
            trace: vec![TraceStep::UnboundedFamily],
        })
    }
}

/// Finds a message that hides the voter's first choice and queries the
/// rule on a lone voter sending it. `None` if every message pins the top.
pub fn gen_unbounded_adversary(rule: &BoundedRule) -> Result<Option<UnboundedFamily>> {
    let Some((message, pi, pi_prime)) = rule.partition().has_ambiguous_top() else { return Ok(None) };
    let n = pi.len();
    let query = VoteProfile::new(n, vec![WeightedBallot::new(pi.clone(), Rational::one())])?;
    let winner = rule.apply(&query)?;
    Ok(Some(UnboundedFamily { rule: rule.name(), message, pi, pi_prime, winner }))
}

/// `1 - beta^(-1/(n-2))`.
pub fn gamma_of(n: usize, beta: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::BadN { n, min: 3 });
    }
    if beta.is_nan() || beta < 1.0 {
        return Err(Error::BadParams(format!("beta must be at least 1, got {beta}")));
    }
    Ok(1.0 - beta.powf(-1.0 / (n as f64 - 2.0)))
}

/// `2/gamma - 1` and `(2n - 4)/ln(beta) - 1`; infinite for `beta = 1`.
pub fn general_lower_bound(n: usize, beta: usize) -> Result<(Distortion, Distortion)> {
    let gamma = gamma_of(n, beta as f64)?;
    if beta == 1 {
        return Ok((Distortion::Unbounded, Distortion::Unbounded));
    }
    Ok((Distortion::Finite(2.0 / gamma - 1.0), Distortion::Finite((2 * n - 4) as f64 / (beta as f64).ln() - 1.0)))
}

/// The inductive construction against a rule with at most `beta` messages.
///
/// Live rankings are those ending in the sacrificed suffix; live classes
/// hold at least one. If every remaining candidate can be ranked last
/// (among the remaining ones) by at least a `1 - gamma` fraction of live
/// classes, one ballot of weight `1/live` per live class is submitted and
/// the metric built around the winner. Otherwise the first candidate (by
/// index) failing that test is sacrificed. The test is done in integers:
/// `count^(n-2) * beta >= live^(n-2)`.
pub fn gen_general_adversary(rule: &BoundedRule, beta: usize, eps: &Rational) -> Result<AdversaryReport> {
    check_epsilon(eps)?;
    let partition = rule.partition();
    let n = partition.num_candidates();
    check_cap(n)?;
    if n < 3 {
        return Err(Error::BadN { n, min: 3 });
    }
    if beta < partition.beta() {
        return Err(Error::BadParams(format!("rule sends {} messages, more than beta = {beta}", partition.beta())));
    }
    let gamma = gamma_of(n, beta as f64)?;
    let (limit, log_bound) = general_lower_bound(n, beta)?;
    let sched = eps_schedule(eps, n);
    let all = all_rankings(n)?;
    let labels = partition.labels();
    let exponent = (n - 2) as u32;
    let beta_big = num_bigint::BigInt::from(beta);

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut live: Vec<usize> = (0..all.len()).collect();
    let mut trace = Vec::new();

    // Lex-first live ranking per live class, and per candidate the lex-first
    // live ranking of each class that places it last among the remaining.
    let (reps, winner_last_by) = loop {
        let np = remaining.len();
        let mut reps: Vec<Option<usize>> = vec![None; partition.beta()];
        let mut last_by: Vec<Vec<Option<usize>>> = vec![vec![None; partition.beta()]; n];
        for &i in &live {
            let class = labels[i] - 1;
            reps[class].get_or_insert(i);
            last_by[all[i].at(np - 1).index()][class].get_or_insert(i);
        }
        let live_count = reps.iter().flatten().count();
        let threshold = num_bigint::BigInt::from(live_count).pow(exponent);
        let failing = remaining.iter().copied().find(|&x| {
            let count = last_by[x].iter().flatten().count();
            num_bigint::BigInt::from(count).pow(exponent) * &beta_big < threshold
        });
        match failing {
            None => break (reps, last_by),
            Some(x) => {
                // Unreachable at two candidates: live classes never exceed
                // beta * (1 - gamma)^(n - remaining) <= 1 there.
                debug_assert!(np > 2);
                remaining.retain(|&c| c != x);
                live.retain(|&i| all[i].at(np - 1).index() == x);
                let after = live.iter().map(|&i| labels[i]).collect::<std::collections::BTreeSet<_>>().len();
                trace.push(TraceStep::Sacrifice { candidate: CandidateId(x), remaining: np - 1, live_classes: Some((live_count, after)) });
            }
        }
    };
    let np = remaining.len();
    let classes: Vec<usize> = (0..reps.len()).filter(|&c| reps[c].is_some()).collect();
    let weight = Rational::new(1.into(), (classes.len() as i64).into());
    let query_profile =
        VoteProfile::new(n, classes.iter().map(|&c| WeightedBallot::new(all[reps[c].unwrap()].clone(), weight.clone())).collect())?;
    let winner = rule.apply(&query_profile)?;

    let mut rankings = Vec::with_capacity(classes.len());
    let mut heads = Vec::with_capacity(classes.len());
    let mut winner_last = 0;
    for &c in &classes {
        match winner_last_by[winner.index()][c].filter(|_| remaining.contains(&winner.index())) {
            Some(i) => {
                winner_last += 1;
                rankings.push(all[i].clone());
                heads.push(row_distances(&Row::Near, np, eps, &sched));
            }
            None => {
                rankings.push(all[reps[c].unwrap()].clone());
                heads.push(row_distances(&Row::Halfway, np, eps, &sched));
            }
        }
    }
    let (metric, big_m) = assemble(&rankings, heads, n);
    let profile = VoteProfile::new(n, rankings.into_iter().map(|r| WeightedBallot::new(r, weight.clone())).collect())?;
    trace.push(TraceStep::GeneralProfile { remaining: np, live_classes: classes.len(), winner_last });
    if !remaining.contains(&winner.index()) {
        trace.push(TraceStep::WinnerSacrificed { winner });
    } else if winner_last == classes.len() {
        trace.push(TraceStep::UnboundedFamily);
    }
    let (instance, certified_ratio, exact_ratio) = certify(profile, metric, winner)?;
    Ok(AdversaryReport {
        kind: AdversaryKind::General,
        rule: rule.name(),
        instance,
        winner,
        certified_ratio,
        exact_ratio,
        theoretical_limit: limit,
        params: AdversaryParams {
            epsilon: Some(eps.clone()),
            eps_schedule: sched,
            big_m: (np < n).then_some(big_m),
            beta: Some(beta),
            gamma: Some(gamma),
            log_bound: Some(log_bound.as_f64()),
            ..AdversaryParams::default()
        },
        trace,
    })
}
