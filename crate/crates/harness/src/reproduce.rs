//! Experiment tables written as CSV.
//!
//! * `bounds`: per `(n, k)`, the k-entry adversary against top-`k` Copeland
//!   (and plurality at `k = 1`) with the LP value of the same instance, and
//!   the largest LP distortion of top-`k` Copeland seen on the adversary
//!   instance and on sampled instances, against `1 + 78n/k` and `79n/k`.
//! * `randomized`: per `n`, the largest LP distortion over every unit-voter
//!   profile with at most `max_voters` ballots for the mixed mechanism,
//!   Random Dictatorship and Random Oligarchy.
//! * `lemmas`: grid maxima of `f` and minima of `g`.
//!
//! `slack` is always `bound - value`. For lower bounds a row holds when the
//! value reaches the bound up to the tolerance in its note.

use crate::sample::sample_instance;
use crate::{HarnessError, Result};
use mvd_core::adversary::gen_k_entry_adversary;
use mvd_core::communication::{BoundedRule, MessagePartition, PositionSet};
use mvd_core::election::{CandidateDistribution, VoteProfile, WeightedBallot};
use mvd_core::lp::{distortion_of, rule_distortion};
use mvd_core::metric::Distortion;
use mvd_core::perm::{all_rankings, falling_factorial};
use mvd_core::rational::{format_significant, Rational};
use mvd_core::rules::{technical_bound_f, technical_bound_g, RuleSpec};
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;
use std::str::FromStr;
use std::time::Instant;

/// Largest `n` for LP sweeps.
pub const MAX_LP_CANDIDATES: usize = 7;
/// Largest number of distinct ballots the k-entry construction may need.
pub const MAX_KENTRY_TYPES: usize = 60;
pub const MAX_PROFILES: usize = 20_000;
pub const MAX_GRID_POINTS: usize = 10_000_000;

pub const LOWER_TOL: f64 = 0.01;
pub const UPPER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Table {
    Bounds,
    Randomized,
    Lemmas,
}

impl FromStr for Table {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounds" => Ok(Table::Bounds),
            "randomized" => Ok(Table::Randomized),
            "lemmas" => Ok(Table::Lemmas),
            _ => Err(HarnessError::Input(format!("unknown table `{s}` (expected bounds, randomized or lemmas)"))),
        }
    }
}

impl Table {
    pub fn name(self) -> &'static str {
        match self {
            Table::Bounds => "bounds",
            Table::Randomized => "randomized",
            Table::Lemmas => "lemmas",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// The value must reach the bound.
    Lower,
    /// The value must not exceed the bound.
    Upper,
    /// The value must stay strictly below the bound.
    StrictUpper,
    /// Reported without a claim.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub table: Table,
    pub rule: String,
    pub n: usize,
    pub param: String,
    pub kind: String,
    pub value: Distortion,
    pub bound: Option<f64>,
    pub bound_kind: BoundKind,
    pub runtime_ms: u128,
    pub note: String,
    /// Extra condition folded into `holds` (e.g. where a maximum sits).
    pub side_condition: bool,
}

impl ResultRow {
    pub fn slack(&self) -> Option<f64> {
        self.bound.map(|b| b - self.value.as_f64())
    }

    pub fn holds(&self) -> Option<bool> {
        let b = self.bound?;
        let v = self.value;
        let ok = match self.bound_kind {
            BoundKind::Lower => v.at_least(b - LOWER_TOL),
            BoundKind::Upper => v.is_finite() && v.as_f64() <= b + UPPER_TOL,
            BoundKind::StrictUpper => v.is_finite() && v.as_f64() < b,
            BoundKind::None => return None,
        };
        Some(ok && self.side_condition)
    }
}

#[derive(Debug, Serialize)]
struct CsvRecord<'a> {
    table: &'a str,
    rule: &'a str,
    n: usize,
    param: &'a str,
    kind: &'a str,
    value: String,
    bound: String,
    slack: String,
    holds: String,
    runtime_ms: u128,
    note: &'a str,
}

fn number(x: f64) -> String {
    format_significant(x, crate::format::SIGNIFICANT_DIGITS)
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        let rec = CsvRecord {
            table: r.table.name(),
            rule: &r.rule,
            n: r.n,
            param: &r.param,
            kind: &r.kind,
            value: number(r.value.as_f64()),
            bound: r.bound.map(number).unwrap_or_default(),
            slack: r.slack().map(number).unwrap_or_default(),
            holds: r.holds().map(|h| h.to_string()).unwrap_or_default(),
            runtime_ms: r.runtime_ms,
            note: &r.note,
        };
        w.serialize(rec).map_err(|e| HarnessError::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::Input(e.to_string()))?;
    Ok(())
}

/// Parses `4`, `2..10` (inclusive) or `3,4,6`.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let bad = || HarnessError::Input(format!("bad list `{s}` (use `4`, `2..10` or `3,4,6`)"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

/// Every multiset of `1..=max_voters` unit-weight rankings over `n`
/// candidates, by size and then lexicographically.
pub fn unit_profiles(n: usize, max_voters: usize) -> Result<Vec<VoteProfile>> {
    if n == 0 || n > MAX_LP_CANDIDATES {
        return Err(HarnessError::CapExceeded(format!("profile enumeration needs 1 <= n <= {MAX_LP_CANDIDATES}, got {n}")));
    }
    let types = all_rankings(n)?;
    let count: usize = (1..=max_voters).map(|m| multiset_count(types.len(), m)).sum();
    if count > MAX_PROFILES {
        return Err(HarnessError::CapExceeded(format!(
            "{count} profiles for n = {n}, max_voters = {max_voters}; the cap is {MAX_PROFILES}"
        )));
    }
    let mut out = Vec::with_capacity(count);
    for m in 1..=max_voters {
        let mut idx = vec![0usize; m];
        loop {
            let ballots = idx.iter().map(|&i| WeightedBallot::new(types[i].clone(), Rational::one())).collect();
            out.push(VoteProfile::new(n, ballots)?);
            // Next non-decreasing index sequence.
            let Some(p) = (0..m).rev().find(|&p| idx[p] + 1 < types.len()) else { break };
            let v = idx[p] + 1;
            idx[p..].iter_mut().for_each(|x| *x = v);
        }
    }
    Ok(out)
}

fn multiset_count(t: usize, m: usize) -> usize {
    // C(t + m - 1, m), saturating.
    let mut c: u128 = 1;
    for i in 0..m {
        c = c * (t + i) as u128 / (i + 1) as u128;
        if c > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

#[derive(Debug, Clone)]
pub struct BoundsParams {
    pub ns: Vec<usize>,
    /// `None` means every `k` in `1..n`.
    pub ks: Option<Vec<usize>>,
    pub epsilon: Rational,
    pub samples: usize,
    pub voters: usize,
    pub seed: u64,
}

impl Default for BoundsParams {
    fn default() -> Self {
        Self { ns: vec![4], ks: None, epsilon: Rational::new(1.into(), 100_000.into()), samples: 20, voters: 6, seed: 1 }
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, u128)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_millis()))
}

fn bounds_cell(n: usize, k: usize, p: &BoundsParams) -> Result<Vec<ResultRow>> {
    let positions = PositionSet::new((1..=k).collect(), n)?;
    let partition = MessagePartition::k_entry(n, &positions)?;
    let lower = (2 * n - k) as f64 / k as f64;
    let param = format!("k={k}");
    let mut rules = vec![RuleSpec::TopkCopeland { k }];
    if k == 1 {
        rules.insert(0, RuleSpec::Plurality);
    }
    let mut rows = Vec::new();
    for rule in rules {
        let bounded = BoundedRule::from_rule(partition.clone(), rule)?;
        let (report, ms) = timed(|| Ok(gen_k_entry_adversary(&bounded, &positions, &p.epsilon)?))?;
        let eps_note = format!("epsilon={}", number(mvd_core::rational::to_f64(&p.epsilon)));
        rows.push(ResultRow {
            table: Table::Bounds,
            rule: format!("{rule}"),
            n,
            param: param.clone(),
            kind: "adversary-certified".into(),
            value: report.certified_ratio,
            bound: Some(lower),
            bound_kind: BoundKind::Lower,
            runtime_ms: ms,
            note: format!("lower (2n-k)/k; {eps_note}; tolerance {LOWER_TOL}"),
            side_condition: true,
        });
        let point = CandidateDistribution::point_mass(n, report.winner);
        let (lp, ms) = timed(|| Ok(distortion_of(report.instance.profile(), &point)?))?;
        rows.push(ResultRow {
            table: Table::Bounds,
            rule: format!("{rule}"),
            n,
            param: param.clone(),
            kind: "adversary-lp".into(),
            value: lp.distortion,
            bound: Some(lower),
            bound_kind: BoundKind::Lower,
            runtime_ms: ms,
            note: format!("lower (2n-k)/k; LP on the adversary instance; tolerance {LOWER_TOL}"),
            side_condition: true,
        });

        if let RuleSpec::TopkCopeland { .. } = rule {
            let start = Instant::now();
            let mut worst = lp.distortion;
            for s in 0..p.samples {
                let profile = sample_instance(p.seed.wrapping_add(s as u64), n, p.voters)?;
                worst = worst.max(rule_distortion(rule, &profile)?.result.distortion);
            }
            let ms = start.elapsed().as_millis();
            let note = format!("max over adversary instance and {} samples (m={}, seeds {}..)", p.samples, p.voters, p.seed);
            for (kind, bound) in [("upper-path3", 1.0 + 78.0 * n as f64 / k as f64), ("upper-theorem", 79.0 * n as f64 / k as f64)] {
                rows.push(ResultRow {
                    table: Table::Bounds,
                    rule: format!("{rule}"),
                    n,
                    param: param.clone(),
                    kind: kind.into(),
                    value: worst,
                    bound: Some(bound),
                    bound_kind: BoundKind::Upper,
                    runtime_ms: ms,
                    note: note.clone(),
                    side_condition: true,
                });
            }
        }
    }
    Ok(rows)
}

pub fn bounds_table(p: &BoundsParams) -> Result<Vec<ResultRow>> {
    let mut cells = Vec::new();
    for &n in &p.ns {
        if !(3..=MAX_LP_CANDIDATES).contains(&n) {
            return Err(HarnessError::CapExceeded(format!("bounds needs 3 <= n <= {MAX_LP_CANDIDATES}, got {n}")));
        }
        let ks = p.ks.clone().unwrap_or_else(|| (1..n).collect());
        for k in ks {
            if k == 0 || k >= n {
                return Err(HarnessError::Input(format!("k = {k} must lie in 1..{n}")));
            }
            if falling_factorial(n, k) > MAX_KENTRY_TYPES {
                return Err(HarnessError::CapExceeded(format!(
                    "(n, k) = ({n}, {k}) needs {} ballot types; the cap is {MAX_KENTRY_TYPES}",
                    falling_factorial(n, k)
                )));
            }
            cells.push((n, k));
        }
    }
    let rows: Vec<Vec<ResultRow>> = cells.par_iter().map(|&(n, k)| bounds_cell(n, k, p)).collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone)]
pub struct RandomizedParams {
    pub ns: Vec<usize>,
    pub max_voters: usize,
}

pub fn randomized_table(p: &RandomizedParams) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &n in &p.ns {
        if n < 2 {
            return Err(HarnessError::Input(format!("randomized needs n >= 2, got {n}")));
        }
        let profiles = unit_profiles(n, p.max_voters)?;
        let param = format!("m<={}", p.max_voters);
        let specs = [
            (RuleSpec::Mixed, Some(3.0 - 2.0 / n as f64), BoundKind::Upper),
            (RuleSpec::RandomDictatorship, Some(3.0), BoundKind::StrictUpper),
            (RuleSpec::RandomOligarchy, None, BoundKind::None),
        ];
        for (rule, bound, bound_kind) in specs {
            let start = Instant::now();
            let values: Vec<Distortion> =
                profiles.par_iter().map(|pr| Ok(rule_distortion(rule, pr)?.result.distortion)).collect::<Result<_>>()?;
            let (arg, worst) = values
                .iter()
                .enumerate()
                .fold((0, Distortion::Finite(0.0)), |(ai, a), (i, &v)| if v.as_f64() > a.as_f64() { (i, v) } else { (ai, a) });
            rows.push(ResultRow {
                table: Table::Randomized,
                rule: rule.to_string(),
                n,
                param: param.clone(),
                kind: "max-lp".into(),
                value: worst,
                bound,
                bound_kind,
                runtime_ms: start.elapsed().as_millis(),
                note: format!("{} profiles; worst is #{arg} ({})", profiles.len(), describe(&profiles[arg])),
                side_condition: true,
            });
        }
    }
    Ok(rows)
}

fn describe(profile: &VoteProfile) -> String {
    profile
        .ballots()
        .iter()
        .map(|b| b.ranking.indices().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(""))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone)]
pub struct LemmasParams {
    pub ns: Vec<usize>,
    pub step: f64,
}

pub fn lemmas_table(p: &LemmasParams) -> Result<Vec<ResultRow>> {
    if !(p.step > 0.0 && p.step <= 1.0) {
        return Err(HarnessError::Input(format!("step must lie in (0, 1], got {}", p.step)));
    }
    let points = (1.0 / p.step).round() as usize;
    if points > MAX_GRID_POINTS {
        return Err(HarnessError::CapExceeded(format!("{points} grid points; the cap is {MAX_GRID_POINTS}")));
    }
    let grid: Vec<f64> = (0..=points).map(|i| (i as f64 * p.step).min(1.0)).collect();
    let param = format!("step={}", number(p.step));
    let mut rows = Vec::new();
    for &n in &p.ns {
        if n < 2 {
            return Err(HarnessError::Input(format!("lemmas needs n >= 2, got {n}")));
        }
        let start = Instant::now();
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut low = f64::INFINITY;
        for &t in &grid {
            let f = technical_bound_f(t, n)?;
            if f > best.0 {
                best = (f, t);
            }
            low = low.min(technical_bound_g(t, n)?);
        }
        let ms = start.elapsed().as_millis();
        let at = 1.0 / n as f64;
        let near = (best.1 - at).abs() <= 2e-4_f64.max(p.step);
        rows.push(ResultRow {
            table: Table::Lemmas,
            rule: "f".into(),
            n,
            param: param.clone(),
            kind: "grid-max".into(),
            value: Distortion::Finite(best.0),
            bound: Some(1.0 - at),
            bound_kind: BoundKind::Upper,
            runtime_ms: ms,
            note: format!("argmax t={} (1/n={})", number(best.1), number(at)),
            side_condition: near,
        });
        rows.push(ResultRow {
            table: Table::Lemmas,
            rule: "g".into(),
            n,
            param: param.clone(),
            kind: "grid-min".into(),
            value: Distortion::Finite(low),
            bound: Some((n as f64 - 1.0) / n as f64),
            bound_kind: BoundKind::Lower,
            runtime_ms: ms,
            note: "tolerance 1e-12".into(),
            side_condition: low >= (n as f64 - 1.0) / n as f64 - 1e-12,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("4").unwrap(), vec![4]);
        assert_eq!(parse_list("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_list("3, 6").unwrap(), vec![3, 6]);
        assert!(parse_list("5..2").is_err());
        assert!(parse_list("x").is_err());
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(unit_profiles(3, 4).unwrap().len(), 6 + 21 + 56 + 126);
        assert_eq!(unit_profiles(2, 6).unwrap().len(), 27);
        assert_eq!(multiset_count(6, 4), 126);
        assert!(matches!(unit_profiles(8, 1), Err(HarnessError::CapExceeded(_))));
        assert!(matches!(unit_profiles(5, 4), Err(HarnessError::CapExceeded(_))));
    }

    #[test]
    fn enumerated_profiles_are_distinct() {
        let ps = unit_profiles(3, 3).unwrap();
        let mut keys: Vec<String> = ps.iter().map(describe).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), ps.len());
    }

    #[test]
    fn lemma_rows_hold() {
        let rows = lemmas_table(&LemmasParams { ns: vec![2, 3, 7], step: 1e-3 }).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.holds() == Some(true)), "{rows:?}");
    }

    #[test]
    fn bounds_caps() {
        let p = BoundsParams { ns: vec![7], ks: Some(vec![3]), ..Default::default() };
        assert!(matches!(bounds_table(&p), Err(HarnessError::CapExceeded(_))));
        let p = BoundsParams { ns: vec![8], ..Default::default() };
        assert!(matches!(bounds_table(&p), Err(HarnessError::CapExceeded(_))));
    }

    #[test]
    fn slack_is_bound_minus_value() {
        let r = ResultRow {
            table: Table::Lemmas,
            rule: "f".into(),
            n: 2,
            param: String::new(),
            kind: String::new(),
            value: Distortion::Finite(0.25),
            bound: Some(0.5),
            bound_kind: BoundKind::Upper,
            runtime_ms: 0,
            note: String::new(),
            side_condition: true,
        };
        assert_eq!(r.slack(), Some(0.25));
        let mut out = Vec::new();
        write_csv(&[r], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "table,rule,n,param,kind,value,bound,slack,holds,runtime_ms,note");
        assert!(text.contains("lemmas,f,2,,,0.25,0.5,0.25,true,0,"));
    }
}
