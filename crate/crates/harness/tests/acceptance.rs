//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use mvd_core::adversary::{gen_general_adversary, gen_k_entry_adversary, gen_unbounded_adversary, gamma_of, general_lower_bound, AdversaryReport};
use mvd_core::communication::{BoundedRule, MessagePartition, PositionSet};
use mvd_core::election::{CandidateDistribution, CandidateId, Ranking, VoteProfile, WeightedBallot};
use mvd_core::lp::{distortion_of, distortion_of_tol, rule_distortion};
use mvd_core::metric::{costs, exact_ratio_of, is_consistent, optimal_candidate, ratio_of, validate_metric, Distortion, Instance, Metric};
use mvd_core::rational::{int, ratio, Rational};
use mvd_core::rules::{topk_copeland_detailed, RuleSpec};
use mvd_harness::reproduce::{lemmas_table, unit_profiles, LemmasParams};
use mvd_harness::sample::{sample_instance, SplitMix64};
use num_traits::Zero;
use rayon::prelude::*;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn eps() -> Rational {
    ratio(1, 100_000)
}

fn lp_of(report: &AdversaryReport) -> Distortion {
    let n = report.instance.profile().num_candidates();
    distortion_of(report.instance.profile(), &CandidateDistribution::point_mass(n, report.winner)).unwrap().distortion
}

const KENTRY_CELLS: [(usize, usize); 4] = [(4, 1), (5, 1), (5, 2), (6, 2)];

/// Adversary instances of the k-entry check, with their `k`.
fn kentry_reports() -> Vec<(usize, RuleSpec, AdversaryReport)> {
    let mut out = Vec::new();
    for (n, k) in KENTRY_CELLS {
        let positions = PositionSet::prefix(k);
        let partition = MessagePartition::k_entry(n, &positions).unwrap();
        let mut rules = vec![RuleSpec::TopkCopeland { k }];
        if k == 1 {
            rules.insert(0, RuleSpec::Plurality);
        }
        for rule in rules {
            let bounded = BoundedRule::from_rule(partition.clone(), rule).unwrap();
            out.push((k, rule, gen_k_entry_adversary(&bounded, &positions, &eps()).unwrap()));
        }
    }
    out
}

fn criterion_1() -> Check {
    let mut worst = f64::INFINITY;
    for (k, rule, report) in kentry_reports() {
        let n = report.instance.profile().num_candidates();
        let bound = (2 * n - k) as f64 / k as f64;
        ensure!(report.certified_ratio.at_least(bound - 0.01), "{rule} n={n}: certified {} < {bound} - 0.01", report.certified_ratio);
        let lp = lp_of(&report);
        ensure!(lp.at_least(bound - 0.01), "{rule} n={n}: LP {lp} < {bound} - 0.01");
        worst = worst.min(report.certified_ratio.as_f64() - bound);
    }
    Ok(format!("6 rule/(n,k) cases, smallest certified - bound = {worst:.5}"))
}

fn criterion_2() -> Check {
    let mut lines = Vec::new();
    for (n, beta) in [(4, 4), (4, 6), (5, 8)] {
        let partition = MessagePartition::contiguous(n, beta).unwrap();
        let gamma = gamma_of(n, beta as f64).unwrap();
        let limit = 2.0 / gamma - 1.0;
        let (_, log_bound) = general_lower_bound(n, beta).unwrap();
        ensure!(limit >= log_bound.as_f64(), "n={n} beta={beta}: 2/gamma-1 = {limit} < {log_bound}");
        for rule in [BoundedRule::plurality_on_messages(partition.clone()), BoundedRule::constant(partition.clone(), CandidateId(0)).unwrap()] {
            let report = gen_general_adversary(&rule, beta, &eps()).unwrap();
            ensure!(
                report.certified_ratio.at_least(limit - 0.01),
                "{} n={n} beta={beta}: certified {} < {limit} - 0.01",
                rule.name(),
                report.certified_ratio
            );
        }
        lines.push(format!("({n},{beta}) limit {limit:.4}"));
    }
    Ok(lines.join(", "))
}

fn criterion_3() -> Check {
    let mut cases = 0;
    for n in [2usize, 3, 4] {
        let a: Vec<usize> = (0..n).collect();
        let mut b = a.clone();
        b.swap(0, 1);
        let partition = MessagePartition::merged(n, &Ranking::from_indices(&a).unwrap(), &Ranking::from_indices(&b).unwrap()).unwrap();
        for rule in [BoundedRule::plurality_on_messages(partition.clone()), BoundedRule::constant(partition.clone(), CandidateId(1)).unwrap()] {
            let family = gen_unbounded_adversary(&rule).unwrap().ok_or("no family for a merged-top partition")?;
            for (delta, floor) in [(ratio(1, 1000), 1e3), (ratio(1, 1_000_000), 1e6)] {
                let report = family.instantiate(&delta).unwrap();
                ensure!(report.certified_ratio.at_least(floor), "n={n} {}: ratio {} < {floor}", rule.name(), report.certified_ratio);
                ensure!(lp_of(&report) == Distortion::Unbounded, "n={n}: LP not unbounded");
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} instances, LP unbounded on each"))
}

/// Seeded instances of the Copeland check: `n` in 2..=5, `m` in 1..=6.
fn copeland_instances() -> Vec<VoteProfile> {
    (0..200u64).map(|i| sample_instance(1000 + i, 2 + (i % 4) as usize, 1 + (i / 4 % 6) as usize).unwrap()).collect()
}

fn criterion_4() -> Check {
    let values: Vec<(usize, f64)> = copeland_instances()
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, rule_distortion(RuleSpec::Copeland, p).unwrap().result.distortion.as_f64()))
        .collect();
    let (i, worst) = values.iter().copied().fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    ensure!(worst <= 5.0 + 1e-6, "instance {i}: distortion {worst} > 5");
    Ok(format!("200 instances, max {worst:.6}"))
}

fn criterion_5() -> Check {
    let mut cases: Vec<(VoteProfile, usize)> = kentry_reports().into_iter().map(|(k, _, r)| (r.instance.profile().clone(), k)).collect();
    for p in copeland_instances() {
        let n = p.num_candidates();
        for k in 1..=n.min(3) {
            cases.push((p.clone(), k));
        }
    }
    let mut rng = SplitMix64::new(77);
    for i in 0..200u64 {
        let n = 3 + rng.below(3) as usize;
        let m = 1 + rng.below(8) as usize;
        let k = 1 + (i % 3) as usize;
        cases.push((sample_instance(rng.next_u64(), n, m).unwrap(), k));
    }
    let total = cases.len();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|(p, k)| {
            let (n, k) = (p.num_candidates(), *k);
            let outcome = topk_copeland_detailed(p, k).unwrap();
            if !outcome.graph.reaches_all_within(outcome.winner, 3) {
                return Some(format!("n={n} k={k}: winner {} not within 3 hops", outcome.winner));
            }
            let d = rule_distortion(RuleSpec::TopkCopeland { k }, p).unwrap().result.distortion;
            let path_bound = 1.0 + 78.0 * n as f64 / k as f64;
            let theorem = 79.0 * n as f64 / k as f64;
            if !(d.is_finite() && d.as_f64() <= path_bound + 1e-6 && d.as_f64() <= theorem + 1e-6) {
                return Some(format!("n={n} k={k}: distortion {d} above {path_bound} or {theorem}"));
            }
            None
        })
        .collect();
    ensure!(failures.is_empty(), "{} of {total} failed, first: {}", failures.len(), failures[0]);
    Ok(format!("{total} (instance, k) pairs"))
}

fn enumeration() -> Vec<VoteProfile> {
    let mut v = unit_profiles(3, 4).unwrap();
    v.extend(unit_profiles(2, 6).unwrap());
    v
}

fn criterion_6() -> Check {
    let profiles = enumeration();
    let values: Vec<(usize, f64)> = profiles
        .par_iter()
        .map(|p| (p.num_candidates(), rule_distortion(RuleSpec::Mixed, p).unwrap().result.distortion.as_f64()))
        .collect();
    let mut best = [0.0f64; 4];
    for (n, v) in values {
        let bound = 3.0 - 2.0 / n as f64;
        ensure!(v <= bound + 1e-6, "n={n}: mixed distortion {v} > {bound}");
        best[n] = best[n].max(v);
    }
    ensure!(best[2] >= 2.0 - 0.05, "n=2: best {} not within 0.05 of 2", best[2]);
    Ok(format!("{} profiles, max {:.6} (n=2), {:.6} (n=3)", profiles.len(), best[2], best[3]))
}

fn criterion_7() -> Check {
    let rows = lemmas_table(&LemmasParams { ns: (2..=10).collect(), step: 1e-4 }).map_err(|e| e.to_string())?;
    for r in &rows {
        ensure!(r.holds() == Some(true), "{} n={}: value {} bound {:?} ({})", r.rule, r.n, r.value, r.bound, r.note);
    }
    Ok(format!("{} grid rows for n = 2..10", rows.len()))
}

fn criterion_8() -> Check {
    let profiles = enumeration();
    let worst = profiles
        .par_iter()
        .map(|p| rule_distortion(RuleSpec::RandomDictatorship, p).unwrap().result.distortion)
        .reduce(|| Distortion::Finite(0.0), Distortion::max);
    ensure!(worst.is_finite() && worst.as_f64() < 3.0, "max {worst} is not below 3");
    Ok(format!("{} profiles, max {:.6}", profiles.len(), worst.as_f64()))
}

fn criterion_9() -> Check {
    // Two voters prefer candidate 0, one prefers 1. Put the majority voters
    // at distance 1 from both candidates and the minority voter on top of
    // candidate 1, at distance 2 from candidate 0: costs 4 and 2.
    let p = VoteProfile::from_rankings(2, &[vec![0, 1], vec![0, 1], vec![1, 0]]).unwrap();
    let witness = Metric::Exact(vec![vec![int(1), int(1)], vec![int(1), int(1)], vec![int(2), int(0)]]);
    ensure!(validate_metric(&witness, &p).unwrap().is_empty(), "witness is not a metric");
    let inst = Instance::new(p.clone(), Some(witness)).map_err(|e| e.to_string())?;
    ensure!(exact_ratio_of(&inst, CandidateId(0)).unwrap() == Some(int(2)), "witness ratio is not 2");
    let d = rule_distortion(RuleSpec::Plurality, &p).unwrap();
    ensure!(d.outcome.winner() == Some(CandidateId(0)), "plurality should elect 0");
    let v = d.result.distortion.as_f64();
    ensure!((v - 2.0).abs() <= 1e-9, "LP distortion {v}");
    Ok(format!("LP {v:.12}, hand witness ratio exactly 2"))
}

/// A random profile embedded on a line: integer voter and candidate
/// positions, rankings by distance with ties to the lower index.
fn line_instance(rng: &mut SplitMix64) -> (VoteProfile, Metric) {
    let n = 2 + rng.below(4) as usize;
    let m = 1 + rng.below(6) as usize;
    let cands: Vec<i64> = (0..n).map(|_| rng.below(21) as i64 - 10).collect();
    let mut rows = Vec::new();
    let mut ballots = Vec::new();
    for _ in 0..m {
        let v = rng.below(21) as i64 - 10;
        let row: Vec<i64> = cands.iter().map(|c| (v - c).abs()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&c| (row[c], c));
        ballots.push(WeightedBallot::new(Ranking::from_indices(&order).unwrap(), int(1 + rng.below(3) as i64)));
        rows.push(row.into_iter().map(int).collect());
    }
    (VoteProfile::new(n, ballots).unwrap(), Metric::Exact(rows))
}

const CASES: usize = 128;

fn criterion_10() -> Check {
    let mut rng = SplitMix64::new(10);
    let mut counts = [0usize; 6];
    for _ in 0..CASES {
        let (p, metric) = line_instance(&mut rng);
        let n = p.num_candidates();
        // Validation: line metrics pass; inflating one distance past the bound fails.
        ensure!(validate_metric(&metric, &p).unwrap().is_empty(), "line metric rejected");
        if p.len() >= 2 {
            let Metric::Exact(mut rows) = metric.clone() else { unreachable!() };
            let cap: Rational = rows.iter().flatten().cloned().fold(Rational::zero(), |a, b| a.max(b));
            rows[0][n - 1] = cap * int(4) + int(1);
            ensure!(!validate_metric(&Metric::Exact(rows), &p).unwrap().is_empty(), "inflated distance not reported");
        }
        counts[0] += 1;
        // Consistency: holds for the embedding; fails after swapping a strictly ordered pair.
        ensure!(is_consistent(&metric, &p).unwrap(), "line metric inconsistent");
        let Metric::Exact(rows) = &metric else { unreachable!() };
        let r = &p.ballots()[0].ranking;
        if let Some(i) = (0..n - 1).find(|&i| rows[0][r.at(i).index()] < rows[0][r.at(i + 1).index()]) {
            let mut order = r.indices();
            order.swap(i, i + 1);
            let mut ballots = p.ballots().to_vec();
            ballots[0] = WeightedBallot::new(Ranking::from_indices(&order).unwrap(), ballots[0].weight.clone());
            ensure!(!is_consistent(&metric, &VoteProfile::new(n, ballots).unwrap()).unwrap(), "swap not detected");
        }
        counts[1] += 1;
        // Scaling leaves the ratio and the optimum unchanged.
        let c = ratio(1 + rng.below(40) as i64, 1 + rng.below(40) as i64);
        let w = CandidateId(rng.below(n as u64) as usize);
        let a = Instance::new(p.clone(), Some(metric.clone())).unwrap();
        let b = Instance::new(p.clone(), Some(metric.scaled(&c))).unwrap();
        let (ra, rb) = (ratio_of(&a, w).unwrap(), ratio_of(&b, w).unwrap());
        ensure!(ra.is_finite() == rb.is_finite() && (!ra.is_finite() || (ra.as_f64() - rb.as_f64()).abs() <= 1e-12 * ra.as_f64().max(1.0)), "ratio changed under scaling");
        ensure!(
            optimal_candidate(&metric, &p).unwrap().0 == optimal_candidate(&metric.scaled(&c), &p).unwrap().0,
            "argmin changed under scaling"
        );
        ensure!(costs(&metric, &p).unwrap().argmin() == costs(&metric.scaled(&c), &p).unwrap().argmin(), "argmin changed");
        counts[2] += 1;
    }
    for i in 0..CASES {
        let n = 2 + (i % 4);
        let p = sample_instance(500 + i as u64, n, 1 + rng.below(7) as usize).unwrap();
        let mut sigma: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut sigma);
        let q = p.relabel(&sigma);
        for rule in [RuleSpec::RandomDictatorship, RuleSpec::PropSquares, RuleSpec::Mixed, RuleSpec::RandomOligarchy] {
            let d = rule.evaluate(&p).unwrap().to_distribution(n);
            ensure!(d.probs().iter().sum::<Rational>() == int(1), "{rule} does not sum to 1");
            ensure!(d.probs().iter().all(|x| *x >= Rational::zero()), "{rule} has a negative probability");
            ensure!(rule.evaluate(&q).unwrap().to_distribution(n) == d.relabel(&sigma), "{rule} is not relabeling-equivariant");
        }
        counts[3] += 1;
        for k in 1..=n {
            let (g, h) = (topk_copeland_detailed(&p, k).unwrap().graph, topk_copeland_detailed(&q, k).unwrap().graph);
            for x in 0..n {
                for y in 0..n {
                    ensure!(
                        g.has_edge(CandidateId(x), CandidateId(y)) == h.has_edge(CandidateId(sigma[x]), CandidateId(sigma[y])),
                        "comparison graph is not relabeling-equivariant"
                    );
                }
            }
        }
        counts[4] += 1;
    }
    // LP dominates every adversary witness.
    let mut reports = Vec::new();
    for i in 0..CASES {
        let n = 3 + i % 3;
        let e = ratio(1, 10i64.pow(2 + (i as u32 % 4)));
        let report = match i % 3 {
            0 => {
                let k = 1 + rng.below(n as u64 - 1) as usize;
                let positions = PositionSet::prefix(k);
                let part = MessagePartition::k_entry(n, &positions).unwrap();
                let rule = if rng.below(2) == 0 {
                    BoundedRule::plurality_on_messages(part)
                } else {
                    BoundedRule::from_rule(part, RuleSpec::TopkCopeland { k }).unwrap()
                };
                gen_k_entry_adversary(&rule, &positions, &e).unwrap()
            }
            1 => {
                let beta = 1 + rng.below(10) as usize;
                let part = MessagePartition::contiguous(n, beta).unwrap();
                let rule = if rng.below(2) == 0 {
                    BoundedRule::plurality_on_messages(part)
                } else {
                    BoundedRule::constant(part, CandidateId(rng.below(n as u64) as usize)).unwrap()
                };
                gen_general_adversary(&rule, beta, &e).unwrap()
            }
            _ => {
                let a: Vec<usize> = (0..n).collect();
                let mut b = a.clone();
                rng.shuffle(&mut b);
                if b[0] == 0 {
                    b.swap(0, n - 1);
                }
                let part = MessagePartition::merged(n, &Ranking::from_indices(&a).unwrap(), &Ranking::from_indices(&b).unwrap()).unwrap();
                let family = gen_unbounded_adversary(&BoundedRule::plurality_on_messages(part)).unwrap().expect("ambiguous top");
                family.instantiate(&e).unwrap()
            }
        };
        reports.push(report);
    }
    let bad = reports
        .par_iter()
        .filter(|r| {
            let n = r.instance.profile().num_candidates();
            let lp = distortion_of_tol(r.instance.profile(), &CandidateDistribution::point_mass(n, r.winner), 1e-9).unwrap().distortion;
            match (lp, r.certified_ratio) {
                (Distortion::Unbounded, _) => false,
                (Distortion::Finite(_), Distortion::Unbounded) => true,
                (Distortion::Finite(a), Distortion::Finite(b)) => a < b * (1.0 - 1e-7),
            }
        })
        .count();
    ensure!(bad == 0, "{bad} adversary reports above their LP value");
    counts[5] = reports.len();
    Ok(format!(
        "validation {}, consistency {}, scaling {}, distributions+relabeling {}, graph relabeling {}, LP dominance {}",
        counts[0], counts[1], counts[2], counts[3], counts[4], counts[5]
    ))
}

fn main() {
    let criteria: [(fn() -> Check, Duration); 10] = [
        (criterion_1, Duration::from_secs(10)),
        (criterion_2, Duration::from_secs(30)),
        (criterion_3, Duration::from_secs(1)),
        (criterion_4, Duration::from_secs(120)),
        (criterion_5, Duration::from_secs(600)),
        (criterion_6, Duration::from_secs(120)),
        (criterion_7, Duration::from_secs(5)),
        (criterion_8, Duration::from_secs(120)),
        (criterion_9, Duration::from_secs(60)),
        (criterion_10, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (i, (check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > limit => Err(format!("{detail}; took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {}: PASS ({detail}; {took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL ({why}; {took:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
