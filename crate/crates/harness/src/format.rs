//! JSON documents: instances, partitions and reports.
//!
//! Rationals are written as `"p/q"` strings; floating-point distances as
//! decimal strings with 12 significant digits. Output is pretty-printed with
//! a trailing newline, so writing a parsed canonical file reproduces it byte
//! for byte.

use crate::{HarnessError, Result};
use mvd_core::adversary::{AdversaryReport, TraceStep};
use mvd_core::communication::MessagePartition;
use mvd_core::election::{CandidateDistribution, Ranking, VoteProfile, WeightedBallot};
use mvd_core::metric::{Distortion, Metric};
use mvd_core::rational::{format_rational, format_significant, parse_rational, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallotEntry {
    pub weight: String,
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEntry {
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub ballots: Vec<BallotEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricEntry>,
}

fn rational(s: &str, what: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| HarnessError::Parse(format!("{what}: {e}")))
}

fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

pub fn metric_rows(metric: &Metric) -> Vec<Vec<String>> {
    match metric {
        Metric::Exact(rows) => rows.iter().map(|r| r.iter().map(format_rational).collect()).collect(),
        Metric::Approx(rows) => rows.iter().map(|r| r.iter().map(|d| format_significant(*d, SIGNIFICANT_DIGITS)).collect()).collect(),
    }
}

impl InstanceFile {
    /// Parses JSON and checks that every weight and distance is a rational.
    pub fn parse(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        for (i, b) in file.ballots.iter().enumerate() {
            rational(&b.weight, &format!("ballot {i} weight"))?;
        }
        if let Some(m) = &file.metric {
            for (v, row) in m.rows.iter().enumerate() {
                for (x, cell) in row.iter().enumerate() {
                    rational(cell, &format!("metric[{v}][{x}]"))?;
                }
            }
        }
        Ok(file)
    }

    pub fn read(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn from_parts(profile: &VoteProfile, metric: Option<&Metric>) -> Self {
        Self {
            n: profile.num_candidates(),
            ballots: profile
                .ballots()
                .iter()
                .map(|b| BallotEntry { weight: format_rational(&b.weight), ranking: b.ranking.indices() })
                .collect(),
            metric: metric.map(|m| MetricEntry { rows: metric_rows(m) }),
        }
    }

    pub fn to_json(&self) -> String {
        pretty(self)
    }

    /// Builds the profile, reporting any broken invariant.
    pub fn profile(&self) -> mvd_core::Result<VoteProfile> {
        let ballots = self
            .ballots
            .iter()
            .map(|b| {
                let ranking = Ranking::from_indices(&b.ranking)?;
                if ranking.len() != self.n {
                    return Err(mvd_core::Error::InvalidRanking(format!("ranking {ranking} has length {}, expected {}", ranking.len(), self.n)));
                }
                Ok(WeightedBallot::new(ranking, parse_rational(&b.weight).expect("checked on parse")))
            })
            .collect::<mvd_core::Result<_>>()?;
        VoteProfile::new(self.n, ballots)
    }

    /// The metric as exact rationals, if present.
    pub fn metric(&self) -> Option<Metric> {
        self.metric.as_ref().map(|m| {
            Metric::Exact(m.rows.iter().map(|r| r.iter().map(|c| parse_rational(c).expect("checked on parse")).collect()).collect())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub n: usize,
    pub labels: Vec<usize>,
}

impl PartitionFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn from_partition(p: &MessagePartition) -> Self {
        Self { n: p.num_candidates(), labels: p.labels().to_vec() }
    }

    pub fn to_partition(&self) -> mvd_core::Result<MessagePartition> {
        MessagePartition::new(self.n, self.labels.clone())
    }

    pub fn to_json(&self) -> String {
        pretty(self)
    }
}

/// A finite value as a JSON number, infinity as `"inf"`.
pub fn distortion_value(d: Distortion) -> Value {
    match d {
        Distortion::Finite(x) => json!(x),
        Distortion::Unbounded => json!("inf"),
    }
}

pub fn distribution_value(d: &CandidateDistribution) -> Value {
    json!(d.probs().iter().map(format_rational).collect::<Vec<_>>())
}

fn trace_value(step: &TraceStep) -> Value {
    match step {
        TraceStep::Sacrifice { candidate, remaining, live_classes } => json!({
            "step": "sacrifice",
            "candidate": candidate.index(),
            "remaining": remaining,
            "live_classes": live_classes.map(|(a, b)| json!([a, b])),
        }),
        TraceStep::KEntryProfile { remaining, positions, types, winner_in_type, limit } => json!({
            "step": "k-entry-profile",
            "remaining": remaining,
            "positions": positions.positions(),
            "types": types,
            "winner_in_type": winner_in_type,
            "limit": distortion_value(*limit),
        }),
        TraceStep::GeneralProfile { remaining, live_classes, winner_last } => json!({
            "step": "general-profile",
            "remaining": remaining,
            "live_classes": live_classes,
            "winner_last": winner_last,
        }),
        TraceStep::UnboundedFamily => json!({ "step": "unbounded-family" }),
        TraceStep::WinnerSacrificed { winner } => json!({ "step": "winner-sacrificed", "winner": winner.index() }),
    }
}

/// The report as JSON, with the worst-case LP value on the same instance if
/// computed.
pub fn report_value(report: &AdversaryReport, lp: Option<Distortion>, meets_limit: bool) -> Value {
    let p = &report.params;
    let opt_rat = |r: &Option<Rational>| r.as_ref().map(format_rational);
    json!({
        "kind": report.kind.name(),
        "rule": report.rule,
        "winner": report.winner.index(),
        "certified_ratio": distortion_value(report.certified_ratio),
        "exact_ratio": opt_rat(&report.exact_ratio),
        "theoretical_limit": distortion_value(report.theoretical_limit),
        "meets_limit": meets_limit,
        "lp_distortion": lp.map(distortion_value),
        "params": {
            "epsilon": opt_rat(&p.epsilon),
            "eps_schedule": p.eps_schedule.iter().map(format_rational).collect::<Vec<_>>(),
            "big_m": opt_rat(&p.big_m),
            "delta": opt_rat(&p.delta),
            "beta": p.beta,
            "gamma": p.gamma,
            "log_bound": p.log_bound,
        },
        "trace": report.trace.iter().map(trace_value).collect::<Vec<_>>(),
        "instance": serde_json::to_value(InstanceFile::from_parts(report.instance.profile(), report.instance.metric())).expect("serialisable"),
    })
}

pub fn to_pretty(value: &Value) -> String {
    pretty(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"{
  "n": 2,
  "ballots": [
    {
      "weight": "2/3",
      "ranking": [
        0,
        1
      ]
    },
    {
      "weight": "1/3",
      "ranking": [
        1,
        0
      ]
    }
  ],
  "metric": {
    "rows": [
      [
        "0/1",
        "1/2"
      ],
      [
        "1/1",
        "1/4"
      ]
    ]
  }
}
"#;

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        let f = InstanceFile::parse(CANONICAL).unwrap();
        assert_eq!(f.to_json(), CANONICAL);
        let again = InstanceFile::from_parts(&f.profile().unwrap(), f.metric().as_ref());
        assert_eq!(again.to_json(), CANONICAL);
    }

    #[test]
    fn decimals_parse_exactly() {
        let f = InstanceFile::parse(r#"{"n":2,"ballots":[{"weight":"1","ranking":[0,1]}],"metric":{"rows":[["0.1","0.25"]]}}"#).unwrap();
        let Some(Metric::Exact(rows)) = f.metric() else { panic!() };
        assert_eq!(format_rational(&rows[0][0]), "1/10");
    }

    #[test]
    fn bad_rationals_and_fields_are_parse_errors() {
        let e = InstanceFile::parse(r#"{"n":2,"ballots":[{"weight":"1/0","ranking":[0,1]}]}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(InstanceFile::parse(r#"{"n":2,"ballots":[],"extra":1}"#).is_err());
        assert!(InstanceFile::parse("not json").is_err());
    }

    #[test]
    fn broken_rankings_surface_when_building() {
        let f = InstanceFile::parse(r#"{"n":3,"ballots":[{"weight":"1","ranking":[0,0,1]}]}"#).unwrap();
        assert!(f.profile().is_err());
        let f = InstanceFile::parse(r#"{"n":3,"ballots":[{"weight":"1","ranking":[0,1]}]}"#).unwrap();
        assert!(f.profile().is_err());
    }

    #[test]
    fn partition_round_trip() {
        let p = MessagePartition::contiguous(3, 4).unwrap();
        let text = PartitionFile::from_partition(&p).to_json();
        let back = PartitionFile::parse(&text).unwrap();
        assert_eq!(back.to_partition().unwrap(), p);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn approximate_metrics_use_twelve_digits() {
        let rows = metric_rows(&Metric::Approx(vec![vec![1.0 / 3.0, 2.0]]));
        assert_eq!(rows, vec![vec!["0.333333333333".to_string(), "2".to_string()]]);
    }
}
