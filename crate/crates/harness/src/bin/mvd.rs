//! `mvd`: metric distortion toolkit.
//!
//! Exit codes: 0 on success (and when every checked claim holds), 1 when a
//! validation or claim fails, 2 on input errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvd_core::adversary::{gen_general_adversary, gen_k_entry_adversary, gen_unbounded_adversary, AdversaryReport};
use mvd_core::communication::{BoundedRule, MessagePartition, PositionSet};
use mvd_core::election::{CandidateDistribution, Ranking, VoteProfile};
use mvd_core::lp::distortion_of;
use mvd_core::metric::{is_consistent, validate_metric};
use mvd_core::rational::{format_rational, parse_rational, Rational};
use mvd_core::rules::{topk_copeland_detailed, RuleOutcome, RuleSpec};
use mvd_harness::format::{distortion_value, distribution_value, metric_rows, report_value, to_pretty, InstanceFile, PartitionFile};
use mvd_harness::reproduce::{self, BoundsParams, LemmasParams, RandomizedParams, Table};
use mvd_harness::sample::sample_instance;
use mvd_harness::{HarnessError, Result};
use serde_json::{json, Value};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mvd", version, about = "Metric distortion of voting rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance: rankings, weights, metric and consistency.
    Validate { file: String },
    /// Run a rule on an instance.
    Rule {
        #[command(subcommand)]
        action: RuleAction,
    },
    /// Worst-case distortion of a rule's outcome on an instance.
    Distortion {
        #[arg(long)]
        rule: String,
        /// Apply the rule to messages of this partition instead of full rankings.
        #[arg(long)]
        partition: Option<String>,
        file: String,
    },
    /// Build a lower-bound instance against a rule.
    Adversary(AdversaryArgs),
    /// Recompute an experiment table as CSV.
    Reproduce(ReproduceArgs),
    /// Print a seeded random instance.
    Sample {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
}

#[derive(Subcommand)]
enum RuleAction {
    Run {
        #[arg(long)]
        rule: String,
        /// Include the comparison graph (copeland and topk-copeland only).
        #[arg(long)]
        emit_graph: bool,
        #[arg(long)]
        partition: Option<String>,
        file: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AdversaryKindArg {
    KEntry,
    General,
    Unbounded,
}

#[derive(Args)]
struct AdversaryArgs {
    kind: AdversaryKindArg,
    /// A rule name, or `plurality-on-messages`.
    #[arg(long)]
    rule: String,
    #[arg(long)]
    n: Option<usize>,
    /// Observed positions, 1-based, e.g. `1,2`.
    #[arg(long, default_value = "1")]
    positions: String,
    #[arg(long)]
    beta: Option<usize>,
    #[arg(long, default_value = "1e-5")]
    epsilon: String,
    #[arg(long, default_value = "1e-3")]
    delta: String,
    /// Partition file; defaults to contiguous classes (general) or the
    /// first two rankings merged (unbounded).
    #[arg(long)]
    partition: Option<String>,
    /// Write the constructed instance here.
    #[arg(long)]
    instance_out: Option<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<String>,
    /// Skip the LP on the constructed instance.
    #[arg(long)]
    no_lp: bool,
    /// How far below the limit the certified ratio may fall.
    #[arg(long, default_value_t = 0.01)]
    slack: f64,
}

#[derive(Args)]
struct ReproduceArgs {
    table: String,
    /// Candidate counts: `4`, `2..10` or `3,5`.
    #[arg(long)]
    n: Option<String>,
    /// Observed prefix lengths for `bounds`; all of `1..n` by default.
    #[arg(long)]
    k: Option<String>,
    #[arg(long, default_value_t = 4)]
    max_voters: usize,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 6)]
    voters: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "1e-5")]
    epsilon: String,
    #[arg(long)]
    out: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_out(path: Option<&str>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::Io { path: p.to_string(), message: e.to_string() }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_partition(path: &str) -> Result<MessagePartition> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_string(), message: e.to_string() })?;
    Ok(PartitionFile::parse(&text)?.to_partition()?)
}

fn rational_arg(s: &str, name: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| HarnessError::Input(format!("--{name}: {e}")))
}

fn bounded_rule(rule: &str, partition: MessagePartition) -> Result<BoundedRule> {
    if rule == "plurality-on-messages" {
        return Ok(BoundedRule::plurality_on_messages(partition));
    }
    Ok(BoundedRule::from_rule(partition, rule.parse::<RuleSpec>()?)?)
}

fn load(file: &str) -> Result<(InstanceFile, VoteProfile)> {
    let f = InstanceFile::read(file)?;
    let profile = f.profile()?;
    Ok((f, profile))
}

/// The outcome of `rule` (a rule name, or any rule over a partition).
fn outcome(rule: &str, partition: Option<&str>, profile: &VoteProfile) -> Result<(String, RuleOutcome)> {
    match partition {
        Some(path) => {
            let b = bounded_rule(rule, read_partition(path)?)?;
            Ok((b.name(), RuleOutcome::Winner(b.apply(profile)?)))
        }
        None => {
            let spec: RuleSpec = rule.parse()?;
            Ok((spec.to_string(), spec.evaluate(profile)?))
        }
    }
}

fn outcome_fields(out: &mut serde_json::Map<String, Value>, o: &RuleOutcome) {
    match o {
        RuleOutcome::Winner(w) => out.insert("winner".into(), json!(w.index())),
        RuleOutcome::Lottery(d) => out.insert("distribution".into(), distribution_value(d)),
    };
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate { file } => validate(&file),
        Command::Rule { action: RuleAction::Run { rule, emit_graph, partition, file } } => {
            let (_, profile) = load(&file)?;
            let (name, o) = outcome(&rule, partition.as_deref(), &profile)?;
            let mut out = serde_json::Map::new();
            out.insert("rule".into(), json!(name));
            outcome_fields(&mut out, &o);
            if emit_graph {
                let k = match rule.parse::<RuleSpec>() {
                    Ok(RuleSpec::TopkCopeland { k }) if partition.is_none() => k,
                    Ok(RuleSpec::Copeland) if partition.is_none() => profile.num_candidates(),
                    _ => return Err(HarnessError::Input("--emit-graph needs copeland or topk-copeland without --partition".into())),
                };
                let d = topk_copeland_detailed(&profile, k)?;
                let ids = |v: &[mvd_core::election::CandidateId]| v.iter().map(|c| c.index()).collect::<Vec<_>>();
                out.insert(
                    "graph".into(),
                    json!({
                        "k": k,
                        "alpha": format_rational(d.graph.alpha()),
                        "edges": d.graph.edges().map(|(x, y)| json!([x.index(), y.index()])).collect::<Vec<_>>(),
                        "s2": ids(&d.s2),
                        "s3": ids(&d.s3),
                        "outdegrees": d.outdegrees,
                    }),
                );
            }
            write_out(None, &to_pretty(&Value::Object(out)))?;
            Ok(0)
        }
        Command::Distortion { rule, partition, file } => {
            let (_, profile) = load(&file)?;
            let (name, o) = outcome(&rule, partition.as_deref(), &profile)?;
            let r = distortion_of(&profile, &o.to_distribution(profile.num_candidates()))?;
            let mut out = serde_json::Map::new();
            out.insert("rule".into(), json!(name));
            outcome_fields(&mut out, &o);
            out.insert("distortion".into(), distortion_value(r.distortion));
            out.insert("reference".into(), json!(r.reference.index()));
            out.insert("witness_metric".into(), json!(r.witness.as_ref().map(|m| json!({ "rows": metric_rows(m) }))));
            write_out(None, &to_pretty(&Value::Object(out)))?;
            Ok(0)
        }
        Command::Adversary(args) => adversary(args),
        Command::Reproduce(args) => reproduce_cmd(args),
        Command::Sample { seed, n, m } => {
            let profile = sample_instance(seed, n, m)?;
            write_out(None, &InstanceFile::from_parts(&profile, None).to_json())?;
            Ok(0)
        }
    }
}

fn validate(file: &str) -> Result<u8> {
    let f = InstanceFile::read(file)?;
    let mut problems = Vec::new();
    let mut consistent = None;
    match f.profile() {
        Err(e) => problems.push(e.to_string()),
        Ok(profile) => {
            if let Some(metric) = f.metric() {
                match validate_metric(&metric, &profile) {
                    Err(e) => problems.push(e.to_string()),
                    Ok(violations) => {
                        problems.extend(violations.iter().map(|v| v.to_string()));
                        let c = is_consistent(&metric, &profile)?;
                        if !c {
                            problems.push("metric is not consistent with the rankings".into());
                        }
                        consistent = Some(c);
                    }
                }
            }
        }
    }
    let report = json!({ "valid": problems.is_empty(), "consistent": consistent, "problems": problems });
    write_out(None, &to_pretty(&report))?;
    Ok(if problems.is_empty() { 0 } else { 1 })
}

fn need(v: Option<usize>, name: &str) -> Result<usize> {
    v.ok_or_else(|| HarnessError::Input(format!("--{name} is required")))
}

fn adversary(a: AdversaryArgs) -> Result<u8> {
    let eps = rational_arg(&a.epsilon, "epsilon")?;
    let report: Option<AdversaryReport> = match a.kind {
        AdversaryKindArg::KEntry => {
            let n = need(a.n, "n")?;
            let positions = PositionSet::new(reproduce::parse_list(&a.positions)?, n)?;
            let rule = bounded_rule(&a.rule, MessagePartition::k_entry(n, &positions)?)?;
            Some(gen_k_entry_adversary(&rule, &positions, &eps)?)
        }
        AdversaryKindArg::General => {
            let beta = need(a.beta, "beta")?;
            let partition = match &a.partition {
                Some(p) => read_partition(p)?,
                None => MessagePartition::contiguous(need(a.n, "n")?, beta)?,
            };
            let rule = bounded_rule(&a.rule, partition)?;
            Some(gen_general_adversary(&rule, beta, &eps)?)
        }
        AdversaryKindArg::Unbounded => {
            let delta = rational_arg(&a.delta, "delta")?;
            let partition = match &a.partition {
                Some(p) => read_partition(p)?,
                None => {
                    let n = need(a.n, "n")?;
                    let first: Vec<usize> = (0..n).collect();
                    let mut second = first.clone();
                    second.swap(0, 1.min(n - 1));
                    MessagePartition::merged(n, &Ranking::from_indices(&first)?, &Ranking::from_indices(&second)?)?
                }
            };
            let rule = bounded_rule(&a.rule, partition)?;
            match gen_unbounded_adversary(&rule)? {
                Some(family) => Some(family.instantiate(&delta)?),
                None => None,
            }
        }
    };
    let Some(report) = report else {
        write_out(a.out.as_deref(), &to_pretty(&json!({ "kind": "unbounded", "family": null, "note": "no message mixes rankings with different tops" })))?;
        return Ok(1);
    };
    let lp = if a.no_lp {
        None
    } else {
        let n = report.instance.profile().num_candidates();
        Some(distortion_of(report.instance.profile(), &CandidateDistribution::point_mass(n, report.winner))?.distortion)
    };
    let ok = report.meets_limit(a.slack);
    if let Some(path) = &a.instance_out {
        write_out(Some(path), &InstanceFile::from_parts(report.instance.profile(), report.instance.metric()).to_json())?;
    }
    write_out(a.out.as_deref(), &to_pretty(&report_value(&report, lp, ok)))?;
    Ok(if ok { 0 } else { 1 })
}

fn reproduce_cmd(a: ReproduceArgs) -> Result<u8> {
    let table: Table = a.table.parse()?;
    let ns = a.n.as_deref().map(reproduce::parse_list).transpose()?;
    let rows = match table {
        Table::Bounds => reproduce::bounds_table(&BoundsParams {
            ns: ns.unwrap_or_else(|| vec![4]),
            ks: a.k.as_deref().map(reproduce::parse_list).transpose()?,
            epsilon: rational_arg(&a.epsilon, "epsilon")?,
            samples: a.samples,
            voters: a.voters,
            seed: a.seed,
        })?,
        Table::Randomized => {
            reproduce::randomized_table(&RandomizedParams { ns: ns.unwrap_or_else(|| vec![2, 3]), max_voters: a.max_voters })?
        }
        Table::Lemmas => reproduce::lemmas_table(&LemmasParams { ns: ns.unwrap_or_else(|| (2..=10).collect()), step: a.step })?,
    };
    let file = std::fs::File::create(&a.out).map_err(|e| HarnessError::Io { path: a.out.clone(), message: e.to_string() })?;
    reproduce::write_csv(&rows, std::io::BufWriter::new(file))?;
    let failed = rows.iter().filter(|r| r.holds() == Some(false)).count();
    eprintln!("{} rows written to {}; {failed} failing", rows.len(), a.out);
    Ok(if failed == 0 { 0 } else { 1 })
}

