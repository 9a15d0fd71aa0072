//! Voting mechanisms.
//!
//! Deterministic rules return a [`CandidateId`]; randomized rules return the
//! exact [`CandidateDistribution`] of their outcome and never sample. All
//! thresholds are compared in exact rational arithmetic and every tie is
//! broken towards the lowest candidate index.

use crate::election::{CandidateDistribution, CandidateId, Ranking, VoteProfile};
use crate::rational::Rational;
use crate::{Error, Result};
use num_traits::Zero;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

fn argmax_lowest(values: &[Rational]) -> CandidateId {
    let best = (1..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    CandidateId(best)
}

/// Candidate with the largest first-place share.
pub fn plurality(profile: &VoteProfile) -> Result<CandidateId> {
    Ok(argmax_lowest(&profile.first_place_shares()?))
}

/// What a mechanism that sees only a voter's top `k` learns about `x` vs `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopkPreference {
    /// The voter is known to prefer `x`.
    First,
    /// The voter is known to prefer `y`.
    Second,
    /// Neither candidate is in the top `k`.
    Unknown,
}

pub fn prefers_topk(ranking: &Ranking, k: usize, x: CandidateId, y: CandidateId) -> TopkPreference {
    let (px, py) = (ranking.position(x), ranking.position(y));
    if px < k && (py >= k || px < py) {
        TopkPreference::First
    } else if py < k && (px >= k || py < px) {
        TopkPreference::Second
    } else {
        TopkPreference::Unknown
    }
}

/// Directed graph with an edge `(x, y)` iff at least an `alpha = k / 3n`
/// fraction of the weight is known to prefer `x` over `y` from top-`k` lists.
/// Both, one or neither direction may be present for a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonGraph {
    n: usize,
    k: usize,
    alpha: Rational,
    adjacency: Vec<Vec<bool>>,
}

impl ComparisonGraph {
    /// A graph from explicit edges, with `alpha` and `k` recorded as given.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![vec![false; n]; n];
        for &(x, y) in edges {
            if x != y {
                adjacency[x][y] = true;
            }
        }
        Self { n, k: n, alpha: Rational::zero(), adjacency }
    }

    pub fn num_candidates(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn has_edge(&self, x: CandidateId, y: CandidateId) -> bool {
        self.adjacency[x.index()][y.index()]
    }

    pub fn edges(&self) -> impl Iterator<Item = (CandidateId, CandidateId)> + '_ {
        (0..self.n).flat_map(move |x| {
            (0..self.n).filter(move |&y| self.adjacency[x][y]).map(move |y| (CandidateId(x), CandidateId(y)))
        })
    }

    /// Out-degree of `x` counting only edges into `members`.
    pub fn out_degree_within(&self, x: CandidateId, members: &[bool]) -> usize {
        (0..self.n).filter(|&y| members[y] && self.adjacency[x.index()][y]).count()
    }

    /// BFS hop count from `from` to every node; `None` if unreachable.
    pub fn hop_distances(&self, from: CandidateId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[from.index()] = Some(0);
        let mut queue = VecDeque::from([from.index()]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have a distance");
            for (v, &edge) in self.adjacency[u].iter().enumerate() {
                if edge && dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn reaches_all_within(&self, from: CandidateId, hops: usize) -> bool {
        self.hop_distances(from).iter().all(|d| d.is_some_and(|d| d <= hops))
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::BadK { k, n })
    } else {
        Ok(())
    }
}

pub fn build_comparison_graph(profile: &VoteProfile, k: usize) -> Result<ComparisonGraph> {
    let n = profile.num_candidates();
    check_k(k, n)?;
    let total = profile.total_weight();
    if total.is_zero() {
        return Err(Error::ZeroTotalWeight);
    }
    let alpha = Rational::new(k.into(), (3 * n).into());
    let mut mass = vec![vec![Rational::zero(); n]; n];
    for b in profile.ballots() {
        // Only pairs with at least one member in the top k carry information.
        for &x in &b.ranking.order()[..k] {
            for y in (0..n).map(CandidateId) {
                if x != y && prefers_topk(&b.ranking, k, x, y) == TopkPreference::First {
                    mass[x.index()][y.index()] += &b.weight;
                }
            }
        }
    }
    let threshold = &alpha * &total;
    let adjacency = mass.iter().enumerate().map(|(x, row)| row.iter().enumerate().map(|(y, m)| x != y && *m >= threshold).collect()).collect();
    Ok(ComparisonGraph { n, k, alpha, adjacency })
}

/// Fraction of weight listing each candidate among its top `k`.
pub fn topk_appearance_shares(profile: &VoteProfile, k: usize) -> Result<Vec<Rational>> {
    let n = profile.num_candidates();
    check_k(k, n)?;
    let total = profile.total_weight();
    if total.is_zero() {
        return Err(Error::ZeroTotalWeight);
    }
    let mut shares = vec![Rational::zero(); n];
    for b in profile.ballots() {
        for c in &b.ranking.order()[..k] {
            shares[c.index()] += &b.weight;
        }
    }
    Ok(shares.into_iter().map(|s| s / &total).collect())
}

/// Everything the top-`k` Copeland mechanism computes on the way to its winner.
#[derive(Debug, Clone, PartialEq)]
pub struct TopkCopelandOutcome {
    pub winner: CandidateId,
    pub graph: ComparisonGraph,
    /// Candidates in at least a `2 alpha` fraction of top-`k` lists.
    pub s2: Vec<CandidateId>,
    /// Candidates in at least a `3 alpha` fraction of top-`k` lists.
    pub s3: Vec<CandidateId>,
    /// Out-degree inside `G[S2]`, zero for candidates outside `S2`.
    pub outdegrees: Vec<usize>,
}

pub fn topk_copeland_detailed(profile: &VoteProfile, k: usize) -> Result<TopkCopelandOutcome> {
    let graph = build_comparison_graph(profile, k)?;
    let shares = topk_appearance_shares(profile, k)?;
    let n = profile.num_candidates();
    let two_alpha = graph.alpha() * Rational::from_integer(2.into());
    let three_alpha = graph.alpha() * Rational::from_integer(3.into());
    let in_s2: Vec<bool> = shares.iter().map(|s| *s >= two_alpha).collect();
    let s2: Vec<CandidateId> = (0..n).filter(|&x| in_s2[x]).map(CandidateId).collect();
    let s3: Vec<CandidateId> = (0..n).filter(|&x| shares[x] >= three_alpha).map(CandidateId).collect();
    // Pigeonhole: some candidate is in at least k/n >= 3 alpha of the lists.
    debug_assert!(!s3.is_empty());
    let outdegrees: Vec<usize> =
        (0..n).map(|x| if in_s2[x] { graph.out_degree_within(CandidateId(x), &in_s2) } else { 0 }).collect();
    let winner = s2
        .iter()
        .copied()
        .fold(None, |best: Option<CandidateId>, x| match best {
            Some(b) if outdegrees[b.index()] >= outdegrees[x.index()] => Some(b),
            _ => Some(x),
        })
        .expect("S2 is non-empty");
    Ok(TopkCopelandOutcome { winner, graph, s2, s3, outdegrees })
}

/// Winner of the top-`k` Copeland mechanism: maximum out-degree inside the
/// comparison graph restricted to `S2`.
pub fn topk_copeland(profile: &VoteProfile, k: usize) -> Result<CandidateId> {
    Ok(topk_copeland_detailed(profile, k)?.winner)
}

/// Full-information Copeland, realised as [`topk_copeland`] with `k = n`
/// (edges at a one-third threshold, every candidate in `S2`).
pub fn copeland(profile: &VoteProfile) -> Result<CandidateId> {
    topk_copeland(profile, profile.num_candidates())
}

/// Candidates with a directed path of length at most 2 to every other
/// candidate.
pub fn uncovered_set(graph: &ComparisonGraph) -> Vec<CandidateId> {
    (0..graph.num_candidates()).map(CandidateId).filter(|&x| graph.reaches_all_within(x, 2)).collect()
}

/// Elects a uniformly random voter's first choice.
pub fn random_dictatorship(profile: &VoteProfile) -> Result<CandidateDistribution> {
    CandidateDistribution::new(profile.first_place_shares()?)
}

/// Elects `x` with probability `nu_x^2 / sum_y nu_y^2`.
pub fn proportional_to_squares(profile: &VoteProfile) -> Result<CandidateDistribution> {
    let shares = profile.first_place_shares()?;
    let squares: Vec<Rational> = shares.iter().map(|s| s * s).collect();
    let total: Rational = squares.iter().sum();
    CandidateDistribution::new(squares.into_iter().map(|s| s / &total).collect())
}

/// Proportional-to-Squares with probability `1/(n-1)`, otherwise Random
/// Dictatorship.
pub fn mixed_mechanism(profile: &VoteProfile) -> Result<CandidateDistribution> {
    let n = profile.num_candidates();
    if n < 2 {
        return Err(Error::BadN { n, min: 2 });
    }
    let a = Rational::new(1.into(), ((n - 1) as i64).into());
    proportional_to_squares(profile)?.mix(&random_dictatorship(profile)?, &a)
}

/// Samples three voters; a first-choice majority wins, otherwise one of the
/// three first choices uniformly. Computed exactly over all ordered triples.
pub fn random_oligarchy(profile: &VoteProfile) -> Result<CandidateDistribution> {
    let nu = profile.first_place_shares()?;
    let n = nu.len();
    let third = Rational::new(1.into(), 3.into());
    let mut probs = vec![Rational::zero(); n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let w = &nu[a] * &nu[b] * &nu[c];
                if w.is_zero() {
                    continue;
                }
                if a == b || a == c {
                    probs[a] += w;
                } else if b == c {
                    probs[b] += w;
                } else {
                    let share = w * &third;
                    probs[a] += &share;
                    probs[b] += &share;
                    probs[c] += share;
                }
            }
        }
    }
    CandidateDistribution::new(probs)
}

/// Distortion bound from per-candidate election probability bounds:
/// `1 + 2 max_{nu, x} q_x(nu) (1 - nu_x) / nu_x`, where a term with
/// `q_x = 0` contributes 0 (this covers `nu_x = 0`).
pub fn gax_bound<Q>(prob_bound: Q, nu_grid: &[Vec<f64>]) -> f64
where
    Q: Fn(&[f64], usize) -> f64,
{
    let mut worst: f64 = 0.0;
    for nu in nu_grid {
        for x in 0..nu.len() {
            let q = prob_bound(nu, x);
            if q == 0.0 {
                continue;
            }
            let term = if nu[x] == 0.0 { f64::INFINITY } else { q * (1.0 - nu[x]) / nu[x] };
            worst = worst.max(term);
        }
    }
    1.0 + 2.0 * worst
}

/// All first-place vectors over `n` candidates whose entries are multiples of
/// `1/steps`.
pub fn share_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == n - 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / steps as f64).collect());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(n, left - c, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, steps, steps, &mut Vec::new(), &mut out);
    }
    out
}

/// Election probability of `x` under Random Dictatorship, from shares.
pub fn dictatorship_probability(nu: &[f64], x: usize) -> f64 {
    nu[x]
}

pub fn squares_probability(nu: &[f64], x: usize) -> f64 {
    let total: f64 = nu.iter().map(|v| v * v).sum();
    nu[x] * nu[x] / total
}

pub fn mixed_probability(nu: &[f64], x: usize) -> f64 {
    let n = nu.len() as f64;
    squares_probability(nu, x) / (n - 1.0) + dictatorship_probability(nu, x) * (n - 2.0) / (n - 1.0)
}

/// Upper bound on the mixed mechanism's probability of electing a candidate
/// with first-place share `nu`, obtained by spreading the remaining share
/// evenly over the other `n - 1` candidates.
pub fn mixed_probability_bound(nu: f64, n: usize) -> f64 {
    let m = (n - 1) as f64;
    (1.0 - 1.0 / m) * nu + nu * nu / (m * nu * nu + (1.0 - nu) * (1.0 - nu))
}

fn check_t_n(t: f64, n: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&t) || n < 2 {
        return Err(Error::BadDomain(format!("need t in [0,1] and n >= 2, got t = {t}, n = {n}")));
    }
    Ok(())
}

/// `f(t) = (1 - 1/(n-1))(1-t) + t(1-t) / ((n-1) t^2 + (1-t)^2)`, bounded by
/// `1 - 1/n` on `[0, 1]`.
pub fn technical_bound_f(t: f64, n: usize) -> Result<f64> {
    check_t_n(t, n)?;
    let m = (n - 1) as f64;
    Ok((1.0 - 1.0 / m) * (1.0 - t) + t * (1.0 - t) / technical_bound_g(t, n)?)
}

/// `g(t) = (n-1) t^2 + (1-t)^2`, minimised at `t = 1/n` with value `(n-1)/n`.
pub fn technical_bound_g(t: f64, n: usize) -> Result<f64> {
    check_t_n(t, n)?;
    Ok((n - 1) as f64 * t * t + (1.0 - t) * (1.0 - t))
}

/// A named voting rule with validated parameters.
///
/// Grammar: `plurality`, `copeland`, `topk-copeland:k=<int>`,
/// `random-dictatorship`, `prop-squares`, `mixed`, `random-oligarchy`, and
/// `constant:c=<int>` (always elects candidate `c`; useful as a baseline
/// against the adversaries).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleSpec {
    Plurality,
    Copeland,
    TopkCopeland { k: usize },
    RandomDictatorship,
    PropSquares,
    Mixed,
    RandomOligarchy,
    Constant { c: usize },
}

/// Result of evaluating a rule.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleOutcome {
    Winner(CandidateId),
    Lottery(CandidateDistribution),
}

impl RuleOutcome {
    pub fn to_distribution(&self, n: usize) -> CandidateDistribution {
        match self {
            RuleOutcome::Winner(w) => CandidateDistribution::point_mass(n, *w),
            RuleOutcome::Lottery(d) => d.clone(),
        }
    }

    pub fn winner(&self) -> Option<CandidateId> {
        match self {
            RuleOutcome::Winner(w) => Some(*w),
            RuleOutcome::Lottery(_) => None,
        }
    }
}

impl RuleSpec {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, RuleSpec::Plurality | RuleSpec::Copeland | RuleSpec::TopkCopeland { .. } | RuleSpec::Constant { .. })
    }

    /// Checks the parameters against a candidate count.
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            RuleSpec::TopkCopeland { k } => check_k(k, n),
            RuleSpec::Mixed if n < 2 => Err(Error::BadN { n, min: 2 }),
            RuleSpec::Constant { c } if c >= n => Err(Error::BadParams(format!("constant candidate {c} >= n = {n}"))),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, profile: &VoteProfile) -> Result<RuleOutcome> {
        self.validate(profile.num_candidates())?;
        Ok(match *self {
            RuleSpec::Plurality => RuleOutcome::Winner(plurality(profile)?),
            RuleSpec::Copeland => RuleOutcome::Winner(copeland(profile)?),
            RuleSpec::TopkCopeland { k } => RuleOutcome::Winner(topk_copeland(profile, k)?),
            RuleSpec::Constant { c } => RuleOutcome::Winner(CandidateId(c)),
            RuleSpec::RandomDictatorship => RuleOutcome::Lottery(random_dictatorship(profile)?),
            RuleSpec::PropSquares => RuleOutcome::Lottery(proportional_to_squares(profile)?),
            RuleSpec::Mixed => RuleOutcome::Lottery(mixed_mechanism(profile)?),
            RuleSpec::RandomOligarchy => RuleOutcome::Lottery(random_oligarchy(profile)?),
        })
    }

    /// Evaluates a deterministic rule.
    pub fn winner(&self, profile: &VoteProfile) -> Result<CandidateId> {
        match self.evaluate(profile)? {
            RuleOutcome::Winner(w) => Ok(w),
            RuleOutcome::Lottery(_) => Err(Error::BadParams(format!("`{self}` is randomized"))),
        }
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::Plurality => write!(f, "plurality"),
            RuleSpec::Copeland => write!(f, "copeland"),
            RuleSpec::TopkCopeland { k } => write!(f, "topk-copeland:k={k}"),
            RuleSpec::RandomDictatorship => write!(f, "random-dictatorship"),
            RuleSpec::PropSquares => write!(f, "prop-squares"),
            RuleSpec::Mixed => write!(f, "mixed"),
            RuleSpec::RandomOligarchy => write!(f, "random-oligarchy"),
            RuleSpec::Constant { c } => write!(f, "constant:c={c}"),
        }
    }
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((name, params)) => (name, Some(params)),
            None => (s, None),
        };
        let int_param = |key: &str| -> Result<usize> {
            let params = params.ok_or_else(|| Error::BadParams(format!("`{name}` needs `{key}=<int>`")))?;
            let value = params
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(|| Error::BadParams(format!("expected `{key}=<int>`, got `{params}`")))?;
            value.parse().map_err(|_| Error::BadParams(format!("`{value}` is not a non-negative integer")))
        };
        let no_params = |spec: RuleSpec| match params {
            None => Ok(spec),
            Some(p) => Err(Error::BadParams(format!("`{name}` takes no parameters, got `{p}`"))),
        };
        match name {
            "plurality" => no_params(RuleSpec::Plurality),
            "copeland" => no_params(RuleSpec::Copeland),
            "random-dictatorship" => no_params(RuleSpec::RandomDictatorship),
            "prop-squares" => no_params(RuleSpec::PropSquares),
            "mixed" => no_params(RuleSpec::Mixed),
            "random-oligarchy" => no_params(RuleSpec::RandomOligarchy),
            "topk-copeland" => {
                let k = int_param("k")?;
                if k == 0 {
                    return Err(Error::BadParams("k must be at least 1".into()));
                }
                Ok(RuleSpec::TopkCopeland { k })
            }
            "constant" => Ok(RuleSpec::Constant { c: int_param("c")? }),
            _ => Err(Error::UnknownRule(s.to_string())),
        }
    }
}
