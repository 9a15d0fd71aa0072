//! Communication-bounded rules.
//!
//! A [`MessagePartition`] labels each of the `n!` rankings with one of `beta`
//! message ids; a voter reports only the id. Storing a total labelling makes
//! the classes disjoint and covering by construction. A [`BoundedRule`] pairs
//! a partition with an [`Aggregator`] that sees nothing but the total weight
//! sent on each message.

use crate::election::{CandidateId, Ranking, VoteProfile, WeightedBallot};
use crate::perm::{all_rankings, check_cap, factorial, lex_rank, rank_partial, unrank};
use crate::rational::Rational;
use crate::rules::RuleSpec;
use crate::{Error, Result};
use num_traits::Zero;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// One-based message identifier in `1..=beta`.
pub type MessageId = usize;

/// A set of one-based ranking positions a k-entry rule observes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PositionSet {
    positions: Vec<usize>,
}

impl PositionSet {
    /// Sorts and validates `positions` against `n`; duplicates and positions
    /// outside `1..=n` are rejected. The empty set is allowed.
    pub fn new(mut positions: Vec<usize>, n: usize) -> Result<Self> {
        positions.sort_unstable();
        if let Some(&p) = positions.iter().find(|&&p| p == 0 || p > n) {
            return Err(Error::BadPositions(format!("position {p} outside 1..={n}")));
        }
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::BadPositions(format!("duplicate position in {positions:?}")));
        }
        Ok(Self { positions })
    }

    /// `{1, ..., k}`: the top-`k` prefix.
    pub fn prefix(k: usize) -> Self {
        Self { positions: (1..=k).collect() }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, position: usize) -> bool {
        self.positions.binary_search(&position).is_ok()
    }

    /// The set without `position`.
    pub fn without(&self, position: usize) -> Self {
        Self { positions: self.positions.iter().copied().filter(|&p| p != position).collect() }
    }

    /// Candidates of `ranking` at these positions, in position order.
    pub fn restrict(&self, ranking: &Ranking) -> Vec<usize> {
        self.positions.iter().map(|&p| ranking.at(p - 1).index()).collect()
    }
}

impl fmt::Display for PositionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.positions.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessagePartition {
    n: usize,
    labels: Vec<MessageId>,
    beta: usize,
}

impl MessagePartition {
    /// `labels[i]` is the message of the ranking with lexicographic index
    /// `i`. Ids must cover `1..=beta` exactly, where `beta` is the largest id.
    pub fn new(n: usize, labels: Vec<MessageId>) -> Result<Self> {
        check_cap(n)?;
        if labels.len() != factorial(n) {
            return Err(Error::BadPartition(format!("expected {} labels for n = {n}, got {}", factorial(n), labels.len())));
        }
        let beta = labels.iter().copied().max().unwrap_or(0);
        if labels.contains(&0) {
            return Err(Error::BadPartition("message ids start at 1".into()));
        }
        let mut hit = vec![false; beta + 1];
        for &l in &labels {
            hit[l] = true;
        }
        if let Some(missing) = (1..=beta).find(|&j| !hit[j]) {
            return Err(Error::BadPartition(format!("message id {missing} labels no ranking")));
        }
        Ok(Self { n, labels, beta })
    }

    /// Rankings share a message iff they agree on every position in `k`; the
    /// id is one plus the lexicographic rank of the restricted tuple, so
    /// `beta = n! / (n - |K|)!`.
    pub fn k_entry(n: usize, k: &PositionSet) -> Result<Self> {
        check_cap(n)?;
        if let Some(&p) = k.positions().iter().find(|&&p| p > n) {
            return Err(Error::BadPositions(format!("position {p} outside 1..={n}")));
        }
        let labels = all_rankings(n)?.iter().map(|r| rank_partial(k.restrict(r), n) + 1).collect();
        Self::new(n, labels)
    }

    /// Lexicographic index `i` goes to message `floor(i * beta / n!) + 1`.
    pub fn contiguous(n: usize, beta: usize) -> Result<Self> {
        check_cap(n)?;
        let total = factorial(n);
        if beta == 0 || beta > total {
            return Err(Error::BadPartition(format!("beta = {beta} outside 1..={total}")));
        }
        Self::new(n, (0..total).map(|i| i * beta / total + 1).collect())
    }

    /// Every ranking in its own class.
    pub fn full_information(n: usize) -> Result<Self> {
        check_cap(n)?;
        Self::new(n, (1..=factorial(n)).collect())
    }

    /// Full information except that `a` and `b` share one message.
    pub fn merged(n: usize, a: &Ranking, b: &Ranking) -> Result<Self> {
        check_cap(n)?;
        if a.len() != n || b.len() != n || a == b {
            return Err(Error::BadPartition("need two distinct rankings of length n".into()));
        }
        let (ia, ib) = (lex_rank(a), lex_rank(b));
        let (keep, drop) = (ia.min(ib), ia.max(ib));
        let labels = (0..factorial(n))
            .map(|i| match i {
                _ if i == drop => keep + 1,
                _ if i > drop => i,
                _ => i + 1,
            })
            .collect();
        Self::new(n, labels)
    }

    pub fn num_candidates(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn labels(&self) -> &[MessageId] {
        &self.labels
    }

    pub fn message_of(&self, ranking: &Ranking) -> MessageId {
        assert_eq!(ranking.len(), self.n, "ranking length differs from the partition's n");
        self.labels[lex_rank(ranking)]
    }

    /// Lexicographic indices of the rankings in each class, by message id.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.beta];
        for (i, &l) in self.labels.iter().enumerate() {
            classes[l - 1].push(i);
        }
        classes
    }

    /// The lexicographically first ranking sending `id`.
    pub fn representative(&self, id: MessageId) -> Ranking {
        let i = self.labels.iter().position(|&l| l == id).expect("every id labels a ranking");
        unrank(i, self.n)
    }

    /// A class holding two rankings with different first choices: the first
    /// such class by id, its first ranking, and the first member whose top
    /// differs.
    pub fn has_ambiguous_top(&self) -> Option<(MessageId, Ranking, Ranking)> {
        for (j, class) in self.classes().iter().enumerate() {
            let first = unrank(class[0], self.n);
            if let Some(other) = class.iter().map(|&i| unrank(i, self.n)).find(|r| r.top() != first.top()) {
                return Some((j + 1, first, other));
            }
        }
        None
    }

    /// Whether two rankings share a message exactly when they agree on `k`.
    pub fn is_generated_by(&self, k: &PositionSet) -> bool {
        if k.positions().iter().any(|&p| p > self.n) {
            return false;
        }
        let mut by_tuple: HashMap<Vec<usize>, MessageId> = HashMap::new();
        let mut by_label: HashMap<MessageId, Vec<usize>> = HashMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            let tuple = k.restrict(&unrank(i, self.n));
            if *by_tuple.entry(tuple.clone()).or_insert(l) != l || *by_label.entry(l).or_insert_with(|| tuple.clone()) != tuple {
                return false;
            }
        }
        true
    }
}

/// Maps the weight sent on each message (index `j - 1` for id `j`) to a
/// winner. Implementations are fixed before any vote is cast, so they may
/// hold data derived from the partition but never see rankings.
pub trait Aggregator: Send + Sync + fmt::Debug {
    fn aggregate(&self, message_weights: &[Rational]) -> Result<CandidateId>;

    fn name(&self) -> String;
}

/// Each message declares the top of its lexicographically first ranking;
/// the candidate declared by the most weight wins, lowest index on ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluralityOnMessages {
    n: usize,
    declared_top: Vec<CandidateId>,
}

impl PluralityOnMessages {
    pub fn new(partition: &MessagePartition) -> Self {
        let declared_top = (1..=partition.beta()).map(|j| partition.representative(j).top()).collect();
        Self { n: partition.num_candidates(), declared_top }
    }
}

impl Aggregator for PluralityOnMessages {
    fn aggregate(&self, message_weights: &[Rational]) -> Result<CandidateId> {
        if message_weights.len() != self.declared_top.len() {
            return Err(Error::Aggregator(format!("expected {} message weights", self.declared_top.len())));
        }
        let mut tally = vec![Rational::zero(); self.n];
        for (w, top) in message_weights.iter().zip(&self.declared_top) {
            tally[top.index()] += w;
        }
        Ok(CandidateId((1..self.n).fold(0, |b, i| if tally[i] > tally[b] { i } else { b })))
    }

    fn name(&self) -> String {
        "plurality-on-messages".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantAggregator(pub CandidateId);

impl Aggregator for ConstantAggregator {
    fn aggregate(&self, _: &[Rational]) -> Result<CandidateId> {
        Ok(self.0)
    }

    fn name(&self) -> String {
        format!("constant:c={}", self.0)
    }
}

/// Runs a deterministic rule on a stand-in profile in which each message's
/// weight is cast by its lexicographically first ranking. Exact for rules
/// that read only what the partition reveals, e.g. top-`k` Copeland over the
/// top-`k` positions.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeRule {
    rule: RuleSpec,
    n: usize,
    representatives: Vec<Ranking>,
}

impl RepresentativeRule {
    pub fn new(rule: RuleSpec, partition: &MessagePartition) -> Result<Self> {
        if !rule.is_deterministic() {
            return Err(Error::BadParams(format!("`{rule}` is randomized")));
        }
        rule.validate(partition.num_candidates())?;
        let representatives = (1..=partition.beta()).map(|j| partition.representative(j)).collect();
        Ok(Self { rule, n: partition.num_candidates(), representatives })
    }
}

impl Aggregator for RepresentativeRule {
    fn aggregate(&self, message_weights: &[Rational]) -> Result<CandidateId> {
        if message_weights.len() != self.representatives.len() {
            return Err(Error::Aggregator(format!("expected {} message weights", self.representatives.len())));
        }
        let ballots = message_weights
            .iter()
            .zip(&self.representatives)
            .filter(|(w, _)| !w.is_zero())
            .map(|(w, r)| WeightedBallot::new(r.clone(), w.clone()))
            .collect();
        self.rule.winner(&VoteProfile::new(self.n, ballots)?)
    }

    fn name(&self) -> String {
        self.rule.to_string()
    }
}

/// A partition together with an aggregator over its messages.
#[derive(Debug, Clone)]
pub struct BoundedRule {
    partition: MessagePartition,
    aggregator: Arc<dyn Aggregator>,
}

impl BoundedRule {
    pub fn new(partition: MessagePartition, aggregator: Arc<dyn Aggregator>) -> Self {
        Self { partition, aggregator }
    }

    pub fn plurality_on_messages(partition: MessagePartition) -> Self {
        let agg = PluralityOnMessages::new(&partition);
        Self::new(partition, Arc::new(agg))
    }

    pub fn constant(partition: MessagePartition, winner: CandidateId) -> Result<Self> {
        if winner.index() >= partition.num_candidates() {
            return Err(Error::BadParams(format!("constant candidate {winner} out of range")));
        }
        Ok(Self::new(partition, Arc::new(ConstantAggregator(winner))))
    }

    /// Wraps a deterministic [`RuleSpec`] as a [`RepresentativeRule`];
    /// `constant:c=..` maps to a [`ConstantAggregator`].
    pub fn from_rule(partition: MessagePartition, rule: RuleSpec) -> Result<Self> {
        if let RuleSpec::Constant { c } = rule {
            return Self::constant(partition, CandidateId(c));
        }
        let agg = RepresentativeRule::new(rule, &partition)?;
        Ok(Self::new(partition, Arc::new(agg)))
    }

    pub fn partition(&self) -> &MessagePartition {
        &self.partition
    }

    pub fn name(&self) -> String {
        self.aggregator.name()
    }

    /// Normalised weight sent on each message.
    pub fn message_weights(&self, profile: &VoteProfile) -> Result<Vec<Rational>> {
        if profile.num_candidates() != self.partition.num_candidates() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} candidates, partition {}",
                profile.num_candidates(),
                self.partition.num_candidates()
            )));
        }
        let mut weights = vec![Rational::zero(); self.partition.beta()];
        for (b, w) in profile.ballots().iter().zip(profile.normalized_weights()?) {
            weights[self.partition.message_of(&b.ranking) - 1] += w;
        }
        Ok(weights)
    }

    pub fn apply(&self, profile: &VoteProfile) -> Result<CandidateId> {
        let winner = self.aggregator.aggregate(&self.message_weights(profile)?)?;
        if winner.index() >= self.partition.num_candidates() {
            return Err(Error::Aggregator(format!("aggregator returned out-of-range candidate {winner}")));
        }
        Ok(winner)
    }
}

pub fn apply_bounded_rule(rule: &BoundedRule, profile: &VoteProfile) -> Result<CandidateId> {
    rule.apply(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::plurality;

    fn r(order: &[usize]) -> Ranking {
        Ranking::from_indices(order).unwrap()
    }

    #[test]
    fn position_set_validation() {
        assert_eq!(PositionSet::new(vec![2, 1], 3).unwrap().positions(), &[1, 2]);
        assert!(matches!(PositionSet::new(vec![0], 3), Err(Error::BadPositions(_))));
        assert!(matches!(PositionSet::new(vec![4], 3), Err(Error::BadPositions(_))));
        assert!(matches!(PositionSet::new(vec![1, 1], 3), Err(Error::BadPositions(_))));
        assert!(PositionSet::new(vec![], 3).unwrap().is_empty());
    }

    #[test]
    fn k_entry_class_counts() {
        assert_eq!(MessagePartition::k_entry(4, &PositionSet::prefix(1)).unwrap().beta(), 4);
        assert_eq!(MessagePartition::k_entry(4, &PositionSet::prefix(2)).unwrap().beta(), 12);
        let full = MessagePartition::k_entry(4, &PositionSet::prefix(4)).unwrap();
        assert_eq!(full, MessagePartition::full_information(4).unwrap());
        assert_eq!(MessagePartition::k_entry(4, &PositionSet::prefix(0)).unwrap().beta(), 1);
        let odd = PositionSet::new(vec![2, 4], 5).unwrap();
        assert_eq!(MessagePartition::k_entry(5, &odd).unwrap().beta(), 20);
    }

    #[test]
    fn message_of_examples() {
        let p = MessagePartition::k_entry(4, &PositionSet::prefix(1)).unwrap();
        assert_eq!(p.message_of(&r(&[2, 0, 1, 3])), 3);
        assert_eq!(p.message_of(&r(&[2, 3, 1, 0])), 3);
        let full = MessagePartition::full_information(3).unwrap();
        let ids: Vec<_> = all_rankings(3).unwrap().iter().map(|x| full.message_of(x)).collect();
        assert_eq!(ids, (1..=6).collect::<Vec<_>>());
    }

    #[test]
    fn contiguous_partition_shape() {
        let p = MessagePartition::contiguous(3, 4).unwrap();
        assert_eq!(p.labels(), &[1, 1, 2, 3, 3, 4]);
        assert!(MessagePartition::contiguous(3, 7).is_err());
        assert!(MessagePartition::contiguous(3, 0).is_err());
    }

    #[test]
    fn bad_labels_rejected() {
        assert!(matches!(MessagePartition::new(3, vec![1, 1, 3, 3, 3, 3]), Err(Error::BadPartition(_))));
        assert!(matches!(MessagePartition::new(3, vec![1; 5]), Err(Error::BadPartition(_))));
        assert!(matches!(MessagePartition::new(3, vec![0, 1, 1, 1, 1, 1]), Err(Error::BadPartition(_))));
        assert!(matches!(MessagePartition::full_information(9), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn ambiguous_top_examples() {
        for n in 2..=5 {
            let p = MessagePartition::k_entry(n, &PositionSet::prefix(1)).unwrap();
            assert!(p.has_ambiguous_top().is_none());
            assert!(MessagePartition::full_information(n).unwrap().has_ambiguous_top().is_none());
        }
        let p = MessagePartition::k_entry(3, &PositionSet::new(vec![3], 3).unwrap()).unwrap();
        assert!(p.has_ambiguous_top().is_some());

        let (a, b) = (r(&[0, 1, 2]), r(&[1, 0, 2]));
        let merged = MessagePartition::merged(3, &a, &b).unwrap();
        assert_eq!(merged.beta(), 5);
        let (id, x, y) = merged.has_ambiguous_top().unwrap();
        assert_eq!(id, merged.message_of(&a));
        assert_eq!((x, y), (a, b));
    }

    #[test]
    fn generated_by() {
        let k = PositionSet::new(vec![1, 3], 4).unwrap();
        let p = MessagePartition::k_entry(4, &k).unwrap();
        assert!(p.is_generated_by(&k));
        assert!(!p.is_generated_by(&PositionSet::prefix(1)));
        assert!(!p.is_generated_by(&PositionSet::prefix(2)));
        // Blocks of 3! consecutive rankings are exactly the top-1 classes.
        assert!(MessagePartition::contiguous(4, 4).unwrap().is_generated_by(&PositionSet::prefix(1)));
        assert!(!MessagePartition::contiguous(4, 3).unwrap().is_generated_by(&PositionSet::prefix(1)));
    }

    #[test]
    fn bounded_plurality_matches_plurality() {
        let part = MessagePartition::k_entry(3, &PositionSet::prefix(1)).unwrap();
        let rule = BoundedRule::plurality_on_messages(part);
        let profiles = [
            vec![vec![0, 1, 2], vec![1, 0, 2], vec![1, 2, 0]],
            vec![vec![2, 1, 0]],
            vec![vec![0, 1, 2], vec![2, 0, 1]],
        ];
        for rankings in profiles {
            let p = VoteProfile::from_rankings(3, &rankings).unwrap();
            assert_eq!(apply_bounded_rule(&rule, &p).unwrap(), plurality(&p).unwrap());
        }
    }

    #[test]
    fn constant_rule_and_range_check() {
        let part = MessagePartition::contiguous(3, 2).unwrap();
        let rule = BoundedRule::constant(part.clone(), CandidateId(2)).unwrap();
        let p = VoteProfile::from_rankings(3, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(rule.apply(&p).unwrap(), CandidateId(2));
        assert!(BoundedRule::constant(part, CandidateId(3)).is_err());
    }

    #[test]
    fn representative_rule_rejects_randomized() {
        let part = MessagePartition::full_information(3).unwrap();
        assert!(BoundedRule::from_rule(part, RuleSpec::Mixed).is_err());
    }
}
