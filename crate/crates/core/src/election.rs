//! Candidates, rankings, weighted vote profiles and candidate distributions.

use crate::rational::{format_rational, is_probability_vector, to_f64, Rational};
use crate::{Error, Result};
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Index of a candidate, valid relative to an instance's candidate count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateId(pub usize);

impl CandidateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A strict total order over all candidates; position 0 is most preferred.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranking {
    order: Vec<CandidateId>,
    // position_of[c] = position of candidate c
    position_of: Vec<usize>,
}

impl Ranking {
    pub fn new(order: Vec<CandidateId>) -> Result<Self> {
        let n = order.len();
        let mut position_of = vec![usize::MAX; n];
        for (pos, c) in order.iter().enumerate() {
            if c.0 >= n {
                return Err(Error::InvalidRanking(format!("candidate {c} out of range for n = {n}")));
            }
            if position_of[c.0] != usize::MAX {
                return Err(Error::InvalidRanking(format!("candidate {c} appears twice")));
            }
            position_of[c.0] = pos;
        }
        Ok(Self { order, position_of })
    }

    pub fn from_indices(order: &[usize]) -> Result<Self> {
        Self::new(order.iter().copied().map(CandidateId).collect())
    }

    pub(crate) fn from_indices_unchecked(order: &[usize]) -> Self {
        let mut position_of = vec![0; order.len()];
        for (pos, &c) in order.iter().enumerate() {
            position_of[c] = pos;
        }
        Self { order: order.iter().copied().map(CandidateId).collect(), position_of }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[CandidateId] {
        &self.order
    }

    pub fn indices(&self) -> Vec<usize> {
        self.order.iter().map(|c| c.0).collect()
    }

    pub fn top(&self) -> CandidateId {
        self.order[0]
    }

    pub fn at(&self, position: usize) -> CandidateId {
        self.order[position]
    }

    /// Zero-based position of `c`.
    pub fn position(&self, c: CandidateId) -> usize {
        self.position_of[c.0]
    }

    pub fn prefers(&self, x: CandidateId, y: CandidateId) -> bool {
        self.position(x) < self.position(y)
    }

    /// Applies a candidate renaming: candidate `c` becomes `sigma[c]`.
    pub fn relabel(&self, sigma: &[usize]) -> Ranking {
        let order: Vec<usize> = self.order.iter().map(|c| sigma[c.0]).collect();
        Ranking::from_indices_unchecked(&order)
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.order.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The first `k` candidates of `ranking`, in order.
pub fn top_k_view(ranking: &Ranking, k: usize) -> Result<&[CandidateId]> {
    if k == 0 || k > ranking.len() {
        return Err(Error::BadK { k, n: ranking.len() });
    }
    Ok(&ranking.order[..k])
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBallot {
    pub ranking: Ranking,
    pub weight: Rational,
}

impl WeightedBallot {
    pub fn new(ranking: Ranking, weight: Rational) -> Self {
        Self { ranking, weight }
    }
}

/// Weighted multiset of full rankings over `n` candidates.
///
/// Weights are exact and need not sum to one; every fraction computed from a
/// profile (shares, comparison masses, costs) divides by [`total_weight`].
/// Zero-weight ballots are allowed and carry no mass.
///
/// [`total_weight`]: VoteProfile::total_weight
#[derive(Debug, Clone, PartialEq)]
pub struct VoteProfile {
    n: usize,
    ballots: Vec<WeightedBallot>,
}

impl VoteProfile {
    pub fn new(n: usize, ballots: Vec<WeightedBallot>) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadN { n, min: 1 });
        }
        for (i, b) in ballots.iter().enumerate() {
            if b.ranking.len() != n {
                return Err(Error::InvalidRanking(format!(
                    "ballot {i} ranks {} candidates, expected {n}",
                    b.ranking.len()
                )));
            }
            if b.weight.is_negative() {
                return Err(Error::NegativeWeight(i));
            }
        }
        Ok(Self { n, ballots })
    }

    /// Unit-weight ballots from raw index sequences.
    pub fn from_rankings(n: usize, rankings: &[Vec<usize>]) -> Result<Self> {
        let ballots = rankings
            .iter()
            .map(|r| Ranking::from_indices(r).map(|r| WeightedBallot::new(r, Rational::one())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, ballots)
    }

    pub fn num_candidates(&self) -> usize {
        self.n
    }

    pub fn ballots(&self) -> &[WeightedBallot] {
        &self.ballots
    }

    pub fn len(&self) -> usize {
        self.ballots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ballots.is_empty()
    }

    pub fn total_weight(&self) -> Rational {
        self.ballots.iter().map(|b| &b.weight).sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.total_weight().is_one()
    }

    /// Ballot weights divided by the total weight.
    pub fn normalized_weights(&self) -> Result<Vec<Rational>> {
        let total = self.total_weight();
        if total.is_zero() {
            return Err(Error::ZeroTotalWeight);
        }
        Ok(self.ballots.iter().map(|b| &b.weight / &total).collect())
    }

    pub fn normalize(&self) -> Result<VoteProfile> {
        let weights = self.normalized_weights()?;
        let ballots = self
            .ballots
            .iter()
            .zip(weights)
            .map(|(b, w)| WeightedBallot::new(b.ranking.clone(), w))
            .collect();
        Ok(VoteProfile { n: self.n, ballots })
    }

    /// Renames candidate `c` to `sigma[c]` in every ballot.
    pub fn relabel(&self, sigma: &[usize]) -> VoteProfile {
        let ballots = self
            .ballots
            .iter()
            .map(|b| WeightedBallot::new(b.ranking.relabel(sigma), b.weight.clone()))
            .collect();
        VoteProfile { n: self.n, ballots }
    }

    /// Fraction of weight ranking each candidate first.
    pub fn first_place_shares(&self) -> Result<Vec<Rational>> {
        let total = self.total_weight();
        if total.is_zero() {
            return Err(Error::ZeroTotalWeight);
        }
        let mut shares = vec![Rational::zero(); self.n];
        for b in &self.ballots {
            shares[b.ranking.top().0] += &b.weight;
        }
        for s in &mut shares {
            *s /= &total;
        }
        Ok(shares)
    }
}

pub fn normalize_profile(profile: &VoteProfile) -> Result<VoteProfile> {
    profile.normalize()
}

pub fn first_place_shares(profile: &VoteProfile) -> Result<Vec<Rational>> {
    profile.first_place_shares()
}

/// Probability vector over candidates with exact entries summing to one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CandidateDistribution {
    probs: Vec<Rational>,
}

impl CandidateDistribution {
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no candidates".into()));
        }
        if !is_probability_vector(&probs) {
            let shown: Vec<String> = probs.iter().map(format_rational).collect();
            return Err(Error::InvalidDistribution(format!("[{}] is not a probability vector", shown.join(", "))));
        }
        Ok(Self { probs })
    }

    pub fn point_mass(n: usize, c: CandidateId) -> Self {
        let mut probs = vec![Rational::zero(); n];
        probs[c.0] = Rational::one();
        Self { probs }
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, c: CandidateId) -> &Rational {
        &self.probs[c.0]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(to_f64).collect()
    }

    /// The candidate carrying all the mass, if any.
    pub fn as_point_mass(&self) -> Option<CandidateId> {
        self.probs.iter().position(|p| p.is_one()).map(CandidateId)
    }

    /// Candidates with positive probability.
    pub fn support(&self) -> impl Iterator<Item = CandidateId> + '_ {
        self.probs.iter().enumerate().filter(|(_, p)| p.is_positive()).map(|(i, _)| CandidateId(i))
    }

    /// `self * a + other * (1 - a)`.
    pub fn mix(&self, other: &Self, a: &Rational) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch("distributions over different candidate sets".into()));
        }
        let b = Rational::one() - a;
        Self::new(self.probs.iter().zip(&other.probs).map(|(p, q)| p * a + q * &b).collect())
    }

    pub fn relabel(&self, sigma: &[usize]) -> Self {
        let mut probs = vec![Rational::zero(); self.probs.len()];
        for (c, p) in self.probs.iter().enumerate() {
            probs[sigma[c]] = p.clone();
        }
        Self { probs }
    }
}
