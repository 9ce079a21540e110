//! The College's Bayesian beliefs about a student's type.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::Result;
use crate::model::{
    max_score_distribution, outcome_distribution, ModelParams, OutcomeDistribution, Score,
    ScoreSeq, StudentStrategy, Type,
};
use crate::num::{self, Q};
use crate::policy::Reporting;

/// Posterior probability of `High`, or a marker for a signal nobody sends.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Belief {
    Posterior(Q),
    OffPath,
}

impl Belief {
    pub fn value(&self) -> Option<&Q> {
        match self {
            Belief::Posterior(q) => Some(q),
            Belief::OffPath => None,
        }
    }

    pub fn is_off_path(&self) -> bool {
        matches!(self, Belief::OffPath)
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.value().map(num::to_f64)
    }
}

/// Unconditional `High` and `Low` mass behind every observable signal.
#[derive(Clone, Debug)]
pub struct SignalMasses {
    reporting: Reporting,
    k: u32,
    high: BTreeMap<ScoreSeq, Q>,
    low: BTreeMap<ScoreSeq, Q>,
}

impl SignalMasses {
    pub fn new(dist: &OutcomeDistribution, reporting: Reporting) -> Self {
        let k = dist.params().k();
        let mut high = BTreeMap::new();
        let mut low = BTreeMap::new();
        for signal in reporting.signals(k) {
            high.insert(signal, Q::zero());
            low.insert(signal, Q::zero());
        }
        for seq in dist.sequences() {
            let signal = reporting.signal(seq);
            *high.get_mut(&signal).expect("signal") += dist.type_mass(Type::High, seq);
            *low.get_mut(&signal).expect("signal") += dist.type_mass(Type::Low, seq);
        }
        Self { reporting, k, high, low }
    }

    pub fn reporting(&self) -> Reporting {
        self.reporting
    }

    pub fn signals(&self) -> Vec<ScoreSeq> {
        self.reporting.signals(self.k)
    }

    pub fn high(&self, signal: ScoreSeq) -> Q {
        self.high.get(&signal).cloned().unwrap_or_else(Q::zero)
    }

    pub fn low(&self, signal: ScoreSeq) -> Q {
        self.low.get(&signal).cloned().unwrap_or_else(Q::zero)
    }

    pub fn total(&self, signal: ScoreSeq) -> Q {
        self.high(signal) + self.low(signal)
    }

    pub fn belief(&self, signal: ScoreSeq) -> Belief {
        let total = self.total(signal);
        if total.is_zero() {
            Belief::OffPath
        } else {
            Belief::Posterior(self.high(signal) / total)
        }
    }
}

/// Beliefs attached to an equilibrium profile.
///
/// `per_signal` holds the Bayes posterior of every signal (or `OffPath`);
/// `off_path` holds the beliefs chosen to support the policy where Bayes'
/// rule says nothing.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Beliefs {
    pub per_signal: BTreeMap<ScoreSeq, Belief>,
    pub off_path: BTreeMap<ScoreSeq, Q>,
}

impl Beliefs {
    /// On-path posteriors from `masses`; off-path signals receive `1` if
    /// `accepts` admits them and `0` otherwise.
    pub fn supporting(masses: &SignalMasses, accepts: impl Fn(ScoreSeq) -> bool) -> Self {
        let mut beliefs = Beliefs::default();
        for signal in masses.signals() {
            let belief = masses.belief(signal);
            if belief.is_off_path() {
                let value = if accepts(signal) { Q::one() } else { Q::zero() };
                beliefs.off_path.insert(signal, value);
            }
            beliefs.per_signal.insert(signal, belief);
        }
        beliefs
    }

    pub fn get(&self, signal: ScoreSeq) -> Option<&Belief> {
        self.per_signal.get(&signal)
    }

    /// The belief the College acts on: the posterior on path, the chosen
    /// assignment off path.
    pub fn effective(&self, signal: ScoreSeq) -> Option<&Q> {
        match self.per_signal.get(&signal)? {
            Belief::Posterior(q) => Some(q),
            Belief::OffPath => self.off_path.get(&signal),
        }
    }
}

/// Share of `High` among all students whose reported history starts with
/// `prefix`. `value` is `0` when no student does, with `empty` set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixBelief {
    pub prefix: ScoreSeq,
    pub value: Q,
    pub empty: bool,
}

/// Bayes posterior of `High` given the full reported history `seq` under
/// "report all".
pub fn posterior(params: &ModelParams, strategy: &StudentStrategy, seq: ScoreSeq) -> Result<Belief> {
    let dist = outcome_distribution(params, strategy)?;
    Ok(SignalMasses::new(&dist, Reporting::All).belief(seq))
}

pub fn prefix_belief(params: &ModelParams, strategy: &StudentStrategy, prefix: ScoreSeq) -> Result<PrefixBelief> {
    let dist = outcome_distribution(params, strategy)?;
    Ok(prefix_belief_in(&dist, prefix))
}

pub fn prefix_belief_in(dist: &OutcomeDistribution, prefix: ScoreSeq) -> PrefixBelief {
    let k = dist.params().k();
    let (mut high, mut low) = (Q::zero(), Q::zero());
    for seq in ScoreSeq::extensions(prefix, k) {
        high += dist.type_mass(Type::High, seq);
        low += dist.type_mass(Type::Low, seq);
    }
    let total = &high + &low;
    if total.is_zero() {
        PrefixBelief { prefix, value: Q::zero(), empty: true }
    } else {
        PrefixBelief { prefix, value: high / total, empty: false }
    }
}

/// Posterior of `High` given the best reported score when Category 2
/// students retake until they score `A`.
pub fn posterior_max(params: &ModelParams, best: Score) -> Belief {
    let dist = max_score_distribution(params);
    SignalMasses::new(&dist, Reporting::All).belief(ScoreSeq::single(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{half, ratio};

    fn params(p: &str, alpha: &str, phi: &str, k: u32) -> ModelParams {
        ModelParams::parse(p, alpha, phi, k).unwrap()
    }

    fn seq(s: &str) -> ScoreSeq {
        s.parse().unwrap()
    }

    #[test]
    fn single_test_posterior() {
        let pr = params("0.3", "0.8", "0.5", 2);
        let b = posterior(&pr, &StudentStrategy::test_once(2), seq("A")).unwrap();
        // 0.24 / 0.38
        assert_eq!(b, Belief::Posterior(ratio(12, 19)));
        let off = posterior(&pr, &StudentStrategy::test_once(2), seq("AA")).unwrap();
        assert_eq!(off, Belief::OffPath);
    }

    #[test]
    fn everyone_retaking_makes_ab_uninformative() {
        let pr = params("0.3", "0.8", "0.5", 2);
        let strategy = StudentStrategy::constant(2, Q::zero()).unwrap();
        let b = posterior(&pr, &strategy, seq("AB")).unwrap();
        assert_eq!(b, Belief::Posterior(ratio(3, 10)));
    }

    #[test]
    fn prefix_beliefs_ignore_stopping() {
        let pr = params("0.3", "0.8", "0.5", 3);
        for f in [Q::zero(), half(), Q::one()] {
            let strategy = StudentStrategy::constant(3, f).unwrap();
            let a = prefix_belief(&pr, &strategy, seq("A")).unwrap();
            let b = prefix_belief(&pr, &strategy, seq("B")).unwrap();
            assert_eq!(a.value, ratio(12, 19));
            assert_eq!(b.value, ratio(3, 31));
            assert!(!a.empty);
        }
    }

    #[test]
    fn empty_prefix_uses_zero_convention() {
        let pr = params("0.3", "0.8", "0.5", 2);
        let b = prefix_belief(&pr, &StudentStrategy::test_once(2), seq("BA")).unwrap();
        assert!(b.empty);
        assert!(b.value.is_zero());
    }

    #[test]
    fn full_length_prefix_equals_posterior() {
        let pr = params("0.3", "0.8", "0.5", 2);
        let strategy = StudentStrategy::constant(2, ratio(1, 3)).unwrap();
        for s in ["AA", "AB", "BA", "BB"] {
            let pb = prefix_belief(&pr, &strategy, seq(s)).unwrap();
            let post = posterior(&pr, &strategy, seq(s)).unwrap();
            assert_eq!(Some(&pb.value), post.value());
        }
    }

    #[test]
    fn posterior_max_edge_cases() {
        let only_cat1 = params("0.3", "0.8", "1", 2);
        assert_eq!(posterior_max(&only_cat1, Score::A), Belief::Posterior(ratio(12, 19)));
        let sharp = params("0.3", "1", "0.5", 3);
        assert_eq!(posterior_max(&sharp, Score::A), Belief::Posterior(Q::one()));
        assert_eq!(posterior_max(&sharp, Score::B), Belief::Posterior(Q::zero()));
    }
}
