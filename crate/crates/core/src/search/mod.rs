//! Brute-force oracle: best responses, equilibrium verification and
//! exhaustive enumeration of equilibrium outcomes.

mod enumerate;
mod flow;
pub mod lp;

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::analytic::{EquilibriumProfile, Interval, StopInterval};
use crate::error::{Error, Result};
use crate::model::{outcome_distribution, seq_count, Category, Cohort, ModelParams, Score, ScoreSeq, Type};
use crate::num::{self, half, Q};
use crate::policy::AdmissionPolicy;
use crate::posterior::{Belief, SignalMasses};

pub use enumerate::{classify, enumerate_outcomes, ClassEntry, Enumeration, Equilibrium, PolicyScope};

/// Stop probabilities consistent with optimal play at one history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Admissible {
    /// Only `f = 1`.
    Stop,
    /// Only `f = 0`.
    Continue,
    /// Any `f` in `[0, 1]`.
    Either,
}

impl Admissible {
    pub fn contains(self, stop: &Q) -> bool {
        match self {
            Admissible::Stop => stop.is_one(),
            Admissible::Continue => stop.is_zero(),
            Admissible::Either => num::is_unit_interval(stop),
        }
    }

    /// Canonical stop probability: `1` unless continuing is strictly better.
    pub fn canonical(self) -> Q {
        match self {
            Admissible::Continue => Q::zero(),
            _ => Q::one(),
        }
    }
}

impl fmt::Display for Admissible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Admissible::Stop => "{1}",
            Admissible::Continue => "{0}",
            Admissible::Either => "[0,1]",
        })
    }
}

/// Backward-induction solution of a Category 2 student's stopping problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BestResponseSet {
    k: u32,
    root: [Q; 2],
    admissible: [Vec<Admissible>; 2],
    value: [Vec<Q>; 2],
    continuation: [Vec<Q>; 2],
}

impl BestResponseSet {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Admissible stop set at a history shorter than `k`.
    pub fn get(&self, type_: Type, history: ScoreSeq) -> Option<Admissible> {
        (history.len() < self.k).then(|| self.admissible[type_.index()][history.index()])
    }

    /// Optimal admission probability of a student holding `history`.
    pub fn value(&self, type_: Type, history: ScoreSeq) -> &Q {
        &self.value[type_.index()][history.index()]
    }

    /// Admission probability from taking one more test and then playing
    /// optimally. Only meaningful below `k`.
    pub fn continuation_value(&self, type_: Type, history: ScoreSeq) -> &Q {
        &self.continuation[type_.index()][history.index()]
    }

    /// Optimal admission probability before the first test.
    pub fn root_value(&self, type_: Type) -> &Q {
        &self.root[type_.index()]
    }

    pub fn histories(&self) -> impl Iterator<Item = ScoreSeq> {
        ScoreSeq::all(self.k.saturating_sub(1))
    }
}

fn check_policy(params: &ModelParams, policy: &AdmissionPolicy) -> Result<()> {
    if policy.k() != params.k() {
        return Err(Error::Malformed(format!(
            "policy is for k = {}, parameters have k = {}",
            policy.k(),
            params.k()
        )));
    }
    Ok(())
}

pub fn best_response(params: &ModelParams, policy: &AdmissionPolicy) -> Result<BestResponseSet> {
    best_response_with(params, policy, None)
}

fn best_response_with(params: &ModelParams, policy: &AdmissionPolicy, eps: Option<f64>) -> Result<BestResponseSet> {
    check_policy(params, policy)?;
    let k = params.k();
    let n = seq_count(k);
    let mut admissible: [Vec<Admissible>; 2] = std::array::from_fn(|_| vec![Admissible::Stop; n]);
    let mut value: [Vec<Q>; 2] = std::array::from_fn(|_| vec![Q::zero(); n]);
    let mut continuation: [Vec<Q>; 2] = std::array::from_fn(|_| vec![Q::zero(); n]);
    let mut root: [Q; 2] = std::array::from_fn(|_| Q::zero());
    for t in Type::BOTH {
        let ti = t.index();
        let e = [params.emission(t, Score::A), params.emission(t, Score::B)];
        for i in (0..n).rev() {
            let h = ScoreSeq::from_index(i).expect("in range");
            let stop = if policy.accepts(h) { Q::one() } else { Q::zero() };
            if h.len() == k {
                value[ti][i] = stop;
                continue;
            }
            let cont: Q = Score::BOTH
                .iter()
                .zip(&e)
                .map(|(s, p)| p * &value[ti][h.extend(*s).expect("len < k").index()])
                .sum();
            let choice = match eps {
                Some(eps) if (num::to_f64(&stop) - num::to_f64(&cont)).abs() <= eps => Admissible::Either,
                _ if stop > cont => Admissible::Stop,
                _ if stop < cont => Admissible::Continue,
                _ => Admissible::Either,
            };
            admissible[ti][i] = choice;
            value[ti][i] = stop.max(cont.clone());
            continuation[ti][i] = cont;
        }
        root[ti] = Score::BOTH
            .iter()
            .zip(&e)
            .map(|(s, p)| p * &value[ti][ScoreSeq::single(*s).index()])
            .sum();
    }
    Ok(BestResponseSet { k, root, admissible, value, continuation })
}

/// Per-cohort admission probabilities of an equilibrium, in
/// [`Cohort::ALL`] order.
///
/// Entries for cohorts of zero mass are the admission probability a member
/// of that cohort would obtain under optimal play.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeClass {
    pub admit: [Q; 4],
}

impl OutcomeClass {
    pub fn admit_prob(&self, cohort: Cohort) -> &Q {
        &self.admit[cohort.index()]
    }

    pub fn to_f64(&self) -> [f64; 4] {
        std::array::from_fn(|i| num::to_f64(&self.admit[i]))
    }

    /// The outcome every Category 2 student playing optimally against
    /// `policy` obtains.
    pub fn of_policy(params: &ModelParams, policy: &AdmissionPolicy) -> Result<Self> {
        let br = best_response(params, policy)?;
        Ok(Self::from_best_response(params, policy, &br))
    }

    pub(crate) fn from_best_response(params: &ModelParams, policy: &AdmissionPolicy, br: &BestResponseSet) -> Self {
        let mut admit: [Q; 4] = std::array::from_fn(|_| Q::zero());
        for t in Type::BOTH {
            let single: Q = Score::BOTH
                .iter()
                .filter(|s| policy.accepts(ScoreSeq::single(**s)))
                .map(|s| params.emission(t, *s))
                .sum();
            admit[Cohort::new(Category::Cat1, t).index()] = single;
            admit[Cohort::new(Category::Cat2, t).index()] = br.root_value(t).clone();
        }
        Self { admit }
    }
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, cohort) in Cohort::ALL.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{cohort}={}", num::format_sig(num::to_f64(&self.admit[i]), 6))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Exact,
    /// Posteriors within `eps` of one half count as ties, as do stop and
    /// continuation values within `eps` of each other.
    Tolerance(f64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A stop probability outside the best-response set.
    Strategy { type_: Type, history: ScoreSeq, stop: Q, admissible: Admissible },
    /// An on-path decision the posterior does not support.
    Policy { signal: ScoreSeq, accepted: bool, posterior: Q },
    /// A recorded belief that differs from Bayes' rule.
    Belief { signal: ScoreSeq },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Strategy { type_, history, stop, admissible } => write!(
                f,
                "{type_} after {history}: stop probability {} not in best response {admissible}",
                num::to_f64(stop)
            ),
            Violation::Policy { signal, accepted, posterior } => write!(
                f,
                "signal {signal}: {} with posterior {}",
                if *accepted { "accepted" } else { "rejected" },
                num::to_f64(posterior)
            ),
            Violation::Belief { signal } => write!(f, "signal {signal}: recorded belief differs from Bayes' rule"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
    /// Off-path signals; their decisions are supported by a free belief.
    pub off_path: Vec<ScoreSeq>,
}

impl Verdict {
    pub fn is_equilibrium(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that the strategy is a best response everywhere, that every
/// on-path decision follows the posterior rule and that recorded beliefs
/// are Bayes-consistent.
pub fn verify_equilibrium(params: &ModelParams, profile: &EquilibriumProfile, mode: Mode) -> Result<Verdict> {
    check_policy(params, &profile.policy)?;
    let dist = outcome_distribution(params, &profile.strategy).map_err(|e| match e {
        Error::MissingStrategyEntry { .. } => Error::Malformed(e.to_string()),
        other => other,
    })?;
    let eps = match mode {
        Mode::Exact => None,
        Mode::Tolerance(eps) => Some(eps),
    };
    let br = best_response_with(params, &profile.policy, eps)?;
    let mut verdict = Verdict::default();

    for h in br.histories() {
        for t in Type::BOTH {
            if let Some(stop) = profile.strategy.get(t, h) {
                let admissible = br.get(t, h).expect("len < k");
                if !admissible.contains(stop) {
                    verdict.violations.push(Violation::Strategy {
                        type_: t,
                        history: h,
                        stop: stop.clone(),
                        admissible,
                    });
                }
            }
        }
    }

    let masses = SignalMasses::new(&dist, profile.policy.reporting());
    let half = half();
    for signal in masses.signals() {
        let belief = masses.belief(signal);
        let accepted = profile.policy.accepts(signal);
        match &belief {
            Belief::OffPath => verdict.off_path.push(signal),
            Belief::Posterior(post) => {
                let ok = match eps {
                    None => {
                        if accepted {
                            *post >= half
                        } else {
                            *post <= half
                        }
                    }
                    Some(eps) => {
                        let x = num::to_f64(post);
                        if accepted {
                            x >= 0.5 - eps
                        } else {
                            x <= 0.5 + eps
                        }
                    }
                };
                if !ok {
                    verdict.violations.push(Violation::Policy { signal, accepted, posterior: post.clone() });
                }
            }
        }
        if let Some(recorded) = profile.beliefs.get(signal) {
            let consistent = match (recorded, &belief, eps) {
                (Belief::Posterior(a), Belief::Posterior(b), Some(eps)) => {
                    (num::to_f64(a) - num::to_f64(b)).abs() <= eps
                }
                (a, b, _) => a == b,
            };
            if !consistent {
                verdict.violations.push(Violation::Belief { signal });
            }
        }
    }
    Ok(verdict)
}

/// For each indifferent stop probability reached with positive probability,
/// the range of values that keeps `profile` an equilibrium when every other
/// stop probability is held fixed.
pub fn free_intervals(params: &ModelParams, profile: &EquilibriumProfile) -> Result<Vec<StopInterval>> {
    let br = best_response(params, &profile.policy)?;
    let base = outcome_distribution(params, &profile.strategy)?;
    let mut out = Vec::new();
    for h in br.histories() {
        for t in Type::BOTH {
            if br.get(t, h) != Some(Admissible::Either) {
                continue;
            }
            let cohort = Cohort::new(Category::Cat2, t);
            let reached: Q = ScoreSeq::extensions(h, params.k()).map(|s| base.conditional(cohort, s)).sum();
            if reached.is_zero() {
                continue;
            }
            let margin = |stop: Q| -> Result<Vec<(bool, Q)>> {
                let mut strategy = profile.strategy.clone();
                strategy.set(t, h, stop)?;
                let dist = outcome_distribution(params, &strategy)?;
                let masses = SignalMasses::new(&dist, profile.policy.reporting());
                Ok(masses
                    .signals()
                    .into_iter()
                    .map(|s| (profile.policy.accepts(s), masses.high(s) - masses.low(s)))
                    .collect())
            };
            let (at0, at1) = (margin(Q::zero())?, margin(Q::one())?);
            let mut range = Interval::unit();
            for ((accepted, d0), (_, d1)) in at0.into_iter().zip(at1) {
                // Required sign of d0 + f (d1 - d0).
                let (d0, d1) = if accepted { (d0, d1) } else { (-d0, -d1) };
                let slope = &d1 - &d0;
                if slope.is_zero() {
                    if d0 < Q::zero() {
                        range = Interval::new(Q::one(), Q::zero());
                    }
                } else {
                    let root = -&d0 / &slope;
                    if slope > Q::zero() {
                        range.lo = range.lo.max(root);
                    } else {
                        range.hi = range.hi.min(root);
                    }
                }
            }
            out.push(StopInterval { type_: t, history: h, range });
        }
    }
    Ok(out)
}
