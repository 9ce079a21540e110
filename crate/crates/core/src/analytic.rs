//! Closed-form thresholds, existence regions and equilibrium constructors.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{outcome_distribution, retake_until_a, ModelParams, Score, ScoreSeq, StudentStrategy, Type};
use crate::num::{self, bar, half, pow, Q};
use crate::policy::{AdmissionPolicy, Reporting};
use crate::posterior::{Beliefs, SignalMasses};

/// Structural name of an equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    /// Report Max: admit iff the best score is `A`.
    Separating,
    RejectAll,
    AcceptAll,
    /// Report All: admission depends only on the first score.
    FirstScore,
    /// Report All: first-score admissions plus the single sequence
    /// `B A^(n-1)`.
    NonFirstScore(u32),
    /// Report All: any other outcome that depends on more than the first
    /// score.
    OtherNonFirstScore,
    Other,
}

impl Label {
    /// True for every Report All outcome that is not a function of the
    /// first score alone.
    pub fn is_non_first_score(self) -> bool {
        matches!(self, Label::NonFirstScore(_) | Label::OtherNonFirstScore)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Separating => f.write_str("separating"),
            Label::RejectAll => f.write_str("reject-all"),
            Label::AcceptAll => f.write_str("accept-all"),
            Label::FirstScore => f.write_str("first-score"),
            Label::NonFirstScore(n) => write!(f, "non-first-score-{n}"),
            Label::OtherNonFirstScore => f.write_str("non-first-score"),
            Label::Other => f.write_str("other"),
        }
    }
}

/// Admissible range for one free stop probability, holding the rest of the
/// profile fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopInterval {
    pub type_: Type,
    pub history: ScoreSeq,
    pub range: Interval,
}

/// A policy, a student strategy and the College's beliefs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquilibriumProfile {
    pub policy: AdmissionPolicy,
    pub strategy: StudentStrategy,
    pub beliefs: Beliefs,
    pub label: Label,
    /// Ranges of indifferent stop probabilities that keep the profile an
    /// equilibrium; empty when not computed.
    pub free: Vec<StopInterval>,
}

impl EquilibriumProfile {
    /// Pairs `policy` and `strategy` with Bayes-consistent beliefs; off-path
    /// signals get belief 1 when accepted and 0 when rejected.
    pub fn new(params: &ModelParams, policy: AdmissionPolicy, strategy: StudentStrategy, label: Label) -> Result<Self> {
        let dist = outcome_distribution(params, &strategy)?;
        let masses = SignalMasses::new(&dist, policy.reporting());
        let beliefs = Beliefs::supporting(&masses, |s| policy.accepts(s));
        Ok(Self { policy, strategy, beliefs, label, free: Vec::new() })
    }

    pub fn reporting(&self) -> Reporting {
        self.policy.reporting()
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
}

impl Interval {
    pub fn new(lo: Q, hi: Q) -> Self {
        Self { lo, hi }
    }

    pub fn unit() -> Self {
        Self::new(Q::zero(), Q::one())
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: &Q) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.clone().max(other.lo.clone()), self.hi.clone().min(other.hi.clone()))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (num::to_f64(&self.lo), num::to_f64(&self.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_f64();
        write!(f, "[{}, {}]", num::format_sig(lo, 6), num::format_sig(hi, 6))
    }
}

/// Sorted, pairwise disjoint union of closed intervals of priors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Region {
    pub intervals: Vec<Interval>,
}

impl Region {
    /// Normalizes `intervals`: drops empty ones, sorts, merges overlapping
    /// or touching ones.
    pub fn from_intervals(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut items: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        items.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::new();
        for item in items {
            match merged.last_mut() {
                Some(last) if item.lo <= last.hi => {
                    if item.hi > last.hi {
                        last.hi = item.hi;
                    }
                }
                _ => merged.push(item),
            }
        }
        Self { intervals: merged }
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("empty");
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(" U ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

/// Lower and upper prior thresholds `(p̂_k, p̂′_k)` of the Report Max
/// separating equilibrium.
pub fn report_max_thresholds(params: &ModelParams) -> (Q, Q) {
    let (a, ab) = (params.alpha(), params.alpha_bar());
    let (phi, phib) = (params.phi(), params.phi_bar());
    let k = params.k();
    let ak = pow(a, k);
    let abk = pow(&ab, k);
    let lower = (phi * &ab + &phib * bar(&ak)) / (phi + &phib * (num::int(2) - &ak - &abk));
    let upper = (phi * a + &phib * &ak) / (phi + &phib * (&ak + &abk));
    (lower, upper)
}

/// Two-test form of the lower separating threshold,
/// `ᾱ(1 + αφ̄) / (1 + 2αᾱφ̄)`, well defined at `α = 1`.
pub fn p_hat_two_test(alpha: &Q, phi: &Q) -> Q {
    let ab = bar(alpha);
    let phib = bar(phi);
    &ab * (Q::one() + alpha * &phib) / (Q::one() + num::int(2) * alpha * &ab * &phib)
}

pub fn separating_interval(params: &ModelParams) -> Interval {
    let (lo, hi) = report_max_thresholds(params);
    Interval::new(lo, hi)
}

/// The Report Max separating equilibrium: admit iff the best score is `A`,
/// Category 2 retakes after every `B`. `None` outside `[p̂_k, p̂′_k]`.
pub fn report_max_separating(params: &ModelParams) -> Option<EquilibriumProfile> {
    if !separating_interval(params).contains(params.p()) {
        return None;
    }
    let k = params.k();
    EquilibriumProfile::new(params, AdmissionPolicy::separating(k), retake_until_a(k), Label::Separating).ok()
}

/// `p̂̂ = min{1/2, (αᾱφ̄ + ᾱ)/(αᾱφ̄ + 1)}`.
pub fn p_hat_hat(params: &ModelParams) -> Q {
    let ab = params.alpha_bar();
    let c = params.alpha() * &ab * params.phi_bar();
    let v = (&c + &ab) / (c + Q::one());
    v.min(half())
}

/// Supporting strategies of the two-test Report Max reject-all equilibrium.
///
/// The College's beliefs after `A` and `B` stay at or below one half iff the
/// continuation probabilities after a first `B` satisfy
/// `keep_high ∈ high_range` and `keep_low ∈ low_range(keep_high)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectAllSupport {
    pub p_hat_hat: Q,
    /// Admissible `f̄_H(B)`.
    pub high_range: Interval,
    /// An equilibrium built from the smallest admissible continuation rates.
    pub witness: EquilibriumProfile,
    c: Q,
    p: Q,
    alpha: Q,
}

impl RejectAllSupport {
    /// Admissible `f̄_L(B)` given `f̄_H(B) = keep_high`, clipped to `[0, 1]`.
    pub fn low_range(&self, keep_high: &Q) -> Interval {
        if self.c.is_zero() {
            return Interval::unit();
        }
        let p = &self.p;
        let pb = bar(p);
        let shift = &self.c * p * keep_high;
        let lo = (p - bar(&self.alpha) + &shift) / (&self.c * &pb);
        let hi = (&self.alpha - p + &shift) / (&self.c * &pb);
        Interval::new(lo, hi).intersect(&Interval::unit())
    }
}

/// The two-test Report Max equilibrium in which everyone is rejected.
/// `None` when `p > p̂̂`.
pub fn report_max_reject_all(params: &ModelParams) -> Result<Option<RejectAllSupport>> {
    if params.k() != 2 {
        return Err(Error::UnsupportedK { k: params.k(), requirement: "reject-all support is derived for k = 2" });
    }
    let p_hh = p_hat_hat(params);
    let p = params.p().clone();
    if p > p_hh {
        return Ok(None);
    }
    let alpha = params.alpha().clone();
    let ab = params.alpha_bar();
    let c = &alpha * &ab * params.phi_bar();
    let high_range = if c.is_zero() {
        Interval::unit()
    } else {
        let hi = (&c * bar(&p) + &ab - &p) / (&c * &p);
        Interval::new(Q::zero(), hi).intersect(&Interval::unit())
    };
    let mut support = RejectAllSupport {
        p_hat_hat: p_hh,
        high_range,
        witness: EquilibriumProfile::new(
            params,
            AdmissionPolicy::reject_all(Reporting::Max, 2),
            StudentStrategy::test_once(2),
            Label::RejectAll,
        )?,
        c,
        p,
        alpha,
    };
    let keep_high = support.high_range.lo.clone();
    let keep_low = support.low_range(&keep_high).lo;
    let b = ScoreSeq::single(Score::B);
    let strategy = StudentStrategy::from_fn(2, |t, h| {
        if h != b {
            Q::one()
        } else if t == Type::High {
            bar(&keep_high)
        } else {
            bar(&keep_low)
        }
    })?;
    support.witness =
        EquilibriumProfile::new(params, AdmissionPolicy::reject_all(Reporting::Max, 2), strategy, Label::RejectAll)?;
    Ok(Some(support))
}

/// `p*_n = ᾱ^(n-2) / (α^(n-2) + ᾱ^(n-2))`, extended to `n < 2` through
/// negative exponents (`p*_1 = α`, `p*_0 = α²/(α² + ᾱ²)`).
pub(crate) fn p_star_ext(n: i64, alpha: &Q) -> Q {
    let ab = bar(alpha);
    let e = n - 2;
    if e >= 0 {
        let (num_, other) = (pow(&ab, e as u32), pow(alpha, e as u32));
        &num_ / (&other + &num_)
    } else {
        let (num_, other) = (pow(alpha, (-e) as u32), pow(&ab, (-e) as u32));
        &num_ / (&num_ + &other)
    }
}

pub fn p_star(n: u32, alpha: &Q) -> Result<Q> {
    if n < 2 {
        return Err(Error::UnsupportedK { k: n, requirement: "p* is defined for k >= 2" });
    }
    Ok(p_star_ext(n as i64, alpha))
}

/// `p**_k = (α − α^k)/(1 − α^k − ᾱ^k)`, evaluated in a cancelled form that
/// stays finite at `α = 1` (where it equals `(k-1)/k`).
pub fn p_double_star(k: u32, alpha: &Q) -> Result<Q> {
    if k < 2 {
        return Err(Error::UnsupportedK { k, requirement: "p** is defined for k >= 2" });
    }
    let geometric = |n: u32| (0..n).map(|i| pow(alpha, i)).sum::<Q>();
    Ok(alpha * geometric(k - 1) / (geometric(k) - pow(&bar(alpha), k - 1)))
}

/// Report All existence regions: whether a first-score equilibrium exists,
/// and the priors admitting an equilibrium whose outcome depends on more
/// than the first score.
pub fn report_all_regions(params: &ModelParams) -> Result<(bool, Region)> {
    let k = params.k();
    if k < 2 {
        return Err(Error::UnsupportedK { k, requirement: "Report All regions need k >= 2" });
    }
    let alpha = params.alpha();
    let ab = params.alpha_bar();
    let first = Interval::new(ab.clone(), alpha.clone()).contains(params.p());
    let region = Region::from_intervals([
        Interval::new(p_star(k + 2, alpha)?, ab),
        Interval::new(p_star(k, alpha)?, alpha.clone()),
    ]);
    Ok((first, region))
}

/// Admit iff the first score is `A`; everyone tests once.
pub fn construct_first_score_equilibrium(params: &ModelParams) -> Result<EquilibriumProfile> {
    if !Interval::new(params.alpha_bar(), params.alpha().clone()).contains(params.p()) {
        return Err(Error::NoEquilibrium);
    }
    let k = params.k();
    EquilibriumProfile::new(params, AdmissionPolicy::first_score(k), StudentStrategy::test_once(k), Label::FirstScore)
}

/// Prior range on which [`construct_non_first_score_equilibrium`] returns a
/// profile: `[max(p*_n, ᾱ), p*_(n-1)]`.
pub fn non_first_score_interval(params: &ModelParams, n: u32) -> Result<Interval> {
    if n < 2 || n > params.k() {
        return Err(Error::BadIndex { n, k: params.k() });
    }
    let alpha = params.alpha();
    let lo = p_star_ext(n as i64, alpha).max(params.alpha_bar());
    Ok(Interval::new(lo, p_star_ext(n as i64 - 1, alpha)))
}

/// Admit every history starting with `A`, and also `B A^(n-1)`. Category 2
/// students keep testing while their history is a proper prefix of
/// `B A^(n-1)` and stop otherwise.
pub fn construct_non_first_score_equilibrium(params: &ModelParams, n: u32) -> Result<Option<EquilibriumProfile>> {
    if !non_first_score_interval(params, n)?.contains(params.p()) {
        return Ok(None);
    }
    let k = params.k();
    let mut scores = vec![Score::B];
    scores.extend(std::iter::repeat_n(Score::A, n as usize - 1));
    let target = ScoreSeq::new(&scores).expect("n <= k");
    let policy = AdmissionPolicy::report_all(k, |s| s.first() == Score::A || s == target);
    let strategy = StudentStrategy::from_fn(k, |_, h| {
        if target.starts_with(&h) && h != target {
            Q::zero()
        } else {
            Q::one()
        }
    })?;
    EquilibriumProfile::new(params, policy, strategy, Label::NonFirstScore(n)).map(Some)
}

/// Every threshold at which some region changes: `p̂_k`, `p̂′_k`, `ᾱ`, `α`,
/// `1/2`, `p*_n` for `n ≤ k + 2`, `p**_k` and, at `k = 2`, `p̂̂`.
pub fn thresholds(params: &ModelParams) -> Vec<Q> {
    let alpha = params.alpha();
    let k = params.k();
    let (lo, hi) = report_max_thresholds(params);
    let mut out = vec![lo, hi, params.alpha_bar(), alpha.clone(), half()];
    for n in 1..=(k + 2) {
        out.push(p_star_ext(n as i64, alpha));
    }
    if k >= 2 {
        out.push(p_double_star(k, alpha).expect("k >= 2"));
    }
    if k == 2 {
        out.push(p_hat_hat(params));
    }
    out.sort();
    out.dedup();
    out
}

/// True when the prior sits exactly on a region threshold.
pub fn is_boundary(params: &ModelParams) -> bool {
    thresholds(params).contains(params.p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    fn params(p: &str, alpha: &str, phi: &str, k: u32) -> ModelParams {
        ModelParams::parse(p, alpha, phi, k).unwrap()
    }

    fn q(s: &str) -> Q {
        num::parse_decimal(s).unwrap()
    }

    #[test]
    fn separating_thresholds_at_reference_point() {
        let pr = params("0.3", "0.8", "0.5", 2);
        let (lo, hi) = report_max_thresholds(&pr);
        assert_eq!(lo, ratio(14, 58));
        assert_eq!(hi, ratio(72, 84));
        assert_eq!(lo, p_hat_two_test(pr.alpha(), pr.phi()));
    }

    #[test]
    fn thresholds_collapse_without_category_two() {
        for k in 1..5 {
            let pr = params("0.3", "0.7", "1", k);
            assert_eq!(report_max_thresholds(&pr), (q("0.3"), q("0.7")));
        }
    }

    #[test]
    fn separating_region_membership() {
        assert!(report_max_separating(&params("0.3", "0.8", "0.5", 2)).is_some());
        assert!(report_max_separating(&params("0.1", "0.8", "0.5", 2)).is_none());
        let edge = params("0.3", "0.8", "0.5", 2).with_p(ratio(14, 58)).unwrap();
        assert!(report_max_separating(&edge).is_some());
    }

    #[test]
    fn reject_all_threshold() {
        let pr = params("0.25", "0.8", "0.5", 2);
        assert_eq!(p_hat_hat(&pr), ratio(28, 108));
        let support = report_max_reject_all(&pr).unwrap().unwrap();
        assert!(!support.high_range.is_empty());
        let low = support.low_range(&support.high_range.lo);
        assert!(!low.is_empty());
        assert!(report_max_reject_all(&params("0.3", "0.8", "0.5", 2)).unwrap().is_none());
        assert!(matches!(
            report_max_reject_all(&params("0.25", "0.8", "0.5", 3)),
            Err(Error::UnsupportedK { .. })
        ));
    }

    #[test]
    fn reject_all_without_category_two_needs_low_prior() {
        let pr = params("0.15", "0.8", "1", 2);
        let support = report_max_reject_all(&pr).unwrap().unwrap();
        assert_eq!(support.p_hat_hat, q("0.2"));
        assert_eq!(support.high_range, Interval::unit());
        assert_eq!(support.low_range(&Q::one()), Interval::unit());
        assert!(report_max_reject_all(&params("0.1", "1", "0.5", 2)).unwrap().is_none());
    }

    #[test]
    fn p_star_values() {
        for a in ["0.6", "0.8", "1"] {
            assert_eq!(p_star(2, &q(a)).unwrap(), half());
            assert_eq!(p_double_star(2, &q(a)).unwrap(), half());
        }
        assert_eq!(p_star(3, &q("0.8")).unwrap(), q("0.2"));
        assert_eq!(p_star(4, &q("0.8")).unwrap(), ratio(4, 68));
        assert_eq!(p_double_star(3, &q("0.8")).unwrap(), q("0.6"));
        assert_eq!(p_double_star(4, &q("1")).unwrap(), ratio(3, 4));
        assert_eq!(p_star_ext(1, &q("0.8")), q("0.8"));
        assert!(p_star(1, &q("0.8")).is_err());
        assert!(p_double_star(1, &q("0.8")).is_err());
    }

    #[test]
    fn report_all_region_shapes() {
        let (first, region) = report_all_regions(&params("0.3", "0.8", "0.5", 2)).unwrap();
        assert!(first);
        assert_eq!(
            region.intervals,
            vec![Interval::new(ratio(4, 68), q("0.2")), Interval::new(half(), q("0.8"))]
        );
        assert!(!region.contains(&q("0.3")));

        let (_, region3) = report_all_regions(&params("0.3", "0.8", "0.5", 3)).unwrap();
        assert_eq!(region3.intervals.len(), 1);
        assert!(region3.contains(&q("0.3")));

        let (first, _) = report_all_regions(&params("0.3", "1", "0.5", 2)).unwrap();
        assert!(first);
    }

    #[test]
    fn first_score_constructor_region() {
        assert!(construct_first_score_equilibrium(&params("0.3", "0.8", "0.5", 2)).is_ok());
        assert_eq!(
            construct_first_score_equilibrium(&params("0.19", "0.8", "0.5", 2)),
            Err(Error::NoEquilibrium)
        );
    }

    #[test]
    fn non_first_score_constructor() {
        let pr = params("0.45", "0.8", "0.5", 3);
        let profile = construct_non_first_score_equilibrium(&pr, 3).unwrap().unwrap();
        let accepted: Vec<_> = profile.policy.accepted().iter().map(|s| s.to_string()).collect();
        assert_eq!(accepted, ["A", "AA", "AB", "AAA", "AAB", "ABA", "ABB", "BAA"]);
        assert_eq!(profile.label, Label::NonFirstScore(3));

        assert!(construct_non_first_score_equilibrium(&params("0.3", "0.8", "0.5", 2), 2).unwrap().is_none());
        assert!(construct_non_first_score_equilibrium(&params("0.6", "0.8", "0.5", 2), 2).unwrap().is_some());
        assert_eq!(
            construct_non_first_score_equilibrium(&pr, 4),
            Err(Error::BadIndex { n: 4, k: 3 })
        );
        assert!(construct_non_first_score_equilibrium(&pr, 1).is_err());
    }

    #[test]
    fn region_normalization() {
        let r = Region::from_intervals([
            Interval::new(q("0.5"), q("0.8")),
            Interval::new(q("0.1"), q("0.5")),
            Interval::new(q("0.9"), q("0.2")),
        ]);
        assert_eq!(r.intervals, vec![Interval::new(q("0.1"), q("0.8"))]);
    }

    #[test]
    fn boundary_detection() {
        assert!(is_boundary(&params("0.2", "0.8", "0.5", 2)));
        assert!(is_boundary(&params("0.5", "0.8", "0.5", 3)));
        assert!(!is_boundary(&params("0.3", "0.8", "0.5", 2)));
    }
}
