use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{best_response, flow, free_intervals, verify_equilibrium, Mode, OutcomeClass, Verdict, Violation};
use crate::analytic::{is_boundary, EquilibriumProfile, Label};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Score, ScoreSeq, StudentStrategy, Type};
use crate::num::{bar, pow, Q};
use crate::policy::{AdmissionPolicy, Reporting};

/// Which admission policies to search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyScope {
    /// Every deterministic Report All policy (`k <= 3`).
    ReportAll,
    /// Every deterministic Report Max policy.
    ReportMax,
    /// The single policy admitting exactly the histories that start with `A`.
    FirstScore,
    /// First-score admissions plus one sequence `B A^(n-1)`, `2 <= n <= k`.
    BThenARun,
    /// Every history starting with `A` admitted, every all-`B` history
    /// rejected, and the remaining histories decided by their length and
    /// number of `A`s (`k <= 6`).
    AllBReject,
}

impl PolicyScope {
    pub const ALL: [PolicyScope; 5] = [
        PolicyScope::ReportAll,
        PolicyScope::ReportMax,
        PolicyScope::FirstScore,
        PolicyScope::BThenARun,
        PolicyScope::AllBReject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyScope::ReportAll => "report-all",
            PolicyScope::ReportMax => "report-max",
            PolicyScope::FirstScore => "first-score",
            PolicyScope::BThenARun => "b-then-a-run",
            PolicyScope::AllBReject => "all-b-reject",
        }
    }

    pub fn reporting(self) -> Reporting {
        match self {
            PolicyScope::ReportMax => Reporting::Max,
            _ => Reporting::All,
        }
    }
}

impl fmt::Display for PolicyScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        PolicyScope::ALL
            .into_iter()
            .find(|scope| scope.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PolicyScope::ALL.iter().map(|s| s.as_str()).collect();
                format!("unknown scope `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// One equilibrium outcome with a verified witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassEntry {
    pub class: OutcomeClass,
    pub label: Label,
    /// Witness with [`EquilibriumProfile::free`] filled in.
    pub witness: EquilibriumProfile,
    pub verdict: Verdict,
    /// Number of equilibrium policies with this outcome.
    pub multiplicity: usize,
}

/// An equilibrium policy with a supporting strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equilibrium {
    pub policy: AdmissionPolicy,
    pub strategy: StudentStrategy,
    pub label: Label,
    /// Index into [`Enumeration::classes`].
    pub class: usize,
}

impl Equilibrium {
    pub fn profile(&self, params: &ModelParams) -> Result<EquilibriumProfile> {
        EquilibriumProfile::new(params, self.policy.clone(), self.strategy.clone(), self.label)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub scope: PolicyScope,
    /// Policies examined.
    pub candidates: usize,
    /// Every equilibrium policy, each with a verified supporting strategy.
    pub equilibria: Vec<Equilibrium>,
    /// Distinct outcomes, sorted by label then admission probabilities.
    pub classes: Vec<ClassEntry>,
    /// Policies the flow program accepted whose witness then failed exact
    /// verification. Always zero unless the two code paths disagree.
    pub unverified: usize,
    /// The prior sits exactly on a region threshold.
    pub boundary: bool,
}

impl Enumeration {
    pub fn labels(&self) -> Vec<Label> {
        self.classes.iter().map(|c| c.label).collect()
    }

    pub fn has(&self, label: Label) -> bool {
        self.classes.iter().any(|c| c.label == label)
    }
}

/// Finds every equilibrium among the policies in `scope`, with one
/// verified witness per outcome class.
pub fn enumerate_outcomes(params: &ModelParams, scope: PolicyScope) -> Result<Enumeration> {
    let k = params.k();
    let (candidates, found, unverified) = match scope {
        PolicyScope::ReportMax => report_max(params)?,
        _ => {
            let a_parts = subtree_parts(scope, Score::A, k)?;
            let b_parts = subtree_parts(scope, Score::B, k)?;
            report_all(params, &a_parts, &b_parts)?
        }
    };

    let mut groups: BTreeMap<OutcomeClass, Vec<usize>> = BTreeMap::new();
    for (i, (class, _, _)) in found.iter().enumerate() {
        groups.entry(class.clone()).or_default().push(i);
    }
    let mut classes = Vec::new();
    for (class, members) in &groups {
        let label = classify(params, scope.reporting(), class);
        let (_, policy, strategy) = &found[members[0]];
        let mut witness = EquilibriumProfile::new(params, policy.clone(), strategy.clone(), label)?;
        let verdict = verify_equilibrium(params, &witness, Mode::Exact)?;
        witness.free = free_intervals(params, &witness)?;
        classes.push(ClassEntry { class: class.clone(), label, witness, verdict, multiplicity: members.len() });
    }
    classes.sort_by(|a, b| (a.label, &a.class).cmp(&(b.label, &b.class)));
    let index: BTreeMap<&OutcomeClass, usize> = classes.iter().enumerate().map(|(i, c)| (&c.class, i)).collect();

    let equilibria = found
        .iter()
        .map(|(class, policy, strategy)| {
            let i = index[class];
            Equilibrium { policy: policy.clone(), strategy: strategy.clone(), label: classes[i].label, class: i }
        })
        .collect();

    Ok(Enumeration { scope, candidates, equilibria, classes, unverified, boundary: is_boundary(params) })
}

/// Names an outcome by comparing it with the outcomes of the canonical
/// equilibria.
pub fn classify(params: &ModelParams, reporting: Reporting, class: &OutcomeClass) -> Label {
    if class.admit.iter().all(Zero::is_zero) {
        return Label::RejectAll;
    }
    if class.admit.iter().all(One::is_one) {
        return Label::AcceptAll;
    }
    let a = params.alpha().clone();
    let ab = params.alpha_bar();
    let k = params.k();
    match reporting {
        Reporting::Max => {
            if class.admit == [a.clone(), ab.clone(), bar(&pow(&ab, k)), bar(&pow(&a, k))] {
                Label::Separating
            } else {
                Label::Other
            }
        }
        Reporting::All => {
            if class.admit == [a.clone(), ab.clone(), a.clone(), ab.clone()] {
                return Label::FirstScore;
            }
            for n in 2..=k {
                let high = &a + &ab * pow(&a, n - 1);
                let low = &ab + &a * pow(&ab, n - 1);
                if class.admit == [a.clone(), ab.clone(), high, low] {
                    return Label::NonFirstScore(n);
                }
            }
            Label::OtherNonFirstScore
        }
    }
}

/// Policies examined, verified equilibria, and flow solutions that failed
/// verification.
type Found = (usize, Vec<(OutcomeClass, AdmissionPolicy, StudentStrategy)>, usize);

fn report_max(params: &ModelParams) -> Result<Found> {
    let k = params.k();
    let mut out = Vec::new();
    let mut unverified = 0;
    for (accept_a, accept_b) in [(false, false), (true, false), (false, true), (true, true)] {
        let policy = AdmissionPolicy::report_max(k, accept_a, accept_b);
        let br = best_response(params, &policy)?;
        if let Some(entries) = flow::solve(params, &policy, &br, &Score::BOTH) {
            let strategy = strategy_from(k, entries.iter())?;
            let profile = EquilibriumProfile::new(params, policy.clone(), strategy.clone(), Label::Other)?;
            if verify_equilibrium(params, &profile, Mode::Exact)?.is_equilibrium() {
                out.push((OutcomeClass::from_best_response(params, &policy, &br), policy, strategy));
            } else {
                unverified += 1;
            }
        }
    }
    Ok((4, out, unverified))
}

/// Decisions over the histories starting with one score, indexed by
/// [`ScoreSeq::subtree_index`].
type Part = Vec<bool>;

fn subtree_parts(scope: PolicyScope, root: Score, k: u32) -> Result<Vec<Part>> {
    let size = (1usize << k) - 1;
    let all = |v: bool| vec![vec![v; size]];
    let seqs: Vec<ScoreSeq> = ScoreSeq::extensions(ScoreSeq::single(root), k).collect();
    Ok(match (scope, root) {
        (PolicyScope::ReportAll, _) => {
            if k > 3 {
                return Err(Error::ScopeTooLarge { k });
            }
            (0u32..(1 << size)).map(|mask| (0..size).map(|i| mask >> i & 1 == 1).collect()).collect()
        }
        (PolicyScope::ReportMax, _) => unreachable!("handled separately"),
        (_, Score::A) => all(true),
        (PolicyScope::FirstScore, Score::B) => all(false),
        (PolicyScope::BThenARun, Score::B) => {
            if k < 2 {
                return Err(Error::UnsupportedK { k, requirement: "B-then-A runs need k >= 2" });
            }
            (2..=k)
                .map(|n| {
                    let run = |s: &ScoreSeq| s.len() == n && s.count(Score::A) == n - 1 && s.first() == Score::B;
                    seqs.iter().map(run).collect()
                })
                .collect()
        }
        (PolicyScope::AllBReject, Score::B) => {
            if k > 6 {
                return Err(Error::ScopeTooLarge { k });
            }
            // One bit per (length, #A) with length >= 2 and 1 <= #A < length.
            let cells: Vec<(u32, u32)> = (2..=k).flat_map(|len| (1..len).map(move |a| (len, a))).collect();
            (0u64..(1 << cells.len()))
                .map(|mask| {
                    seqs.iter()
                        .map(|s| {
                            let key = (s.len(), s.count(Score::A));
                            cells.iter().position(|c| *c == key).is_some_and(|bit| mask >> bit & 1 == 1)
                        })
                        .collect()
                })
                .collect()
        }
    })
}

struct SubtreeResult {
    decisions: Part,
    entries: flow::Entries,
    /// Admission probability contributed by this subtree, per cohort.
    admit: [Q; 4],
}

fn policy_from(k: u32, a: &[bool], b: &[bool]) -> AdmissionPolicy {
    AdmissionPolicy::report_all(k, |s| match s.first() {
        Score::A => a[s.subtree_index()],
        Score::B => b[s.subtree_index()],
    })
}

fn strategy_from<'a>(k: u32, entries: impl Iterator<Item = &'a (Type, ScoreSeq, Q)>) -> Result<StudentStrategy> {
    let mut strategy = StudentStrategy::empty(k);
    for (t, h, stop) in entries {
        strategy.set(*t, *h, stop.clone())?;
    }
    Ok(strategy)
}

fn solve_subtree(params: &ModelParams, root: Score, decisions: &Part) -> Option<SubtreeResult> {
    let k = params.k();
    let none = vec![false; decisions.len()];
    let policy = match root {
        Score::A => policy_from(k, decisions, &none),
        Score::B => policy_from(k, &none, decisions),
    };
    let br = best_response(params, &policy).ok()?;
    let entries = flow::solve(params, &policy, &br, &[root])?;
    let single = ScoreSeq::single(root);
    let accepted = policy.accepts(single);
    let mut admit: [Q; 4] = std::array::from_fn(|_| Q::zero());
    for t in Type::BOTH {
        let e = params.emission(t, root);
        if accepted {
            admit[t.index()] = e.clone();
        }
        admit[2 + t.index()] = e * br.value(t, single);
    }
    Some(SubtreeResult { decisions: decisions.clone(), entries, admit })
}

fn located_in(v: &Violation, root: Score) -> bool {
    match v {
        Violation::Strategy { history, .. } => history.first() == root,
        Violation::Policy { signal, .. } | Violation::Belief { signal } => signal.first() == root,
    }
}

fn report_all(params: &ModelParams, a_parts: &[Part], b_parts: &[Part]) -> Result<Found> {
    let k = params.k();
    let candidates = a_parts.len() * b_parts.len();
    let solve_all = |root: Score, parts: &[Part]| -> Vec<SubtreeResult> {
        parts.par_iter().filter_map(|d| solve_subtree(params, root, d)).collect()
    };
    let feasible_a = solve_all(Score::A, a_parts);
    let feasible_b = solve_all(Score::B, b_parts);
    let (Some(a0), Some(b0)) = (feasible_a.first(), feasible_b.first()) else {
        return Ok((candidates, Vec::new(), 0));
    };

    // Best responses and beliefs in one subtree never depend on the other,
    // so each violation belongs to exactly one subtree and a pair verifies
    // iff both halves do.
    let verify_half = |root: Score, a: &SubtreeResult, b: &SubtreeResult| -> Result<bool> {
        let policy = policy_from(k, &a.decisions, &b.decisions);
        let strategy = strategy_from(k, a.entries.iter().chain(&b.entries))?;
        let profile = EquilibriumProfile::new(params, policy, strategy, Label::Other)?;
        let verdict = verify_equilibrium(params, &profile, Mode::Exact)?;
        Ok(!verdict.violations.iter().any(|v| located_in(v, root)))
    };
    let ok_a: Vec<&SubtreeResult> = feasible_a
        .par_iter()
        .map(|a| verify_half(Score::A, a, b0).map(|ok| ok.then_some(a)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let ok_b: Vec<&SubtreeResult> = feasible_b
        .par_iter()
        .map(|b| verify_half(Score::B, a0, b).map(|ok| ok.then_some(b)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let unverified = feasible_a.len() * feasible_b.len() - ok_a.len() * ok_b.len();

    let mut out = Vec::with_capacity(ok_a.len() * ok_b.len());
    for a in &ok_a {
        for b in &ok_b {
            let policy = policy_from(k, &a.decisions, &b.decisions);
            let strategy = strategy_from(k, a.entries.iter().chain(&b.entries))?;
            let admit = std::array::from_fn(|i| &a.admit[i] + &b.admit[i]);
            out.push((OutcomeClass { admit }, policy, strategy));
        }
    }
    Ok((candidates, out, unverified))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    fn params(p: &str, alpha: &str, phi: &str, k: u32) -> ModelParams {
        ModelParams::parse(p, alpha, phi, k).unwrap()
    }

    #[test]
    fn scope_names_round_trip() {
        for scope in PolicyScope::ALL {
            assert_eq!(scope.as_str().parse::<PolicyScope>(), Ok(scope));
        }
        assert!("everything".parse::<PolicyScope>().is_err());
    }

    #[test]
    fn unique_first_score_outcome_at_two_tests() {
        let pr = params("0.3", "0.8", "0.5", 2);
        let e = enumerate_outcomes(&pr, PolicyScope::ReportAll).unwrap();
        assert_eq!(e.candidates, 64);
        assert_eq!(e.unverified, 0);
        assert_eq!(e.labels(), vec![Label::FirstScore]);
        assert_eq!(e.classes[0].class.admit, [ratio(4, 5), ratio(1, 5), ratio(4, 5), ratio(1, 5)]);
        assert!(!e.boundary);
    }

    #[test]
    fn report_max_coexistence() {
        let both = enumerate_outcomes(&params("0.25", "0.8", "0.5", 2), PolicyScope::ReportMax).unwrap();
        assert_eq!(both.labels(), vec![Label::Separating, Label::RejectAll]);
        let one = enumerate_outcomes(&params("0.3", "0.8", "0.5", 2), PolicyScope::ReportMax).unwrap();
        assert_eq!(one.labels(), vec![Label::Separating]);
    }

    #[test]
    fn three_tests_admit_non_first_score_outcome() {
        let e = enumerate_outcomes(&params("0.6", "0.8", "0.5", 3), PolicyScope::ReportAll).unwrap();
        assert!(e.has(Label::FirstScore));
        assert!(e.has(Label::NonFirstScore(2)));
        assert_eq!(e.unverified, 0);
    }

    #[test]
    fn exhaustive_scope_is_capped() {
        assert_eq!(
            enumerate_outcomes(&params("0.3", "0.8", "0.5", 4), PolicyScope::ReportAll),
            Err(Error::ScopeTooLarge { k: 4 })
        );
    }

    #[test]
    fn named_families_at_larger_k() {
        let pr = params("0.45", "0.8", "0.5", 4);
        let runs = enumerate_outcomes(&pr, PolicyScope::BThenARun).unwrap();
        assert_eq!(runs.candidates, 3);
        assert!(runs.has(Label::NonFirstScore(3)));
        let first = enumerate_outcomes(&pr, PolicyScope::FirstScore).unwrap();
        assert_eq!(first.labels(), vec![Label::FirstScore]);
        let family = enumerate_outcomes(&pr, PolicyScope::AllBReject).unwrap();
        assert_eq!(family.candidates, 64);
        assert!(family.has(Label::FirstScore));
    }
}
