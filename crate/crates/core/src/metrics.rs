//! Error rates, predictive values and College payoff of equilibrium
//! outcomes, and the closed-form comparisons between reporting policies.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::analytic::{self, EquilibriumProfile, Label};
use crate::error::{Error, Result};
use crate::model::{outcome_distribution, Category, Cohort, ModelParams, Type};
use crate::num::{bar, pow, to_f64, Q};
use crate::policy::Reporting;
use crate::search::{enumerate_outcomes, OutcomeClass, PolicyScope};

/// Per-cohort admission probabilities in [`Cohort::ALL`] order.
pub type Admit = [Q; 4];

/// Fairness and accuracy of one outcome. Category-indexed arrays hold
/// `[Cat1, Cat2]`; gaps are Cat1 minus Cat2.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairnessReport<T = Q> {
    pub fnr: [T; 2],
    pub fpr: [T; 2],
    /// `None` when nobody is admitted.
    pub ppv: Option<T>,
    /// `None` when nobody is rejected.
    pub npv: Option<T>,
    pub college_payoff: T,
    pub fnr_gap: T,
    pub fpr_gap: T,
}

impl FairnessReport<Q> {
    /// Report for the outcome in which cohort `c` is admitted with
    /// probability `admit[c.index()]`.
    pub fn from_admit(params: &ModelParams, admit: &Admit) -> Self {
        let rate = |c: Category, t: Type| admit[Cohort::new(c, t).index()].clone();
        let fnr = [bar(&rate(Category::Cat1, Type::High)), bar(&rate(Category::Cat2, Type::High))];
        let fpr = [rate(Category::Cat1, Type::Low), rate(Category::Cat2, Type::Low)];

        let mut admitted = [Q::zero(), Q::zero()];
        let mut rejected = [Q::zero(), Q::zero()];
        for cohort in Cohort::ALL {
            let m = params.cohort_mass(cohort);
            let a = &admit[cohort.index()];
            admitted[cohort.type_.index()] += &m * a;
            rejected[cohort.type_.index()] += &m * bar(a);
        }
        let share = |num: &Q, den: Q| (den.is_positive()).then(|| num / den);
        let ppv = share(&admitted[0], &admitted[0] + &admitted[1]);
        let npv = share(&rejected[1], &rejected[0] + &rejected[1]);
        let college_payoff = &admitted[0] - &admitted[1];
        Self {
            fnr_gap: &fnr[0] - &fnr[1],
            fpr_gap: &fpr[0] - &fpr[1],
            fnr,
            fpr,
            ppv,
            npv,
            college_payoff,
        }
    }

    pub fn to_f64(&self) -> FairnessReport<f64> {
        FairnessReport {
            fnr: [to_f64(&self.fnr[0]), to_f64(&self.fnr[1])],
            fpr: [to_f64(&self.fpr[0]), to_f64(&self.fpr[1])],
            ppv: self.ppv.as_ref().map(to_f64),
            npv: self.npv.as_ref().map(to_f64),
            college_payoff: to_f64(&self.college_payoff),
            fnr_gap: to_f64(&self.fnr_gap),
            fpr_gap: to_f64(&self.fpr_gap),
        }
    }
}

/// Admission probability of each cohort when students play the profile's
/// strategy.
pub fn admit_probabilities(params: &ModelParams, profile: &EquilibriumProfile) -> Result<Admit> {
    let dist = outcome_distribution(params, &profile.strategy)?;
    Ok(std::array::from_fn(|i| {
        let cohort = Cohort::ALL[i];
        dist.support(cohort)
            .filter(|(s, _)| profile.policy.accepts(*s))
            .map(|(_, m)| m.clone())
            .sum()
    }))
}

pub fn fairness_report(params: &ModelParams, profile: &EquilibriumProfile) -> Result<FairnessReport> {
    Ok(FairnessReport::from_admit(params, &admit_probabilities(params, profile)?))
}

/// False negative and false positive rates, each `[Cat1, Cat2]`.
pub fn confusion_rates(params: &ModelParams, profile: &EquilibriumProfile) -> Result<([Q; 2], [Q; 2])> {
    let r = fairness_report(params, profile)?;
    Ok((r.fnr, r.fpr))
}

/// `(ppv, npv)`, each `None` when undefined.
pub fn predictive_values(params: &ModelParams, profile: &EquilibriumProfile) -> Result<(Option<Q>, Option<Q>)> {
    let r = fairness_report(params, profile)?;
    Ok((r.ppv, r.npv))
}

/// Admitted High mass minus admitted Low mass, per student.
pub fn college_payoff(params: &ModelParams, profile: &EquilibriumProfile) -> Result<Q> {
    Ok(fairness_report(params, profile)?.college_payoff)
}

/// College payoff under the first-score equilibrium minus its payoff under
/// the Report Max separating equilibrium:
/// `φ̄[(α − α^k)p̄ − (ᾱ − ᾱ^k)p]`.
pub fn payoff_gap(params: &ModelParams) -> Result<Q> {
    let k = params.k();
    if k < 2 {
        return Err(Error::UnsupportedK { k, requirement: "k >= 2" });
    }
    let a = params.alpha();
    let ab = params.alpha_bar();
    let p = params.p();
    Ok(params.phi_bar() * ((a - pow(a, k)) * params.p_bar() - (&ab - pow(&ab, k)) * p))
}

/// Error rates of the two canonical outcomes, as functions of `α` and `k`
/// only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorTable {
    /// Report Max separating: `fnr = [ᾱ, ᾱ^k]`, `fpr = [ᾱ, 1 − α^k]`.
    pub max_fnr: [Q; 2],
    pub max_fpr: [Q; 2],
    /// Report All first-score: `ᾱ` everywhere.
    pub all_fnr: [Q; 2],
    pub all_fpr: [Q; 2],
}

pub fn error_table(alpha: &Q, k: u32) -> ErrorTable {
    let ab = bar(alpha);
    ErrorTable {
        max_fnr: [ab.clone(), pow(&ab, k)],
        max_fpr: [ab.clone(), bar(&pow(alpha, k))],
        all_fnr: [ab.clone(), ab.clone()],
        all_fpr: [ab.clone(), ab],
    }
}

/// How an outcome was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Constructor,
    Search,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassReport {
    pub reporting: Reporting,
    pub label: Label,
    pub admit: Admit,
    pub report: FairnessReport,
    pub source: Source,
}

/// All-minus-Max differences for one Report All outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Delta {
    pub label: Label,
    pub payoff: Q,
    pub fnr_gap: Q,
    pub fpr_gap: Q,
    pub ppv: Option<Q>,
    pub npv: Option<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub max: Vec<ClassReport>,
    pub all: Vec<ClassReport>,
    /// Against the Report Max separating outcome; empty when it does not
    /// exist.
    pub deltas: Vec<Delta>,
    pub boundary: bool,
}

impl Comparison {
    pub fn separating(&self) -> Option<&ClassReport> {
        self.max.iter().find(|c| c.label == Label::Separating)
    }

    pub fn first_score(&self) -> Option<&ClassReport> {
        self.all.iter().find(|c| c.label == Label::FirstScore)
    }
}

/// Largest `k` for which [`compare_policies`] searches Report All policies
/// exhaustively; beyond it only the named families are searched.
pub const EXHAUSTIVE_K: u32 = 3;

/// Every Report Max and Report All equilibrium outcome at `params`, from the
/// constructors and the search, with fairness reports and All-vs-Max
/// deltas.
pub fn compare_policies(params: &ModelParams) -> Result<Comparison> {
    let k = params.k();
    let mut max = Vec::new();
    let mut all = Vec::new();

    let push = |list: &mut Vec<ClassReport>, reporting, label, admit: Admit, source| {
        if list.iter().any(|c: &ClassReport| c.admit == admit) {
            return;
        }
        let report = FairnessReport::from_admit(params, &admit);
        list.push(ClassReport { reporting, label, admit, report, source });
    };

    if let Some(profile) = analytic::report_max_separating(params) {
        let admit = admit_probabilities(params, &profile)?;
        push(&mut max, Reporting::Max, Label::Separating, admit, Source::Constructor);
    }
    if k >= 2 && analytic::report_all_regions(params)?.0 {
        let profile = analytic::construct_first_score_equilibrium(params)?;
        let admit = admit_probabilities(params, &profile)?;
        push(&mut all, Reporting::All, Label::FirstScore, admit, Source::Constructor);
    }
    for n in 2..=k {
        if let Some(profile) = analytic::construct_non_first_score_equilibrium(params, n)? {
            let admit = admit_probabilities(params, &profile)?;
            push(&mut all, Reporting::All, Label::NonFirstScore(n), admit, Source::Constructor);
        }
    }

    let mut scopes = vec![PolicyScope::ReportMax];
    if k <= EXHAUSTIVE_K {
        scopes.push(PolicyScope::ReportAll);
    } else {
        scopes.extend([PolicyScope::FirstScore, PolicyScope::BThenARun]);
        if k <= 6 {
            scopes.push(PolicyScope::AllBReject);
        }
    }
    let mut boundary = analytic::is_boundary(params);
    for scope in scopes {
        let found = enumerate_outcomes(params, scope)?;
        boundary |= found.boundary;
        let list = match scope.reporting() {
            Reporting::Max => &mut max,
            Reporting::All => &mut all,
        };
        for entry in &found.classes {
            push(list, scope.reporting(), entry.label, entry.class.admit.clone(), Source::Search);
        }
    }
    let key = |c: &ClassReport| (c.label, OutcomeClass { admit: c.admit.clone() });
    max.sort_by_key(key);
    all.sort_by_key(key);

    let deltas = match max.iter().find(|c| c.label == Label::Separating) {
        None => Vec::new(),
        Some(sep) => all
            .iter()
            .map(|c| Delta {
                label: c.label,
                payoff: &c.report.college_payoff - &sep.report.college_payoff,
                fnr_gap: &c.report.fnr_gap - &sep.report.fnr_gap,
                fpr_gap: &c.report.fpr_gap - &sep.report.fpr_gap,
                ppv: c.report.ppv.as_ref().zip(sep.report.ppv.as_ref()).map(|(a, b)| a - b),
                npv: c.report.npv.as_ref().zip(sep.report.npv.as_ref()).map(|(a, b)| a - b),
            })
            .collect(),
    };
    Ok(Comparison { max, all, deltas, boundary })
}
