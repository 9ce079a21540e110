use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use serde::Serialize;
use superscore::analytic::{self, Interval};
use superscore::metrics::{self, compare_policies, fairness_report, ClassReport, FairnessReport, Source};
use superscore::num::{format_sig, to_f64};
use superscore::simulator::{simulate as run_simulation, SimConfig, SimReport};
use superscore::{
    enumerate_outcomes, verify_equilibrium, Cohort, EquilibriumProfile, Error, Mode, ModelParams,
    PolicyScope, Reporting, StudentStrategy, Type, Q,
};

use crate::{Format, SCHEMA_VERSION};

fn short(x: &Q) -> String {
    format_sig(to_f64(x), 6)
}

fn f6(x: f64) -> String {
    if x.is_nan() {
        "undefined".to_owned()
    } else {
        format_sig(x, 6)
    }
}

fn opt6(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_else(|| "undefined".to_owned())
}

fn interval(i: &Interval) -> [f64; 2] {
    [to_f64(&i.lo), to_f64(&i.hi)]
}

fn json<T: Serialize>(doc: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)? + "\n")
}

fn no_csv(command: &str) -> anyhow::Error {
    anyhow!("{command} writes text or json")
}

#[derive(Serialize)]
struct ParamsDoc {
    alpha: f64,
    p: f64,
    phi: f64,
    k: u32,
}

impl ParamsDoc {
    fn new(params: &ModelParams) -> Self {
        Self { alpha: to_f64(params.alpha()), p: to_f64(params.p()), phi: to_f64(params.phi()), k: params.k() }
    }
}

fn header(params: &ModelParams) -> String {
    format!(
        "alpha={} p={} phi={} k={}",
        short(params.alpha()),
        short(params.p()),
        short(params.phi()),
        params.k()
    )
}

// ---------------------------------------------------------------- analyze

#[derive(Serialize)]
struct Threshold {
    name: String,
    value: f64,
}

#[derive(Serialize)]
struct Regions {
    separating: [f64; 2],
    in_separating: bool,
    first_score: [f64; 2],
    in_first_score: bool,
    non_first_score: Vec<[f64; 2]>,
    in_non_first_score: bool,
}

#[derive(Serialize)]
struct ClassDoc {
    policy: Reporting,
    label: String,
    source: Source,
    admit: [f64; 4],
    report: FairnessReport<f64>,
}

impl ClassDoc {
    fn new(c: &ClassReport) -> Self {
        Self {
            policy: c.reporting,
            label: c.label.to_string(),
            source: c.source,
            admit: std::array::from_fn(|i| to_f64(&c.admit[i])),
            report: c.report.to_f64(),
        }
    }
}

#[derive(Serialize)]
struct DeltaDoc {
    label: String,
    payoff: f64,
    fnr_gap: f64,
    fpr_gap: f64,
    ppv: Option<f64>,
    npv: Option<f64>,
}

#[derive(Serialize)]
struct AnalyzeDoc {
    schema_version: u32,
    params: ParamsDoc,
    thresholds: Vec<Threshold>,
    regions: Option<Regions>,
    boundary: bool,
    equilibria: Vec<ClassDoc>,
    /// Report All minus Report Max separating.
    deltas: Vec<DeltaDoc>,
    payoff_gap: Option<f64>,
}

fn named_thresholds(params: &ModelParams) -> Result<Vec<(String, Q)>> {
    let k = params.k();
    let (lo, hi) = analytic::report_max_thresholds(params);
    let mut out = vec![("p_hat_k".to_owned(), lo), ("p_hat_prime_k".to_owned(), hi)];
    if k == 2 {
        out.push(("p_hat_hat".to_owned(), analytic::p_hat_hat(params)));
    }
    if k >= 2 {
        for n in 2..=k + 2 {
            out.push((format!("p_star_{n}"), analytic::p_star(n, params.alpha())?));
        }
        out.push((format!("p_double_star_{k}"), analytic::p_double_star(k, params.alpha())?));
    }
    Ok(out)
}

pub fn analyze(params: &ModelParams, format: Format) -> Result<String> {
    let k = params.k();
    let thresholds = named_thresholds(params)?;
    let sep = analytic::separating_interval(params);
    let regions = if k >= 2 {
        let (fs, nfs) = analytic::report_all_regions(params)?;
        let first = Interval::new(params.alpha_bar(), params.alpha().clone());
        Some(Regions {
            separating: interval(&sep),
            in_separating: sep.contains(params.p()),
            first_score: interval(&first),
            in_first_score: fs,
            non_first_score: nfs.intervals.iter().map(interval).collect(),
            in_non_first_score: nfs.contains(params.p()),
        })
    } else {
        None
    };
    let cmp = compare_policies(params)?;
    let gap = if k >= 2 { Some(to_f64(&metrics::payoff_gap(params)?)) } else { None };
    let doc = AnalyzeDoc {
        schema_version: SCHEMA_VERSION,
        params: ParamsDoc::new(params),
        thresholds: thresholds.iter().map(|(n, v)| Threshold { name: n.clone(), value: to_f64(v) }).collect(),
        regions,
        boundary: cmp.boundary,
        equilibria: cmp.max.iter().chain(&cmp.all).map(ClassDoc::new).collect(),
        deltas: cmp
            .deltas
            .iter()
            .map(|d| DeltaDoc {
                label: d.label.to_string(),
                payoff: to_f64(&d.payoff),
                fnr_gap: to_f64(&d.fnr_gap),
                fpr_gap: to_f64(&d.fpr_gap),
                ppv: d.ppv.as_ref().map(to_f64),
                npv: d.npv.as_ref().map(to_f64),
            })
            .collect(),
        payoff_gap: gap,
    };
    match format {
        Format::Json => json(&doc),
        Format::Csv => Err(no_csv("analyze")),
        Format::Text => Ok(analyze_text(params, &doc)),
    }
}

fn analyze_text(params: &ModelParams, doc: &AnalyzeDoc) -> String {
    let mut s = String::new();
    let yes = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(s, "{}", header(params));
    let _ = writeln!(s, "\nthresholds");
    for t in &doc.thresholds {
        let _ = writeln!(s, "  {:<18} {}", t.name, f6(t.value));
    }
    if let Some(r) = &doc.regions {
        let span = |i: &[f64; 2]| format!("[{}, {}]", f6(i[0]), f6(i[1]));
        let union = r.non_first_score.iter().map(span).collect::<Vec<_>>().join(" u ");
        let _ = writeln!(s, "\nregions");
        let _ = writeln!(s, "  separating       {:<28} {}", span(&r.separating), yes(r.in_separating));
        let _ = writeln!(s, "  first-score      {:<28} {}", span(&r.first_score), yes(r.in_first_score));
        let union = if union.is_empty() { "empty".to_owned() } else { union };
        let _ = writeln!(s, "  non-first-score  {:<28} {}", union, yes(r.in_non_first_score));
    }
    let _ = writeln!(s, "boundary           {}", yes(doc.boundary));
    let _ = writeln!(s, "\nequilibria");
    let _ = writeln!(
        s,
        "  {:<11} {:<18} {:>8} {:>8} {:>8} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "policy", "outcome", "fnr1", "fnr2", "fpr1", "fpr2", "fnr_gap", "fpr_gap", "ppv", "npv", "payoff"
    );
    for c in &doc.equilibria {
        let r = &c.report;
        let policy = match c.policy {
            Reporting::Max => "report-max",
            Reporting::All => "report-all",
        };
        let _ = writeln!(
            s,
            "  {:<11} {:<18} {:>8} {:>8} {:>8} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}",
            policy,
            c.label,
            f6(r.fnr[0]),
            f6(r.fnr[1]),
            f6(r.fpr[0]),
            f6(r.fpr[1]),
            f6(r.fnr_gap),
            f6(r.fpr_gap),
            opt6(r.ppv),
            opt6(r.npv),
            f6(r.college_payoff)
        );
    }
    if doc.deltas.is_empty() {
        let _ = writeln!(s, "\nno report-max separating equilibrium; no deltas");
    } else {
        let _ = writeln!(s, "\nreport-all minus report-max separating");
        for d in &doc.deltas {
            let _ = writeln!(
                s,
                "  {:<18} payoff {:>9}  fnr_gap {:>9}  fpr_gap {:>9}  ppv {:>9}  npv {:>9}",
                d.label,
                f6(d.payoff),
                f6(d.fnr_gap),
                f6(d.fpr_gap),
                opt6(d.ppv),
                opt6(d.npv)
            );
        }
    }
    if let Some(g) = doc.payoff_gap {
        let _ = writeln!(s, "payoff gap (first-score minus separating, closed form) {}", f6(g));
    }
    s
}

// -------------------------------------------------------------- enumerate

#[derive(Serialize)]
struct StopDoc {
    #[serde(rename = "type")]
    type_: Type,
    history: String,
    stop: f64,
}

#[derive(Serialize)]
struct FreeDoc {
    #[serde(rename = "type")]
    type_: Type,
    history: String,
    range: [f64; 2],
}

#[derive(Serialize)]
struct EnumClassDoc {
    label: String,
    admit: [f64; 4],
    policies: usize,
    equilibrium: bool,
    violations: Vec<String>,
    off_path: Vec<String>,
    accept: Vec<String>,
    strategy: Vec<StopDoc>,
    free: Vec<FreeDoc>,
}

#[derive(Serialize)]
struct EnumerateDoc {
    schema_version: u32,
    params: ParamsDoc,
    scope: PolicyScope,
    candidates: usize,
    equilibria: usize,
    unverified: usize,
    boundary: bool,
    classes: Vec<EnumClassDoc>,
}

fn strategy_entries(strategy: &StudentStrategy) -> Vec<StopDoc> {
    let mut out = Vec::new();
    for t in Type::BOTH {
        for h in strategy.histories() {
            if let Some(f) = strategy.get(t, h) {
                out.push(StopDoc { type_: t, history: h.to_string(), stop: to_f64(f) });
            }
        }
    }
    out
}

pub fn enumerate(params: &ModelParams, scope: PolicyScope, format: Format) -> Result<String> {
    let found = enumerate_outcomes(params, scope).map_err(|e| match e {
        Error::ScopeTooLarge { .. } => anyhow!(
            "{e}: use --scope first-score, b-then-a-run or all-b-reject (all-b-reject needs k <= 6)"
        ),
        other => other.into(),
    })?;
    let doc = EnumerateDoc {
        schema_version: SCHEMA_VERSION,
        params: ParamsDoc::new(params),
        scope,
        candidates: found.candidates,
        equilibria: found.equilibria.len(),
        unverified: found.unverified,
        boundary: found.boundary,
        classes: found
            .classes
            .iter()
            .map(|c| EnumClassDoc {
                label: c.label.to_string(),
                admit: c.class.to_f64(),
                policies: c.multiplicity,
                equilibrium: c.verdict.is_equilibrium(),
                violations: c.verdict.violations.iter().map(|v| v.to_string()).collect(),
                off_path: c.verdict.off_path.iter().map(|s| s.to_string()).collect(),
                accept: c.witness.policy.accepted().iter().map(|s| s.to_string()).collect(),
                strategy: strategy_entries(&c.witness.strategy),
                free: c
                    .witness
                    .free
                    .iter()
                    .map(|f| FreeDoc { type_: f.type_, history: f.history.to_string(), range: interval(&f.range) })
                    .collect(),
            })
            .collect(),
    };
    match format {
        Format::Json => json(&doc),
        Format::Csv => Err(no_csv("enumerate")),
        Format::Text => Ok(enumerate_text(params, &doc)),
    }
}

fn type_letter(t: Type) -> char {
    match t {
        Type::High => 'H',
        Type::Low => 'L',
    }
}

fn enumerate_text(params: &ModelParams, doc: &EnumerateDoc) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} at {}", doc.scope, header(params));
    let _ = writeln!(
        s,
        "{} policies, {} equilibrium policies, {} outcome classes, {} unverified{}",
        doc.candidates,
        doc.equilibria,
        doc.classes.len(),
        doc.unverified,
        if doc.boundary { ", prior on a region boundary" } else { "" }
    );
    for (i, c) in doc.classes.iter().enumerate() {
        let admit = Cohort::ALL
            .iter()
            .zip(c.admit)
            .map(|(co, a)| format!("{co}={}", f6(a)))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(s, "\n[{}] {}  admit {}  ({} policies)", i + 1, c.label, admit, c.policies);
        let _ = writeln!(s, "    accept    {{{}}}", c.accept.join(", "));
        let verdict = if c.equilibrium { "equilibrium".to_owned() } else { c.violations.join("; ") };
        let _ = writeln!(s, "    verdict   {verdict}");
        if !c.off_path.is_empty() {
            let _ = writeln!(s, "    off-path  {}", c.off_path.join(", "));
        }
        if !c.strategy.is_empty() {
            let stops = c
                .strategy
                .iter()
                .map(|e| format!("f_{}({})={}", type_letter(e.type_), e.history, f6(e.stop)))
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(s, "    strategy  {stops}");
        }
        for f in &c.free {
            let _ = writeln!(
                s,
                "    free      f_{}({}) in [{}, {}]",
                type_letter(f.type_),
                f.history,
                f6(f.range[0]),
                f6(f.range[1])
            );
        }
    }
    s
}

// --------------------------------------------------------------- simulate

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileSelector {
    FirstScore,
    Separating,
    RejectAll,
    NonFirstScore(u32),
}

impl FromStr for ProfileSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "first-score" => Ok(Self::FirstScore),
            "separating" => Ok(Self::Separating),
            "reject-all" => Ok(Self::RejectAll),
            _ => s
                .strip_prefix("non-first-score-")
                .and_then(|n| n.parse().ok())
                .map(Self::NonFirstScore)
                .ok_or_else(|| format!("unknown profile `{s}` (first-score, separating, reject-all, non-first-score-N)")),
        }
    }
}

impl ProfileSelector {
    pub fn construct(self, params: &ModelParams) -> Result<EquilibriumProfile> {
        let range = |i: &Interval| format!("[{}, {}]", short(&i.lo), short(&i.hi));
        match self {
            Self::FirstScore => analytic::construct_first_score_equilibrium(params).map_err(|_| {
                anyhow!(
                    "no first-score equilibrium at p = {}: it needs p in {}",
                    short(params.p()),
                    range(&Interval::new(params.alpha_bar(), params.alpha().clone()))
                )
            }),
            Self::Separating => analytic::report_max_separating(params).ok_or_else(|| {
                anyhow!(
                    "no separating equilibrium at p = {}: it needs p in {}",
                    short(params.p()),
                    range(&analytic::separating_interval(params))
                )
            }),
            Self::RejectAll => match analytic::report_max_reject_all(params)? {
                Some(support) => Ok(support.witness),
                None => bail!(
                    "no reject-all equilibrium at p = {}: it needs p <= {}",
                    short(params.p()),
                    short(&analytic::p_hat_hat(params))
                ),
            },
            Self::NonFirstScore(n) => match analytic::construct_non_first_score_equilibrium(params, n)? {
                Some(profile) => Ok(profile),
                None => bail!(
                    "no non-first-score-{n} equilibrium at p = {}: the constructor needs p in {}",
                    short(params.p()),
                    range(&analytic::non_first_score_interval(params, n)?)
                ),
            },
        }
    }
}

#[derive(Serialize)]
struct Check {
    metric: &'static str,
    empirical: Option<f64>,
    analytic: Option<f64>,
    /// Four standard errors of the empirical estimate.
    tolerance: Option<f64>,
    pass: Option<bool>,
}

#[derive(Serialize)]
struct CohortDoc {
    cohort: String,
    students: u64,
    admitted: u64,
    sequences: BTreeMap<String, u64>,
}

#[derive(Serialize)]
struct SimulateDoc {
    schema_version: u32,
    params: ParamsDoc,
    profile: String,
    n: u64,
    seed: u64,
    cohorts: Vec<CohortDoc>,
    empirical: FairnessReport<f64>,
    analytic: FairnessReport<f64>,
    checks: Vec<Check>,
    all_pass: bool,
}

fn checks(sim: &SimReport, analytic: &FairnessReport<f64>) -> Vec<Check> {
    let count = |c: Cohort| sim.counts[c.index()];
    let cat = |i: usize| if i == 0 { superscore::Category::Cat1 } else { superscore::Category::Cat2 };
    let admitted: u64 = sim.counts.iter().map(|c| c.admitted).sum();
    let rejected = sim.n - admitted;
    let mut out = Vec::new();
    let mut push = |metric, emp: Option<f64>, an: Option<f64>, m: u64, var: Option<f64>| {
        let tol = match (var, m) {
            (Some(v), m) if m > 0 => Some(4.0 * (v.max(0.0) / m as f64).sqrt()),
            _ => None,
        };
        let emp = emp.filter(|x| !x.is_nan());
        let pass = match (emp, an, tol) {
            (Some(e), Some(a), Some(t)) => Some((e - a).abs() <= t + 1e-12),
            _ => None,
        };
        out.push(Check { metric, empirical: emp, analytic: an, tolerance: tol, pass });
    };
    let bern = |r: f64| Some(r * (1.0 - r));
    for i in 0..2 {
        let name = ["fnr_cat1", "fnr_cat2"][i];
        let m = count(Cohort::new(cat(i), Type::High)).students;
        push(name, Some(sim.report.fnr[i]), Some(analytic.fnr[i]), m, bern(analytic.fnr[i]));
    }
    for i in 0..2 {
        let name = ["fpr_cat1", "fpr_cat2"][i];
        let m = count(Cohort::new(cat(i), Type::Low)).students;
        push(name, Some(sim.report.fpr[i]), Some(analytic.fpr[i]), m, bern(analytic.fpr[i]));
    }
    push("ppv", sim.report.ppv, analytic.ppv, admitted, analytic.ppv.and_then(bern));
    push("npv", sim.report.npv, analytic.npv, rejected, analytic.npv.and_then(bern));
    // Per-student payoff is +1, -1 or 0; its second moment is the admitted share.
    let admit_share = admitted as f64 / sim.n as f64;
    let pay = analytic.college_payoff;
    push("college_payoff", Some(sim.report.college_payoff), Some(pay), sim.n, Some(admit_share - pay * pay));
    out
}

pub fn simulate(params: &ModelParams, selector: ProfileSelector, n: u64, seed: u64, format: Format) -> Result<String> {
    let profile = selector.construct(params)?;
    let verdict = verify_equilibrium(params, &profile, Mode::Exact)?;
    if !verdict.is_equilibrium() {
        bail!("constructed profile failed verification: {}", verdict.violations[0]);
    }
    let analytic = fairness_report(params, &profile)?.to_f64();
    let label = profile.label;
    let sim = run_simulation(&SimConfig { n, seed, params: params.clone(), profile })?;
    let checks = checks(&sim, &analytic);
    let doc = SimulateDoc {
        schema_version: SCHEMA_VERSION,
        params: ParamsDoc::new(params),
        profile: label.to_string(),
        n,
        seed,
        cohorts: Cohort::ALL
            .iter()
            .map(|c| CohortDoc {
                cohort: c.to_string(),
                students: sim.counts[c.index()].students,
                admitted: sim.counts[c.index()].admitted,
                sequences: sim.sequences[c.index()].iter().map(|(s, n)| (s.to_string(), *n)).collect(),
            })
            .collect(),
        empirical: sim.report.clone(),
        all_pass: checks.iter().all(|c| c.pass != Some(false)),
        analytic,
        checks,
    };
    match format {
        Format::Json => json(&doc),
        Format::Csv => Err(no_csv("simulate")),
        Format::Text => Ok(simulate_text(params, &doc)),
    }
}

fn simulate_text(params: &ModelParams, doc: &SimulateDoc) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} profile at {}, n={} seed={}", doc.profile, header(params), doc.n, doc.seed);
    for c in &doc.cohorts {
        let _ = writeln!(s, "  {} students {:>9} admitted {:>9}", c.cohort, c.students, c.admitted);
    }
    let _ = writeln!(s, "\n  {:<15} {:>10} {:>10} {:>10} {:>10}  result", "metric", "empirical", "analytic", "|diff|", "tol");
    for c in &doc.checks {
        let diff = c.empirical.zip(c.analytic).map(|(e, a)| (e - a).abs());
        let result = match c.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "n/a",
        };
        let _ = writeln!(
            s,
            "  {:<15} {:>10} {:>10} {:>10} {:>10}  {}",
            c.metric,
            opt6(c.empirical),
            opt6(c.analytic),
            opt6(diff),
            opt6(c.tolerance),
            result
        );
    }
    let _ = writeln!(s, "\n{}", if doc.all_pass { "all checks pass" } else { "some checks FAIL" });
    s
}

// ----------------------------------------------------------------- tables

#[derive(Serialize)]
struct TableRow {
    alpha: f64,
    k: u32,
    policy: &'static str,
    fnr_cat1: f64,
    fnr_cat2: f64,
    fpr_cat1: f64,
    fpr_cat2: f64,
    fnr_gap: f64,
    fpr_gap: f64,
}

#[derive(Serialize)]
struct TablesDoc {
    schema_version: u32,
    rows: Vec<TableRow>,
}

pub const TABLE_COLUMNS: [&str; 9] =
    ["alpha", "k", "policy", "fnr_cat1", "fnr_cat2", "fpr_cat1", "fpr_cat2", "fnr_gap", "fpr_gap"];

pub fn tables(alpha: &Q, ks: &[u32], format: Format) -> Result<String> {
    // Validates alpha.
    ModelParams::new(superscore::num::half(), alpha.clone(), Q::from_integer(0.into()), 1)?;
    let mut rows = Vec::new();
    for &k in ks {
        let t = metrics::error_table(alpha, k);
        for (policy, fnr, fpr) in [("report-max", &t.max_fnr, &t.max_fpr), ("report-all", &t.all_fnr, &t.all_fpr)] {
            rows.push(TableRow {
                alpha: to_f64(alpha),
                k,
                policy,
                fnr_cat1: to_f64(&fnr[0]),
                fnr_cat2: to_f64(&fnr[1]),
                fpr_cat1: to_f64(&fpr[0]),
                fpr_cat2: to_f64(&fpr[1]),
                fnr_gap: to_f64(&(&fnr[0] - &fnr[1])),
                fpr_gap: to_f64(&(&fpr[0] - &fpr[1])),
            });
        }
    }
    let cells = |r: &TableRow| {
        [
            format_sig(r.alpha, 12),
            r.k.to_string(),
            r.policy.to_owned(),
            format_sig(r.fnr_cat1, 12),
            format_sig(r.fnr_cat2, 12),
            format_sig(r.fpr_cat1, 12),
            format_sig(r.fpr_cat2, 12),
            format_sig(r.fnr_gap, 12),
            format_sig(r.fpr_gap, 12),
        ]
    };
    match format {
        Format::Json => json(&TablesDoc { schema_version: SCHEMA_VERSION, rows }),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(TABLE_COLUMNS)?;
            for r in &rows {
                w.write_record(cells(r))?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "false negative and false positive rates, alpha={}", short(alpha));
            let _ = writeln!(
                s,
                "{:>3}  {:<11} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
                "k", "policy", "fnr_cat1", "fnr_cat2", "fpr_cat1", "fpr_cat2", "fnr_gap", "fpr_gap"
            );
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{:>3}  {:<11} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
                    r.k,
                    r.policy,
                    f6(r.fnr_cat1),
                    f6(r.fnr_cat2),
                    f6(r.fpr_cat1),
                    f6(r.fpr_cat2),
                    f6(r.fnr_gap),
                    f6(r.fpr_gap)
                );
            }
            Ok(s)
        }
    }
}
