use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use superscore::metrics::{compare_policies, ClassReport};
use superscore::num::{format_sig, int, to_f64};
use superscore::{Label, ModelParams, OutcomeClass, Reporting, Q};

use crate::{parse_q, Format, SCHEMA_VERSION};

pub const COLUMNS: [&str; 16] = [
    "alpha",
    "p",
    "phi",
    "k",
    "policy",
    "equilibrium_class",
    "fnr_cat1",
    "fnr_cat2",
    "fpr_cat1",
    "fpr_cat2",
    "fnr_gap",
    "fpr_gap",
    "ppv",
    "npv",
    "college_payoff",
    "boundary_flag",
];

const DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepGrid {
    pub alpha: Vec<Q>,
    pub p: Vec<Q>,
    pub phi: Vec<Q>,
    pub k: Vec<u32>,
}

/// `0.1,0.2,0.4` or `start:stop:step` (inclusive, exact).
pub fn parse_values(name: &str, text: &str) -> Result<Vec<Q>> {
    let values = if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest.split_once(':').with_context(|| format!("--{name}: expected start:stop:step"))?;
        let (start, stop, step) = (q(name, start)?, q(name, stop)?, q(name, step)?);
        ensure!(step > int(0), "--{name}: step must be positive");
        let mut out = Vec::new();
        let mut x = start;
        while x <= stop {
            out.push(x.clone());
            x += &step;
        }
        out
    } else {
        text.split(',').map(|s| q(name, s.trim())).collect::<Result<_>>()?
    };
    ensure!(!values.is_empty(), "--{name}: no values");
    ensure!(values.windows(2).all(|w| w[0] < w[1]), "--{name}: values must be strictly ascending");
    Ok(values)
}

fn q(name: &str, s: &str) -> Result<Q> {
    parse_q(s).map_err(|e| anyhow::anyhow!("--{name}: {e}"))
}

pub fn parse_ks(text: &str) -> Result<Vec<u32>> {
    let ks = parse_values("k", text)?;
    ks.iter()
        .map(|k| {
            if !k.is_integer() || *k < int(1) || *k > int(30) {
                bail!("--k: `{}` is not an integer in 1..=30", to_f64(k));
            }
            Ok(to_f64(k) as u32)
        })
        .collect()
}

impl SweepGrid {
    pub fn parse(alpha: &str, p: &str, phi: &str, k: &str) -> Result<Self> {
        let grid =
            Self { alpha: parse_values("alpha", alpha)?, p: parse_values("p", p)?, phi: parse_values("phi", phi)?, k: parse_ks(k)? };
        for point in grid.points() {
            point?;
        }
        Ok(grid)
    }

    pub fn points(&self) -> impl Iterator<Item = superscore::Result<ModelParams>> + '_ {
        self.alpha.iter().flat_map(move |a| {
            self.p.iter().flat_map(move |p| {
                self.phi.iter().flat_map(move |phi| {
                    self.k.iter().map(move |k| ModelParams::new(p.clone(), a.clone(), phi.clone(), *k))
                })
            })
        })
    }
}

/// One equilibrium outcome at one grid point. Floats are rounded to 12
/// significant digits so the CSV and JSON renderings agree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub p: f64,
    pub phi: f64,
    pub k: u32,
    pub policy: String,
    pub equilibrium_class: String,
    pub fnr_cat1: f64,
    pub fnr_cat2: f64,
    pub fpr_cat1: f64,
    pub fpr_cat2: f64,
    pub fnr_gap: f64,
    pub fpr_gap: f64,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub college_payoff: f64,
    pub boundary_flag: u8,
}

fn sig(x: &Q) -> f64 {
    format_sig(to_f64(x), DIGITS).parse().expect("formatted float")
}

fn row(params: &ModelParams, class: &ClassReport, boundary: bool) -> SweepRow {
    let r = &class.report;
    SweepRow {
        alpha: sig(params.alpha()),
        p: sig(params.p()),
        phi: sig(params.phi()),
        k: params.k(),
        policy: match class.reporting {
            Reporting::Max => "report-max",
            Reporting::All => "report-all",
        }
        .to_owned(),
        equilibrium_class: class.label.to_string(),
        fnr_cat1: sig(&r.fnr[0]),
        fnr_cat2: sig(&r.fnr[1]),
        fpr_cat1: sig(&r.fpr[0]),
        fpr_cat2: sig(&r.fpr[1]),
        fnr_gap: sig(&r.fnr_gap),
        fpr_gap: sig(&r.fpr_gap),
        ppv: r.ppv.as_ref().map(sig),
        npv: r.npv.as_ref().map(sig),
        college_payoff: sig(&r.college_payoff),
        boundary_flag: boundary as u8,
    }
}

/// Evaluates every grid point in parallel; rows come back sorted by
/// parameters, policy and outcome.
pub fn run(grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    let points = grid.points().collect::<superscore::Result<Vec<_>>>()?;
    type Key = (Q, Q, Q, u32, Reporting, Label, OutcomeClass);
    let mut keyed: Vec<(Key, SweepRow)> = points
        .par_iter()
        .map(|params| {
            let cmp = compare_policies(params)?;
            Ok(cmp
                .max
                .iter()
                .chain(&cmp.all)
                .map(|c| {
                    let key = (
                        params.alpha().clone(),
                        params.p().clone(),
                        params.phi().clone(),
                        params.k(),
                        c.reporting,
                        c.label,
                        OutcomeClass { admit: c.admit.clone() },
                    );
                    (key, row(params, c, cmp.boundary))
                })
                .collect::<Vec<_>>())
        })
        .collect::<superscore::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

fn cell(x: f64) -> String {
    format_sig(x, DIGITS)
}

pub fn to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for r in rows {
        let opt = |x: Option<f64>| x.map(cell).unwrap_or_default();
        w.write_record([
            cell(r.alpha),
            cell(r.p),
            cell(r.phi),
            r.k.to_string(),
            r.policy.clone(),
            r.equilibrium_class.clone(),
            cell(r.fnr_cat1),
            cell(r.fnr_cat2),
            cell(r.fpr_cat1),
            cell(r.fpr_cat2),
            cell(r.fnr_gap),
            cell(r.fpr_gap),
            opt(r.ppv),
            opt(r.npv),
            cell(r.college_payoff),
            r.boundary_flag.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    ensure!(headers.iter().eq(COLUMNS), "unexpected CSV header");
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepDocument {
    pub schema_version: u32,
    pub rows: Vec<SweepRow>,
}

pub fn to_json(rows: &[SweepRow]) -> Result<String> {
    let doc = SweepDocument { schema_version: SCHEMA_VERSION, rows: rows.to_vec() };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn from_json(text: &str) -> Result<Vec<SweepRow>> {
    let doc: SweepDocument = serde_json::from_str(text)?;
    ensure!(doc.schema_version == SCHEMA_VERSION, "unsupported schema_version {}", doc.schema_version);
    Ok(doc.rows)
}

pub fn render(rows: &[SweepRow], format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
        Format::Text => bail!("sweep writes csv or json"),
    }
}
