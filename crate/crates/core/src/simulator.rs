//! Seeded Monte-Carlo simulation of a population playing a profile.
//!
//! Student `i` draws from its own ChaCha8 stream `(seed, i)`, so results do
//! not depend on how the population is split across threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::metrics::FairnessReport;
use crate::model::{seq_count, Category, Cohort, ModelParams, Score, ScoreSeq, Type};
use crate::num::to_f64;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: u64,
    pub seed: u64,
    pub params: ModelParams,
    pub profile: EquilibriumProfile,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CohortCount {
    pub students: u64,
    pub admitted: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub n: u64,
    pub seed: u64,
    /// In [`Cohort::ALL`] order.
    pub counts: [CohortCount; 4],
    /// Final score sequence counts per cohort, in [`Cohort::ALL`] order.
    pub sequences: [BTreeMap<ScoreSeq, u64>; 4],
    /// Empirical rates; a rate whose denominator is empty is NaN.
    pub report: FairnessReport<f64>,
}

impl SimReport {
    /// Empirical frequency of `seq` within `cohort`.
    pub fn frequency(&self, cohort: Cohort, seq: ScoreSeq) -> f64 {
        let m = self.counts[cohort.index()].students;
        let c = self.sequences[cohort.index()].get(&seq).copied().unwrap_or(0);
        c as f64 / m as f64
    }
}

struct Sampler {
    p: f64,
    alpha: f64,
    phi: f64,
    k: u32,
    /// Stop probability by type and history index.
    stop: [Vec<f64>; 2],
    accept: Vec<bool>,
}

#[derive(Clone)]
struct Tally {
    counts: [CohortCount; 4],
    sequences: [Vec<u64>; 4],
}

impl Tally {
    fn new(k: u32) -> Self {
        Self { counts: Default::default(), sequences: std::array::from_fn(|_| vec![0; seq_count(k)]) }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for c in 0..4 {
            self.counts[c].students += other.counts[c].students;
            self.counts[c].admitted += other.counts[c].admitted;
            for (a, b) in self.sequences[c].iter_mut().zip(&other.sequences[c]) {
                *a += b;
            }
        }
        self
    }
}

impl Sampler {
    fn new(params: &ModelParams, profile: &EquilibriumProfile) -> Result<Self> {
        let k = params.k();
        if profile.strategy.k() != k || profile.policy.k() != k {
            return Err(Error::Malformed(format!("profile does not match k = {k}")));
        }
        let n = seq_count(k);
        let mut stop = [vec![1.0; n], vec![1.0; n]];
        for t in Type::BOTH {
            for h in profile.strategy.histories() {
                let f = profile.strategy.get(t, h).ok_or(Error::MissingStrategyEntry { type_: t, history: h })?;
                stop[t.index()][h.index()] = to_f64(f);
            }
        }
        let accept = ScoreSeq::all(k).map(|s| profile.policy.accepts(s)).collect();
        Ok(Self {
            p: to_f64(params.p()),
            alpha: to_f64(params.alpha()),
            phi: to_f64(params.phi()),
            k,
            stop,
            accept,
        })
    }

    fn student(&self, rng: &mut ChaCha8Rng, tally: &mut Tally) {
        let category = if rng.gen_bool(self.phi) { Category::Cat1 } else { Category::Cat2 };
        let type_ = if rng.gen_bool(self.p) { Type::High } else { Type::Low };
        let p_a = match type_ {
            Type::High => self.alpha,
            Type::Low => 1.0 - self.alpha,
        };
        let draw = |rng: &mut ChaCha8Rng| if rng.gen_bool(p_a) { Score::A } else { Score::B };
        let mut seq = ScoreSeq::single(draw(rng));
        if category == Category::Cat2 {
            while seq.len() < self.k && !rng.gen_bool(self.stop[type_.index()][seq.index()]) {
                seq = seq.extend(draw(rng)).expect("len < k");
            }
        }
        let c = Cohort::new(category, type_).index();
        tally.counts[c].students += 1;
        tally.counts[c].admitted += self.accept[seq.index()] as u64;
        tally.sequences[c][seq.index()] += 1;
    }
}

/// Simulates `config.n` students and reports empirical counts and rates.
pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    if config.n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let sampler = Sampler::new(&config.params, &config.profile)?;
    let k = config.params.k();
    let tally = (0..config.n)
        .into_par_iter()
        .fold(
            || Tally::new(k),
            |mut tally, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(i);
                sampler.student(&mut rng, &mut tally);
                tally
            },
        )
        .reduce(|| Tally::new(k), Tally::merge);

    let sequences = std::array::from_fn(|c| {
        tally.sequences[c]
            .iter()
            .enumerate()
            .filter(|(_, n)| **n > 0)
            .map(|(i, n)| (ScoreSeq::from_index(i).expect("in range"), *n))
            .collect()
    });
    Ok(SimReport {
        n: config.n,
        seed: config.seed,
        report: empirical_report(config.n, &tally.counts),
        counts: tally.counts,
        sequences,
    })
}

fn empirical_report(n: u64, counts: &[CohortCount; 4]) -> FairnessReport<f64> {
    let ratio = |a: u64, b: u64| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
    let at = |c: Category, t: Type| counts[Cohort::new(c, t).index()];
    let fnr = [Category::Cat1, Category::Cat2].map(|c| {
        let h = at(c, Type::High);
        ratio(h.students - h.admitted, h.students)
    });
    let fpr = [Category::Cat1, Category::Cat2].map(|c| {
        let l = at(c, Type::Low);
        ratio(l.admitted, l.students)
    });
    let sum = |t: Type, f: fn(&CohortCount) -> u64| {
        [Category::Cat1, Category::Cat2].iter().map(|c| f(&at(*c, t))).sum::<u64>()
    };
    let admitted_h = sum(Type::High, |c| c.admitted);
    let admitted_l = sum(Type::Low, |c| c.admitted);
    let rejected_h = sum(Type::High, |c| c.students - c.admitted);
    let rejected_l = sum(Type::Low, |c| c.students - c.admitted);
    let defined = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    FairnessReport {
        fnr_gap: fnr[0] - fnr[1],
        fpr_gap: fpr[0] - fpr[1],
        fnr,
        fpr,
        ppv: defined(admitted_h, admitted_h + admitted_l),
        npv: defined(rejected_l, rejected_h + rejected_l),
        college_payoff: (admitted_h as f64 - admitted_l as f64) / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{construct_first_score_equilibrium, report_max_separating};

    fn config(n: u64, seed: u64, alpha: &str) -> SimConfig {
        let params = ModelParams::parse("0.3", alpha, "0.5", 2).unwrap();
        let profile = construct_first_score_equilibrium(&params).unwrap();
        SimConfig { n, seed, params, profile }
    }

    #[test]
    fn empty_population() {
        assert!(matches!(simulate(&config(0, 1, "0.8")), Err(Error::EmptyPopulation)));
    }

    #[test]
    fn deterministic_and_partition_free() {
        let c = config(20_000, 7, "0.8");
        let a = simulate(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate(&c).unwrap());
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert_eq!(a.counts.iter().map(|c| c.students).sum::<u64>(), 20_000);
    }

    #[test]
    fn noiseless_has_no_errors() {
        let r = simulate(&config(5_000, 3, "1")).unwrap();
        assert_eq!(r.report.fnr, [0.0, 0.0]);
        assert_eq!(r.report.fpr, [0.0, 0.0]);
    }

    #[test]
    fn separating_retakes() {
        let params = ModelParams::parse("0.3", "0.8", "0.5", 2).unwrap();
        let profile = report_max_separating(&params).unwrap();
        let r = simulate(&SimConfig { n: 50_000, seed: 11, params, profile }).unwrap();
        assert!((r.report.fnr[1] - 0.04).abs() < 0.01);
        assert!((r.report.fpr[1] - 0.36).abs() < 0.02);
    }
}
