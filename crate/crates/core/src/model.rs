//! Domain primitives: parameters, scores, cohorts, student strategies, and
//! the exact distribution over realized score sequences.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{self, bar, Q};

/// Upper bound on `k`. Score-sequence tables grow as `2^(k+1)`.
pub const MAX_TESTS: u32 = 20;

/// Primitives of the testing game.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModelParams {
    p: Q,
    alpha: Q,
    phi: Q,
    k: u32,
}

impl ModelParams {
    /// Validates `0 < p < 1`, `1/2 < alpha <= 1`, `0 <= phi <= 1` and
    /// `1 <= k <= MAX_TESTS`.
    pub fn new(p: Q, alpha: Q, phi: Q, k: u32) -> Result<Self> {
        if p <= Q::zero() || p >= Q::one() {
            return Err(invalid("p", format!("{p} is not in (0, 1)")));
        }
        if alpha <= num::half() || alpha > Q::one() {
            return Err(invalid("alpha", format!("{alpha} is not in (1/2, 1]")));
        }
        if !num::is_unit_interval(&phi) {
            return Err(invalid("phi", format!("{phi} is not in [0, 1]")));
        }
        if k == 0 || k > MAX_TESTS {
            return Err(invalid("k", format!("{k} is not in 1..={MAX_TESTS}")));
        }
        Ok(Self { p, alpha, phi, k })
    }

    /// Builds parameters from floats, reading each value as the shortest
    /// decimal that round-trips it (`0.8` becomes exactly `4/5`).
    pub fn from_f64(p: f64, alpha: f64, phi: f64, k: u32) -> Result<Self> {
        let conv = |name: &'static str, x: f64| {
            num::from_f64_decimal(x).ok_or_else(|| invalid(name, format!("{x} is not finite")))
        };
        Self::new(conv("p", p)?, conv("alpha", alpha)?, conv("phi", phi)?, k)
    }

    /// Parses decimal or fractional literals.
    pub fn parse(p: &str, alpha: &str, phi: &str, k: u32) -> Result<Self> {
        let conv = |name: &'static str, s: &str| {
            num::parse_decimal(s).ok_or_else(|| invalid(name, format!("`{s}` is not a number")))
        };
        Self::new(conv("p", p)?, conv("alpha", alpha)?, conv("phi", phi)?, k)
    }

    pub fn with_p(&self, p: Q) -> Result<Self> {
        Self::new(p, self.alpha.clone(), self.phi.clone(), self.k)
    }

    pub fn with_k(&self, k: u32) -> Result<Self> {
        Self::new(self.p.clone(), self.alpha.clone(), self.phi.clone(), k)
    }

    pub fn p(&self) -> &Q {
        &self.p
    }

    pub fn alpha(&self) -> &Q {
        &self.alpha
    }

    pub fn phi(&self) -> &Q {
        &self.phi
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn p_bar(&self) -> Q {
        bar(&self.p)
    }

    pub fn alpha_bar(&self) -> Q {
        bar(&self.alpha)
    }

    pub fn phi_bar(&self) -> Q {
        bar(&self.phi)
    }

    /// Probability that a student of `type_` scores `score` on one test.
    pub fn emission(&self, type_: Type, score: Score) -> Q {
        match (type_, score) {
            (Type::High, Score::A) | (Type::Low, Score::B) => self.alpha.clone(),
            _ => self.alpha_bar(),
        }
    }

    /// Population share of `type_`.
    pub fn type_mass(&self, type_: Type) -> Q {
        match type_ {
            Type::High => self.p.clone(),
            Type::Low => self.p_bar(),
        }
    }

    pub fn category_mass(&self, category: Category) -> Q {
        match category {
            Category::Cat1 => self.phi.clone(),
            Category::Cat2 => self.phi_bar(),
        }
    }

    pub fn cohort_mass(&self, cohort: Cohort) -> Q {
        self.category_mass(cohort.category) * self.type_mass(cohort.type_)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alpha={} p={} phi={} k={}",
            num::to_f64(&self.alpha),
            num::to_f64(&self.p),
            num::to_f64(&self.phi),
            self.k
        )
    }
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidParams { name, reason }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Score {
    A,
    B,
}

impl Score {
    pub const BOTH: [Score; 2] = [Score::A, Score::B];
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Score::A => "A",
            Score::B => "B",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    High,
    Low,
}

impl Type {
    pub const BOTH: [Type; 2] = [Type::High, Type::Low];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::High => "High",
            Type::Low => "Low",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    /// Takes the test exactly once.
    Cat1,
    /// May retake adaptively, up to `k` tests.
    Cat2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cohort {
    pub category: Category,
    pub type_: Type,
}

impl Cohort {
    /// Canonical order: (1,H), (1,L), (2,H), (2,L).
    pub const ALL: [Cohort; 4] = [
        Cohort::new(Category::Cat1, Type::High),
        Cohort::new(Category::Cat1, Type::Low),
        Cohort::new(Category::Cat2, Type::High),
        Cohort::new(Category::Cat2, Type::Low),
    ];

    pub const fn new(category: Category, type_: Type) -> Self {
        Self { category, type_ }
    }

    pub fn index(self) -> usize {
        (self.category as usize) * 2 + self.type_ as usize
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.category {
            Category::Cat1 => 1,
            Category::Cat2 => 2,
        };
        let t = match self.type_ {
            Type::High => 'H',
            Type::Low => 'L',
        };
        write!(f, "({c},{t})")
    }
}

/// How many score sequences of length `1..=max_len` exist.
pub fn seq_count(max_len: u32) -> usize {
    (1usize << (max_len + 1)) - 2
}

/// A nonempty sequence of scores in test-taking order.
///
/// Stored as a bit pattern with the first score in the most significant
/// position (`B` = 1), so the derived order is by length, then
/// lexicographic with `A < B`. That order matches [`ScoreSeq::index`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScoreSeq {
    len: u8,
    code: u32,
}

impl ScoreSeq {
    pub fn new(scores: &[Score]) -> Option<Self> {
        if scores.is_empty() || scores.len() > MAX_TESTS as usize {
            return None;
        }
        let code = scores.iter().fold(0u32, |acc, s| (acc << 1) | (*s == Score::B) as u32);
        Some(Self { len: scores.len() as u8, code })
    }

    pub fn single(score: Score) -> Self {
        Self { len: 1, code: (score == Score::B) as u32 }
    }

    /// `s` repeated `n` times.
    pub fn repeat(score: Score, n: u32) -> Option<Self> {
        Self::new(&vec![score; n as usize])
    }

    pub fn len(&self) -> u32 {
        self.len as u32
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: u32) -> Option<Score> {
        (i < self.len()).then(|| {
            if (self.code >> (self.len() - 1 - i)) & 1 == 1 {
                Score::B
            } else {
                Score::A
            }
        })
    }

    pub fn first(&self) -> Score {
        self.get(0).expect("nonempty")
    }

    pub fn last(&self) -> Score {
        if self.code & 1 == 1 {
            Score::B
        } else {
            Score::A
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Score> + '_ {
        (0..self.len()).map(|i| self.get(i).expect("in range"))
    }

    pub fn extend(&self, score: Score) -> Option<Self> {
        (self.len() < MAX_TESTS).then(|| Self {
            len: self.len + 1,
            code: (self.code << 1) | (score == Score::B) as u32,
        })
    }

    /// The sequence without its last score.
    pub fn parent(&self) -> Option<Self> {
        (self.len > 1).then(|| Self { len: self.len - 1, code: self.code >> 1 })
    }

    pub fn prefix(&self, len: u32) -> Option<Self> {
        (len >= 1 && len <= self.len()).then(|| Self {
            len: len as u8,
            code: self.code >> (self.len() - len),
        })
    }

    pub fn starts_with(&self, prefix: &ScoreSeq) -> bool {
        self.prefix(prefix.len()) == Some(*prefix)
    }

    pub fn count(&self, score: Score) -> u32 {
        let bs = self.code.count_ones();
        match score {
            Score::B => bs,
            Score::A => self.len() - bs,
        }
    }

    /// Best score in the sequence (`A` if any test scored `A`).
    pub fn best(&self) -> Score {
        if self.count(Score::A) > 0 {
            Score::A
        } else {
            Score::B
        }
    }

    /// Position in the canonical enumeration of all sequences.
    pub fn index(&self) -> usize {
        (1usize << self.len) - 2 + self.code as usize
    }

    /// Position among the sequences sharing this one's first score, in the
    /// order of [`ScoreSeq::extensions`].
    pub fn subtree_index(&self) -> usize {
        let tail = self.len() - 1;
        (1usize << tail) - 1 + (self.code as usize & ((1usize << tail) - 1))
    }

    pub fn from_index(index: usize) -> Option<Self> {
        let mut len = 1u32;
        while len <= MAX_TESTS {
            let start = (1usize << len) - 2;
            let end = (1usize << (len + 1)) - 2;
            if index < end {
                return Some(Self { len: len as u8, code: (index - start) as u32 });
            }
            len += 1;
        }
        None
    }

    /// All sequences of length `1..=max_len`, in index order.
    pub fn all(max_len: u32) -> impl Iterator<Item = ScoreSeq> {
        (0..seq_count(max_len)).map(|i| ScoreSeq::from_index(i).expect("in range"))
    }

    /// All sequences of length `1..=max_len` starting with `prefix`
    /// (including `prefix` itself), in index order.
    pub fn extensions(prefix: ScoreSeq, max_len: u32) -> impl Iterator<Item = ScoreSeq> {
        (prefix.len()..=max_len).flat_map(move |len| {
            let extra = len - prefix.len();
            (0..(1u32 << extra)).map(move |tail| ScoreSeq {
                len: len as u8,
                code: (prefix.code << extra) | tail,
            })
        })
    }
}

impl fmt::Display for ScoreSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.iter() {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ScoreSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScoreSeq({self})")
    }
}

impl FromStr for ScoreSeq {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let scores = s
            .chars()
            .map(|c| match c {
                'A' | 'a' => Ok(Score::A),
                'B' | 'b' => Ok(Score::B),
                other => Err(format!("unexpected score `{other}` in `{s}`")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        ScoreSeq::new(&scores).ok_or_else(|| format!("`{s}` is not a valid score sequence"))
    }
}

impl Serialize for ScoreSeq {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScoreSeq {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// History-dependent stop probabilities for Category 2 students.
///
/// Only histories shorter than `k` carry an entry; a student holding `k`
/// scores always stops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StudentStrategy {
    k: u32,
    stop: [Vec<Option<Q>>; 2],
}

impl StudentStrategy {
    /// A strategy with no entries.
    pub fn empty(k: u32) -> Self {
        let n = if k > 1 { seq_count(k - 1) } else { 0 };
        Self { k, stop: [vec![None; n], vec![None; n]] }
    }

    pub fn constant(k: u32, stop: Q) -> Result<Self> {
        Self::from_fn(k, |_, _| stop.clone())
    }

    /// Everyone takes exactly one test.
    pub fn test_once(k: u32) -> Self {
        Self::constant(k, Q::one()).expect("1 is a probability")
    }

    pub fn from_fn(k: u32, mut f: impl FnMut(Type, ScoreSeq) -> Q) -> Result<Self> {
        let mut strategy = Self::empty(k);
        for h in strategy.histories().collect::<Vec<_>>() {
            for t in Type::BOTH {
                strategy.set(t, h, f(t, h))?;
            }
        }
        Ok(strategy)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Histories at which a stop decision is made.
    pub fn histories(&self) -> impl Iterator<Item = ScoreSeq> {
        ScoreSeq::all(self.k.saturating_sub(1))
    }

    pub fn set(&mut self, type_: Type, history: ScoreSeq, stop: Q) -> Result<()> {
        if history.len() >= self.k {
            return Err(Error::Malformed(format!(
                "history {history} has length >= k = {}",
                self.k
            )));
        }
        if !num::is_unit_interval(&stop) {
            return Err(Error::InvalidProbability { type_, history });
        }
        self.stop[type_.index()][history.index()] = Some(stop);
        Ok(())
    }

    /// Stop probability after `history`; `Some(1)` for complete histories.
    pub fn stop_prob(&self, type_: Type, history: ScoreSeq) -> Option<Q> {
        if history.len() >= self.k {
            return Some(Q::one());
        }
        self.stop[type_.index()][history.index()].clone()
    }

    pub fn get(&self, type_: Type, history: ScoreSeq) -> Option<&Q> {
        self.stop[type_.index()].get(history.index()).and_then(Option::as_ref)
    }
}

/// Per-cohort probabilities of every realized score sequence.
///
/// `within[c][i]` is the probability that a student of cohort `c` ends with
/// the sequence of index `i`; the unconditional view multiplies by the
/// cohort's population share.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeDistribution {
    params: ModelParams,
    within: [Vec<Q>; 4],
}

impl OutcomeDistribution {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn conditional(&self, cohort: Cohort, seq: ScoreSeq) -> Q {
        self.within[cohort.index()].get(seq.index()).cloned().unwrap_or_else(Q::zero)
    }

    pub fn unconditional(&self, cohort: Cohort, seq: ScoreSeq) -> Q {
        self.params.cohort_mass(cohort) * self.conditional(cohort, seq)
    }

    /// Unconditional mass of `seq` summed over cohorts of `type_`.
    pub fn type_mass(&self, type_: Type, seq: ScoreSeq) -> Q {
        [Category::Cat1, Category::Cat2]
            .into_iter()
            .map(|c| self.unconditional(Cohort::new(c, type_), seq))
            .sum()
    }

    pub fn cohort_total(&self, cohort: Cohort) -> Q {
        self.within[cohort.index()].iter().sum()
    }

    /// Sequences with positive conditional mass for `cohort`.
    pub fn support(&self, cohort: Cohort) -> impl Iterator<Item = (ScoreSeq, &Q)> + '_ {
        self.within[cohort.index()]
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(i, m)| (ScoreSeq::from_index(i).expect("in range"), m))
    }

    /// Sequences any cohort can produce (length `1..=k`).
    pub fn sequences(&self) -> impl Iterator<Item = ScoreSeq> {
        ScoreSeq::all(self.params.k())
    }
}

/// Distribution of realized score sequences when Category 2 students follow
/// `strategy`. Category 1 students contribute only single scores.
pub fn outcome_distribution(params: &ModelParams, strategy: &StudentStrategy) -> Result<OutcomeDistribution> {
    let k = params.k();
    if strategy.k() != k {
        return Err(Error::Malformed(format!(
            "strategy is for k = {}, parameters have k = {k}",
            strategy.k()
        )));
    }
    let n = seq_count(k);
    let mut within: [Vec<Q>; 4] = std::array::from_fn(|_| vec![Q::zero(); n]);
    for type_ in Type::BOTH {
        let cat1 = Cohort::new(Category::Cat1, type_).index();
        for s in Score::BOTH {
            within[cat1][ScoreSeq::single(s).index()] = params.emission(type_, s);
        }

        let cat2 = Cohort::new(Category::Cat2, type_).index();
        // reach[i]: probability of holding sequence i at some point.
        let mut reach = vec![Q::zero(); n];
        for s in Score::BOTH {
            reach[ScoreSeq::single(s).index()] = params.emission(type_, s);
        }
        for h in ScoreSeq::all(k) {
            let r = std::mem::take(&mut reach[h.index()]);
            if r.is_zero() {
                continue;
            }
            let stop = strategy
                .stop_prob(type_, h)
                .ok_or(Error::MissingStrategyEntry { type_, history: h })?;
            let cont = &r * bar(&stop);
            within[cat2][h.index()] = &r * &stop;
            if !cont.is_zero() {
                for s in Score::BOTH {
                    let child = h.extend(s).expect("len < k");
                    reach[child.index()] = &cont * params.emission(type_, s);
                }
            }
        }
    }
    Ok(OutcomeDistribution { params: params.clone(), within })
}

/// Best-score distribution when Category 2 students retake until they
/// score `A` or run out of tests. Mass sits on the single-score sequences
/// `A` and `B`, standing for the best reported score.
pub fn max_score_distribution(params: &ModelParams) -> OutcomeDistribution {
    let n = seq_count(params.k());
    let a = ScoreSeq::single(Score::A).index();
    let b = ScoreSeq::single(Score::B).index();
    let mut within: [Vec<Q>; 4] = std::array::from_fn(|_| vec![Q::zero(); n]);
    for cohort in Cohort::ALL {
        let tests = match cohort.category {
            Category::Cat1 => 1,
            Category::Cat2 => params.k(),
        };
        let all_b = num::pow(&params.emission(cohort.type_, Score::B), tests);
        within[cohort.index()][a] = bar(&all_b);
        within[cohort.index()][b] = all_b;
    }
    OutcomeDistribution { params: params.clone(), within }
}

/// Strategy that retakes after every all-`B` history and stops as soon as
/// an `A` appears.
pub fn retake_until_a(k: u32) -> StudentStrategy {
    StudentStrategy::from_fn(k, |_, h| if h.best() == Score::A { Q::one() } else { Q::zero() })
        .expect("0 and 1 are probabilities")
}
