//! Score-reporting rules and the College's deterministic admission policies.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{seq_count, Score, ScoreSeq};

/// What the College observes from a student's test history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reporting {
    /// Only the best score is reported (super-scoring).
    Max,
    /// Every score is reported in order.
    All,
}

impl Reporting {
    /// The signal the College sees when a student stops holding `seq`.
    pub fn signal(self, seq: ScoreSeq) -> ScoreSeq {
        match self {
            Reporting::All => seq,
            Reporting::Max => ScoreSeq::single(seq.best()),
        }
    }

    /// Every signal that can be observed with at most `k` tests.
    pub fn signals(self, k: u32) -> Vec<ScoreSeq> {
        match self {
            Reporting::All => ScoreSeq::all(k).collect(),
            Reporting::Max => vec![ScoreSeq::single(Score::A), ScoreSeq::single(Score::B)],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Reporting::Max => "max",
            Reporting::All => "all",
        }
    }
}

impl fmt::Display for Reporting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accept/reject decision for every observable signal.
///
/// Under [`Reporting::All`] the map is over all `2^(k+1) - 2` sequences;
/// under [`Reporting::Max`] over the two best scores, and
/// [`AdmissionPolicy::accepts`] extends it to every sequence through the
/// best score.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AdmissionPolicy {
    reporting: Reporting,
    k: u32,
    accept: Vec<bool>,
}

impl AdmissionPolicy {
    pub fn report_all(k: u32, mut accept: impl FnMut(ScoreSeq) -> bool) -> Self {
        Self {
            reporting: Reporting::All,
            k,
            accept: ScoreSeq::all(k).map(&mut accept).collect(),
        }
    }

    pub fn report_max(k: u32, accept_a: bool, accept_b: bool) -> Self {
        Self { reporting: Reporting::Max, k, accept: vec![accept_a, accept_b] }
    }

    pub fn from_fn(reporting: Reporting, k: u32, accept: impl FnMut(ScoreSeq) -> bool) -> Self {
        match reporting {
            Reporting::All => Self::report_all(k, accept),
            Reporting::Max => {
                let mut accept = accept;
                let a = accept(ScoreSeq::single(Score::A));
                let b = accept(ScoreSeq::single(Score::B));
                Self::report_max(k, a, b)
            }
        }
    }

    /// Builds a policy from explicit decisions in signal order.
    pub fn from_decisions(reporting: Reporting, k: u32, accept: Vec<bool>) -> Result<Self> {
        let expected = match reporting {
            Reporting::All => seq_count(k),
            Reporting::Max => 2,
        };
        if accept.len() != expected {
            return Err(Error::Malformed(format!(
                "policy has {} decisions, expected {expected}",
                accept.len()
            )));
        }
        Ok(Self { reporting, k, accept })
    }

    pub fn reject_all(reporting: Reporting, k: u32) -> Self {
        Self::from_fn(reporting, k, |_| false)
    }

    pub fn accept_all(reporting: Reporting, k: u32) -> Self {
        Self::from_fn(reporting, k, |_| true)
    }

    /// Admit exactly the histories whose first score is `A`.
    pub fn first_score(k: u32) -> Self {
        Self::report_all(k, |s| s.first() == Score::A)
    }

    /// Admit iff the best score is `A`.
    pub fn separating(k: u32) -> Self {
        Self::report_max(k, true, false)
    }

    pub fn reporting(&self) -> Reporting {
        self.reporting
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn signals(&self) -> Vec<ScoreSeq> {
        self.reporting.signals(self.k)
    }

    /// Decision for the signal induced by `seq`.
    pub fn accepts(&self, seq: ScoreSeq) -> bool {
        let signal = self.reporting.signal(seq);
        match self.reporting {
            Reporting::All => self.accept[signal.index()],
            Reporting::Max => self.accept[(signal.first() == Score::B) as usize],
        }
    }

    pub fn decisions(&self) -> &[bool] {
        &self.accept
    }

    /// Accepted signals, in signal order.
    pub fn accepted(&self) -> Vec<ScoreSeq> {
        self.signals().into_iter().filter(|s| self.accepts(*s)).collect()
    }
}

impl fmt::Display for AdmissionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let accepted = self.accepted();
        write!(f, "report-{} accept {{", self.reporting)?;
        for (i, s) in accepted.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_policy_is_total_over_sequences() {
        let policy = AdmissionPolicy::separating(3);
        assert!(policy.accepts("BBA".parse().unwrap()));
        assert!(!policy.accepts("BBB".parse().unwrap()));
        assert_eq!(policy.signals().len(), 2);
    }

    #[test]
    fn first_score_policy() {
        let policy = AdmissionPolicy::first_score(2);
        let accepted: Vec<_> = policy.accepted().iter().map(|s| s.to_string()).collect();
        assert_eq!(accepted, ["A", "AA", "AB"]);
        assert_eq!(policy.to_string(), "report-all accept {A, AA, AB}");
    }

    #[test]
    fn decision_count_is_checked() {
        assert!(AdmissionPolicy::from_decisions(Reporting::All, 2, vec![true; 6]).is_ok());
        assert!(AdmissionPolicy::from_decisions(Reporting::All, 2, vec![true; 5]).is_err());
        assert!(AdmissionPolicy::from_decisions(Reporting::Max, 2, vec![true; 2]).is_ok());
    }
}
