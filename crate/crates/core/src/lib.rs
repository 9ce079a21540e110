//! Exact engine for a signaling model of standardized-test retaking.
//!
//! Students of type High or Low take a noisy test; Category 2 students may
//! retake adaptively. A College reads either every score or only the best
//! one, forms Bayesian beliefs and admits when the posterior of High
//! exceeds one half. The crate computes outcome distributions, posteriors,
//! closed-form equilibrium regions, exhaustive equilibrium search,
//! fairness metrics and Monte-Carlo simulation.

pub mod analytic;
pub mod error;
pub mod metrics;
pub mod model;
pub mod num;
pub mod policy;
pub mod posterior;
pub mod search;
pub mod simulator;

pub use analytic::{EquilibriumProfile, Interval, Label, Region};
pub use error::{Error, Result};
pub use model::{
    outcome_distribution, Category, Cohort, ModelParams, OutcomeDistribution, Score, ScoreSeq,
    StudentStrategy, Type,
};
pub use num::Q;
pub use policy::{AdmissionPolicy, Reporting};
pub use posterior::{Belief, Beliefs, PrefixBelief, SignalMasses};
pub use metrics::FairnessReport;
pub use search::{enumerate_outcomes, verify_equilibrium, Enumeration, Mode, OutcomeClass, PolicyScope};
pub use simulator::{simulate, SimConfig, SimReport};
