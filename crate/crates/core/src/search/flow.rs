//! Equilibrium feasibility of a fixed policy as a linear program.
//!
//! Unknowns are the Category 2 continuation flows `c_t(h)`: the
//! within-cohort probability that a type-`t` student holds `h` and tests
//! again. Stop probabilities follow as `f = 1 - c / r`, where `r` is the
//! probability of reaching `h`. Best-response sets fix `c = 0` or `c = r`
//! except at indifferent histories, and every on-path decision becomes a
//! linear sign condition on the High-minus-Low mass of its signal.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::lp::{self, Constraint, Relation};
use super::{Admissible, BestResponseSet};
use crate::model::{ModelParams, Score, ScoreSeq, Type};
use crate::num::Q;
use crate::policy::AdmissionPolicy;

/// `constant + Σ terms[i] · y_i`.
#[derive(Clone, Debug, Default)]
struct Affine {
    constant: Q,
    terms: Vec<Q>,
}

impl Affine {
    fn constant(c: Q) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    fn var(i: usize) -> Self {
        let mut terms = vec![Q::zero(); i + 1];
        terms[i] = Q::from_integer(1.into());
        Self { constant: Q::zero(), terms }
    }

    fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.iter().all(Zero::is_zero)
    }

    fn is_constant(&self) -> bool {
        self.terms.iter().all(Zero::is_zero)
    }

    fn scale(&self, s: &Q) -> Self {
        Self { constant: &self.constant * s, terms: self.terms.iter().map(|t| t * s).collect() }
    }

    fn add_scaled(&mut self, other: &Affine, s: &Q) {
        if self.terms.len() < other.terms.len() {
            self.terms.resize(other.terms.len(), Q::zero());
        }
        self.constant += &other.constant * s;
        for (a, b) in self.terms.iter_mut().zip(&other.terms) {
            if !b.is_zero() {
                *a += b * s;
            }
        }
    }

    fn eval(&self, y: &[Q]) -> Q {
        let mut v = self.constant.clone();
        for (a, b) in self.terms.iter().zip(y) {
            if !a.is_zero() {
                v += a * b;
            }
        }
        v
    }

    fn coeffs(&self, n: usize) -> Vec<Q> {
        let mut c = self.terms.clone();
        c.resize(n, Q::zero());
        c
    }
}

/// Stop probabilities, by type and history, for the histories under
/// `roots`.
pub(crate) type Entries = Vec<(Type, ScoreSeq, Q)>;

/// Finds Category 2 stop probabilities on the histories starting with one
/// of `roots` such that the best-response sets are respected and every
/// on-path signal produced there is decided as `policy` says. Returns
/// `None` if no such strategy exists.
///
/// Signals must not mix histories under `roots` with histories outside it.
pub(crate) fn solve(
    params: &ModelParams,
    policy: &AdmissionPolicy,
    br: &BestResponseSet,
    roots: &[Score],
) -> Option<Entries> {
    let k = params.k();
    let (p, pb) = (params.p().clone(), params.p_bar());
    let phi = params.phi();
    let phib = params.phi_bar();
    let one = Q::from_integer(1.into());

    struct Node {
        type_: Type,
        history: ScoreSeq,
        reach: Affine,
        cont: Affine,
        admissible: Admissible,
    }

    let mut nvars = 0usize;
    let mut caps: Vec<(usize, Affine)> = Vec::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut cont_of: BTreeMap<(Type, ScoreSeq), Affine> = BTreeMap::new();
    let mut margin: BTreeMap<ScoreSeq, Affine> = BTreeMap::new();

    for &root in roots {
        for h in ScoreSeq::extensions(ScoreSeq::single(root), k) {
            let signal = policy.reporting().signal(h);
            for t in Type::BOTH {
                let e = params.emission(t, h.last());
                let reach = match h.parent() {
                    None => Affine::constant(e),
                    Some(parent) => cont_of[&(t, parent)].scale(&e),
                };
                let stopped = if h.len() < k {
                    let admissible = br.get(t, h).expect("len < k");
                    let cont = match admissible {
                        Admissible::Stop => Affine::default(),
                        Admissible::Continue => reach.clone(),
                        Admissible::Either if reach.is_zero() => Affine::default(),
                        Admissible::Either => {
                            let v = Affine::var(nvars);
                            caps.push((nvars, reach.clone()));
                            nvars += 1;
                            v
                        }
                    };
                    let mut stopped = reach.clone();
                    stopped.add_scaled(&cont, &-one.clone());
                    cont_of.insert((t, h), cont.clone());
                    nodes.push(Node { type_: t, history: h, reach: reach.clone(), cont, admissible });
                    stopped
                } else {
                    reach
                };
                let weight = match t {
                    Type::High => &phib * &p,
                    Type::Low => -(&phib * &pb),
                };
                margin.entry(signal).or_default().add_scaled(&stopped, &weight);
            }
        }
        let single = ScoreSeq::single(root);
        let cat1 = phi * (&p * params.emission(Type::High, root) - &pb * params.emission(Type::Low, root));
        margin.entry(policy.reporting().signal(single)).or_default().constant += cat1;
    }

    let mut constraints: Vec<Constraint> = Vec::new();
    for (i, reach) in &caps {
        let mut coeffs: Vec<Q> = reach.coeffs(nvars).into_iter().map(|c| -c).collect();
        coeffs[*i] += &one;
        constraints.push(Constraint { coeffs, rel: Relation::Le, rhs: reach.constant.clone() });
    }
    for (signal, d) in &margin {
        let accepted = policy.accepts(*signal);
        if d.is_constant() {
            let ok = if accepted { !d.constant.is_negative() } else { !d.constant.is_positive() };
            if !ok {
                return None;
            }
            continue;
        }
        constraints.push(Constraint {
            coeffs: d.coeffs(nvars),
            rel: if accepted { Relation::Ge } else { Relation::Le },
            rhs: -d.constant.clone(),
        });
    }

    let zero = vec![Q::zero(); nvars];
    let y = if constraints.iter().all(|c| c.holds(&zero)) {
        zero
    } else {
        lp::find_feasible(nvars, &constraints)?
    };

    Some(
        nodes
            .into_iter()
            .map(|node| {
                let r = node.reach.eval(&y);
                let stop = if r.is_positive() {
                    &one - node.cont.eval(&y) / r
                } else {
                    node.admissible.canonical()
                };
                (node.type_, node.history, stop)
            })
            .collect(),
    )
}
