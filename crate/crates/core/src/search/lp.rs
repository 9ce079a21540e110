//! Exact phase-one simplex over rationals.
//!
//! Small dense tableaux only; Bland's rule guarantees termination.

use num_traits::{Signed, Zero};

use crate::num::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `coeffs · y  rel  rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub rel: Relation,
    pub rhs: Q,
}

impl Constraint {
    pub fn holds(&self, y: &[Q]) -> bool {
        let lhs: Q = self.coeffs.iter().zip(y).map(|(a, v)| a * v).sum();
        match self.rel {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

/// A point `y >= 0` satisfying every constraint, or `None` if none exists.
pub fn find_feasible(nvars: usize, constraints: &[Constraint]) -> Option<Vec<Q>> {
    let m = constraints.len();
    if m == 0 {
        return Some(vec![Q::zero(); nvars]);
    }
    // Columns: structural, then one slack/surplus per inequality, then one
    // artificial per row that needs it.
    let mut rows: Vec<(Vec<Q>, Relation, Q)> = constraints
        .iter()
        .map(|c| {
            let mut coeffs = c.coeffs.clone();
            coeffs.resize(nvars, Q::zero());
            if c.rhs.is_negative() {
                let flipped = match c.rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (coeffs.into_iter().map(|a| -a).collect(), flipped, -c.rhs.clone())
            } else {
                (coeffs, c.rel, c.rhs.clone())
            }
        })
        .collect();

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = nvars + n_slack + n_art;
    let mut tab: Vec<Vec<Q>> = Vec::with_capacity(m);
    let mut rhs: Vec<Q> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let (mut slack, mut art) = (nvars, nvars + n_slack);
    for (coeffs, rel, b) in rows.drain(..) {
        let mut row = coeffs;
        row.resize(width, Q::zero());
        match rel {
            Relation::Le => {
                row[slack] = Q::from_integer(1.into());
                basis.push(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = Q::from_integer((-1).into());
                slack += 1;
                row[art] = Q::from_integer(1.into());
                basis.push(art);
                art += 1;
            }
            Relation::Eq => {
                row[art] = Q::from_integer(1.into());
                basis.push(art);
                art += 1;
            }
        }
        tab.push(row);
        rhs.push(b);
    }

    let first_art = nvars + n_slack;
    // Reduced costs of the phase-one objective (sum of artificials).
    let mut cost = vec![Q::zero(); width];
    let mut value = Q::zero();
    for i in 0..m {
        if basis[i] >= first_art {
            for j in 0..width {
                if j < first_art {
                    cost[j] -= &tab[i][j];
                }
            }
            value += &rhs[i];
        }
    }

    while let Some(enter) = (0..width).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, Q)> = None;
        for i in 0..m {
            if tab[i][enter].is_positive() {
                let ratio = &rhs[i] / &tab[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            // Unbounded direction cannot occur: the objective is bounded below by 0.
            break;
        };
        let pivot = tab[r][enter].clone();
        for v in tab[r].iter_mut() {
            *v /= &pivot;
        }
        rhs[r] /= &pivot;
        let prow = tab[r].clone();
        let prhs = rhs[r].clone();
        for i in 0..m {
            if i != r && !tab[i][enter].is_zero() {
                let factor = tab[i][enter].clone();
                for (v, p) in tab[i].iter_mut().zip(&prow) {
                    if !p.is_zero() {
                        *v -= &factor * p;
                    }
                }
                rhs[i] -= &factor * &prhs;
            }
        }
        let factor = cost[enter].clone();
        for (v, p) in cost.iter_mut().zip(&prow) {
            if !p.is_zero() {
                *v -= &factor * p;
            }
        }
        value += &factor * &prhs;
        basis[r] = enter;
    }

    if value.is_positive() {
        return None;
    }
    let mut y = vec![Q::zero(); nvars];
    for (i, &b) in basis.iter().enumerate() {
        if b < nvars {
            y[b] = rhs[i].clone();
        }
    }
    debug_assert!(constraints.iter().all(|c| c.holds(&y)));
    Some(y)
}
