//! Generalized mutual exclusion constraints `Σ q_i m_i ≤ k`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{weighted_sum, Marking};
use crate::placeset::PlaceSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    weights: Vec<u32>,
    bound: u32,
}

impl Constraint {
    pub fn new(weights: Vec<u32>, bound: u32) -> Result<Self> {
        if weights.iter().all(|&w| w == 0) {
            return Err(Error::Precondition(
                "a constraint needs at least one nonzero weight".into(),
            ));
        }
        Ok(Constraint { weights, bound })
    }

    /// Unit weights on `places` over a net of `n` places.
    pub fn unit(n: usize, places: &PlaceSet, bound: u32) -> Self {
        let mut weights = vec![0; n];
        for p in places.iter() {
            weights[p] = 1;
        }
        Constraint { weights, bound }
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn place_count(&self) -> usize {
        self.weights.len()
    }

    pub fn support(&self) -> PlaceSet {
        self.weights
            .iter()
            .enumerate()
            .filter_map(|(i, &w)| (w > 0).then_some(i))
            .collect()
    }

    pub fn is_unit(&self) -> bool {
        self.weights.iter().all(|&w| w <= 1)
    }

    pub fn satisfied_by(&self, m: &Marking) -> bool {
        weighted_sum(&self.weights, m) <= u64::from(self.bound)
    }

    pub fn satisfied_by_support(&self, support: &PlaceSet) -> bool {
        let sum: u64 = support
            .iter()
            .map(|p| u64::from(self.weights.get(p).copied().unwrap_or(0)))
            .sum();
        sum <= u64::from(self.bound)
    }

    /// `(P2 P4 P6, 2)`; non-unit weights are written as `3*P2`.
    pub fn compact(&self, names: &[String]) -> String {
        let terms: Vec<String> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(i, &w)| {
                if w == 1 {
                    names[i].clone()
                } else {
                    format!("{w}*{}", names[i])
                }
            })
            .collect();
        format!("({}, {})", terms.join(" "), self.bound)
    }

    /// `m2+m4+m6 <= 2`.
    pub fn inequality(&self, names: &[String]) -> String {
        let terms: Vec<String> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(i, &w)| {
                let var = marking_var(&names[i]);
                if w == 1 {
                    var
                } else {
                    format!("{w}*{var}")
                }
            })
            .collect();
        format!("{} <= {}", terms.join("+"), self.bound)
    }
}

/// `P7` becomes `m7`; any other id `x` becomes `m_x`.
fn marking_var(id: &str) -> String {
    match id.strip_prefix('P') {
        Some(rest) if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) => {
            format!("m{rest}")
        }
        _ => format!("m_{id}"),
    }
}

impl Ord for Constraint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.support()
            .cmp(&other.support())
            .then_with(|| self.bound.cmp(&other.bound))
            .then_with(|| self.weights.cmp(&other.weights))
    }
}

impl PartialOrd for Constraint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The constraint attached to an over-state: unit weights on its places,
/// bound one less than its size.
pub fn constraint_from_overstate(n: usize, overstate: &PlaceSet) -> Constraint {
    debug_assert!(!overstate.is_empty());
    Constraint::unit(n, overstate, overstate.len().saturating_sub(1) as u32)
}

/// The constraint forbidding exactly the markings that contain `m`'s support.
pub fn constraint_from_state(m: &Marking) -> Result<Constraint> {
    Ok(constraint_from_overstate(m.len(), &m.support()?))
}

/// True iff `m` satisfies every constraint in `set`.
pub fn admits(set: &[Constraint], m: &Marking) -> bool {
    set.iter().all(|c| c.satisfied_by(m))
}

pub fn admits_support(set: &[Constraint], support: &PlaceSet) -> bool {
    set.iter().all(|c| c.satisfied_by_support(support))
}
