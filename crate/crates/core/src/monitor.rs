//! Monitor places enforcing `L·m ≤ b` through place invariants.
//!
//! Each constraint row gets one control place with incidence row
//! `W_c = -L·W_p` and initial marking `b - L·m_p0`, so that
//! `L·m_p + m_c = b` holds in every reachable marking of the controlled net.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::net::{Marking, PetriNet};
use crate::placeset::PlaceSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintMatrix {
    /// One row per constraint, one column per place.
    pub l: Vec<Vec<u32>>,
    pub b: Vec<u32>,
}

impl ConstraintMatrix {
    pub fn rows(&self) -> usize {
        self.b.len()
    }
}

pub fn to_matrix(constraints: &[Constraint], net: &PetriNet) -> Result<ConstraintMatrix> {
    let n = net.place_count();
    let mut l = Vec::with_capacity(constraints.len());
    let mut b = Vec::with_capacity(constraints.len());
    for c in constraints {
        if c.place_count() != n {
            return Err(Error::UnknownPlace(format!(
                "constraint over {} places on a net of {n}",
                c.place_count()
            )));
        }
        l.push(c.weights().to_vec());
        b.push(c.bound());
    }
    Ok(ConstraintMatrix { l, b })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlPlace {
    pub id: String,
    /// Incidence row over the base transitions.
    pub wc_row: Vec<i64>,
    pub initial_tokens: u64,
    /// The `L` row and `b` entry this place enforces, when known.
    pub row: Option<ConstraintRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub weights: Vec<u32>,
    pub bound: u32,
}

impl ControlPlace {
    /// Tokens consumed from the monitor by `t`.
    pub fn pre(&self, t: usize) -> u64 {
        self.wc_row[t].min(0).unsigned_abs()
    }

    /// Tokens produced into the monitor by `t`.
    pub fn post(&self, t: usize) -> u64 {
        self.wc_row[t].max(0).unsigned_abs()
    }

    /// The constraint this place enforces; `None` if unknown or all-zero.
    pub fn source(&self) -> Option<Constraint> {
        let row = self.row.as_ref()?;
        Constraint::new(row.weights.clone(), row.bound).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlledNet {
    pub base: PetriNet,
    pub control_places: Vec<ControlPlace>,
}

impl ControlledNet {
    /// `[W_p ; W_c]`.
    pub fn incidence(&self) -> Vec<Vec<i64>> {
        let mut w = self.base.incidence();
        w.extend(self.control_places.iter().map(|c| c.wc_row.clone()));
        w
    }

    /// `[m_p0 ; m_s0]`.
    pub fn initial_marking(&self) -> Vec<u64> {
        self.base
            .initial_marking()
            .bits()
            .iter()
            .map(|&b| u64::from(b))
            .chain(self.control_places.iter().map(|c| c.initial_tokens))
            .collect()
    }

    pub fn place_ids(&self) -> Vec<String> {
        self.base
            .places()
            .iter()
            .cloned()
            .chain(self.control_places.iter().map(|c| c.id.clone()))
            .collect()
    }
}

fn monitor_id(net: &PetriNet, i: usize) -> String {
    let mut id = format!("Pc{}", i + 1);
    while net.place_index(&id).is_some() || net.transition_index(&id).is_some() {
        id.push('\'');
    }
    id
}

pub fn synthesize(net: &PetriNet, cm: &ConstraintMatrix) -> Result<ControlledNet> {
    let w = net.incidence();
    let m0 = net.initial_marking();
    let mut control_places = Vec::with_capacity(cm.rows());
    for (i, (row, &b)) in cm.l.iter().zip(&cm.b).enumerate() {
        if row.len() != net.place_count() {
            return Err(Error::UnknownPlace(format!(
                "row {i} has {} columns",
                row.len()
            )));
        }
        let wc_row: Vec<i64> = (0..net.transition_count())
            .map(|t| {
                -row.iter()
                    .zip(&w)
                    .map(|(&l, wp)| i64::from(l) * wp[t])
                    .sum::<i64>()
            })
            .collect();
        let used: u64 = row
            .iter()
            .zip(m0.bits())
            .filter(|(_, &m)| m)
            .map(|(&l, _)| u64::from(l))
            .sum();
        let initial_tokens = u64::from(b).checked_sub(used).ok_or_else(|| {
            let c = Constraint::new(row.clone(), b)
                .map(|c| c.inequality(net.places()))
                .unwrap_or_else(|_| format!("row {i}"));
            Error::InitialViolation(c)
        })?;
        control_places.push(ControlPlace {
            id: monitor_id(net, i),
            wc_row,
            initial_tokens,
            row: Some(ConstraintRow {
                weights: row.clone(),
                bound: b,
            }),
        });
    }
    Ok(ControlledNet {
        base: net.clone(),
        control_places,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityWarning {
    pub control_place: String,
    pub transition: String,
}

/// Control places that feed an uncontrollable transition and could thus
/// need to block it.
pub fn admissibility_check(cn: &ControlledNet) -> Vec<AdmissibilityWarning> {
    let mut out = Vec::new();
    for c in &cn.control_places {
        for (t, tr) in cn.base.transitions().iter().enumerate() {
            if !tr.controllable && c.wc_row[t] < 0 {
                out.push(AdmissibilityWarning {
                    control_place: c.id.clone(),
                    transition: tr.id.clone(),
                });
            }
        }
    }
    out
}

/// A marking of the controlled net: boolean base part, integer monitors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ControlledMarking {
    pub base: Marking,
    pub monitors: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct ClosedLoopGraph {
    pub states: Vec<ControlledMarking>,
    pub edges: Vec<(usize, usize, usize)>,
}

impl ControlledNet {
    pub fn is_enabled(&self, m: &ControlledMarking, t: usize) -> bool {
        self.base.is_enabled(&m.base, t)
            && self
                .control_places
                .iter()
                .zip(&m.monitors)
                .all(|(c, &tokens)| tokens >= c.pre(t))
    }

    pub fn fire(&self, m: &ControlledMarking, t: usize) -> Result<ControlledMarking> {
        if !self.is_enabled(m, t) {
            return Err(Error::NotEnabled {
                transition: self.base.transitions()[t].id.clone(),
            });
        }
        let base = self.base.fire(&m.base, t)?;
        let monitors = self
            .control_places
            .iter()
            .zip(&m.monitors)
            .map(|(c, &tokens)| tokens - c.pre(t) + c.post(t))
            .collect();
        Ok(ControlledMarking { base, monitors })
    }

    pub fn initial(&self) -> ControlledMarking {
        ControlledMarking {
            base: self.base.initial_marking().clone(),
            monitors: self
                .control_places
                .iter()
                .map(|c| c.initial_tokens)
                .collect(),
        }
    }

    /// Breadth-first exploration of the closed loop, same order as
    /// [`PetriNet::reach`]. Base places must stay safe; monitors may hold
    /// several tokens.
    pub fn explore(&self, state_limit: usize) -> Result<ClosedLoopGraph> {
        if state_limit == 0 {
            return Err(Error::StateLimitExceeded { limit: 0 });
        }
        let init = self.initial();
        let mut states = vec![init.clone()];
        let mut index = HashMap::from([(init, 0usize)]);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            for t in 0..self.base.transition_count() {
                if !self.is_enabled(&states[s], t) {
                    continue;
                }
                let next = self.fire(&states[s], t)?;
                let target = match index.get(&next) {
                    Some(&i) => i,
                    None => {
                        if states.len() == state_limit {
                            return Err(Error::StateLimitExceeded { limit: state_limit });
                        }
                        let i = states.len();
                        index.insert(next.clone(), i);
                        states.push(next);
                        queue.push_back(i);
                        i
                    }
                };
                edges.push((s, t, target));
            }
        }
        Ok(ClosedLoopGraph { states, edges })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Distinct base-place projections of the reachable controlled markings.
    pub reached: Vec<PlaceSet>,
    /// Expected but not reached: permissiveness lost.
    pub missing: Vec<PlaceSet>,
    /// Reached but not expected: safety violated.
    pub extra: Vec<PlaceSet>,
    pub controlled_states: usize,
    /// `L_i·m_p + m_c,i = b_i` in every reachable controlled marking.
    pub invariant_holds: bool,
    pub maximal_permissive: bool,
}

pub fn closed_loop_verify(
    cn: &ControlledNet,
    expected_authorized: &BTreeSet<PlaceSet>,
    state_limit: usize,
) -> Result<VerificationReport> {
    let g = cn.explore(state_limit)?;
    let reached: BTreeSet<PlaceSet> = g.states.iter().map(|s| s.base.marked_places()).collect();
    let invariant_holds = g.states.iter().all(|s| stacked_invariant_holds(cn, s));
    let missing: Vec<PlaceSet> = expected_authorized.difference(&reached).cloned().collect();
    let extra: Vec<PlaceSet> = reached.difference(expected_authorized).cloned().collect();
    Ok(VerificationReport {
        maximal_permissive: missing.is_empty() && extra.is_empty(),
        reached: reached.into_iter().collect(),
        missing,
        extra,
        controlled_states: g.states.len(),
        invariant_holds,
    })
}

/// Checked for every control place whose constraint row is known.
pub fn stacked_invariant_holds(cn: &ControlledNet, m: &ControlledMarking) -> bool {
    cn.control_places
        .iter()
        .zip(&m.monitors)
        .all(|(c, &tokens)| {
            let Some(row) = &c.row else { return true };
            let lm: u64 = row
                .weights
                .iter()
                .zip(m.base.bits())
                .filter(|(_, &b)| b)
                .map(|(&w, _)| u64::from(w))
                .sum();
            lm + tokens == u64::from(row.bound)
        })
}
