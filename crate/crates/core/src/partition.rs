//! Splitting the reachable set into authorized, forbidden and border states.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::net::{PetriNet, ReachabilityGraph};
use crate::placeset::PlaceSet;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForbiddenSpec {
    /// Exact supports of markings to forbid.
    pub forbidden_markings: Vec<PlaceSet>,
    /// A state violating any of these is forbidden.
    pub forbidden_constraints: Vec<Constraint>,
    pub forbid_deadlocks: bool,
}

impl ForbiddenSpec {
    pub fn is_vacuous(&self) -> bool {
        self.forbidden_markings.is_empty()
            && self.forbidden_constraints.is_empty()
            && !self.forbid_deadlocks
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub authorized: BTreeSet<usize>,
    pub forbidden: BTreeSet<usize>,
    pub border: BTreeSet<usize>,
    /// Forbidden states that are neither in the uncontrollable closure nor
    /// reachable from the initial state without crossing it. No supervisor
    /// can reach them, so they are not counted as authorized.
    pub unreachable: BTreeSet<usize>,
}

fn check_places(n: usize, spec: &ForbiddenSpec) -> Result<()> {
    for s in &spec.forbidden_markings {
        if let Some(p) = s.max_index() {
            if p >= n {
                return Err(Error::UnknownPlace(format!("#{p}")));
            }
        }
    }
    for c in &spec.forbidden_constraints {
        if c.place_count() != n {
            return Err(Error::UnknownPlace(format!(
                "constraint over {} places on a net of {n}",
                c.place_count()
            )));
        }
    }
    Ok(())
}

/// States matching a forbidden marking, violating a forbidden constraint, or
/// (when requested) without any enabled transition.
pub fn initial_forbidden(
    net: &PetriNet,
    graph: &ReachabilityGraph,
    spec: &ForbiddenSpec,
) -> Result<BTreeSet<usize>> {
    check_places(net.place_count(), spec)?;
    let mut out = BTreeSet::new();
    let mut has_successor = vec![false; graph.len()];
    for e in graph.edges() {
        has_successor[e.source] = true;
    }
    for (i, m) in graph.states().iter().enumerate() {
        let support = m.marked_places();
        let hit = spec.forbidden_markings.contains(&support)
            || spec
                .forbidden_constraints
                .iter()
                .any(|c| !c.satisfied_by(m))
            || (spec.forbid_deadlocks && !has_successor[i]);
        if hit {
            out.insert(i);
        }
    }
    Ok(out)
}

/// Least superset of `seed` closed under uncontrollable predecessors.
pub fn uncontrollable_closure(
    net: &PetriNet,
    graph: &ReachabilityGraph,
    seed: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); graph.len()];
    for e in graph.edges() {
        if !net.transitions()[e.transition].controllable {
            preds[e.target].push(e.source);
        }
    }
    let mut closed = seed.clone();
    let mut queue: VecDeque<usize> = seed.iter().copied().collect();
    while let Some(s) = queue.pop_front() {
        for &p in &preds[s] {
            if closed.insert(p) {
                queue.push_back(p);
            }
        }
    }
    closed
}

pub fn partition(
    net: &PetriNet,
    graph: &ReachabilityGraph,
    spec: &ForbiddenSpec,
) -> Result<Partition> {
    let seed = initial_forbidden(net, graph, spec)?;
    let closure = uncontrollable_closure(net, graph, &seed);
    let init = graph.initial_index();
    if closure.contains(&init) {
        return Err(Error::InitialStateForbidden);
    }

    // authorized = what the initial state reaches without entering the closure
    let mut authorized = BTreeSet::from([init]);
    let mut queue = VecDeque::from([init]);
    while let Some(s) = queue.pop_front() {
        for e in graph.successors(s) {
            if !closure.contains(&e.target) && authorized.insert(e.target) {
                queue.push_back(e.target);
            }
        }
    }
    let forbidden: BTreeSet<usize> = (0..graph.len())
        .filter(|s| !authorized.contains(s))
        .collect();
    let unreachable = forbidden.difference(&closure).copied().collect();
    let border = graph
        .edges()
        .iter()
        .filter(|e| {
            net.transitions()[e.transition].controllable
                && authorized.contains(&e.source)
                && forbidden.contains(&e.target)
        })
        .map(|e| e.target)
        .collect();
    Ok(Partition {
        authorized,
        forbidden,
        border,
        unreachable,
    })
}

impl Partition {
    pub fn authorized_supports(&self, graph: &ReachabilityGraph) -> Vec<PlaceSet> {
        supports(graph, &self.authorized)
    }

    pub fn border_supports(&self, graph: &ReachabilityGraph) -> Vec<PlaceSet> {
        supports(graph, &self.border)
    }

    /// Forbidden states outside the border.
    pub fn interior_supports(&self, graph: &ReachabilityGraph) -> Vec<PlaceSet> {
        let inner: BTreeSet<usize> = self.forbidden.difference(&self.border).copied().collect();
        supports(graph, &inner)
    }
}

fn supports(graph: &ReachabilityGraph, idx: &BTreeSet<usize>) -> Vec<PlaceSet> {
    idx.iter()
        .map(|&i| graph.states()[i].marked_places())
        .collect()
}
