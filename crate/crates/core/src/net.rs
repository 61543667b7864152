//! Ordinary safe Petri nets, the token game, and reachability graphs.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placeset::PlaceSet;

pub const DEFAULT_STATE_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    pub controllable: bool,
}

/// Boolean marking, index-aligned with [`PetriNet::places`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Marking(Vec<bool>);

impl Marking {
    pub fn new(bits: Vec<bool>) -> Self {
        Marking(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Marking(vec![false; n])
    }

    pub fn from_support(n: usize, support: &PlaceSet) -> Self {
        let mut bits = vec![false; n];
        for p in support.iter() {
            bits[p] = true;
        }
        Marking(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn is_marked(&self, p: usize) -> bool {
        self.0[p]
    }

    /// Marked places; fails with [`Error::EmptySupport`] on the zero marking.
    pub fn support(&self) -> Result<PlaceSet> {
        let s = self.marked_places();
        if s.is_empty() {
            Err(Error::EmptySupport)
        } else {
            Ok(s)
        }
    }

    /// Marked places, possibly none.
    pub fn marked_places(&self) -> PlaceSet {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn label(&self, names: &[String]) -> String {
        let s = self.marked_places();
        if s.is_empty() {
            "0".to_string()
        } else {
            s.label(names)
        }
    }
}

/// An ordinary Petri net whose markings are boolean.
///
/// Arcs are stored per transition; `pre(p, t)` and `post(p, t)` give the
/// matrix view. Both matrices only hold 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    inputs: Vec<PlaceSet>,
    outputs: Vec<PlaceSet>,
    initial: Marking,
}

impl PetriNet {
    /// `inputs[t]` and `outputs[t]` are the pre- and post-places of
    /// transition `t`.
    pub fn new(
        places: Vec<String>,
        transitions: Vec<Transition>,
        inputs: Vec<PlaceSet>,
        outputs: Vec<PlaceSet>,
        initial: Marking,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for id in places.iter().chain(transitions.iter().map(|t| &t.id)) {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        if inputs.len() != transitions.len() || outputs.len() != transitions.len() {
            return Err(Error::InvalidNet(
                "arc lists must have one entry per transition".into(),
            ));
        }
        for set in inputs.iter().chain(outputs.iter()) {
            if let Some(p) = set.max_index() {
                if p >= places.len() {
                    return Err(Error::UnknownPlace(format!("#{p}")));
                }
            }
        }
        if initial.len() != places.len() {
            return Err(Error::InvalidNet(format!(
                "initial marking has {} entries for {} places",
                initial.len(),
                places.len()
            )));
        }
        Ok(PetriNet {
            places,
            transitions,
            inputs,
            outputs,
            initial,
        })
    }

    pub fn builder() -> NetBuilder {
        NetBuilder::default()
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn inputs(&self, t: usize) -> &PlaceSet {
        &self.inputs[t]
    }

    pub fn outputs(&self, t: usize) -> &PlaceSet {
        &self.outputs[t]
    }

    pub fn pre(&self, p: usize, t: usize) -> u32 {
        u32::from(self.inputs[t].contains(p))
    }

    pub fn post(&self, p: usize, t: usize) -> u32 {
        u32::from(self.outputs[t].contains(p))
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    /// Signed incidence matrix `W = post - pre`, one row per place.
    pub fn incidence(&self) -> Vec<Vec<i64>> {
        (0..self.place_count())
            .map(|p| {
                (0..self.transition_count())
                    .map(|t| i64::from(self.post(p, t)) - i64::from(self.pre(p, t)))
                    .collect()
            })
            .collect()
    }

    pub fn with_controllable(mut self, t: usize, controllable: bool) -> Self {
        self.transitions[t].controllable = controllable;
        self
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.inputs[t].iter().all(|p| m.is_marked(p))
    }

    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        (0..self.transition_count())
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking> {
        if !self.is_enabled(m, t) {
            return Err(Error::NotEnabled {
                transition: self.transitions[t].id.clone(),
            });
        }
        let mut bits = m.0.clone();
        for p in self.inputs[t].iter() {
            bits[p] = false;
        }
        for p in self.outputs[t].iter() {
            if bits[p] {
                return Err(Error::SafenessViolation {
                    state: m.label(&self.places),
                    transition: self.transitions[t].id.clone(),
                    place: self.places[p].clone(),
                });
            }
            bits[p] = true;
        }
        Ok(Marking(bits))
    }

    /// Breadth-first reachability from the initial marking, trying
    /// transitions in declaration order.
    pub fn reach(&self, state_limit: usize) -> Result<ReachabilityGraph> {
        let mut states = vec![self.initial.clone()];
        let mut index = HashMap::from([(self.initial.clone(), 0usize)]);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        if state_limit == 0 {
            return Err(Error::StateLimitExceeded { limit: 0 });
        }
        while let Some(s) = queue.pop_front() {
            for t in 0..self.transition_count() {
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
                edges.push(Edge {
                    source: s,
                    transition: t,
                    target,
                });
            }
        }
        Ok(ReachabilityGraph {
            states,
            edges,
            initial: 0,
            index,
        })
    }
}

#[derive(Default)]
pub struct NetBuilder {
    places: Vec<(String, bool)>,
    transitions: Vec<(Transition, Vec<String>, Vec<String>)>,
}

impl NetBuilder {
    pub fn place(mut self, id: &str, marked: bool) -> Self {
        self.places.push((id.to_string(), marked));
        self
    }

    pub fn transition(mut self, id: &str, controllable: bool, pre: &[&str], post: &[&str]) -> Self {
        self.transitions.push((
            Transition {
                id: id.to_string(),
                controllable,
            },
            pre.iter().map(|s| s.to_string()).collect(),
            post.iter().map(|s| s.to_string()).collect(),
        ));
        self
    }

    pub fn build(self) -> Result<PetriNet> {
        let names: Vec<String> = self.places.iter().map(|(p, _)| p.clone()).collect();
        let lookup = |id: &String| {
            names
                .iter()
                .position(|p| p == id)
                .ok_or_else(|| Error::UnknownPlace(id.clone()))
        };
        let mut transitions = Vec::new();
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for (t, pre, post) in &self.transitions {
            transitions.push(t.clone());
            inputs.push(
                pre.iter()
                    .map(lookup)
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .collect(),
            );
            outputs.push(
                post.iter()
                    .map(lookup)
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .collect(),
            );
        }
        let initial = Marking::new(self.places.iter().map(|(_, m)| *m).collect());
        PetriNet::new(names, transitions, inputs, outputs, initial)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub transition: usize,
    pub target: usize,
}

#[derive(Clone, Debug)]
pub struct ReachabilityGraph {
    states: Vec<Marking>,
    edges: Vec<Edge>,
    initial: usize,
    index: HashMap<Marking, usize>,
}

impl PartialEq for ReachabilityGraph {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states && self.edges == other.edges && self.initial == other.initial
    }
}

impl ReachabilityGraph {
    pub fn states(&self) -> &[Marking] {
        &self.states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn initial_index(&self) -> usize {
        self.initial
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, m: &Marking) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.source == s)
    }

    pub fn supports(&self) -> Vec<PlaceSet> {
        self.states.iter().map(Marking::marked_places).collect()
    }
}

/// Weighted token sum `Σ q_i m_i` for a boolean marking.
pub fn weighted_sum(weights: &[u32], m: &Marking) -> u64 {
    weights
        .iter()
        .zip(m.bits())
        .filter(|(_, &b)| b)
        .map(|(&w, _)| u64::from(w))
        .sum()
}

/// True iff the weighted sum equals `k` in every state of the graph.
pub fn verify_place_invariant(graph: &ReachabilityGraph, weights: &[u32], k: u64) -> bool {
    graph.states().iter().all(|m| weighted_sum(weights, m) == k)
}

/// True iff the weighted sum is at most `k` in every supplied state.
pub fn verify_partial_invariant<'a, I>(states: I, weights: &[u32], k: u64) -> bool
where
    I: IntoIterator<Item = &'a Marking>,
{
    states.into_iter().all(|m| weighted_sum(weights, m) <= k)
}
