//! JSON documents for nets, forbidden-state specs, state sets and reports.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::monitor::{ConstraintRow, ControlPlace, ControlledNet};
use crate::net::{PetriNet, ReachabilityGraph};
use crate::partition::{ForbiddenSpec, Partition};
use crate::placeset::PlaceSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaceDoc {
    pub id: String,
    pub initial: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor: Option<bool>,
    /// Only on monitor places: the constraint the place enforces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enforces: Option<ConstraintDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub id: String,
    pub controllable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcDoc {
    pub from: String,
    pub to: String,
    #[serde(default = "one")]
    pub weight: u64,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetDocument {
    pub places: Vec<PlaceDoc>,
    pub transitions: Vec<TransitionDoc>,
    pub arcs: Vec<ArcDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub places: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u32>>,
    pub bound: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    #[serde(default)]
    pub forbidden_markings: Vec<Vec<String>>,
    #[serde(default)]
    pub forbidden_constraints: Vec<ConstraintDoc>,
    #[serde(default)]
    pub forbid_deadlocks: bool,
}

enum Node {
    Place(usize),
    Transition(usize),
}

/// `(place, transition, is_input)` of one arc.
type ArcRef = (usize, usize, bool);

impl NetDocument {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("net documents serialize")
    }

    fn is_monitor(p: &PlaceDoc) -> bool {
        p.monitor.unwrap_or(false)
    }

    /// Checks ids and arcs; returns the node lookup and, per arc, its
    /// `(place, transition, is_input)` resolution.
    fn resolve(&self) -> Result<(HashMap<String, Node>, Vec<ArcRef>)> {
        if self.places.is_empty() {
            return Err(Error::Parse("a net needs at least one place".into()));
        }
        let mut nodes = HashMap::new();
        for (i, p) in self.places.iter().enumerate() {
            if nodes.insert(p.id.clone(), Node::Place(i)).is_some() {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if nodes.insert(t.id.clone(), Node::Transition(i)).is_some() {
                return Err(Error::DuplicateId(t.id.clone()));
            }
        }
        let mut seen = HashSet::new();
        let mut arcs = Vec::with_capacity(self.arcs.len());
        for a in &self.arcs {
            let from = nodes
                .get(&a.from)
                .ok_or_else(|| Error::UnknownPlace(a.from.clone()))?;
            let to = nodes
                .get(&a.to)
                .ok_or_else(|| Error::UnknownPlace(a.to.clone()))?;
            let r = match (from, to) {
                (Node::Place(p), Node::Transition(t)) => (*p, *t, true),
                (Node::Transition(t), Node::Place(p)) => (*p, *t, false),
                _ => {
                    return Err(Error::Parse(format!(
                        "arc {} -> {} must join a place and a transition",
                        a.from, a.to
                    )))
                }
            };
            if !seen.insert((a.from.as_str(), a.to.as_str())) {
                return Err(Error::Parse(format!(
                    "duplicate arc {} -> {}",
                    a.from, a.to
                )));
            }
            if a.weight == 0 {
                return Err(Error::Parse(format!(
                    "arc {} -> {} has weight 0",
                    a.from, a.to
                )));
            }
            arcs.push(r);
        }
        Ok((nodes, arcs))
    }

    fn base_parts(&self) -> Result<(Vec<usize>, PetriNet, Vec<ArcRef>)> {
        let (_, arcs) = self.resolve()?;
        // document index -> base index
        let mut base_of = vec![usize::MAX; self.places.len()];
        let mut ids = Vec::new();
        let mut initial = Vec::new();
        for (i, p) in self.places.iter().enumerate() {
            if Self::is_monitor(p) {
                continue;
            }
            if p.enforces.is_some() {
                return Err(Error::Parse(format!(
                    "place {}: `enforces` is only for monitors",
                    p.id
                )));
            }
            if p.initial > 1 {
                return Err(Error::Parse(format!(
                    "place {}: initial must be 0 or 1, got {}",
                    p.id, p.initial
                )));
            }
            base_of[i] = ids.len();
            ids.push(p.id.clone());
            initial.push(p.initial == 1);
        }
        if ids.is_empty() {
            return Err(Error::Parse(
                "a net needs at least one non-monitor place".into(),
            ));
        }
        let n_t = self.transitions.len();
        let mut inputs = vec![Vec::new(); n_t];
        let mut outputs = vec![Vec::new(); n_t];
        for (a, &(p, t, is_input)) in self.arcs.iter().zip(&arcs) {
            if base_of[p] == usize::MAX {
                continue;
            }
            if a.weight != 1 {
                return Err(Error::NonUnitWeight {
                    from: a.from.clone(),
                    to: a.to.clone(),
                    weight: a.weight,
                });
            }
            if is_input {
                inputs[t].push(base_of[p]);
            } else {
                outputs[t].push(base_of[p]);
            }
        }
        let net = PetriNet::new(
            ids,
            self.transitions
                .iter()
                .map(|t| crate::net::Transition {
                    id: t.id.clone(),
                    controllable: t.controllable,
                })
                .collect(),
            inputs.into_iter().map(PlaceSet::from_iter).collect(),
            outputs.into_iter().map(PlaceSet::from_iter).collect(),
            crate::net::Marking::new(initial),
        )?;
        Ok((base_of, net, arcs))
    }

    /// An uncontrolled net; monitor places are rejected.
    pub fn into_net(&self) -> Result<PetriNet> {
        if let Some(p) = self.places.iter().find(|p| Self::is_monitor(p)) {
            return Err(Error::Parse(format!(
                "place {} is a monitor; load the document as a controlled net",
                p.id
            )));
        }
        Ok(self.base_parts()?.1)
    }

    /// A net possibly carrying monitor places. Monitor arcs may have any
    /// positive weight and monitors any initial count.
    pub fn into_controlled(&self) -> Result<ControlledNet> {
        let (base_of, base, arcs) = self.base_parts()?;
        let mut control_places = Vec::new();
        for (i, p) in self.places.iter().enumerate() {
            if base_of[i] != usize::MAX {
                continue;
            }
            let mut wc_row = vec![0i64; base.transition_count()];
            for (a, &(q, t, is_input)) in self.arcs.iter().zip(&arcs) {
                if q != i {
                    continue;
                }
                let w = i64::try_from(a.weight).map_err(|_| {
                    Error::Parse(format!("arc {} -> {}: weight too large", a.from, a.to))
                })?;
                if is_input {
                    wc_row[t] -= w;
                } else {
                    wc_row[t] += w;
                }
            }
            let row = match &p.enforces {
                None => None,
                Some(doc) => {
                    let c = doc.resolve(&base)?;
                    Some(ConstraintRow {
                        weights: c.weights().to_vec(),
                        bound: c.bound(),
                    })
                }
            };
            control_places.push(ControlPlace {
                id: p.id.clone(),
                wc_row,
                initial_tokens: p.initial,
                row,
            });
        }
        Ok(ControlledNet {
            base,
            control_places,
        })
    }

    pub fn from_net(net: &PetriNet) -> Self {
        let places = net
            .places()
            .iter()
            .zip(net.initial_marking().bits())
            .map(|(id, &m)| PlaceDoc {
                id: id.clone(),
                initial: u64::from(m),
                monitor: None,
                enforces: None,
            })
            .collect();
        let transitions = net
            .transitions()
            .iter()
            .map(|t| TransitionDoc {
                id: t.id.clone(),
                controllable: t.controllable,
            })
            .collect();
        let mut arcs = Vec::new();
        for (t, tr) in net.transitions().iter().enumerate() {
            for p in net.inputs(t).iter() {
                arcs.push(ArcDoc {
                    from: net.places()[p].clone(),
                    to: tr.id.clone(),
                    weight: 1,
                });
            }
            for p in net.outputs(t).iter() {
                arcs.push(ArcDoc {
                    from: tr.id.clone(),
                    to: net.places()[p].clone(),
                    weight: 1,
                });
            }
        }
        NetDocument {
            places,
            transitions,
            arcs,
        }
    }

    pub fn from_controlled(cn: &ControlledNet) -> Self {
        let mut doc = Self::from_net(&cn.base);
        let names = cn.base.places();
        for c in &cn.control_places {
            doc.places.push(PlaceDoc {
                id: c.id.clone(),
                initial: c.initial_tokens,
                monitor: Some(true),
                enforces: c
                    .row
                    .as_ref()
                    .map(|r| ConstraintDoc::from_row(&r.weights, r.bound, names)),
            });
            for (t, tr) in cn.base.transitions().iter().enumerate() {
                if c.pre(t) > 0 {
                    doc.arcs.push(ArcDoc {
                        from: c.id.clone(),
                        to: tr.id.clone(),
                        weight: c.pre(t),
                    });
                }
                if c.post(t) > 0 {
                    doc.arcs.push(ArcDoc {
                        from: tr.id.clone(),
                        to: c.id.clone(),
                        weight: c.post(t),
                    });
                }
            }
        }
        doc
    }
}

pub fn load_net(text: &str) -> Result<PetriNet> {
    NetDocument::parse(text)?.into_net()
}

pub fn load_controlled(text: &str) -> Result<ControlledNet> {
    NetDocument::parse(text)?.into_controlled()
}

pub fn save_net(net: &PetriNet) -> String {
    NetDocument::from_net(net).to_json()
}

pub fn save_controlled(cn: &ControlledNet) -> String {
    NetDocument::from_controlled(cn).to_json()
}

fn place_set(net_places: &[String], ids: &[String]) -> Result<PlaceSet> {
    ids.iter()
        .map(|id| {
            net_places
                .iter()
                .position(|p| p == id)
                .ok_or_else(|| Error::UnknownPlace(id.clone()))
        })
        .collect::<Result<Vec<_>>>()
        .map(PlaceSet::from_iter)
}

impl ConstraintDoc {
    pub fn resolve(&self, net: &PetriNet) -> Result<Constraint> {
        self.resolve_names(net.places())
    }

    pub fn resolve_names(&self, names: &[String]) -> Result<Constraint> {
        let mut weights = vec![0u32; names.len()];
        if let Some(w) = &self.weights {
            if w.len() != self.places.len() {
                return Err(Error::Parse(format!(
                    "constraint has {} places but {} weights",
                    self.places.len(),
                    w.len()
                )));
            }
        }
        for (i, id) in self.places.iter().enumerate() {
            let p = names
                .iter()
                .position(|n| n == id)
                .ok_or_else(|| Error::UnknownPlace(id.clone()))?;
            let w = self.weights.as_ref().map_or(1, |w| w[i]);
            weights[p] = weights[p].saturating_add(w);
        }
        Constraint::new(weights, self.bound)
            .map_err(|_| Error::Parse("constraint has no positive weight".into()))
    }

    fn from_row(weights: &[u32], bound: u32, names: &[String]) -> Self {
        let places: Vec<String> = weights
            .iter()
            .zip(names)
            .filter(|(&w, _)| w > 0)
            .map(|(_, n)| n.clone())
            .collect();
        let ws: Vec<u32> = weights.iter().copied().filter(|&w| w > 0).collect();
        ConstraintDoc {
            places,
            weights: if ws.iter().all(|&w| w == 1) {
                None
            } else {
                Some(ws)
            },
            bound,
        }
    }

    pub fn from_constraint(c: &Constraint, names: &[String]) -> Self {
        Self::from_row(c.weights(), c.bound(), names)
    }
}

impl SpecDocument {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(&self, net: &PetriNet) -> Result<ForbiddenSpec> {
        Ok(ForbiddenSpec {
            forbidden_markings: self
                .forbidden_markings
                .iter()
                .map(|ids| place_set(net.places(), ids))
                .collect::<Result<_>>()?,
            forbidden_constraints: self
                .forbidden_constraints
                .iter()
                .map(|c| c.resolve(net))
                .collect::<Result<_>>()?,
            forbid_deadlocks: self.forbid_deadlocks,
        })
    }
}

pub fn load_spec(text: &str, net: &PetriNet) -> Result<ForbiddenSpec> {
    SpecDocument::parse(text)?.resolve(net)
}

/// Reads a list of constraints, e.g. the input of `synth`.
pub fn load_constraints(text: &str, names: &[String]) -> Result<Vec<Constraint>> {
    let docs: Vec<ConstraintDoc> = serde_json::from_str(text)?;
    docs.iter().map(|d| d.resolve_names(names)).collect()
}

/// Net-free state sets: the input of `reduce` and `merge` when no net is
/// available.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsDocument {
    pub places: Vec<String>,
    pub authorized: Vec<Vec<String>>,
    pub border: Vec<Vec<String>>,
    /// Reachable states that are neither authorized nor border states.
    #[serde(default)]
    pub other: Vec<Vec<String>>,
    /// Candidate over-states; computed from the sets when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSetsOwned {
    pub places: Vec<String>,
    pub authorized: Vec<PlaceSet>,
    pub border: Vec<PlaceSet>,
    pub other: Vec<PlaceSet>,
    pub candidates: Option<Vec<PlaceSet>>,
}

impl SetsDocument {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(&self) -> Result<StateSetsOwned> {
        let mut seen = HashSet::new();
        for p in &self.places {
            if !seen.insert(p) {
                return Err(Error::DuplicateId(p.clone()));
            }
        }
        let conv = |v: &Vec<Vec<String>>| -> Result<Vec<PlaceSet>> {
            v.iter().map(|ids| place_set(&self.places, ids)).collect()
        };
        Ok(StateSetsOwned {
            places: self.places.clone(),
            authorized: conv(&self.authorized)?,
            border: conv(&self.border)?,
            other: conv(&self.other)?,
            candidates: self.candidates.as_ref().map(conv).transpose()?,
        })
    }

    pub fn from_sets(sets: &StateSetsOwned) -> Self {
        let conv = |v: &[PlaceSet]| v.iter().map(|s| s.ids(&sets.places)).collect();
        SetsDocument {
            places: sets.places.clone(),
            authorized: conv(&sets.authorized),
            border: conv(&sets.border),
            other: conv(&sets.other),
            candidates: sets.candidates.as_deref().map(conv),
            note: None,
        }
    }
}

/// A constraint as printed in reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub places: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u32>>,
    pub bound: u32,
    pub compact: String,
    pub inequality: String,
}

impl ConstraintReport {
    pub fn new(c: &Constraint, names: &[String]) -> Self {
        let d = ConstraintDoc::from_constraint(c, names);
        ConstraintReport {
            places: d.places,
            weights: d.weights,
            bound: d.bound,
            compact: c.compact(names),
            inequality: c.inequality(names),
        }
    }

    pub fn list(cs: &[Constraint], names: &[String]) -> Vec<Self> {
        cs.iter().map(|c| Self::new(c, names)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub source: usize,
    pub transition: String,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub initial: usize,
    /// Marked places of each state, in discovery order.
    pub states: Vec<Vec<String>>,
    pub edges: Vec<EdgeDoc>,
}

impl GraphDocument {
    pub fn new(net: &PetriNet, g: &ReachabilityGraph) -> Self {
        GraphDocument {
            initial: g.initial_index(),
            states: g.supports().iter().map(|s| s.ids(net.places())).collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeDoc {
                    source: e.source,
                    transition: net.transitions()[e.transition].id.clone(),
                    target: e.target,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionDocument {
    pub counts: BTreeMap<String, usize>,
    pub authorized: Vec<Vec<String>>,
    pub forbidden: Vec<Vec<String>>,
    pub border: Vec<Vec<String>>,
    pub unreachable: Vec<Vec<String>>,
}

impl PartitionDocument {
    pub fn new(net: &PetriNet, g: &ReachabilityGraph, p: &Partition) -> Self {
        let conv = |idx: &BTreeSet<usize>| -> Vec<Vec<String>> {
            idx.iter()
                .map(|&i| g.states()[i].marked_places().ids(net.places()))
                .collect()
        };
        PartitionDocument {
            counts: state_counts(g, p),
            authorized: conv(&p.authorized),
            forbidden: conv(&p.forbidden),
            border: conv(&p.border),
            unreachable: conv(&p.unreachable),
        }
    }

    /// Back to place sets: `(authorized, border, other forbidden)`.
    pub fn resolve(&self, places: &[String]) -> Result<StateSetsOwned> {
        let conv = |v: &[Vec<String>]| -> Result<Vec<PlaceSet>> {
            v.iter().map(|ids| place_set(places, ids)).collect()
        };
        let border = conv(&self.border)?;
        let other = conv(&self.forbidden)?
            .into_iter()
            .filter(|s| !border.contains(s))
            .collect();
        Ok(StateSetsOwned {
            places: places.to_vec(),
            authorized: conv(&self.authorized)?,
            border,
            other,
            candidates: None,
        })
    }
}

pub fn state_counts(g: &ReachabilityGraph, p: &Partition) -> BTreeMap<String, usize> {
    BTreeMap::from([
        ("reachable".to_string(), g.len()),
        ("authorized".to_string(), p.authorized.len()),
        ("forbidden".to_string(), p.forbidden.len()),
        ("border".to_string(), p.border.len()),
        ("unreachable".to_string(), p.unreachable.len()),
    ])
}
