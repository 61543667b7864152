//! Merging over-state constraints with partial place invariants.
//!
//! The five rules below each turn a group of unit-weight constraints into a
//! single one under a precondition that is checked against the over-states
//! of authorized states (or, for [`try_prop3`], directly against the
//! authorized markings). [`merge_fixpoint`] applies them until nothing
//! changes and re-checks every accepted merge against the state sets.

use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::constraint::{admits_support, Constraint};
use crate::error::{Error, Result};
use crate::net::{verify_partial_invariant, Marking};
use crate::overstate::{AuthorizedSupports, OverstateOracle};
use crate::placeset::PlaceSet;

pub const DEFAULT_SUBSET_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    P1,
    P2,
    P3,
    P4,
    P5,
    /// Two identical constraints.
    #[serde(rename = "dedupe")]
    Dedupe,
    /// A constraint implied by another one (weights no larger, bound no
    /// smaller) is dropped.
    #[serde(rename = "absorb")]
    Absorb,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Evidence {
    /// Over-state membership test; `authorized` is the oracle's answer.
    Overstate { set: PlaceSet, authorized: bool },
    /// Unit-weight partial invariant `Σ_{places} m ≤ bound` over the
    /// authorized markings.
    PartialInvariant {
        places: PlaceSet,
        bound: u32,
        holds: bool,
    },
}

/// Result of one rule application: the merged constraint if the
/// precondition holds, and the checks that decided it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attempt {
    pub merged: Option<Constraint>,
    pub evidence: Vec<Evidence>,
}

fn overstate_check(
    oracle: &dyn OverstateOracle,
    set: PlaceSet,
    evidence: &mut Vec<Evidence>,
) -> bool {
    let authorized = oracle.is_authorized_overstate(&set);
    evidence.push(Evidence::Overstate { set, authorized });
    !authorized
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg()))
    }
}

/// `m_a + m_b ≤ 1` when `{a, b}` is not an over-state of an authorized state.
pub fn try_prop1(n: usize, a: usize, b: usize, oracle: &dyn OverstateOracle) -> Result<Attempt> {
    require(a != b, || {
        format!("rule P1 needs two distinct places, got {a} twice")
    })?;
    let pair = PlaceSet::from([a, b]);
    let mut evidence = Vec::new();
    let ok = overstate_check(oracle, pair.clone(), &mut evidence);
    Ok(Attempt {
        merged: ok.then(|| Constraint::unit(n, &pair, 1)),
        evidence,
    })
}

/// Extends `Σ_S m ≤ 1` with place `p` when no `{q, p}`, `q ∈ S`, is an
/// authorized over-state.
pub fn try_prop2(c: &Constraint, p: usize, oracle: &dyn OverstateOracle) -> Result<Attempt> {
    let s = c.support();
    require(c.is_unit() && c.bound() == 1, || {
        "rule P2 needs a unit-weight constraint with bound 1".into()
    })?;
    require(!s.contains(p), || format!("place {p} is already in {s}"))?;
    let mut evidence = Vec::new();
    let ok = s
        .iter()
        .all(|q| overstate_check(oracle, PlaceSet::from([q, p]), &mut evidence));
    Ok(Attempt {
        merged: ok.then(|| Constraint::unit(c.place_count(), &s.with(p), 1)),
        evidence,
    })
}

/// Replaces the constraints `({h} ∪ tail, k)`, `h ∈ heads`, with
/// `(heads ∪ tail, k)` when the authorized markings satisfy
/// `Σ_{heads} m ≤ 1`.
pub fn try_prop3(
    heads: &PlaceSet,
    tail: &PlaceSet,
    k: u32,
    constraints: &[Constraint],
    authorized: &[PlaceSet],
) -> Result<Attempt> {
    require(!heads.is_empty(), || {
        "rule P3 needs at least one head".into()
    })?;
    require(heads.intersection(tail).is_empty(), || {
        format!("heads {heads} and tail {tail} overlap")
    })?;
    let n = constraints
        .first()
        .map(Constraint::place_count)
        .ok_or_else(|| Error::Precondition("rule P3 needs input constraints".into()))?;
    let mut inputs = Vec::new();
    for h in heads.iter() {
        let want = Constraint::unit(n, &tail.with(h), k);
        require(constraints.contains(&want), || {
            format!(
                "constraint ({}, {k}) is not in the working set",
                tail.with(h)
            )
        })?;
        inputs.push(want);
    }
    if heads.len() == 1 {
        return Ok(Attempt {
            merged: inputs.pop(),
            evidence: Vec::new(),
        });
    }
    let states: Vec<Marking> = authorized
        .iter()
        .map(|s| Marking::from_support(n, s))
        .collect();
    let weights = Constraint::unit(n, heads, 1).weights().to_vec();
    let holds = verify_partial_invariant(&states, &weights, 1);
    Ok(Attempt {
        merged: holds.then(|| Constraint::unit(n, &heads.union(tail), k)),
        evidence: vec![Evidence::PartialInvariant {
            places: heads.clone(),
            bound: 1,
            holds,
        }],
    })
}

fn unit_pair(c1: &Constraint, c2: &Constraint, rule: &str) -> Result<(PlaceSet, PlaceSet, u32)> {
    require(c1.is_unit() && c2.is_unit(), || {
        format!("{rule} needs unit weights")
    })?;
    require(c1.place_count() == c2.place_count(), || {
        format!("{rule} needs constraints over the same places")
    })?;
    require(c1.bound() == c2.bound(), || {
        format!(
            "{rule} needs equal bounds, got {} and {}",
            c1.bound(),
            c2.bound()
        )
    })?;
    Ok((c1.support(), c2.support(), c1.bound()))
}

/// Merges `({i1} ∪ S, n)` and `({i2} ∪ S, n)`, `|S| = n`, into
/// `({i1, i2} ∪ S, n)` when none of the sets `{i1, i2} ∪ S ∖ {j}` is an
/// authorized over-state.
pub fn try_prop4(
    c1: &Constraint,
    c2: &Constraint,
    oracle: &dyn OverstateOracle,
) -> Result<Attempt> {
    let (a, b, n) = unit_pair(c1, c2, "rule P4")?;
    let shared = a.intersection(&b);
    let only_a = a.difference(&b);
    let only_b = b.difference(&a);
    require(only_a.len() == 1 && only_b.len() == 1, || {
        format!("{a} and {b} must differ in exactly one place each")
    })?;
    require(shared.len() == n as usize, || {
        format!("shared tail {shared} must have {n} places")
    })?;
    let heads = only_a.union(&only_b);
    let mut evidence = Vec::new();
    let ok = shared
        .iter()
        .all(|j| overstate_check(oracle, heads.union(&shared.without(j)), &mut evidence));
    Ok(Attempt {
        merged: ok.then(|| Constraint::unit(c1.place_count(), &a.union(&b), n)),
        evidence,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Merges `(H ∪ S, n)` and `({p} ∪ S, n)` into `(H ∪ {p} ∪ S, n)` when no
/// `(n+1)`-subset of the union is an authorized over-state.
pub fn try_prop5(
    c1: &Constraint,
    c2: &Constraint,
    oracle: &dyn OverstateOracle,
    subset_cap: u64,
) -> Result<Attempt> {
    let (a, b, n) = unit_pair(c1, c2, "rule P5")?;
    let new = b.difference(&a);
    require(new.len() == 1, || {
        format!("{b} must add exactly one place to {a}")
    })?;
    require(!a.difference(&b).is_empty(), || {
        format!("{a} has no head outside {b}")
    })?;
    let union = a.union(&b);
    let width = n as usize + 1;
    let needed = binomial(union.len(), width);
    if needed > u128::from(subset_cap) {
        return Err(Error::CombinatorialLimit {
            what: format!("rule P5 on {union}"),
            needed,
            cap: subset_cap,
        });
    }
    let mut evidence = Vec::new();
    let ok = union
        .iter()
        .combinations(width)
        .all(|set| overstate_check(oracle, set.into_iter().collect(), &mut evidence));
    Ok(Attempt {
        merged: ok.then(|| Constraint::unit(c1.place_count(), &union, n)),
        evidence,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    /// A lemma used by a following step; the working set is unchanged.
    Derived,
    /// The merged set misclassified a state and the merge was rolled back.
    RejectedByGate,
    /// Checking the precondition needed more subsets than allowed.
    RejectedByLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStep {
    pub rule: Rule,
    pub inputs: Vec<Constraint>,
    pub output: Option<Constraint>,
    pub evidence: Vec<Evidence>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeTrace {
    pub steps: Vec<MergeStep>,
}

impl MergeTrace {
    /// Re-applies the accepted steps to `initial`.
    pub fn replay(&self, initial: &[Constraint]) -> Vec<Constraint> {
        let mut set = initial.to_vec();
        for step in self.steps.iter().filter(|s| s.outcome == Outcome::Accepted) {
            for c in &step.inputs {
                if let Some(i) = set.iter().position(|x| x == c) {
                    set.remove(i);
                }
            }
            set.extend(step.output.clone());
        }
        set.sort();
        set
    }

    pub fn accepted(&self) -> impl Iterator<Item = &MergeStep> {
        self.steps.iter().filter(|s| s.outcome == Outcome::Accepted)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeConfig {
    /// Largest number of subsets one rule P5 check may enumerate.
    pub subset_cap: u64,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            subset_cap: DEFAULT_SUBSET_CAP,
        }
    }
}

/// Supports the merged set is checked against after every merge.
#[derive(Clone, Copy, Debug, Default)]
pub struct StateSets<'a> {
    /// Must satisfy every constraint.
    pub authorized: &'a [PlaceSet],
    /// Must each violate at least one constraint.
    pub border: &'a [PlaceSet],
    /// Other reachable states; their verdict must not change.
    pub other: &'a [PlaceSet],
}

struct Gate<'a> {
    sets: StateSets<'a>,
    other_verdicts: Vec<bool>,
}

impl Gate<'_> {
    fn passes(&self, set: &[Constraint]) -> bool {
        self.sets.authorized.iter().all(|s| admits_support(set, s))
            && self.sets.border.iter().all(|s| !admits_support(set, s))
            && self
                .sets
                .other
                .iter()
                .zip(&self.other_verdicts)
                .all(|(s, &v)| admits_support(set, s) == v)
    }
}

/// A merge found by the scan, before the gate.
struct Candidate {
    rule: Rule,
    inputs: Vec<Constraint>,
    lemmas: Vec<MergeStep>,
    attempt: std::result::Result<Attempt, Error>,
}

type Key = (Rule, Vec<Constraint>);

/// Applies rule P3, then 4, then 5 (first applicable group in canonical
/// order wins) until no rule changes the set. Identical and implied
/// constraints are dropped between merges.
///
/// Input constraints must admit every authorized state and forbid every
/// border state.
pub fn merge_fixpoint(
    constraints: &[Constraint],
    states: StateSets<'_>,
    config: MergeConfig,
) -> Result<(Vec<Constraint>, MergeTrace)> {
    let mut working = constraints.to_vec();
    working.sort();
    let mut trace = MergeTrace::default();
    if working.is_empty() {
        return Ok((working, trace));
    }
    let gate = Gate {
        sets: states,
        other_verdicts: states
            .other
            .iter()
            .map(|s| admits_support(&working, s))
            .collect(),
    };
    if !gate.passes(&working) {
        return Err(Error::Precondition(
            "input constraints must admit every authorized state and forbid every border state"
                .into(),
        ));
    }
    let oracle = AuthorizedSupports(states.authorized.to_vec());
    let mut dead: HashSet<Key> = HashSet::new();

    'outer: loop {
        simplify(&mut working, &mut trace);
        let mut scan = Scan {
            working: &working,
            oracle: &oracle,
            authorized: states.authorized,
            config,
            dead: &mut dead,
        };
        while let Some(cand) = scan.next_candidate() {
            let key = (cand.rule, cand.inputs.clone());
            match cand.attempt {
                Err(Error::CombinatorialLimit { .. }) => {
                    trace.steps.push(MergeStep {
                        rule: cand.rule,
                        inputs: cand.inputs,
                        output: None,
                        evidence: Vec::new(),
                        outcome: Outcome::RejectedByLimit,
                    });
                    scan.dead.insert(key);
                }
                Err(e) => return Err(e),
                Ok(Attempt { merged: None, .. }) => {
                    scan.dead.insert(key);
                }
                Ok(Attempt {
                    merged: Some(out),
                    evidence,
                }) => {
                    let mut next = working.clone();
                    for c in &cand.inputs {
                        if let Some(i) = next.iter().position(|x| x == c) {
                            next.remove(i);
                        }
                    }
                    next.push(out.clone());
                    next.sort();
                    let ok = gate.passes(&next);
                    if ok {
                        trace.steps.extend(cand.lemmas);
                    }
                    trace.steps.push(MergeStep {
                        rule: cand.rule,
                        inputs: cand.inputs,
                        output: Some(out),
                        evidence,
                        outcome: if ok {
                            Outcome::Accepted
                        } else {
                            Outcome::RejectedByGate
                        },
                    });
                    if ok {
                        working = next;
                        continue 'outer;
                    }
                    scan.dead.insert(key);
                }
            }
        }
        break;
    }
    Ok((working, trace))
}

/// Drops duplicates and implied constraints, recording each removal.
fn simplify(working: &mut Vec<Constraint>, trace: &mut MergeTrace) {
    loop {
        let mut hit = None;
        'find: for i in 0..working.len() {
            for j in 0..working.len() {
                if i == j {
                    continue;
                }
                let (a, b) = (&working[i], &working[j]);
                if a == b && i < j {
                    hit = Some((j, i, Rule::Dedupe));
                    break 'find;
                }
                if a != b && implies(b, a) {
                    hit = Some((i, j, Rule::Absorb));
                    break 'find;
                }
            }
        }
        let Some((drop, keep, rule)) = hit else {
            return;
        };
        let kept = working[keep].clone();
        let dropped = working.remove(drop);
        trace.steps.push(MergeStep {
            rule,
            inputs: vec![dropped, kept.clone()],
            output: Some(kept),
            evidence: Vec::new(),
            outcome: Outcome::Accepted,
        });
    }
}

/// `strong ⇒ weak` for nonnegative markings.
fn implies(strong: &Constraint, weak: &Constraint) -> bool {
    strong.place_count() == weak.place_count()
        && strong.bound() <= weak.bound()
        && weak
            .weights()
            .iter()
            .zip(strong.weights())
            .all(|(w, s)| w <= s)
}

struct Scan<'a> {
    working: &'a [Constraint],
    oracle: &'a AuthorizedSupports,
    authorized: &'a [PlaceSet],
    config: MergeConfig,
    dead: &'a mut HashSet<Key>,
}

impl Scan<'_> {
    fn next_candidate(&mut self) -> Option<Candidate> {
        self.prop3()
            .or_else(|| self.prop4())
            .or_else(|| self.prop5())
    }

    fn is_dead(&self, rule: Rule, inputs: &[Constraint]) -> bool {
        self.dead.contains(&(rule, inputs.to_vec()))
    }

    fn prop3(&self) -> Option<Candidate> {
        let mut groups: BTreeMap<(PlaceSet, u32), Vec<usize>> = BTreeMap::new();
        for c in self.working.iter().filter(|c| c.is_unit()) {
            let s = c.support();
            for h in s.iter() {
                groups.entry((s.without(h), c.bound())).or_default().push(h);
            }
        }
        let n = self.working[0].place_count();
        let mut best: Option<Candidate> = None;
        for ((tail, k), heads) in groups {
            if heads.len() < 2 {
                continue;
            }
            for start in 0..heads.len() {
                let (group, lemmas) = self.head_group(n, &heads[start..]);
                if group.len() < 2 {
                    continue;
                }
                let inputs: Vec<Constraint> = group
                    .iter()
                    .map(|h| Constraint::unit(n, &tail.with(h), k))
                    .sorted()
                    .collect();
                if self.is_dead(Rule::P3, &inputs)
                    || best.as_ref().is_some_and(|b| b.inputs <= inputs)
                {
                    continue;
                }
                best = Some(Candidate {
                    rule: Rule::P3,
                    attempt: try_prop3(&group, &tail, k, self.working, self.authorized),
                    inputs,
                    lemmas,
                });
            }
        }
        best
    }

    /// Greedily grows a set of heads, starting from `heads[0]`, no two of
    /// which are marked together in an authorized state (properties 1, 2).
    fn head_group(&self, n: usize, heads: &[usize]) -> (PlaceSet, Vec<MergeStep>) {
        let first = heads[0];
        let mut current: Option<Constraint> = None;
        let mut lemmas = Vec::new();
        for &h in &heads[1..] {
            let (rule, attempt) = match &current {
                None => (Rule::P1, try_prop1(n, first, h, self.oracle)),
                Some(c) => (Rule::P2, try_prop2(c, h, self.oracle)),
            };
            let Ok(Attempt {
                merged: Some(out),
                evidence,
            }) = attempt
            else {
                continue;
            };
            lemmas.push(MergeStep {
                rule,
                inputs: current.iter().cloned().collect(),
                output: Some(out.clone()),
                evidence,
                outcome: Outcome::Derived,
            });
            current = Some(out);
        }
        match current {
            Some(c) => (c.support(), lemmas),
            None => (PlaceSet::singleton(first), lemmas),
        }
    }

    fn units(&self) -> impl Iterator<Item = (usize, &Constraint)> + '_ {
        self.working.iter().enumerate().filter(|(_, c)| c.is_unit())
    }

    fn prop4(&self) -> Option<Candidate> {
        for (i, c1) in self.units() {
            for (_, c2) in self.units().filter(|&(j, _)| j > i) {
                let (a, b) = (c1.support(), c2.support());
                let n = c1.bound() as usize;
                if c1.bound() != c2.bound()
                    || a.len() != n + 1
                    || b.len() != n + 1
                    || a.intersection(&b).len() != n
                {
                    continue;
                }
                let inputs = vec![c1.clone(), c2.clone()];
                if self.is_dead(Rule::P4, &inputs) {
                    continue;
                }
                return Some(Candidate {
                    rule: Rule::P4,
                    attempt: try_prop4(c1, c2, self.oracle),
                    inputs,
                    lemmas: Vec::new(),
                });
            }
        }
        None
    }

    fn prop5(&self) -> Option<Candidate> {
        for (i, c1) in self.units() {
            for (_, c2) in self.units().filter(|&(j, _)| j != i) {
                let (a, b) = (c1.support(), c2.support());
                if c1.bound() != c2.bound()
                    || b.difference(&a).len() != 1
                    || a.difference(&b).is_empty()
                {
                    continue;
                }
                let inputs = vec![c1.clone(), c2.clone()];
                if self.is_dead(Rule::P5, &inputs) {
                    continue;
                }
                return Some(Candidate {
                    rule: Rule::P5,
                    attempt: try_prop5(c1, c2, self.oracle, self.config.subset_cap),
                    inputs,
                    lemmas: Vec::new(),
                });
            }
        }
        None
    }
}
