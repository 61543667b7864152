//! Random nets and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use pnsup_core::constraint::Constraint;
use pnsup_core::net::{Marking, PetriNet};
use pnsup_core::partition::ForbiddenSpec;
use pnsup_core::placeset::PlaceSet;
use rand::seq::SliceRandom;
use rand::Rng;

/// A random ordinary net; not necessarily safe.
pub fn random_net<R: Rng>(rng: &mut R, max_places: usize, max_transitions: usize) -> PetriNet {
    let np = rng.gen_range(2..=max_places);
    let nt = rng.gen_range(1..=max_transitions);
    let places: Vec<usize> = (0..np).collect();
    let mut b = PetriNet::builder();
    let names: Vec<String> = (1..=np).map(|i| format!("P{i}")).collect();
    for n in &names {
        b = b.place(n, rng.gen_bool(0.35));
    }
    for t in 0..nt {
        let k_in = rng.gen_range(1..=2.min(np));
        let k_out = rng.gen_range(1..=2.min(np));
        let pre: Vec<&str> = places
            .choose_multiple(rng, k_in)
            .map(|&p| names[p].as_str())
            .collect();
        let post: Vec<&str> = places
            .choose_multiple(rng, k_out)
            .map(|&p| names[p].as_str())
            .collect();
        b = b.transition(&format!("t{}", t + 1), rng.gen_bool(0.6), &pre, &post);
    }
    b.build().expect("generated net is well formed")
}

/// Token-conserving cyclic components, some edges fused into rendezvous
/// transitions across components, optionally a shared resource place. Not
/// always safe once a resource is added.
pub fn random_component_net<R: Rng>(
    rng: &mut R,
    max_places: usize,
    max_transitions: usize,
) -> PetriNet {
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut np = 0;
    while max_places - np >= 2 && comps.len() < 4 {
        let size = rng.gen_range(2..=4).min(max_places - np);
        comps.push((np..np + size).collect());
        np += size;
        if rng.gen_bool(0.25) {
            break;
        }
    }
    let resource = np < max_places && rng.gen_bool(0.3);
    let mut ts: Vec<(Vec<usize>, Vec<usize>, usize)> = Vec::new();
    for (ci, c) in comps.iter().enumerate() {
        for i in 0..c.len() {
            ts.push((vec![c[i]], vec![c[(i + 1) % c.len()]], ci));
        }
        if c.len() > 2 && rng.gen_bool(0.3) {
            // a chord back to the start
            ts.push((vec![c[c.len() - 1]], vec![c[1]], ci));
        }
    }
    ts.shuffle(rng);
    // fuse edges of different components until few enough transitions
    while ts.len() > max_transitions || (ts.len() > 1 && rng.gen_bool(0.25)) {
        let i = rng.gen_range(0..ts.len());
        let Some(j) = (0..ts.len())
            .find(|&j| ts[j].2 != ts[i].2 && !ts[j].0.iter().any(|p| ts[i].0.contains(p)))
        else {
            ts.remove(i);
            continue;
        };
        let (pre, post, _) = ts[j].clone();
        ts[i].0.extend(pre);
        ts[i].1.extend(post);
        ts[i].2 = usize::MAX - i;
        ts.remove(j);
    }
    ts.retain(|_| rng.gen_bool(0.9));
    if ts.is_empty() {
        ts.push((vec![comps[0][0]], vec![comps[0][1]], 0));
    }
    let names: Vec<String> = (1..=np + usize::from(resource))
        .map(|i| format!("P{i}"))
        .collect();
    let mut marked = vec![false; names.len()];
    for c in &comps {
        marked[*c.choose(rng).unwrap()] = true;
    }
    if resource {
        marked[np] = true;
        for t in ts.iter_mut() {
            match rng.gen_range(0..4) {
                0 => t.0.push(np),
                1 => t.1.push(np),
                _ => {}
            }
        }
    }
    let mut b = PetriNet::builder();
    for (n, &m) in names.iter().zip(&marked) {
        b = b.place(n, m);
    }
    for (t, (pre, post, _)) in ts.iter().enumerate() {
        let pre: Vec<&str> = pre.iter().map(|&p| names[p].as_str()).collect();
        let post: Vec<&str> = post.iter().map(|&p| names[p].as_str()).collect();
        b = b.transition(&format!("t{}", t + 1), rng.gen_bool(0.65), &pre, &post);
    }
    b.build().expect("generated net is well formed")
}

/// A random safe net with between `min_states` and `max_states` reachable
/// states.
pub fn random_safe_net<R: Rng>(
    rng: &mut R,
    max_places: usize,
    max_transitions: usize,
    min_states: usize,
    max_states: usize,
) -> PetriNet {
    loop {
        let net = if rng.gen_bool(0.8) {
            random_component_net(rng, max_places, max_transitions)
        } else {
            random_net(rng, max_places, max_transitions)
        };
        if net.initial_marking().marked_places().is_empty() {
            continue;
        }
        if let Ok(g) = net.reach(max_states) {
            if g.len() >= min_states {
                return net;
            }
        }
    }
}

/// A random forbidden spec over the reachable supports of `net`.
pub fn random_spec<R: Rng>(rng: &mut R, net: &PetriNet, reachable: &[PlaceSet]) -> ForbiddenSpec {
    let mut spec = ForbiddenSpec::default();
    match rng.gen_range(0..3) {
        0 => {
            // never the initial marking itself
            let rest = &reachable[1.min(reachable.len() - 1)..];
            let k = rng.gen_range(1..=3.min(rest.len()));
            spec.forbidden_markings = rest.choose_multiple(rng, k).cloned().collect();
        }
        1 => {
            let n = net.place_count();
            let size = rng.gen_range(2..=n.min(4));
            let places: PlaceSet = (0..n)
                .collect::<Vec<_>>()
                .choose_multiple(rng, size)
                .copied()
                .collect();
            let bound = rng.gen_range(1..size as u32);
            spec.forbidden_constraints = vec![Constraint::unit(n, &places, bound)];
        }
        _ => {
            let rest = &reachable[1.min(reachable.len() - 1)..];
            spec.forbidden_markings = vec![rest.choose(rng).unwrap().clone()];
            spec.forbid_deadlocks = true;
        }
    }
    spec
}

pub fn mask(s: &PlaceSet) -> u32 {
    s.iter().fold(0, |m, p| m | (1 << p))
}

pub fn unmask(m: u32) -> PlaceSet {
    (0..32).filter(|p| m & (1 << p) != 0).collect()
}

/// Reachability by plain worklist over bitmasks, independent of
/// `PetriNet::reach`. `None` if some firing is unsafe.
pub struct Oracle {
    pub states: Vec<u32>,
    /// `(source, transition, target)`.
    pub edges: Vec<(usize, usize, usize)>,
}

pub fn oracle_reach(net: &PetriNet) -> Option<Oracle> {
    let pre: Vec<u32> = (0..net.transition_count())
        .map(|t| mask(net.inputs(t)))
        .collect();
    let post: Vec<u32> = (0..net.transition_count())
        .map(|t| mask(net.outputs(t)))
        .collect();
    let m0 = mask(&net.initial_marking().marked_places());
    let mut index = HashMap::from([(m0, 0usize)]);
    let mut states = vec![m0];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let m = states[s];
        for t in 0..pre.len() {
            if m & pre[t] != pre[t] {
                continue;
            }
            let cleared = m & !pre[t];
            if cleared & post[t] != 0 {
                return None;
            }
            let next = cleared | post[t];
            let j = *index.entry(next).or_insert_with(|| {
                states.push(next);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            edges.push((s, t, j));
        }
    }
    Some(Oracle { states, edges })
}

/// Brute-force partition: `(authorized, forbidden, border)` as support
/// masks.
pub struct OraclePartition {
    pub authorized: BTreeSet<u32>,
    pub forbidden: BTreeSet<u32>,
    pub border: BTreeSet<u32>,
    pub initial_forbidden: bool,
}

pub fn oracle_partition(net: &PetriNet, o: &Oracle, spec: &ForbiddenSpec) -> OraclePartition {
    let n = o.states.len();
    let has_succ: Vec<bool> = (0..n).map(|s| o.edges.iter().any(|e| e.0 == s)).collect();
    let forb_masks: Vec<u32> = spec.forbidden_markings.iter().map(mask).collect();
    let mut bad: Vec<bool> = (0..n)
        .map(|s| {
            let m = o.states[s];
            let marking = Marking::from_support(net.place_count(), &unmask(m));
            forb_masks.contains(&m)
                || spec
                    .forbidden_constraints
                    .iter()
                    .any(|c| !c.satisfied_by(&marking))
                || (spec.forbid_deadlocks && !has_succ[s])
        })
        .collect();
    // fixpoint over uncontrollable edges
    loop {
        let mut changed = false;
        for &(s, t, j) in &o.edges {
            if !net.transitions()[t].controllable && bad[j] && !bad[s] {
                bad[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let initial_forbidden = bad[0];
    let mut auth = vec![false; n];
    if !initial_forbidden {
        auth[0] = true;
        loop {
            let mut changed = false;
            for &(s, _, j) in &o.edges {
                if auth[s] && !bad[j] && !auth[j] {
                    auth[j] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    let authorized = (0..n).filter(|&s| auth[s]).map(|s| o.states[s]).collect();
    let forbidden = (0..n).filter(|&s| !auth[s]).map(|s| o.states[s]).collect();
    let border = o
        .edges
        .iter()
        .filter(|&&(s, t, j)| net.transitions()[t].controllable && auth[s] && !auth[j])
        .map(|&(_, _, j)| o.states[j])
        .collect();
    OraclePartition {
        authorized,
        forbidden,
        border,
        initial_forbidden,
    }
}

/// `Σ w·m ≤ b` on a support mask.
pub fn satisfies(c: &Constraint, m: u32) -> bool {
    let s: u64 = c
        .weights()
        .iter()
        .enumerate()
        .filter(|(p, _)| m & (1 << p) != 0)
        .map(|(_, &w)| u64::from(w))
        .sum();
    s <= u64::from(c.bound())
}

pub fn admits_all(cs: &[Constraint], m: u32) -> bool {
    cs.iter().all(|c| satisfies(c, m))
}

/// Minimum cover size: tries row subsets of size 0, 1, 2, ... until one
/// covers every column.
pub fn exhaustive_min_cover(cells: &[Vec<bool>]) -> Option<usize> {
    let rows = cells.len();
    let cols = cells.first().map_or(0, Vec::len);
    assert!(rows < 32 && cols < 64);
    let row_masks: Vec<u64> = cells
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, &c)| c)
                .fold(0, |m, (j, _)| m | (1 << j))
        })
        .collect();
    let full: u64 = (1 << cols) - 1;
    for k in 0..=rows {
        // Gosper's hack over k-subsets of the rows
        if k == 0 {
            if full == 0 {
                return Some(0);
            }
            continue;
        }
        let mut sel: u32 = (1 << k) - 1;
        while sel < (1 << rows) {
            let covered = (0..rows)
                .filter(|i| sel & (1 << i) != 0)
                .fold(0u64, |m, i| m | row_masks[i]);
            if covered == full {
                return Some(k);
            }
            let c = sel & sel.wrapping_neg();
            let r = sel + c;
            sel = (((r ^ sel) >> 2) / c) | r;
        }
    }
    None
}

/// Closed-loop reachable set by worklist over `(support mask, monitor
/// counts)`; each monitor is given by its incidence row and initial count.
pub fn oracle_closed_loop(net: &PetriNet, monitors: &[(Vec<i64>, u64)]) -> Vec<(u32, Vec<u64>)> {
    let nt = net.transition_count();
    let pre: Vec<u32> = (0..nt).map(|t| mask(net.inputs(t))).collect();
    let post: Vec<u32> = (0..nt).map(|t| mask(net.outputs(t))).collect();
    let init = (
        mask(&net.initial_marking().marked_places()),
        monitors.iter().map(|m| m.1).collect::<Vec<u64>>(),
    );
    let mut seen = HashMap::from([(init.clone(), ())]);
    let mut order = vec![init.clone()];
    let mut queue = VecDeque::from([init]);
    while let Some((m, c)) = queue.pop_front() {
        for t in 0..nt {
            if m & pre[t] != pre[t] {
                continue;
            }
            let ok = monitors
                .iter()
                .zip(&c)
                .all(|((row, _), &k)| row[t] >= 0 || k >= row[t].unsigned_abs());
            if !ok {
                continue;
            }
            let next_m = (m & !pre[t]) | post[t];
            let next_c: Vec<u64> = monitors
                .iter()
                .zip(&c)
                .map(|((row, _), &k)| (k as i64 + row[t]) as u64)
                .collect();
            let key = (next_m, next_c);
            if seen.insert(key.clone(), ()).is_none() {
                order.push(key.clone());
                queue.push_back(key);
            }
        }
    }
    order
}

/// Minimal subsets of the border supports that are inside no authorized
/// support, by enumerating every subset.
pub fn brute_antichain(border: &[PlaceSet], authorized: &[PlaceSet]) -> BTreeSet<u32> {
    let auth: Vec<u32> = authorized.iter().map(mask).collect();
    let in_a1 = |m: u32| auth.iter().any(|&a| m & a == m);
    let mut sep = BTreeSet::new();
    for b in border {
        let bm = mask(b);
        // all submasks
        let mut s = bm;
        loop {
            if s != 0 && !in_a1(s) {
                sep.insert(s);
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & bm;
        }
    }
    sep.iter()
        .copied()
        .filter(|&s| !sep.iter().any(|&t| t != s && t & s == t))
        .collect()
}
