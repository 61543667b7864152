//! Small nets and state sets used by the tests, the examples and the CLI.
//!
//! The JSON files under `fixtures/` describe the same objects.

use crate::net::PetriNet;
use crate::placeset::PlaceSet;

/// Two processes, each idle/busy. `t1`/`t3` start work (controllable),
/// `t2`/`t4` finish it (uncontrollable). Initially both idle.
pub fn mutex4() -> PetriNet {
    PetriNet::builder()
        .place("P1", true)
        .place("P2", false)
        .place("P3", true)
        .place("P4", false)
        .transition("t1", true, &["P1"], &["P2"])
        .transition("t2", false, &["P2"], &["P1"])
        .transition("t3", true, &["P3"], &["P4"])
        .transition("t4", false, &["P4"], &["P3"])
        .build()
        .expect("mutex4 is well formed")
}

/// [`mutex4`] with a shared resource `P5` taken by `t1`/`t3`.
pub fn mutex4_with_resource() -> PetriNet {
    PetriNet::builder()
        .place("P1", true)
        .place("P2", false)
        .place("P3", true)
        .place("P4", false)
        .place("P5", true)
        .transition("t1", true, &["P1", "P5"], &["P2"])
        .transition("t2", false, &["P2"], &["P1", "P5"])
        .transition("t3", true, &["P3", "P5"], &["P4"])
        .transition("t4", false, &["P4"], &["P3", "P5"])
        .build()
        .expect("mutex4 with resource is well formed")
}

/// [`mutex4`] where starting process A cannot be prevented.
pub fn mutex4_t1_uncontrollable() -> PetriNet {
    mutex4().with_controllable(0, false)
}

/// Five independent two-state components `P(2i-1) <-> P(2i)`; entering the
/// even place is controllable, leaving it is not. Initially all odd places
/// are marked.
pub fn five_pairs() -> PetriNet {
    let names: Vec<String> = example_place_names();
    let mut b = PetriNet::builder();
    for (i, n) in names.iter().enumerate() {
        b = b.place(n, i % 2 == 0);
    }
    for i in 0..5 {
        let odd = names[2 * i].as_str();
        let even = names[2 * i + 1].as_str();
        b = b
            .transition(&format!("a{}", i + 1), true, &[odd], &[even])
            .transition(&format!("b{}", i + 1), false, &[even], &[odd]);
    }
    b.build().expect("five_pairs is well formed")
}

pub fn example_place_names() -> Vec<String> {
    (1..=10).map(|i| format!("P{i}")).collect()
}

fn ps(one_based: &[usize]) -> PlaceSet {
    one_based.iter().map(|p| p - 1).collect()
}

/// The thirteen border forbidden supports of the reduction example, in the
/// column order of its coverage table.
pub fn example_border_supports() -> Vec<PlaceSet> {
    [
        [2, 4, 6, 7, 9],
        [2, 4, 6, 8, 9],
        [2, 4, 6, 7, 10],
        [2, 4, 6, 8, 10],
        [2, 4, 5, 8, 9],
        [2, 4, 5, 7, 10],
        [2, 3, 6, 8, 9],
        [2, 3, 6, 7, 10],
        [1, 4, 6, 8, 9],
        [1, 4, 6, 7, 10],
        [2, 3, 5, 8, 10],
        [1, 4, 5, 8, 10],
        [1, 3, 6, 8, 10],
    ]
    .iter()
    .map(|s| ps(s))
    .collect()
}

/// The ten candidate over-states of the reduction example, in the row order
/// of its coverage table.
pub fn example_candidates() -> Vec<PlaceSet> {
    [
        [2, 4, 6],
        [2, 4, 8],
        [2, 6, 8],
        [4, 6, 8],
        [2, 4, 10],
        [2, 6, 10],
        [4, 6, 10],
        [2, 8, 10],
        [4, 8, 10],
        [6, 8, 10],
    ]
    .iter()
    .map(|s| ps(s))
    .collect()
}

/// An authorized set consistent with the reduction example (its own
/// authorized states are not listed): every choice of one place per pair
/// `P(2i-1)/P(2i)` marking at most two even places.
///
/// Its over-states contain `P6P8` and every pair of even places but no
/// triple of them, which are the memberships the merge example relies on.
pub fn example_authorized() -> Vec<PlaceSet> {
    (0u32..32)
        .filter(|mask| mask.count_ones() <= 2)
        .map(|mask| {
            (0..5)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        2 * i + 1
                    } else {
                        2 * i
                    }
                })
                .collect()
        })
        .collect()
}

/// Authorized supports for the small merge example over `P1..P9`.
///
/// Adjusted from the original listing, which contradicts itself: there
/// `P1P4P5 ⊆ P1P4P5P8` and `P2P5P7 ⊆ P2P3P5P7` although both are meant to be
/// separable forbidden states.
pub fn corrected_merge_authorized() -> (Vec<String>, Vec<PlaceSet>) {
    let names = (1..=9).map(|i| format!("P{i}")).collect();
    let auth = [[1, 3, 5, 7], [2, 3, 6, 7], [1, 4, 6, 8], [2, 4, 6, 8]]
        .iter()
        .map(|s| ps(s))
        .collect();
    (names, auth)
}

/// Forbidden supports of the small merge example: `P1P4P5 P2P4P5 P2P5P7 P4P5P7`.
pub fn corrected_merge_border() -> Vec<PlaceSet> {
    [[1, 4, 5], [2, 4, 5], [2, 5, 7], [4, 5, 7]]
        .iter()
        .map(|s| ps(s))
        .collect()
}
