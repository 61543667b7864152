//! Sets of places.
//!
//! A [`PlaceSet`] is the support of a boolean marking and, when nonempty, an
//! over-state: forbidding it forbids every marking whose support contains it.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A set of place indices, kept sorted and free of duplicates.
///
/// The derived ordering is lexicographic on the sorted members. Use
/// [`PlaceSet::canonical_cmp`] for the (cardinality, lexicographic) order used
/// when listing over-states.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlaceSet(Vec<usize>);

impl PlaceSet {
    pub fn empty() -> Self {
        PlaceSet(Vec::new())
    }

    pub fn singleton(p: usize) -> Self {
        PlaceSet(vec![p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// `self ⊆ other`. Both sides are sorted, so this is a linear merge.
    pub fn is_subset(&self, other: &PlaceSet) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for a in &self.0 {
            for b in it.by_ref() {
                if b == a {
                    continue 'outer;
                }
                if b > a {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn union(&self, other: &PlaceSet) -> PlaceSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn intersection(&self, other: &PlaceSet) -> PlaceSet {
        self.iter().filter(|p| other.contains(*p)).collect()
    }

    pub fn difference(&self, other: &PlaceSet) -> PlaceSet {
        self.iter().filter(|p| !other.contains(*p)).collect()
    }

    pub fn with(&self, p: usize) -> PlaceSet {
        self.iter().chain(std::iter::once(p)).collect()
    }

    pub fn without(&self, p: usize) -> PlaceSet {
        self.iter().filter(|&q| q != p).collect()
    }

    pub fn canonical_cmp(&self, other: &PlaceSet) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }

    /// Members joined without separator, e.g. `P2P4P6`.
    pub fn label(&self, names: &[String]) -> String {
        self.iter().map(|p| names[p].as_str()).collect()
    }

    /// Members separated by spaces, e.g. `P2 P4 P6`.
    pub fn spaced(&self, names: &[String]) -> String {
        self.iter()
            .map(|p| names[p].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn ids(&self, names: &[String]) -> Vec<String> {
        self.iter().map(|p| names[p].clone()).collect()
    }
}

impl FromIterator<usize> for PlaceSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        PlaceSet(v)
    }
}

impl<const N: usize> From<[usize; N]> for PlaceSet {
    fn from(a: [usize; N]) -> Self {
        a.into_iter().collect()
    }
}

impl fmt::Display for PlaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}
