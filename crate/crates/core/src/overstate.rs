//! Over-state reduction: from border forbidden states to a small set of
//! separating over-states.
//!
//! The set of all over-states of authorized states is never built. It is
//! downward closed, so membership is a subset test against the authorized
//! supports, and the useful over-states of a border state are exactly the
//! minimal subsets of its support that fail that test.

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placeset::PlaceSet;

pub const DEFAULT_EXACT_COVER_THRESHOLD: u64 = 1 << 20;

/// Answers "is this set an over-state of some authorized state?".
pub trait OverstateOracle {
    fn is_authorized_overstate(&self, set: &PlaceSet) -> bool;
}

/// Membership by subset test against a list of authorized supports.
#[derive(Clone, Debug, Default)]
pub struct AuthorizedSupports(pub Vec<PlaceSet>);

impl OverstateOracle for AuthorizedSupports {
    fn is_authorized_overstate(&self, set: &PlaceSet) -> bool {
        member_of_a1(set, &self.0)
    }
}

impl<F: Fn(&PlaceSet) -> bool> OverstateOracle for F {
    fn is_authorized_overstate(&self, set: &PlaceSet) -> bool {
        self(set)
    }
}

pub fn is_overstate_of(candidate: &PlaceSet, state_support: &PlaceSet) -> bool {
    candidate.is_subset(state_support)
}

pub fn member_of_a1(candidate: &PlaceSet, authorized_supports: &[PlaceSet]) -> bool {
    authorized_supports
        .iter()
        .any(|s| is_overstate_of(candidate, s))
}

/// Minimal over-states of the border states that are not over-states of any
/// authorized state, in (cardinality, lexicographic) order.
///
/// Fails with [`Error::Uncoverable`] for the first border support none of
/// whose subsets separates it from the authorized states.
pub fn reduce_to_antichain(
    border_supports: &[PlaceSet],
    authorized_supports: &[PlaceSet],
) -> Result<Vec<PlaceSet>> {
    let mut out: Vec<PlaceSet> = Vec::new();
    for border in border_supports {
        if border.is_empty() || member_of_a1(border, authorized_supports) {
            return Err(Error::Uncoverable(border.to_string()));
        }
        let mut found: Vec<PlaceSet> = Vec::new();
        for k in 1..=border.len() {
            for combo in border.iter().combinations(k) {
                let s: PlaceSet = combo.into_iter().collect();
                if found.iter().any(|f| f.is_subset(&s)) {
                    continue;
                }
                if !member_of_a1(&s, authorized_supports) {
                    found.push(s);
                }
            }
        }
        out.extend(found);
    }
    out.sort_by(PlaceSet::canonical_cmp);
    out.dedup();
    Ok(out)
}

/// Containment table between candidate over-states (rows) and border
/// supports (columns).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverTable {
    pub rows: Vec<PlaceSet>,
    pub columns: Vec<PlaceSet>,
    pub cells: Vec<Vec<bool>>,
    pub column_counts: Vec<usize>,
}

pub fn build_cover_table(candidates: &[PlaceSet], border_supports: &[PlaceSet]) -> CoverTable {
    let cells: Vec<Vec<bool>> = candidates
        .iter()
        .map(|r| {
            border_supports
                .iter()
                .map(|c| is_overstate_of(r, c))
                .collect()
        })
        .collect();
    let column_counts = (0..border_supports.len())
        .map(|j| cells.iter().filter(|row| row[j]).count())
        .collect();
    CoverTable {
        rows: candidates.to_vec(),
        columns: border_supports.to_vec(),
        cells,
        column_counts,
    }
}

impl CoverTable {
    /// Rows as CSV, one 0/1 column per border state, with a `C_v` footer.
    pub fn to_csv(&self, names: &[String]) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec!["over-state".to_string()];
        header.extend(self.columns.iter().map(|c| c.label(names)));
        w.write_record(&header).map_err(io)?;
        for (row, cells) in self.rows.iter().zip(&self.cells) {
            let mut rec = vec![row.label(names)];
            rec.extend(cells.iter().map(|&b| u8::from(b).to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        let mut footer = vec!["C_v".to_string()];
        footer.extend(self.column_counts.iter().map(|c| c.to_string()));
        w.write_record(&footer).map_err(io)?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Rows that are the only cover of some column.
    pub fn essential_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.columns.len())
            .filter(|&j| self.column_counts[j] == 1)
            .filter_map(|j| (0..self.rows.len()).find(|&i| self.cells[i][j]))
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMethod {
    /// Essential rows alone cover everything.
    Essential,
    /// Branch and bound proved the completion minimum.
    Exact,
    /// The node budget ran out; the best cover found, no worse than greedy.
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSelection {
    /// Selected row indices, ascending.
    pub rows: Vec<usize>,
    pub essential: Vec<usize>,
    pub method: CoverMethod,
    pub nodes: u64,
}

impl CoverSelection {
    pub fn overstates(&self, table: &CoverTable) -> Vec<PlaceSet> {
        self.rows.iter().map(|&i| table.rows[i].clone()).collect()
    }
}

/// Essential rows first, then a minimum-cardinality completion by branch and
/// bound within `exact_threshold` search nodes, otherwise the greedy result.
pub fn select_cover(table: &CoverTable, exact_threshold: u64) -> Result<CoverSelection> {
    let ncols = table.columns.len();
    if let Some(j) = (0..ncols).find(|&j| table.column_counts[j] == 0) {
        return Err(Error::Uncoverable(table.columns[j].to_string()));
    }
    let row_bits: Vec<FixedBitSet> = table
        .cells
        .iter()
        .map(|cells| {
            let mut b = FixedBitSet::with_capacity(ncols);
            for (j, &c) in cells.iter().enumerate() {
                b.set(j, c);
            }
            b
        })
        .collect();

    let essential = table.essential_rows();
    let mut uncovered = FixedBitSet::with_capacity(ncols);
    uncovered.insert_range(..);
    for &r in &essential {
        uncovered.difference_with(&row_bits[r]);
    }
    if uncovered.is_clear() {
        return Ok(CoverSelection {
            rows: essential.clone(),
            essential,
            method: CoverMethod::Essential,
            nodes: 0,
        });
    }

    let greedy = greedy_cover(&row_bits, &uncovered);
    let mut search = Search {
        rows: &row_bits,
        best: greedy,
        nodes: 0,
        budget: exact_threshold,
        exhausted: false,
    };
    search.branch(&uncovered, &mut Vec::new());

    let mut rows = essential.clone();
    rows.extend(search.best.iter().copied());
    rows.sort_unstable();
    rows.dedup();
    Ok(CoverSelection {
        rows,
        essential,
        method: if search.exhausted {
            CoverMethod::Greedy
        } else {
            CoverMethod::Exact
        },
        nodes: search.nodes,
    })
}

fn greedy_cover(rows: &[FixedBitSet], uncovered: &FixedBitSet) -> Vec<usize> {
    let mut left = uncovered.clone();
    let mut chosen = Vec::new();
    while !left.is_clear() {
        let (best, gain) = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.intersection_count(&left)))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        debug_assert!(gain > 0);
        chosen.push(best);
        left.difference_with(&rows[best]);
    }
    chosen
}

struct Search<'a> {
    rows: &'a [FixedBitSet],
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn branch(&mut self, uncovered: &FixedBitSet, chosen: &mut Vec<usize>) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if uncovered.is_clear() {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        let left = uncovered.count_ones(..);
        let widest = self
            .rows
            .iter()
            .map(|r| r.intersection_count(uncovered))
            .max()
            .unwrap_or(0);
        if widest == 0 {
            return;
        }
        if chosen.len() + left.div_ceil(widest) >= self.best.len() {
            return;
        }
        // branch on the hardest column: the one with fewest covering rows
        let col = uncovered
            .ones()
            .min_by_key(|&j| self.rows.iter().filter(|r| r.contains(j)).count())
            .expect("nonempty");
        for (i, r) in self.rows.iter().enumerate() {
            if !r.contains(col) {
                continue;
            }
            let mut next = uncovered.clone();
            next.difference_with(r);
            chosen.push(i);
            self.branch(&next, chosen);
            chosen.pop();
            if self.exhausted {
                return;
            }
        }
    }
}
