//! Murty's algorithm: the K cheapest assignments in nondecreasing cost order.
//!
//! The classic scheme solves the problem, then partitions the feasible set
//! around the optimum: child `i` keeps rows `0..i` pinned to the optimal
//! columns, forbids the optimal cell of row `i`, and is re-solved with the
//! Hungarian solver. Children partition the remainder, so every assignment
//! is produced exactly once.
//!
//! Emission is delayed: popping a subproblem pushes its children and
//! re-queues its own solution as a finished entry, and only finished
//! entries popped from the heap are emitted. Because a child's optimum can
//! never beat its parent's, and [`hungarian`] returns the lexicographically
//! smallest optimum of each node, the heap order `(cost, assignment)`
//! yields a globally sorted list with deterministic tie order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use super::{hungarian, Assignment};

enum EntryKind {
    /// Unexpanded subproblem (its constrained cost matrix).
    Node(DMatrix<f64>),
    /// Solution ready to emit.
    Finished,
}

struct Entry {
    cost: f64,
    row_to_col: Vec<usize>,
    kind: EntryKind,
}

impl Entry {
    /// Finished entries sort ahead of nodes at identical keys so an
    /// already-solved assignment is emitted before the node that produced
    /// it is expanded again.
    fn rank(&self) -> u8 {
        match self.kind {
            EntryKind::Finished => 0,
            EntryKind::Node(_) => 1,
        }
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the std max-heap pops the smallest (cost, assignment) first.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.row_to_col.cmp(&other.row_to_col))
            .then_with(|| self.rank().cmp(&other.rank()))
            .reverse()
    }
}

/// The `k` cheapest assignments of `cost`, sorted by total cost with ties
/// in lexicographic assignment order. Returns fewer than `k` entries when
/// the feasible set is smaller, and an empty list when no assignment is
/// feasible at all.
pub fn murty_kbest(cost: &DMatrix<f64>, k: usize) -> Vec<Assignment> {
    let mut results = Vec::with_capacity(k.min(64));
    if k == 0 {
        return results;
    }
    let root = match hungarian(cost) {
        Ok(a) => a,
        Err(_) => return results,
    };
    let mut heap = BinaryHeap::new();
    heap.push(Entry { cost: root.cost, row_to_col: root.row_to_col, kind: EntryKind::Node(cost.clone()) });

    while let Some(entry) = heap.pop() {
        match entry.kind {
            EntryKind::Finished => {
                results.push(Assignment { row_to_col: entry.row_to_col, cost: entry.cost });
                if results.len() == k {
                    break;
                }
            }
            EntryKind::Node(matrix) => {
                expand(&matrix, &entry.row_to_col, &mut heap);
                heap.push(Entry { cost: entry.cost, row_to_col: entry.row_to_col, kind: EntryKind::Finished });
            }
        }
    }
    results
}

/// Push the Murty children of `(matrix, solution)` onto the heap.
fn expand(matrix: &DMatrix<f64>, solution: &[usize], heap: &mut BinaryHeap<Entry>) {
    let (n, m) = matrix.shape();
    let mut pinned = matrix.clone();
    for i in 0..n {
        let mut child = pinned.clone();
        child[(i, solution[i])] = f64::INFINITY;
        if let Ok(opt) = hungarian(&child) {
            heap.push(Entry { cost: opt.cost, row_to_col: opt.row_to_col, kind: EntryKind::Node(child) });
        }
        // Pin row i to its solution column for the remaining children.
        for c in 0..m {
            if c != solution[i] {
                pinned[(i, c)] = f64::INFINITY;
            }
        }
        for r in 0..n {
            if r != i {
                pinned[(r, solution[i])] = f64::INFINITY;
            }
        }
    }
}
