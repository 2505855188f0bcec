//! Track labels.

use serde::{Deserialize, Serialize};

/// Identity of a track: the scan it was born on plus a per-scan index.
///
/// Labels order lexicographically by `(birth_scan, index)`, which gives every
/// label-set and map in the crate a canonical, deterministic iteration order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Label {
    /// Scan index at which the track hypothesis was first instantiated.
    pub birth_scan: u32,
    /// Position within that scan's birth model, starting at 1.
    pub index: u32,
}

impl Label {
    pub fn new(birth_scan: u32, index: u32) -> Self {
        Self { birth_scan, index }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.birth_scan, self.index)
    }
}
