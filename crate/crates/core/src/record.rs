//! Core value types: 64-bit records, sort direction, and the ordering rules
//! shared by the merger model, the sorter, and the oracles.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// A 64-bit word, the unit of merging.
///
/// In plain mode the whole word is the ordering key. In key-value mode the
/// key is bits `[63:32]` and the payload is bits `[31:0]`; ordering only
/// ever reads the key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Record(pub u64);

impl Record {
    /// Builds a key-value record from a 32-bit key and payload.
    pub fn from_kv(key: u32, payload: u32) -> Self {
        Record(((key as u64) << 32) | payload as u64)
    }

    pub fn kv_key(self) -> u32 {
        (self.0 >> 32) as u32
    }

    pub fn kv_payload(self) -> u32 {
        self.0 as u32
    }
}

impl std::fmt::Debug for Record {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for Record {
    fn from(v: u64) -> Self {
        Record(v)
    }
}

/// Sort direction. Descending is the canonical direction: it matches the
/// hardware model's comparator orientation, and ascending is obtained by
/// flipping every comparison rather than by negating keys.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Descending,
    Ascending,
}

/// Ordering rule: direction plus whether comparisons read only the
/// key half of each word.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SortRule {
    pub direction: Direction,
    pub kv_mode: bool,
}

impl SortRule {
    pub fn new(direction: Direction, kv_mode: bool) -> Self {
        SortRule { direction, kv_mode }
    }

    /// The ordering key of a record under this rule.
    pub fn key(&self, r: Record) -> u64 {
        if self.kv_mode {
            r.0 >> 32
        } else {
            r.0
        }
    }

    /// Emission-order comparison: `Greater` means `a` is emitted before `b`
    /// (larger key for descending, smaller key for ascending).
    pub fn emit_cmp(&self, a: Record, b: Record) -> Ordering {
        let ord = self.key(a).cmp(&self.key(b));
        match self.direction {
            Direction::Descending => ord,
            Direction::Ascending => ord.reverse(),
        }
    }

    /// True when `a` strictly precedes `b` in emission order.
    pub fn beats(&self, a: Record, b: Record) -> bool {
        self.emit_cmp(a, b) == Ordering::Greater
    }

    /// Emission-order comparison lifted over validity: a valid record always
    /// precedes an exhausted-input sentinel (`None`).
    pub fn emit_cmp_opt(&self, a: Option<Record>, b: Option<Record>) -> Ordering {
        match (a, b) {
            (Some(x), Some(y)) => self.emit_cmp(x, y),
            (Some(_), None) => Ordering::Greater,
            (None, Some(_)) => Ordering::Less,
            (None, None) => Ordering::Equal,
        }
    }

    /// Returns the offset of the first element that is out of order under
    /// this rule, or `None` when the slice is sorted.
    pub fn first_unsorted_offset(&self, data: &[Record]) -> Option<usize> {
        data.windows(2)
            .position(|p| self.emit_cmp(p[0], p[1]) == Ordering::Less)
            .map(|i| i + 1)
    }

    pub fn is_sorted(&self, data: &[Record]) -> bool {
        self.first_unsorted_offset(data).is_none()
    }
}
