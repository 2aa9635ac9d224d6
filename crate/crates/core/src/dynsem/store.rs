//! The mutable store of the update semantics.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::value::{LocId, UValue};

/// Finite map from locations to values plus a fresh-location counter.
/// Equality ignores the counter and the write count.
#[derive(Clone, Debug, Default)]
pub struct Store {
    cells: BTreeMap<LocId, UValue>,
    next: LocId,
    writes: u64,
}

impl PartialEq for Store {
    fn eq(&self, other: &Self) -> bool {
        self.cells == other.cells
    }
}

impl Eq for Store {}

#[derive(Serialize)]
struct Cell<'a> {
    loc: LocId,
    value: &'a UValue,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    /// A store whose fresh locations start at `next`.
    pub fn starting_at(next: LocId) -> Self {
        Store {
            cells: BTreeMap::new(),
            next,
            writes: 0,
        }
    }

    pub fn get(&self, l: LocId) -> Option<&UValue> {
        self.cells.get(&l)
    }

    pub fn contains(&self, l: LocId) -> bool {
        self.cells.contains_key(&l)
    }

    /// Overwrites or creates the cell at `l`, keeping the counter above it.
    pub fn set(&mut self, l: LocId, v: UValue) {
        self.next = self.next.max(l + 1);
        self.writes += 1;
        self.cells.insert(l, v);
    }

    pub fn remove(&mut self, l: LocId) -> Option<UValue> {
        self.writes += 1;
        self.cells.remove(&l)
    }

    /// Number of `set`/`remove` calls so far; lets callers detect that a
    /// computation wrote to the store without comparing contents.
    pub fn writes(&self) -> u64 {
        self.writes
    }

    pub fn alloc(&mut self, v: UValue) -> LocId {
        let l = self.next;
        self.set(l, v);
        l
    }

    /// Allocates consecutive fresh locations; returns the first (the next
    /// fresh id when `vals` is empty).
    pub fn alloc_block(&mut self, vals: impl IntoIterator<Item = UValue>) -> LocId {
        let base = self.next;
        for (i, v) in vals.into_iter().enumerate() {
            self.set(base + i as LocId, v);
        }
        base
    }

    /// Skips `n` fresh ids without mapping them.
    pub fn reserve(&mut self, n: LocId) -> LocId {
        let base = self.next;
        self.next += n;
        base
    }

    pub fn next_fresh(&self) -> LocId {
        self.next
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn locations(&self) -> BTreeSet<LocId> {
        self.cells.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LocId, &UValue)> {
        self.cells.iter().map(|(l, v)| (*l, v))
    }

    /// Canonical JSON: cells sorted by location, counter omitted.
    pub fn snapshot_json(&self) -> String {
        let cells: Vec<Cell> = self
            .cells
            .iter()
            .map(|(l, v)| Cell { loc: *l, value: v })
            .collect();
        serde_json::to_string(&cells).expect("store values serialise")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_ignores_counter() {
        let mut a = Store::new();
        let mut b = Store::starting_at(10);
        a.set(3, UValue::U32(1));
        b.set(3, UValue::U32(1));
        assert_eq!(a, b);
        assert_ne!(a.next_fresh(), b.next_fresh());
    }

    #[test]
    fn counter_exceeds_mapped_ids() {
        let mut s = Store::new();
        s.set(7, UValue::Unit);
        assert!(s.next_fresh() > 7);
        let l = s.alloc(UValue::Unit);
        assert_eq!(l, 8);
        let base = s.alloc_block([UValue::U8(1), UValue::U8(2)]);
        assert_eq!(base, 9);
        assert_eq!(s.get(10), Some(&UValue::U8(2)));
        assert_eq!(s.get(11), None);
    }

    #[test]
    fn snapshot_sorted_by_location() {
        let mut s = Store::new();
        s.set(5, UValue::U32(2));
        s.set(1, UValue::Bool(true));
        assert_eq!(
            s.snapshot_json(),
            r#"[{"loc":1,"value":{"Bool":true}},{"loc":5,"value":{"U32":2}}]"#
        );
    }
}
