// Copyright 2026 The SIVF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Flat id -> (slab, slot) translation table.
//!
//! Entry `u` holds the packed coordinate of vector `u`:
//! `(slab << 32) | slot`. The all-ones word means absent. Coordinate zero
//! (slab 0, slot 0) is a legal live value.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::slab_store::{SlabId, SLAB_CAPACITY};
use crate::{Error, Result};

/// Entry value for an absent id.
pub const INVALID: u64 = u64::MAX;

/// Entry value while an insert owns the id but has not placed it yet.
/// Decodes to slab `u32::MAX`, which no pool can hand out.
const RESERVED: u64 = u64::MAX - 1;

/// Physical location of a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    pub slab: SlabId,
    pub slot: u32,
}

impl Coord {
    pub fn new(slab: SlabId, slot: u32) -> Self {
        debug_assert!((slot as usize) < SLAB_CAPACITY);
        Self { slab, slot }
    }

    #[inline]
    pub fn encode(self) -> u64 {
        encode(self.slab.0, self.slot)
    }

    #[inline]
    pub fn decode(packed: u64) -> Self {
        let (slab, slot) = decode(packed);
        Self {
            slab: SlabId(slab),
            slot,
        }
    }
}

/// Packs a slab index into the high 32 bits and the slot into the low 32.
#[inline]
pub const fn encode(slab: u32, slot: u32) -> u64 {
    ((slab as u64) << 32) | slot as u64
}

#[inline]
pub const fn decode(packed: u64) -> (u32, u32) {
    ((packed >> 32) as u32, packed as u32)
}

/// Fixed-size array of atomic coordinates, one per external id.
#[derive(Debug)]
pub struct AddressTable {
    entries: Box<[AtomicU64]>,
}

impl AddressTable {
    pub fn new(id_capacity: usize) -> Self {
        Self {
            entries: (0..id_capacity).map(|_| AtomicU64::new(INVALID)).collect(),
        }
    }

    pub fn id_capacity(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    fn entry(&self, id: u64) -> Result<&AtomicU64> {
        usize::try_from(id)
            .ok()
            .and_then(|i| self.entries.get(i))
            .ok_or(Error::IdOutOfRange {
                id,
                capacity: self.entries.len(),
            })
    }

    /// Current location of `id`, `None` when absent.
    #[inline]
    pub fn lookup(&self, id: u64) -> Result<Option<Coord>> {
        let raw = self.entry(id)?.load(Ordering::Acquire);
        Ok((raw != INVALID && raw != RESERVED).then(|| Coord::decode(raw)))
    }

    pub fn store(&self, id: u64, coord: Coord) -> Result<()> {
        self.entry(id)?.store(coord.encode(), Ordering::Release);
        Ok(())
    }

    pub fn invalidate(&self, id: u64) -> Result<()> {
        self.entry(id)?.store(INVALID, Ordering::Release);
        Ok(())
    }

    /// Moves `id` from absent to reserved. `false` if the id is live or
    /// already claimed by another insert.
    pub(crate) fn claim(&self, id: u64) -> Result<bool> {
        Ok(self
            .entry(id)?
            .compare_exchange(INVALID, RESERVED, Ordering::AcqRel, Ordering::Acquire)
            .is_ok())
    }

    /// Drops a claim taken by [`AddressTable::claim`] without placing the id.
    pub(crate) fn release_claim(&self, id: u64) {
        if let Ok(entry) = self.entry(id) {
            let _ = entry.compare_exchange(RESERVED, INVALID, Ordering::AcqRel, Ordering::Acquire);
        }
    }

    /// Sets `id` absent only if it still points at `coord`.
    pub(crate) fn invalidate_if(&self, id: u64, coord: Coord) -> bool {
        match self.entry(id) {
            Ok(entry) => entry
                .compare_exchange(coord.encode(), INVALID, Ordering::AcqRel, Ordering::Acquire)
                .is_ok(),
            Err(_) => false,
        }
    }

    /// Ids that currently map to a coordinate. Meant for quiescent checks.
    pub fn live_entries(&self) -> impl Iterator<Item = (u64, Coord)> + '_ {
        self.entries.iter().enumerate().filter_map(|(id, e)| {
            let raw = e.load(Ordering::Acquire);
            (raw != INVALID && raw != RESERVED).then(|| (id as u64, Coord::decode(raw)))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_layout() {
        assert_eq!(encode(5, 3), 0x0000_0005_0000_0003);
        assert_eq!(encode(5, 3), 21_474_836_483);
        assert_eq!(encode(0, 0), 0);
    }

    #[test]
    fn fresh_table_is_absent() {
        let table = AddressTable::new(10);
        assert_eq!(table.lookup(7).unwrap(), None);
    }

    #[test]
    fn store_lookup_invalidate() {
        let table = AddressTable::new(10);
        let c = Coord::new(SlabId(2), 5);
        table.store(7, c).unwrap();
        assert_eq!(table.lookup(7).unwrap(), Some(c));
        table.invalidate(7).unwrap();
        assert_eq!(table.lookup(7).unwrap(), None);
    }

    #[test]
    fn zero_coordinate_is_live() {
        let table = AddressTable::new(1);
        table.store(0, Coord::decode(0)).unwrap();
        assert_eq!(table.lookup(0).unwrap(), Some(Coord::new(SlabId(0), 0)));
    }

    #[test]
    fn out_of_range_is_an_error() {
        let table = AddressTable::new(10);
        assert!(matches!(
            table.lookup(10),
            Err(Error::IdOutOfRange {
                id: 10,
                capacity: 10
            })
        ));
        assert!(table.store(11, Coord::decode(0)).is_err());
        assert!(table.invalidate(u64::MAX).is_err());
    }

    #[test]
    fn claim_hides_entry_and_blocks_second_claim() {
        let table = AddressTable::new(4);
        assert!(table.claim(3).unwrap());
        assert!(!table.claim(3).unwrap());
        assert_eq!(table.lookup(3).unwrap(), None);
        table.release_claim(3);
        assert!(table.claim(3).unwrap());
        table.store(3, Coord::new(SlabId(1), 1)).unwrap();
        assert!(!table.claim(3).unwrap());
    }

    #[test]
    fn invalidate_if_only_matches_current_coordinate() {
        let table = AddressTable::new(2);
        let c = Coord::new(SlabId(4), 9);
        table.store(1, c).unwrap();
        assert!(!table.invalidate_if(1, Coord::new(SlabId(4), 8)));
        assert!(table.invalidate_if(1, c));
        assert_eq!(table.lookup(1).unwrap(), None);
    }

    #[test]
    fn concurrent_stores_to_distinct_ids() {
        let table = AddressTable::new(2);
        std::thread::scope(|s| {
            s.spawn(|| table.store(0, Coord::new(SlabId(10), 1)).unwrap());
            s.spawn(|| table.store(1, Coord::new(SlabId(20), 2)).unwrap());
        });
        assert_eq!(table.lookup(0).unwrap(), Some(Coord::new(SlabId(10), 1)));
        assert_eq!(table.lookup(1).unwrap(), Some(Coord::new(SlabId(20), 2)));
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(slab in 0u32..(1 << 31), slot in 0u32..32) {
            prop_assert_eq!(decode(encode(slab, slot)), (slab, slot));
            prop_assert_ne!(encode(slab, slot), INVALID);
            prop_assert_ne!(encode(slab, slot), RESERVED);
        }
    }
}
