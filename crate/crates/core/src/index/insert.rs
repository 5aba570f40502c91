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

//! Lock-free ingestion.

use std::sync::atomic::Ordering;

use rayon::prelude::*;

use super::SivfIndex;
use crate::address_table::Coord;
use crate::slab_store::{SlabId, SLAB_CAPACITY};
use crate::{Error, Result};

const PAR_MIN_ITEMS: usize = 256;

/// Outcome of inserting one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsertStatus {
    Ok,
    /// The target list needed a new slab and the pool had none left.
    PoolExhausted,
    /// Contention kept the item from landing within the retry budget.
    RetryLimitExceeded,
    /// The id is already live (or being inserted by another thread).
    DuplicateLiveId,
    IdOutOfRange,
}

impl InsertStatus {
    pub fn is_ok(self) -> bool {
        self == InsertStatus::Ok
    }
}

impl SivfIndex {
    /// Routes each vector to its nearest list and inserts it.
    ///
    /// `vectors` is row-major with one row per id. Returns one status per
    /// item in input order. A failed item leaves the index as it was, apart
    /// from slabs leaked by lost head publications.
    pub fn insert_batch(&self, ids: &[u64], vectors: &[f32]) -> Result<Vec<InsertStatus>> {
        self.check_rows(ids.len(), vectors)?;
        let lists = self.centroids.assign(vectors)?;
        Ok(self.insert_rows(ids, vectors, &lists))
    }

    /// Inserts with list assignments computed by the caller, e.g. to share
    /// one quantization pass between several indexes.
    pub fn insert_batch_assigned(
        &self,
        ids: &[u64],
        vectors: &[f32],
        lists: &[u32],
    ) -> Result<Vec<InsertStatus>> {
        self.check_rows(ids.len(), vectors)?;
        if lists.len() != ids.len() {
            return Err(Error::InvalidParameter(format!(
                "{} list assignments for {} ids",
                lists.len(),
                ids.len()
            )));
        }
        if let Some(bad) = lists.iter().find(|&&l| l as usize >= self.config.nlist) {
            return Err(Error::InvalidParameter(format!("list {bad} out of range")));
        }
        Ok(self.insert_rows(ids, vectors, lists))
    }

    fn check_rows(&self, rows: usize, vectors: &[f32]) -> Result<()> {
        let dim = self.config.dim;
        if vectors.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                expected: rows * dim,
                actual: vectors.len(),
            });
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim });
        }
        Ok(())
    }

    fn insert_rows(&self, ids: &[u64], vectors: &[f32], lists: &[u32]) -> Vec<InsertStatus> {
        let dim = self.config.dim;
        (0..ids.len())
            .into_par_iter()
            .with_min_len(PAR_MIN_ITEMS)
            .map(|i| self.insert_one(ids[i], &vectors[i * dim..(i + 1) * dim], lists[i] as usize))
            .collect()
    }

    fn insert_one(&self, id: u64, vector: &[f32], list: usize) -> InsertStatus {
        match self.table.claim(id) {
            Err(_) => return InsertStatus::IdOutOfRange,
            Ok(false) => return InsertStatus::DuplicateLiveId,
            Ok(true) => {}
        }

        for _ in 0..self.config.retry_limit {
            let head = self.heads.load(list);
            if let Some(slab) = SlabId::from_link(head) {
                let count = &self.pool.metadata(slab).valid_count;
                let c = count.load(Ordering::Acquire);
                if (c as usize) < SLAB_CAPACITY {
                    if count
                        .compare_exchange(c, c + 1, Ordering::AcqRel, Ordering::Acquire)
                        .is_ok()
                    {
                        self.publish(id, vector, Coord::new(slab, c));
                        return InsertStatus::Ok;
                    }
                    // Lost the slot to another writer; re-read head and count.
                    continue;
                }
            }

            let Ok(fresh) = self.pool.allocate_slab() else {
                self.table.release_claim(id);
                return InsertStatus::PoolExhausted;
            };
            let meta = self.pool.metadata(fresh);
            meta.valid_count.store(1, Ordering::Relaxed);
            meta.validity_bitmap.store(0, Ordering::Relaxed);
            meta.evicted.store(0, Ordering::Relaxed);
            meta.next_slab.store(head, Ordering::Relaxed);
            // The CAS releases the metadata writes above to whoever acquires
            // the new head.
            if self.heads.publish(list, head, fresh) {
                self.publish(id, vector, Coord::new(fresh, 0));
                return InsertStatus::Ok;
            }
            self.leaked_slabs.fetch_add(1, Ordering::Relaxed);
        }

        self.table.release_claim(id);
        InsertStatus::RetryLimitExceeded
    }

    /// Fills a reserved slot and makes it visible.
    fn publish(&self, id: u64, vector: &[f32], coord: Coord) {
        // SAFETY: the slot was reserved by this thread (count CAS or fresh
        // slab) and its validity bit is clear, so nobody else reads or
        // writes it.
        unsafe { self.pool.write_slot(coord.slab, coord.slot, id, vector) };
        self.table
            .store(id, coord)
            .expect("id was range-checked by claim");
        self.live_count.fetch_add(1, Ordering::AcqRel);
        self.pool
            .metadata(coord.slab)
            .validity_bitmap
            .fetch_or(1 << coord.slot, Ordering::Release);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse_quantizer::Centroids;
    use crate::index::IndexConfig;
    use crate::slab_store::NO_SLAB;

    fn one_list(dim: usize, expected_n: usize) -> SivfIndex {
        let c = Centroids::from_values(dim, vec![0.0; dim], 0).unwrap();
        SivfIndex::new(IndexConfig::new(dim, 1, expected_n), c).unwrap()
    }

    #[test]
    fn first_insert_allocates_head() {
        let index = one_list(2, 100);
        let st = index.insert_batch(&[7], &[1.0, 2.0]).unwrap();
        assert_eq!(st, vec![InsertStatus::Ok]);
        let chain = index.chain(0);
        assert_eq!(chain.len(), 1);
        let meta = index.slab_metadata(chain[0]);
        assert_eq!(meta.valid_count, 1);
        assert_eq!(meta.validity_bitmap, 1);
        assert_eq!(meta.next_slab, NO_SLAB);
        assert_eq!(index.heads().load(0), chain[0].as_link());
        assert_eq!(index.coordinate(7).unwrap(), Some(Coord::new(chain[0], 0)));
        assert_eq!(index.vector(7), Some(vec![1.0, 2.0]));
    }

    #[test]
    fn thirty_third_insert_grows_chain() {
        let index = one_list(1, 100);
        let ids: Vec<u64> = (0..33).collect();
        let data: Vec<f32> = ids.iter().map(|&i| i as f32).collect();
        for (id, v) in ids.iter().zip(&data) {
            assert_eq!(
                index.insert_batch(&[*id], &[*v]).unwrap(),
                vec![InsertStatus::Ok]
            );
        }
        let chain = index.chain(0);
        assert_eq!(chain.len(), 2);
        let head = index.slab_metadata(chain[0]);
        let tail = index.slab_metadata(chain[1]);
        assert_eq!((head.valid_count, head.live_slots()), (1, 1));
        assert_eq!((tail.valid_count, tail.live_slots()), (32, 32));
        assert_eq!(head.next_slab, chain[1].as_link());
        assert_eq!(index.coordinate(32).unwrap(), Some(Coord::new(chain[0], 0)));
        assert!(index.verify_quiescent().is_empty());
    }

    #[test]
    fn duplicate_and_out_of_range_ids() {
        let index = one_list(1, 10);
        let cap = index.id_capacity() as u64;
        let st = index.insert_batch(&[3, 3, cap], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            st,
            vec![
                InsertStatus::Ok,
                InsertStatus::DuplicateLiveId,
                InsertStatus::IdOutOfRange
            ]
        );
        assert_eq!(index.live_count(), 1);
        assert_eq!(index.vector(3), Some(vec![0.0]));
        // Deleted ids may come back.
        assert_eq!(index.delete_batch(&[3]), 1);
        assert_eq!(
            index.insert_batch(&[3], &[5.0]).unwrap(),
            vec![InsertStatus::Ok]
        );
        assert_eq!(index.vector(3), Some(vec![5.0]));
    }

    #[test]
    fn exhausted_pool_reports_status() {
        // One slab of 32 slots.
        let c = Centroids::from_values(1, vec![0.0], 0).unwrap();
        let cfg = IndexConfig::new(1, 1, 32).with_factors(1.0, 1.0);
        let index = SivfIndex::new(cfg, c).unwrap();
        assert_eq!(index.pool().num_slabs(), 1);
        let ids: Vec<u64> = (0..32).collect();
        let data = vec![0.5f32; 32];
        assert!(index
            .insert_batch(&ids, &data)
            .unwrap()
            .iter()
            .all(|s| s.is_ok()));
        assert_eq!(index.pool().stack_top(), 0);
        // id capacity is 32, so reuse a deleted id for the overflow attempt.
        index.delete_batch(&[0]);
        assert_eq!(
            index.insert_batch(&[0], &[1.0]).unwrap(),
            vec![InsertStatus::PoolExhausted]
        );
        assert_eq!(index.coordinate(0).unwrap(), None);
        assert!(index.verify_quiescent().is_empty());
    }

    #[test]
    fn rejects_malformed_batches() {
        let index = one_list(2, 10);
        assert!(matches!(
            index.insert_batch(&[1], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            index.insert_batch(&[1], &[1.0, f32::NAN]),
            Err(Error::NonFinite { row: 0 })
        ));
        assert!(index
            .insert_batch_assigned(&[1], &[1.0, 1.0], &[4])
            .is_err());
        assert_eq!(index.live_count(), 0);
    }

    #[test]
    fn retry_limit_of_one_still_lands_uncontended() {
        let c = Centroids::from_values(1, vec![0.0], 0).unwrap();
        let mut cfg = IndexConfig::new(1, 1, 100);
        cfg.retry_limit = 1;
        let index = SivfIndex::new(cfg, c).unwrap();
        for id in 0..40 {
            assert_eq!(
                index.insert_batch(&[id], &[0.0]).unwrap(),
                vec![InsertStatus::Ok]
            );
        }
    }
}
