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

//! Chain-traversing top-k search.
//!
//! One query runs on one worker. Each slab is scanned as 32 lanes, lane `j`
//! owning slot `j` and its own bounded candidate list; the lanes are merged
//! once at the end.

use std::sync::atomic::Ordering;

use rayon::prelude::*;

use super::SivfIndex;
use crate::distance::{l2_sq, SearchHit, TopK};
use crate::slab_store::SlabId;
use crate::{Error, Result};

/// Traversal counters for one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub slabs_visited: usize,
    pub slots_evaluated: usize,
    /// Longest chain walked, in slabs.
    pub max_chain_hops: usize,
}

impl SivfIndex {
    /// k nearest live vectors for each row of `queries`, ascending by
    /// (distance, id).
    pub fn search(&self, queries: &[f32], k: usize, nprobe: usize) -> Result<Vec<Vec<SearchHit>>> {
        Ok(self
            .search_instrumented(queries, k, nprobe)?
            .into_iter()
            .map(|(hits, _)| hits)
            .collect())
    }

    /// Search with the configured probe width.
    pub fn search_default(&self, queries: &[f32], k: usize) -> Result<Vec<Vec<SearchHit>>> {
        self.search(queries, k, self.config.nprobe)
    }

    pub fn search_instrumented(
        &self,
        queries: &[f32],
        k: usize,
        nprobe: usize,
    ) -> Result<Vec<(Vec<SearchHit>, SearchStats)>> {
        let dim = self.config.dim;
        if !queries.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: queries.len() % dim,
            });
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if nprobe == 0 || nprobe > self.config.nlist {
            return Err(Error::InvalidParameter(format!(
                "nprobe must be in 1..={}, got {nprobe}",
                self.config.nlist
            )));
        }
        Ok(queries
            .par_chunks(dim)
            .map(|q| {
                let probes = self.centroids.probe_unchecked(q, nprobe);
                self.search_one(q, k, &probes)
            })
            .collect())
    }

    fn search_one(&self, query: &[f32], k: usize, probes: &[u32]) -> (Vec<SearchHit>, SearchStats) {
        let mut top = TopK::new(k);
        let mut stats = SearchStats::default();
        let hop_bound = self.pool.num_slabs();

        for &list in probes {
            let mut link = self.heads.load(list as usize);
            let mut hops = 0;
            while let Some(slab) = SlabId::from_link(link) {
                if hops >= hop_bound {
                    break;
                }
                let meta = self.pool.metadata(slab);
                let next = meta.next_slab.load(Ordering::Acquire);
                if next == link {
                    break;
                }
                hops += 1;
                let mut bits = meta.validity_bitmap.load(Ordering::Acquire);
                while bits != 0 {
                    let slot = bits.trailing_zeros();
                    bits &= bits - 1;
                    // SAFETY: bit `slot` was observed set with acquire
                    // ordering, so the slot's writes happen-before this read
                    // and no writer touches it again.
                    let (row, id) =
                        unsafe { (self.pool.payload(slab, slot), self.pool.slot_id(slab, slot)) };
                    top.push(SearchHit::new(id, l2_sq(query, row)));
                    stats.slots_evaluated += 1;
                }
                link = next;
            }
            stats.slabs_visited += hops;
            stats.max_chain_hops = stats.max_chain_hops.max(hops);
        }
        (top.into_vec(), stats)
    }
}

#[cfg(test)]
mod tests {
    use crate::coarse_quantizer::Centroids;
    use crate::distance::SearchHit;
    use crate::index::{IndexConfig, SivfIndex};

    fn three_points() -> SivfIndex {
        let c = Centroids::from_values(2, vec![0.0, 0.0], 0).unwrap();
        let index = SivfIndex::new(IndexConfig::new(2, 1, 10), c).unwrap();
        index
            .insert_batch(&[0, 1, 2], &[0.0, 0.0, 3.0, 4.0, 1.0, 1.0])
            .unwrap();
        index
    }

    #[test]
    fn hand_computed_hits() {
        let index = three_points();
        let hits = index.search(&[0.0, 0.0], 2, 1).unwrap();
        assert_eq!(
            hits,
            vec![vec![SearchHit::new(0, 0.0), SearchHit::new(2, 2.0)]]
        );
    }

    #[test]
    fn k_larger_than_live_returns_all() {
        let index = three_points();
        let hits = index.search(&[0.0, 0.0], 10, 1).unwrap();
        let ids: Vec<u64> = hits[0].iter().map(|h| h.id).collect();
        assert_eq!(ids, vec![0, 2, 1]);
        assert_eq!(hits[0][2].distance, 25.0);
    }

    #[test]
    fn all_deleted_gives_empty_result() {
        let index = three_points();
        index.delete_batch(&[0, 1, 2]);
        assert_eq!(index.search(&[0.0, 0.0], 3, 1).unwrap(), vec![vec![]]);
    }

    #[test]
    fn ties_break_by_id() {
        let c = Centroids::from_values(1, vec![0.0], 0).unwrap();
        let index = SivfIndex::new(IndexConfig::new(1, 1, 10), c).unwrap();
        index.insert_batch(&[5, 3, 4], &[1.0, -1.0, 1.0]).unwrap();
        let ids: Vec<u64> = index.search(&[0.0], 2, 1).unwrap()[0]
            .iter()
            .map(|h| h.id)
            .collect();
        assert_eq!(ids, vec![3, 4]);
    }

    #[test]
    fn parameter_errors() {
        let index = three_points();
        assert!(index.search(&[0.0, 0.0], 0, 1).is_err());
        assert!(index.search(&[0.0, 0.0], 1, 0).is_err());
        assert!(index.search(&[0.0, 0.0], 1, 2).is_err());
        assert!(index.search(&[0.0], 1, 1).is_err());
    }

    #[test]
    fn traversal_is_bounded_by_chain_length() {
        let c = Centroids::from_values(1, vec![0.0], 0).unwrap();
        let index = SivfIndex::new(IndexConfig::new(1, 1, 200), c).unwrap();
        let ids: Vec<u64> = (0..100).collect();
        let data: Vec<f32> = ids.iter().map(|&i| i as f32).collect();
        index.insert_batch(&ids, &data).unwrap();
        let (hits, stats) = index.search_instrumented(&[0.0], 5, 1).unwrap().remove(0);
        assert_eq!(hits.len(), 5);
        assert_eq!(stats.max_chain_hops, index.chain(0).len());
        assert_eq!(stats.slots_evaluated, 100);
        assert!(stats.max_chain_hops <= index.pool().num_slabs());
    }
}
