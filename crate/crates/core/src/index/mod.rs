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

//! The streaming IVF index.
//!
//! Every operation on [`SivfIndex`] except [`SivfIndex::reclaim_quiescent`]
//! takes `&self` and may run concurrently with any other. The publication
//! contract:
//!
//! * a new slab's metadata is written before the head CAS that links it,
//!   which uses release ordering;
//! * a slot's payload, id and table entry are written before its validity
//!   bit is set with a release RMW;
//! * readers load heads and bitmaps with acquire ordering and only touch
//!   slots whose bit they observed set.

mod delete;
mod insert;
mod search;

use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};

use crate::address_table::{AddressTable, Coord};
use crate::coarse_quantizer::{Centroids, DEFAULT_ITERS};
use crate::slab_store::{
    MetadataSnapshot, SlabId, SlabPool, METADATA_STRIDE, NO_SLAB, SLAB_CAPACITY,
};
use crate::{Error, Result};

pub use delete::DeleteReport;
pub use insert::InsertStatus;
pub use search::SearchStats;

/// Attempts per item before an insert gives up.
pub const DEFAULT_RETRY_LIMIT: u32 = 1000;

/// Construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexConfig {
    pub dim: usize,
    pub nlist: usize,
    /// Probe width used by [`SivfIndex::search_default`].
    pub nprobe: usize,
    /// Number of vectors the caller plans to keep addressable.
    pub expected_n: usize,
    /// Id-space headroom: the table holds `ceil(maxvec_factor * expected_n)` ids.
    pub maxvec_factor: f64,
    /// Slab pool headroom over the minimum needed to hold the id space.
    pub slab_factor: f64,
    pub seed: u64,
    pub train_iters: usize,
    pub retry_limit: u32,
    pub memory_budget: Option<usize>,
}

impl IndexConfig {
    pub fn new(dim: usize, nlist: usize, expected_n: usize) -> Self {
        Self {
            dim,
            nlist,
            nprobe: nlist.clamp(1, 8),
            expected_n,
            maxvec_factor: 1.2,
            slab_factor: 1.2,
            seed: 0,
            train_iters: DEFAULT_ITERS,
            retry_limit: DEFAULT_RETRY_LIMIT,
            memory_budget: None,
        }
    }

    pub fn with_factors(mut self, maxvec_factor: f64, slab_factor: f64) -> Self {
        self.maxvec_factor = maxvec_factor;
        self.slab_factor = slab_factor;
        self
    }

    pub fn with_nprobe(mut self, nprobe: usize) -> Self {
        self.nprobe = nprobe;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Size of the id space.
    pub fn id_capacity(&self) -> usize {
        ceil_mul(self.maxvec_factor, self.expected_n)
    }

    /// Slab pool size: `ceil(slab_factor * ceil(id_capacity / 32))`.
    pub fn num_slabs(&self) -> usize {
        ceil_mul(self.slab_factor, self.id_capacity().div_ceil(SLAB_CAPACITY)).max(1)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.dim == 0 || self.nlist == 0 || self.expected_n == 0 {
            return bad("dim, nlist and expected_n must be at least 1".into());
        }
        if !(self.maxvec_factor.is_finite() && self.maxvec_factor > 0.0) {
            return bad(format!(
                "maxvec_factor must be positive, got {}",
                self.maxvec_factor
            ));
        }
        if !(self.slab_factor.is_finite() && self.slab_factor > 0.0) {
            return bad(format!(
                "slab_factor must be positive, got {}",
                self.slab_factor
            ));
        }
        if self.nprobe == 0 || self.nprobe > self.nlist {
            return bad(format!(
                "nprobe must be in 1..={}, got {}",
                self.nlist, self.nprobe
            ));
        }
        if self.retry_limit == 0 {
            return bad("retry_limit must be at least 1".into());
        }
        Ok(())
    }
}

/// `ceil(factor * n)`, ignoring float noise below 1e-9.
fn ceil_mul(factor: f64, n: usize) -> usize {
    let exact = factor * n as f64;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 * exact.max(1.0) {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Per-list head slab, [`NO_SLAB`] when the list is empty.
#[derive(Debug)]
pub struct ListHeads {
    heads: Box<[AtomicI64]>,
}

impl ListHeads {
    pub fn new(nlist: usize) -> Self {
        Self {
            heads: (0..nlist).map(|_| AtomicI64::new(NO_SLAB)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    #[inline]
    pub fn load(&self, list: usize) -> i64 {
        self.heads[list].load(Ordering::Acquire)
    }

    pub fn store(&self, list: usize, link: i64) {
        self.heads[list].store(link, Ordering::Release);
    }

    /// Publishes `new` as head of `list` if the head is still `current`.
    #[inline]
    pub fn publish(&self, list: usize, current: i64, new: SlabId) -> bool {
        self.heads[list]
            .compare_exchange(current, new.as_link(), Ordering::AcqRel, Ordering::Acquire)
            .is_ok()
    }

    pub(crate) fn slots_mut(&mut self) -> impl Iterator<Item = &mut AtomicI64> {
        self.heads.iter_mut()
    }
}

/// Memory and counter snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexStats {
    pub live_count: u64,
    pub deleted_count: u64,
    pub slabs_in_use: usize,
    pub leaked_slabs: u64,
    pub metadata_bytes: usize,
    pub payload_bytes: usize,
    /// `metadata_bytes / payload_bytes`, zero for an empty index.
    pub overhead_ratio: f64,
    /// Bytes reserved by the pool and address table. Fixed after construction.
    pub arena_bytes: usize,
}

/// Concurrent streaming IVF index over a slab pool.
#[derive(Debug)]
pub struct SivfIndex {
    config: IndexConfig,
    centroids: Centroids,
    pool: SlabPool,
    table: AddressTable,
    heads: ListHeads,
    live_count: AtomicU64,
    deleted_count: AtomicU64,
    leaked_slabs: AtomicU64,
}

impl SivfIndex {
    /// Builds an empty index over pre-trained centroids.
    pub fn new(config: IndexConfig, centroids: Centroids) -> Result<Self> {
        config.validate()?;
        if centroids.dim() != config.dim {
            return Err(Error::DimensionMismatch {
                expected: config.dim,
                actual: centroids.dim(),
            });
        }
        if centroids.nlist() != config.nlist {
            return Err(Error::InvalidParameter(format!(
                "config expects {} lists, centroids have {}",
                config.nlist,
                centroids.nlist()
            )));
        }
        let id_capacity = config.id_capacity();
        let num_slabs = config.num_slabs();
        let pool = match config.memory_budget {
            Some(budget) => SlabPool::with_memory_budget(config.dim, num_slabs, budget)?,
            None => SlabPool::new(config.dim, num_slabs)?,
        };
        Ok(Self {
            heads: ListHeads::new(config.nlist),
            table: AddressTable::new(id_capacity),
            pool,
            centroids,
            config,
            live_count: AtomicU64::new(0),
            deleted_count: AtomicU64::new(0),
            leaked_slabs: AtomicU64::new(0),
        })
    }

    /// Trains centroids on `training` (row-major, `config.dim` wide) and
    /// builds an empty index over them.
    pub fn train(config: IndexConfig, training: &[f32]) -> Result<Self> {
        let centroids = Centroids::train(
            training,
            config.dim,
            config.nlist,
            config.train_iters,
            config.seed,
        )?;
        Self::new(config, centroids)
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn nlist(&self) -> usize {
        self.config.nlist
    }

    pub fn id_capacity(&self) -> usize {
        self.table.id_capacity()
    }

    pub fn pool(&self) -> &SlabPool {
        &self.pool
    }

    pub fn heads(&self) -> &ListHeads {
        &self.heads
    }

    pub fn live_count(&self) -> u64 {
        self.live_count.load(Ordering::Acquire)
    }

    pub fn deleted_count(&self) -> u64 {
        self.deleted_count.load(Ordering::Acquire)
    }

    pub fn stats(&self) -> IndexStats {
        let slabs_in_use = self.pool.slabs_in_use();
        let metadata_bytes = slabs_in_use * METADATA_STRIDE;
        let payload_bytes = slabs_in_use * self.pool.payload_bytes_per_slab();
        IndexStats {
            live_count: self.live_count(),
            deleted_count: self.deleted_count(),
            slabs_in_use,
            leaked_slabs: self.leaked_slabs.load(Ordering::Acquire),
            metadata_bytes,
            payload_bytes,
            overhead_ratio: if payload_bytes == 0 {
                0.0
            } else {
                metadata_bytes as f64 / payload_bytes as f64
            },
            arena_bytes: self.pool.arena_bytes() + self.table.id_capacity() * 8,
        }
    }

    /// Current location of `id`.
    pub fn coordinate(&self, id: u64) -> Result<Option<Coord>> {
        self.table.lookup(id)
    }

    /// Copy of the stored vector for a live id.
    pub fn vector(&self, id: u64) -> Option<Vec<f32>> {
        let coord = self.table.lookup(id).ok()??;
        let bits = self
            .pool
            .metadata(coord.slab)
            .validity_bitmap
            .load(Ordering::Acquire);
        if bits >> coord.slot & 1 == 0 {
            return None;
        }
        // SAFETY: the bit was observed set with acquire ordering.
        Some(unsafe { self.pool.payload(coord.slab, coord.slot) }.to_vec())
    }

    /// Id stored at `coord` if that slot is live.
    pub fn slot_id(&self, coord: Coord) -> Option<u64> {
        if coord.slab.index() >= self.pool.num_slabs() || coord.slot as usize >= SLAB_CAPACITY {
            return None;
        }
        let bits = self
            .pool
            .metadata(coord.slab)
            .validity_bitmap
            .load(Ordering::Acquire);
        // SAFETY: as above.
        (bits >> coord.slot & 1 == 1).then(|| unsafe { self.pool.slot_id(coord.slab, coord.slot) })
    }

    pub fn slab_metadata(&self, slab: SlabId) -> MetadataSnapshot {
        self.pool.metadata(slab).snapshot()
    }

    /// Slabs of `list` from head to tail, bounded by the pool size.
    pub fn chain(&self, list: usize) -> Vec<SlabId> {
        let mut out = Vec::new();
        let mut link = self.heads.load(list);
        while let Some(slab) = SlabId::from_link(link) {
            if out.len() >= self.pool.num_slabs() {
                break;
            }
            out.push(slab);
            let next = self.pool.metadata(slab).next_slab.load(Ordering::Acquire);
            if next == link {
                break;
            }
            link = next;
        }
        out
    }

    /// Recycles empty and orphaned slabs. Requires exclusive access.
    pub fn reclaim_quiescent(&mut self) -> usize {
        let recycled = self.pool.reclaim_quiescent(&mut self.heads);
        *self.leaked_slabs.get_mut() = 0;
        recycled
    }

    /// Checks every structural invariant. Only meaningful with no operation
    /// in flight; returns one message per violation.
    pub fn verify_quiescent(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let num_slabs = self.pool.num_slabs();
        let mut owner: Vec<Option<usize>> = vec![None; num_slabs];
        let mut live = 0u64;
        for list in 0..self.heads.len() {
            let mut link = self.heads.load(list);
            let mut hops = 0;
            while let Some(slab) = SlabId::from_link(link) {
                if slab.index() >= num_slabs {
                    problems.push(format!("list {list}: {slab} out of range"));
                    break;
                }
                if let Some(other) = owner[slab.index()] {
                    problems.push(format!(
                        "list {list}: {slab} already reached from list {other}"
                    ));
                    break;
                }
                owner[slab.index()] = Some(list);
                hops += 1;
                let meta = self.pool.metadata(slab).snapshot();
                if meta.next_slab == link {
                    problems.push(format!("{slab} links to itself"));
                    break;
                }
                if meta.live_slots() > meta.valid_count || meta.valid_count as usize > SLAB_CAPACITY
                {
                    problems.push(format!(
                        "{slab}: popcount {} / valid_count {}",
                        meta.live_slots(),
                        meta.valid_count
                    ));
                }
                if meta.valid_count < 32 && meta.validity_bitmap >> meta.valid_count != 0 {
                    problems.push(format!("{slab}: bit set beyond reserved slots"));
                }
                live += meta.live_slots() as u64;
                let mut bits = meta.validity_bitmap;
                while bits != 0 {
                    let slot = bits.trailing_zeros();
                    bits &= bits - 1;
                    let coord = Coord::new(slab, slot);
                    // SAFETY: bit observed set.
                    let id = unsafe { self.pool.slot_id(slab, slot) };
                    match self.table.lookup(id) {
                        Ok(Some(c)) if c == coord => {}
                        other => problems
                            .push(format!("{slab}/{slot} holds id {id}, table says {other:?}")),
                    }
                }
                if hops > num_slabs {
                    problems.push(format!("list {list}: chain longer than the pool"));
                    break;
                }
                link = meta.next_slab;
            }
        }
        if live != self.live_count() {
            problems.push(format!(
                "live_count {} but {live} live slots",
                self.live_count()
            ));
        }
        for (id, coord) in self.table.live_entries() {
            if self.slot_id(coord) != Some(id) {
                problems.push(format!("table maps {id} to {coord:?}, slot disagrees"));
            }
            if coord.slab.index() < num_slabs && owner[coord.slab.index()].is_none() {
                problems.push(format!("table maps {id} to unlinked {}", coord.slab));
            }
        }
        problems
    }
}
