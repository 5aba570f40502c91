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

//! Pre-allocated slab pool backing every inverted list.
//!
//! The pool owns three parallel arenas (vector payloads, external ids and
//! per-slab metadata) plus a free-list stack. A slab is handed out by a
//! single atomic decrement of the stack top. Slab indices are never recycled
//! while other threads may hold them; the only path back onto the free list
//! is [`SlabPool::reclaim_quiescent`], which takes `&mut self`.

use std::alloc::{self, Layout};
use std::cell::UnsafeCell;
use std::fmt;
use std::mem;
use std::ptr::NonNull;
use std::sync::atomic::{AtomicI64, AtomicU32, AtomicU64, Ordering};

use crate::index::ListHeads;
use crate::{Error, Result};

/// Slots per slab.
pub const SLAB_CAPACITY: usize = 32;

/// Link value marking the end of a chain or an empty list head.
pub const NO_SLAB: i64 = -1;

/// Bytes reserved per slab for its metadata record.
pub const METADATA_STRIDE: usize = 128;

/// Largest pool: slab indices must fit the high half of a packed coordinate
/// and leave the all-ones pattern free for the table sentinel.
pub const MAX_SLABS: usize = i32::MAX as usize;

/// Index of a slab inside the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlabId(pub u32);

impl SlabId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn as_link(self) -> i64 {
        self.0 as i64
    }

    #[inline]
    pub fn from_link(link: i64) -> Option<SlabId> {
        (link >= 0).then_some(SlabId(link as u32))
    }
}

impl fmt::Display for SlabId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "slab#{}", self.0)
    }
}

/// Per-slab control record, one cache-line pair per slab.
#[repr(C, align(128))]
#[derive(Debug)]
pub struct SlabMetadata {
    /// Next slab in the chain, or [`NO_SLAB`].
    pub(crate) next_slab: AtomicI64,
    /// Bit `j` set iff slot `j` holds a live vector.
    pub(crate) validity_bitmap: AtomicU32,
    /// Slot reservation counter. Never decremented while the slab is in use.
    pub(crate) valid_count: AtomicU32,
    /// Number of 1 -> 0 bitmap transitions (deletions) seen by this slab.
    pub(crate) evicted: AtomicU32,
}

const _: () = assert!(mem::size_of::<SlabMetadata>() == METADATA_STRIDE);

impl SlabMetadata {
    fn empty() -> Self {
        Self {
            next_slab: AtomicI64::new(NO_SLAB),
            validity_bitmap: AtomicU32::new(0),
            valid_count: AtomicU32::new(0),
            evicted: AtomicU32::new(0),
        }
    }

    fn reset(&mut self) {
        *self.next_slab.get_mut() = NO_SLAB;
        *self.validity_bitmap.get_mut() = 0;
        *self.valid_count.get_mut() = 0;
        *self.evicted.get_mut() = 0;
    }

    /// Point-in-time copy of the record. Each field is read independently.
    pub fn snapshot(&self) -> MetadataSnapshot {
        MetadataSnapshot {
            next_slab: self.next_slab.load(Ordering::Acquire),
            validity_bitmap: self.validity_bitmap.load(Ordering::Acquire),
            valid_count: self.valid_count.load(Ordering::Acquire),
            evicted: self.evicted.load(Ordering::Acquire),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetadataSnapshot {
    pub next_slab: i64,
    pub validity_bitmap: u32,
    pub valid_count: u32,
    pub evicted: u32,
}

impl MetadataSnapshot {
    pub fn live_slots(&self) -> u32 {
        self.validity_bitmap.count_ones()
    }
}

/// Element types that are valid when every byte is zero.
///
/// # Safety
/// Implementors must accept the all-zero bit pattern as a valid value.
unsafe trait Zeroable: Copy {}
unsafe impl Zeroable for f32 {}
unsafe impl Zeroable for u64 {}

/// Fixed-length buffer with interior mutability for slot-granular access.
///
/// Writers only touch slots they reserved, readers only touch slots whose
/// publication they observed, so individual slot ranges are never accessed
/// concurrently with a write. The arena itself does not enforce that; the
/// unsafe accessors document the contract.
struct Arena<T> {
    ptr: NonNull<UnsafeCell<T>>,
    len: usize,
}

unsafe impl<T: Send> Send for Arena<T> {}
unsafe impl<T: Send + Sync> Sync for Arena<T> {}

impl<T: Zeroable> Arena<T> {
    fn zeroed(len: usize) -> Result<Self> {
        let layout = Layout::array::<T>(len)
            .map_err(|_| Error::AllocationFailed(len.saturating_mul(mem::size_of::<T>())))?;
        if layout.size() == 0 {
            return Ok(Self {
                ptr: NonNull::dangling(),
                len,
            });
        }
        // SAFETY: layout has non-zero size; zero bytes are a valid T.
        let raw = unsafe { alloc::alloc_zeroed(layout) };
        let ptr = NonNull::new(raw as *mut UnsafeCell<T>)
            .ok_or(Error::AllocationFailed(layout.size()))?;
        Ok(Self { ptr, len })
    }

    /// # Safety
    /// No thread may be writing to `[start, start + len)` for the lifetime
    /// of the returned slice.
    #[inline]
    unsafe fn slice(&self, start: usize, len: usize) -> &[T] {
        debug_assert!(start + len <= self.len);
        std::slice::from_raw_parts(self.ptr.as_ptr().add(start) as *const T, len)
    }

    /// # Safety
    /// The caller must have exclusive access to `[start, start + len)` for
    /// the lifetime of the returned slice.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    unsafe fn slice_mut(&self, start: usize, len: usize) -> &mut [T] {
        debug_assert!(start + len <= self.len);
        std::slice::from_raw_parts_mut(UnsafeCell::raw_get(self.ptr.as_ptr().add(start)), len)
    }

    fn byte_len(&self) -> usize {
        self.len * mem::size_of::<T>()
    }
}

impl<T> Drop for Arena<T> {
    fn drop(&mut self) {
        let layout = Layout::array::<T>(self.len).expect("layout was valid at allocation");
        if layout.size() != 0 {
            // SAFETY: allocated with this exact layout in `zeroed`.
            unsafe { alloc::dealloc(self.ptr.as_ptr() as *mut u8, layout) };
        }
    }
}

/// Returned by [`SlabPool::allocate_slab`] when the free list is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolExhausted;

/// Arena of fixed-capacity slabs with a lock-free allocation stack.
pub struct SlabPool {
    dim: usize,
    num_slabs: usize,
    payload: Arena<f32>,
    ids: Arena<u64>,
    metadata: Box<[SlabMetadata]>,
    free_list: Box<[u32]>,
    stack_top: AtomicI64,
    allocations: AtomicU64,
}

impl fmt::Debug for SlabPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlabPool")
            .field("dim", &self.dim)
            .field("num_slabs", &self.num_slabs)
            .field("stack_top", &self.stack_top())
            .finish()
    }
}

impl SlabPool {
    /// Builds a pool of `num_slabs` slabs for `dim`-dimensional vectors.
    pub fn new(dim: usize, num_slabs: usize) -> Result<Self> {
        Self::with_memory_budget(dim, num_slabs, usize::MAX)
    }

    /// Like [`SlabPool::new`], failing with [`Error::MemoryBudget`] when the
    /// arenas would need more than `budget` bytes.
    pub fn with_memory_budget(dim: usize, num_slabs: usize, budget: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be at least 1".into()));
        }
        if num_slabs == 0 || num_slabs > MAX_SLABS {
            return Err(Error::InvalidParameter(format!(
                "num_slabs must be in 1..={MAX_SLABS}, got {num_slabs}"
            )));
        }
        let requested = Self::arena_bytes_for(dim, num_slabs).ok_or(Error::MemoryBudget {
            requested: usize::MAX,
            budget,
        })?;
        if requested > budget {
            return Err(Error::MemoryBudget { requested, budget });
        }
        let slots = num_slabs * SLAB_CAPACITY;
        let payload = Arena::zeroed(slots * dim)?;
        let ids = Arena::zeroed(slots)?;
        let metadata = (0..num_slabs).map(|_| SlabMetadata::empty()).collect();
        let free_list = (0..num_slabs as u32).collect();
        Ok(Self {
            dim,
            num_slabs,
            payload,
            ids,
            metadata,
            free_list,
            stack_top: AtomicI64::new(num_slabs as i64),
            allocations: AtomicU64::new(0),
        })
    }

    /// Total arena bytes (payload, ids, metadata, free list) for a pool shape.
    pub fn arena_bytes_for(dim: usize, num_slabs: usize) -> Option<usize> {
        let slots = num_slabs.checked_mul(SLAB_CAPACITY)?;
        let payload = slots.checked_mul(dim)?.checked_mul(mem::size_of::<f32>())?;
        let ids = slots.checked_mul(mem::size_of::<u64>())?;
        let meta = num_slabs.checked_mul(METADATA_STRIDE)?;
        let free = num_slabs.checked_mul(mem::size_of::<u32>())?;
        payload
            .checked_add(ids)?
            .checked_add(meta)?
            .checked_add(free)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_slabs(&self) -> usize {
        self.num_slabs
    }

    pub fn stack_top(&self) -> i64 {
        self.stack_top.load(Ordering::Acquire)
    }

    /// Successful allocations not yet returned by a reclaim pass.
    pub fn allocations(&self) -> u64 {
        self.allocations.load(Ordering::Acquire)
    }

    /// Slabs currently off the free list (linked, leaked or in flight).
    pub fn slabs_in_use(&self) -> usize {
        self.num_slabs - self.stack_top().clamp(0, self.num_slabs as i64) as usize
    }

    /// Payload bytes held by one slab.
    pub fn payload_bytes_per_slab(&self) -> usize {
        SLAB_CAPACITY * self.dim * mem::size_of::<f32>()
    }

    pub fn payload_arena_bytes(&self) -> usize {
        self.payload.byte_len()
    }

    pub fn id_arena_slots(&self) -> usize {
        self.ids.len
    }

    /// Bytes held by all arenas. Fixed for the pool's lifetime.
    pub fn arena_bytes(&self) -> usize {
        self.payload.byte_len()
            + self.ids.byte_len()
            + self.metadata.len() * METADATA_STRIDE
            + self.free_list.len() * mem::size_of::<u32>()
    }

    /// Pops a slab off the free stack.
    ///
    /// Safe under any number of concurrent callers: one atomic decrement
    /// claims stack position `t - 1` exclusively. On an empty stack the
    /// decrement is undone and [`PoolExhausted`] is returned.
    pub fn allocate_slab(&self) -> Result<SlabId, PoolExhausted> {
        let top = self.stack_top.fetch_sub(1, Ordering::AcqRel);
        if top <= 0 {
            self.stack_top.fetch_add(1, Ordering::AcqRel);
            return Err(PoolExhausted);
        }
        self.allocations.fetch_add(1, Ordering::Relaxed);
        Ok(SlabId(self.free_list[(top - 1) as usize]))
    }

    #[inline]
    pub fn metadata(&self, slab: SlabId) -> &SlabMetadata {
        &self.metadata[slab.index()]
    }

    #[inline]
    fn slot_base(&self, slab: SlabId, slot: u32) -> usize {
        debug_assert!((slot as usize) < SLAB_CAPACITY);
        slab.index() * SLAB_CAPACITY + slot as usize
    }

    /// Payload of one slot.
    ///
    /// # Safety
    /// The slot must be published (its validity bit observed with acquire
    /// ordering) or otherwise not concurrently written.
    #[inline]
    pub(crate) unsafe fn payload(&self, slab: SlabId, slot: u32) -> &[f32] {
        self.payload
            .slice(self.slot_base(slab, slot) * self.dim, self.dim)
    }

    /// # Safety
    /// Same contract as [`SlabPool::payload`].
    #[inline]
    pub(crate) unsafe fn slot_id(&self, slab: SlabId, slot: u32) -> u64 {
        self.ids.slice(self.slot_base(slab, slot), 1)[0]
    }

    /// Writes a vector and its id into a reserved slot.
    ///
    /// # Safety
    /// The caller must own the slot through a successful reservation and the
    /// slot's validity bit must still be clear.
    #[inline]
    pub(crate) unsafe fn write_slot(&self, slab: SlabId, slot: u32, id: u64, vector: &[f32]) {
        let base = self.slot_base(slab, slot);
        self.payload
            .slice_mut(base * self.dim, self.dim)
            .copy_from_slice(vector);
        self.ids.slice_mut(base, 1)[0] = id;
    }

    /// Recycles every slab that holds no live vector.
    ///
    /// Empty slabs are unlinked from their chains (surviving slabs keep their
    /// relative order), metadata is reset and the index is pushed back on the
    /// free stack. Allocated slabs that no chain reaches, such as those left
    /// behind by a lost head publication, are recycled too. Requires
    /// exclusive access; nothing may run concurrently.
    pub fn reclaim_quiescent(&mut self, heads: &mut ListHeads) -> usize {
        let top = (*self.stack_top.get_mut()).clamp(0, self.num_slabs as i64) as usize;
        let mut free = vec![false; self.num_slabs];
        for &slab in &self.free_list[..top] {
            free[slab as usize] = true;
        }

        let mut keep = vec![false; self.num_slabs];
        let mut chain = Vec::new();
        for head in heads.slots_mut() {
            chain.clear();
            let mut link = *head.get_mut();
            let mut hops = 0;
            while let Some(slab) = SlabId::from_link(link) {
                if hops >= self.num_slabs || keep[slab.index()] {
                    break;
                }
                hops += 1;
                let meta = &mut self.metadata[slab.index()];
                let next = *meta.next_slab.get_mut();
                if *meta.validity_bitmap.get_mut() != 0 {
                    keep[slab.index()] = true;
                    chain.push(slab);
                }
                if next == link {
                    break;
                }
                link = next;
            }
            *head.get_mut() = chain.first().map_or(NO_SLAB, |s| s.as_link());
            for pair in chain.windows(2) {
                *self.metadata[pair[0].index()].next_slab.get_mut() = pair[1].as_link();
            }
            if let Some(last) = chain.last() {
                *self.metadata[last.index()].next_slab.get_mut() = NO_SLAB;
            }
        }

        let mut top = top;
        let mut recycled = 0;
        for slab in 0..self.num_slabs {
            if free[slab] || keep[slab] {
                continue;
            }
            self.metadata[slab].reset();
            self.free_list[top] = slab as u32;
            top += 1;
            recycled += 1;
        }
        *self.stack_top.get_mut() = top as i64;
        *self.allocations.get_mut() -= recycled as u64;
        recycled
    }
}
