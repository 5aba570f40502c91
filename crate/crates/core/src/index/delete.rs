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

//! Bitmap lazy eviction.

use std::sync::atomic::Ordering;

use super::SivfIndex;

/// Instrumented result of one delete batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeleteReport {
    pub requested: usize,
    /// Ids whose validity bit went from 1 to 0 in this call.
    pub deleted: usize,
    /// Shared-memory reads, RMWs and writes issued, counted per access.
    pub memory_ops: u64,
}

impl SivfIndex {
    /// Deletes every live id in `ids` and returns how many were removed.
    ///
    /// Absent, already deleted and out-of-range ids are no-ops, so repeated
    /// and duplicate requests are harmless. Payloads are never touched.
    pub fn delete_batch(&self, ids: &[u64]) -> usize {
        self.delete_batch_instrumented(ids).deleted
    }

    /// [`SivfIndex::delete_batch`] plus a count of the memory operations
    /// issued. Per live id that is: one table read, one bitmap RMW, one slab
    /// eviction counter RMW, two global counter RMWs and one table write.
    pub fn delete_batch_instrumented(&self, ids: &[u64]) -> DeleteReport {
        let mut report = DeleteReport {
            requested: ids.len(),
            ..DeleteReport::default()
        };
        for &id in ids {
            let Ok(lookup) = self.table.lookup(id) else {
                continue;
            };
            report.memory_ops += 1;
            let Some(coord) = lookup else {
                continue;
            };
            let meta = self.pool.metadata(coord.slab);
            let mask = 1u32 << coord.slot;
            let old = meta.validity_bitmap.fetch_and(!mask, Ordering::AcqRel);
            report.memory_ops += 1;
            if old & mask == 0 {
                continue;
            }
            meta.evicted.fetch_add(1, Ordering::Relaxed);
            self.deleted_count.fetch_add(1, Ordering::AcqRel);
            self.live_count.fetch_sub(1, Ordering::AcqRel);
            self.table.invalidate_if(id, coord);
            report.memory_ops += 4;
            report.deleted += 1;
        }
        report
    }
}
