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

//! Streaming inverted-file (IVF) index for approximate nearest neighbor search.
//!
//! Inverted lists are chains of fixed-capacity slabs carved out of a
//! pre-allocated [`SlabPool`]. Insertion reserves slots with compare-and-swap
//! on the head slab's counter and grows a list by publishing a fresh slab as
//! the new head. Deletion clears a bit in the slab's validity bitmap after a
//! constant-time lookup in the [`AddressTable`], so it never touches payload
//! data or walks a list. Search walks each probed chain and evaluates only the
//! slots whose validity bit is set.
//!
//! [`BaselineIndex`] is a contiguous-list IVF that rebuilds every list on
//! deletion. It exists so benchmarks can compare the two maintenance models
//! on the same machine.

pub mod address_table;
pub mod baseline;
pub mod coarse_quantizer;
pub mod datasets;
pub mod distance;
mod error;
pub mod index;
pub mod slab_store;

pub use address_table::{AddressTable, Coord};
pub use baseline::BaselineIndex;
pub use coarse_quantizer::Centroids;
pub use datasets::VectorDataset;
pub use distance::SearchHit;
pub use error::{Error, Result};
pub use index::{IndexConfig, IndexStats, InsertStatus, ListHeads, SivfIndex};
pub use slab_store::{SlabId, SlabPool, SLAB_CAPACITY};
