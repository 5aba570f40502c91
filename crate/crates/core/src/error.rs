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

use std::path::PathBuf;

/// Errors surfaced by index construction, the quantizer and dataset I/O.
///
/// Per-item insertion outcomes are reported through
/// [`InsertStatus`](crate::InsertStatus) instead; a batch never fails as a
/// whole because one item could not be placed.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("id {id} is outside the table capacity {capacity}")]
    IdOutOfRange { id: u64, capacity: usize },

    #[error("need at least {needed} vectors to train, got {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("arena of {requested} bytes exceeds the memory budget of {budget} bytes")]
    MemoryBudget { requested: usize, budget: usize },

    #[error("failed to allocate {0} bytes")]
    AllocationFailed(usize),

    #[error("non-finite value in vector {row}")]
    NonFinite { row: usize },

    #[error("duplicate id {0}")]
    DuplicateId(u64),

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
