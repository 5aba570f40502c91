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

//! Desk-scale benchmark harness comparing the slab-based streaming index
//! against a contiguous rebuild-on-delete IVF baseline.

pub mod config;
pub mod record;
pub mod scenarios;
pub mod summary;
pub mod workload;

use anyhow::{Context, Result};

pub use config::{BenchConfig, DatasetSpec, Scenario};
pub use record::{emit_csv, read_csv, BenchRecord, Engine, Point, Unit};

/// Validates `config` and runs its scenario on a pool of `config.threads`
/// workers.
pub fn run(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .context("building worker pool")?;
    pool.install(|| match config.scenario {
        Scenario::Add => scenarios::run_add(config),
        Scenario::Search => scenarios::run_search(config),
        Scenario::Delete => scenarios::run_delete(config),
        Scenario::Sliding => scenarios::run_sliding(config),
        Scenario::Memory => scenarios::run_memory(config),
        Scenario::Sensitivity => scenarios::run_sensitivity(config),
    })
}

/// Writes `records` to `path` as CSV.
pub fn write_csv_file(path: &std::path::Path, records: &[BenchRecord]) -> Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    emit_csv(std::io::BufWriter::new(file), records)
}
