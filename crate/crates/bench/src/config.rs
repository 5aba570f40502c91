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

//! Benchmark configuration and per-scenario desk-scale defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Result};

/// Environment variable naming the directory that relative dataset paths
/// are resolved against.
pub const DATA_DIR_ENV: &str = "SIVF_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Add,
    Search,
    Delete,
    Sliding,
    Memory,
    Sensitivity,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Add,
        Scenario::Search,
        Scenario::Delete,
        Scenario::Sliding,
        Scenario::Memory,
        Scenario::Sensitivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Add => "add",
            Scenario::Search => "search",
            Scenario::Delete => "delete",
            Scenario::Sliding => "sliding",
            Scenario::Memory => "memory",
            Scenario::Sensitivity => "sensitivity",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| anyhow::anyhow!("unknown scenario {s:?}"))
    }
}

/// Where vectors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Synthetic,
    Fvecs {
        base: PathBuf,
        queries: Option<PathBuf>,
    },
}

impl DatasetSpec {
    /// Short label written into every record.
    pub fn label(&self) -> String {
        match self {
            DatasetSpec::Synthetic => "synthetic".into(),
            DatasetSpec::Fvecs { base, .. } => base
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_else(|| base.display().to_string()),
        }
    }
}

/// Resolves `path` against [`DATA_DIR_ENV`] when it is relative.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(root) if path.is_relative() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

/// One benchmark invocation. List-valued fields are sweep axes.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub dataset: DatasetSpec,
    pub n: Vec<usize>,
    pub dim: usize,
    pub nlist: Vec<usize>,
    pub nprobe: Vec<usize>,
    pub k: usize,
    pub batch: Vec<usize>,
    pub window: usize,
    pub steps: usize,
    pub repeats: usize,
    pub maxvec_factor: Vec<f64>,
    pub slab_factor: Vec<f64>,
    pub threads: usize,
    pub seed: u64,
    /// Query batch size for search, sliding probes and recall.
    pub queries: usize,
    pub train_iters: usize,
    /// Training sample size per list.
    pub train_per_list: usize,
}

impl BenchConfig {
    pub fn defaults_for(scenario: Scenario) -> Self {
        let base = BenchConfig {
            scenario,
            dataset: DatasetSpec::Synthetic,
            n: vec![100_000],
            dim: 128,
            nlist: vec![1024],
            nprobe: vec![16],
            k: 10,
            batch: vec![10_000],
            window: 200_000,
            steps: 20,
            repeats: 3,
            maxvec_factor: vec![1.2],
            slab_factor: vec![1.2],
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            seed: 42,
            queries: 1000,
            train_iters: 10,
            train_per_list: 32,
        };
        match scenario {
            Scenario::Add => BenchConfig {
                n: vec![100_000, 200_000, 400_000],
                nlist: vec![1024, 4096],
                ..base
            },
            Scenario::Search => BenchConfig {
                nprobe: Vec::new(),
                ..base
            },
            Scenario::Delete => BenchConfig {
                n: vec![50_000, 500_000],
                ..base
            },
            Scenario::Sliding => BenchConfig {
                nprobe: vec![8],
                queries: 100,
                ..base
            },
            Scenario::Memory => BenchConfig {
                n: vec![100_000, 200_000, 400_000],
                ..base
            },
            Scenario::Sensitivity => BenchConfig {
                maxvec_factor: vec![1.0, 1.1, 1.2, 1.3],
                slab_factor: vec![1.0, 1.1, 1.2, 1.3],
                batch: vec![100, 1000, 10_000],
                ..base
            },
        }
    }

    /// Probe widths to sweep; defaults to powers of two up to `nlist`.
    pub fn nprobe_sweep(&self, nlist: usize) -> Vec<usize> {
        if !self.nprobe.is_empty() {
            return self.nprobe.iter().map(|&p| p.min(nlist)).collect();
        }
        let mut out: Vec<usize> = std::iter::successors(Some(1usize), |p| Some(p * 2))
            .take_while(|&p| p < nlist)
            .collect();
        out.push(nlist);
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats < 3 {
            bail!("repeats must be at least 3, got {}", self.repeats);
        }
        if self.dim == 0 || self.k == 0 || self.threads == 0 || self.queries == 0 {
            bail!("dim, k, threads and queries must be positive");
        }
        for (name, list) in [
            ("n", &self.n),
            ("nlist", &self.nlist),
            ("batch", &self.batch),
        ] {
            if list.is_empty() || list.contains(&0) {
                bail!("{name} needs at least one positive value");
            }
        }
        if self.nprobe.contains(&0) {
            bail!("nprobe values must be positive");
        }
        for f in self.maxvec_factor.iter().chain(&self.slab_factor) {
            if !(f.is_finite() && *f > 0.0) {
                bail!("capacity factors must be positive, got {f}");
            }
        }
        if self.maxvec_factor.is_empty() || self.slab_factor.is_empty() {
            bail!("capacity factor lists may not be empty");
        }
        let max_nlist = *self.nlist.iter().max().unwrap();
        let min_n = match self.scenario {
            Scenario::Sliding => self.window,
            _ => *self.n.iter().min().unwrap(),
        };
        if min_n < max_nlist {
            bail!("need at least nlist={max_nlist} vectors, smallest data set has {min_n}");
        }
        if self.scenario == Scenario::Sliding {
            let b = self.batch[0];
            if self.window == 0 || self.steps == 0 {
                bail!("window and steps must be positive");
            }
            if !self.window.is_multiple_of(b) {
                bail!("window {} must be a multiple of batch {b}", self.window);
            }
        }
        if self.scenario == Scenario::Delete {
            let largest_batch = *self.batch.iter().max().unwrap();
            if largest_batch > min_n {
                bail!("delete batch {largest_batch} exceeds smallest n {min_n}");
            }
        }
        Ok(())
    }
}
