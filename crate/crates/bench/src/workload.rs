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

//! Data loading, quantizer training and timing helpers shared by scenarios.

use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sivf_core::datasets::{load_fvecs, synth_uniform};
use sivf_core::{Centroids, VectorDataset};

use crate::config::{resolve_data_path, BenchConfig, DatasetSpec};
use crate::record::Point;

/// Seed offset separating query generation from base generation.
const QUERY_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// Base vectors, `n` rows of the configured dataset.
pub fn base_vectors(cfg: &BenchConfig, n: usize) -> Result<VectorDataset> {
    match &cfg.dataset {
        DatasetSpec::Synthetic => Ok(synth_uniform(n, cfg.dim, cfg.seed)),
        DatasetSpec::Fvecs { base, .. } => {
            let path = resolve_data_path(base);
            let data = load_fvecs(&path).with_context(|| format!("loading {}", path.display()))?;
            if data.dim != cfg.dim {
                bail!(
                    "{} has dim {}, config says {}",
                    path.display(),
                    data.dim,
                    cfg.dim
                );
            }
            if data.len() < n {
                bail!("{} has {} vectors, need {n}", path.display(), data.len());
            }
            Ok(data.truncated(n))
        }
    }
}

/// Query vectors; synthetic queries use a seed disjoint from the base set.
pub fn query_vectors(cfg: &BenchConfig) -> Result<VectorDataset> {
    match &cfg.dataset {
        DatasetSpec::Fvecs {
            queries: Some(q), ..
        } => {
            let path = resolve_data_path(q);
            let data = load_fvecs(&path).with_context(|| format!("loading {}", path.display()))?;
            if data.dim != cfg.dim {
                bail!(
                    "{} has dim {}, config says {}",
                    path.display(),
                    data.dim,
                    cfg.dim
                );
            }
            Ok(data.truncated(cfg.queries.min(data.len())))
        }
        _ => Ok(synth_uniform(
            cfg.queries,
            cfg.dim,
            cfg.seed ^ QUERY_SEED_OFFSET,
        )),
    }
}

/// Trains `nlist` centroids on an evenly strided subsample of `data`.
pub fn train_centroids(cfg: &BenchConfig, data: &VectorDataset, nlist: usize) -> Result<Centroids> {
    let want = (nlist * cfg.train_per_list).clamp(nlist, data.len());
    let stride = data.len() / want;
    let mut sample = Vec::with_capacity(want * data.dim);
    for i in 0..want {
        sample.extend_from_slice(data.row(i * stride));
    }
    Ok(Centroids::train(
        &sample,
        data.dim,
        nlist,
        cfg.train_iters,
        cfg.seed,
    )?)
}

/// `count` distinct entries of `pool`, chosen deterministically from `seed`.
pub fn pick_distinct(pool: &[u64], count: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample(&mut rng, pool.len(), count.min(pool.len()))
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

pub fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn per_sec(count: usize, d: Duration) -> f64 {
    count as f64 / d.as_secs_f64().max(1e-12)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Grid point with every scalar taken from the first sweep value.
pub fn point(cfg: &BenchConfig) -> Point {
    Point {
        scenario: cfg.scenario.as_str().to_owned(),
        batch: cfg.batch[0],
        dataset: cfg.dataset.label(),
        dim: cfg.dim,
        k: cfg.k,
        maxvec_factor: cfg.maxvec_factor[0],
        n: cfg.n[0],
        nlist: cfg.nlist[0],
        nprobe: cfg.nprobe.first().copied().unwrap_or(cfg.nlist[0]),
        repeats: cfg.repeats,
        seed: cfg.seed,
        slab_factor: cfg.slab_factor[0],
        steps: cfg.steps,
        threads: cfg.threads,
        window: cfg.window,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn pick_distinct_is_deterministic_and_unique() {
        let pool: Vec<u64> = (100..200).collect();
        let a = pick_distinct(&pool, 30, 7);
        assert_eq!(a, pick_distinct(&pool, 30, 7));
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 30);
        assert!(a.iter().all(|x| (100..200).contains(x)));
    }

    #[test]
    fn queries_differ_from_base() {
        let mut cfg = BenchConfig::defaults_for(Scenario::Search);
        cfg.dim = 4;
        cfg.queries = 5;
        let b = base_vectors(&cfg, 5).unwrap();
        let q = query_vectors(&cfg).unwrap();
        assert_ne!(b.vectors, q.vectors);
    }
}
