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

//! The six benchmark scenarios. Each returns its measurements as records;
//! engines are always built from the same trained centroids so their
//! results are directly comparable.

use anyhow::{ensure, Result};
use sivf_core::datasets::{ground_truth, recall_at_k};
use sivf_core::{BaselineIndex, Centroids, IndexConfig, SivfIndex, VectorDataset};

use crate::config::{BenchConfig, DatasetSpec};
use crate::record::{BenchRecord, Engine, Point, Unit};
use crate::workload::{
    base_vectors, ms, per_sec, pick_distinct, point, query_vectors, timed, train_centroids,
};

/// Insert chunk size used when a scenario's `batch` axis means something else.
const INSERT_CHUNK: usize = 10_000;

fn build_sivf(
    cfg: &BenchConfig,
    centroids: &Centroids,
    expected_n: usize,
    maxvec_factor: f64,
    slab_factor: f64,
) -> Result<SivfIndex> {
    let nlist = centroids.nlist();
    let nprobe = cfg.nprobe.first().map_or(nlist, |&p| p.min(nlist));
    let ic = IndexConfig::new(cfg.dim, nlist, expected_n)
        .with_factors(maxvec_factor, slab_factor)
        .with_nprobe(nprobe)
        .with_seed(cfg.seed);
    Ok(SivfIndex::new(ic, centroids.clone())?)
}

/// Inserts in chunks; returns how many ids landed.
fn sivf_insert(index: &SivfIndex, ids: &[u64], vectors: &[f32], chunk: usize) -> Result<usize> {
    let dim = index.dim();
    let mut ok = 0;
    for (ic, vc) in ids.chunks(chunk).zip(vectors.chunks(chunk * dim)) {
        ok += index
            .insert_batch(ic, vc)?
            .iter()
            .filter(|s| s.is_ok())
            .count();
    }
    Ok(ok)
}

/// One discarded ingestion pass, so the first measured repeat does not pay
/// for page faults and allocator growth that later repeats skip.
fn warm_up(cfg: &BenchConfig, centroids: &Centroids, ids: &[u64], vectors: &[f32]) -> Result<()> {
    let index = build_sivf(
        cfg,
        centroids,
        ids.len(),
        cfg.maxvec_factor[0],
        cfg.slab_factor[0],
    )?;
    sivf_insert(&index, ids, vectors, INSERT_CHUNK)?;
    Ok(())
}

fn baseline_insert(
    index: &BaselineIndex,
    ids: &[u64],
    vectors: &[f32],
    chunk: usize,
) -> Result<()> {
    let dim = index.dim();
    for (ic, vc) in ids.chunks(chunk).zip(vectors.chunks(chunk * dim)) {
        index.insert(ic, vc)?;
    }
    Ok(())
}

fn gather(data: &VectorDataset, rows: impl IntoIterator<Item = usize>) -> Vec<f32> {
    rows.into_iter()
        .flat_map(|r| data.row(r).iter().copied())
        .collect()
}

/// Both engines populated with the first `n` rows under a precomputed
/// assignment.
fn build_pair(
    cfg: &BenchConfig,
    centroids: &Centroids,
    data: &VectorDataset,
    lists: &[u32],
) -> Result<(SivfIndex, BaselineIndex)> {
    let n = lists.len();
    let vectors = data.rows(0..n);
    let ids: Vec<u64> = (0..n as u64).collect();
    let sivf = build_sivf(cfg, centroids, n, cfg.maxvec_factor[0], cfg.slab_factor[0])?;
    // Chunked, so slab fill order follows id order even with many workers.
    let mut failed = 0;
    for ((ic, vc), lc) in ids
        .chunks(INSERT_CHUNK)
        .zip(vectors.chunks(INSERT_CHUNK * cfg.dim))
        .zip(lists.chunks(INSERT_CHUNK))
    {
        failed += sivf
            .insert_batch_assigned(ic, vc, lc)?
            .iter()
            .filter(|s| !s.is_ok())
            .count();
    }
    ensure!(
        failed == 0,
        "{failed} of {n} inserts failed while populating"
    );
    let base = BaselineIndex::new(centroids.clone());
    base.insert_assigned(&ids, vectors, lists)?;
    Ok((sivf, base))
}

fn populate(
    cfg: &BenchConfig,
    centroids: &Centroids,
    data: &VectorDataset,
    n: usize,
) -> Result<(SivfIndex, BaselineIndex, Vec<u32>)> {
    let lists = centroids.assign(data.rows(0..n))?;
    let (sivf, base) = build_pair(cfg, centroids, data, &lists)?;
    Ok((sivf, base, lists))
}

/// Ingestion throughput over the `n` × `nlist` grid. One row per engine and
/// repeat; a run that hits pool exhaustion reports its failure rate instead
/// of a throughput.
pub fn run_add(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let max_n = *cfg.n.iter().max().unwrap();
    let data = base_vectors(cfg, max_n)?;
    let chunk = cfg.batch[0];
    let trained = cfg
        .nlist
        .iter()
        .map(|&nlist| train_centroids(cfg, &data, nlist))
        .collect::<Result<Vec<_>>>()?;
    let warm: Vec<u64> = (0..cfg.n[0] as u64).collect();
    warm_up(cfg, &trained[0], &warm, data.rows(0..cfg.n[0]))?;
    let mut out = Vec::new();
    // Repeats are the outer loop so slow stretches on the host spread
    // across grid points instead of hitting every repeat of one point.
    for repeat in 0..cfg.repeats {
        for centroids in &trained {
            let nlist = centroids.nlist();
            for &n in &cfg.n {
                let p = Point {
                    n,
                    nlist,
                    ..point(cfg)
                };
                let ids: Vec<u64> = (0..n as u64).collect();
                let vectors = data.rows(0..n);
                let index =
                    build_sivf(cfg, centroids, n, cfg.maxvec_factor[0], cfg.slab_factor[0])?;
                let (ok, dt) = timed(|| sivf_insert(&index, &ids, vectors, chunk));
                let ok = ok?;
                drop(index);
                out.push(if ok == n {
                    BenchRecord::new(
                        Engine::Sivf,
                        &p,
                        "insert_throughput",
                        per_sec(n, dt),
                        Unit::VecPerSec,
                        repeat,
                    )
                } else {
                    let rate = (n - ok) as f64 / n as f64;
                    BenchRecord::new(
                        Engine::Sivf,
                        &p,
                        "insert_failure_rate",
                        rate,
                        Unit::Ratio,
                        repeat,
                    )
                });

                let base = BaselineIndex::new(centroids.clone());
                let (res, dt) = timed(|| baseline_insert(&base, &ids, vectors, chunk));
                res?;
                out.push(BenchRecord::new(
                    Engine::Baseline,
                    &p,
                    "insert_throughput",
                    per_sec(n, dt),
                    Unit::VecPerSec,
                    repeat,
                ));
            }
        }
    }
    Ok(out)
}

/// QPS and recall@k over the nprobe sweep.
pub fn run_search(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let n = cfg.n[0];
    let nlist = cfg.nlist[0];
    let data = base_vectors(cfg, n)?;
    let queries = query_vectors(cfg)?;
    let centroids = train_centroids(cfg, &data, nlist)?;
    let (sivf, base, _) = populate(cfg, &centroids, &data, n)?;
    let truth = ground_truth(&data, &queries, cfg.k)?;
    let nq = queries.len();
    let mut out = Vec::new();
    for nprobe in cfg.nprobe_sweep(nlist) {
        let p = Point {
            nprobe,
            ..point(cfg)
        };
        for repeat in 0..cfg.repeats {
            let (hits, dt) = timed(|| sivf.search(&queries.vectors, cfg.k, nprobe));
            let hits = hits?;
            out.push(BenchRecord::new(
                Engine::Sivf,
                &p,
                "qps",
                per_sec(nq, dt),
                Unit::Qps,
                repeat,
            ));
            out.push(BenchRecord::new(
                Engine::Sivf,
                &p,
                "recall",
                recall_at_k(&hits, &truth, cfg.k),
                Unit::Ratio,
                repeat,
            ));
            let (hits, dt) = timed(|| base.search(&queries.vectors, cfg.k, nprobe));
            let hits = hits?;
            out.push(BenchRecord::new(
                Engine::Baseline,
                &p,
                "qps",
                per_sec(nq, dt),
                Unit::Qps,
                repeat,
            ));
            out.push(BenchRecord::new(
                Engine::Baseline,
                &p,
                "recall",
                recall_at_k(&hits, &truth, cfg.k),
                Unit::Ratio,
                repeat,
            ));
        }
    }
    Ok(out)
}

/// Batch delete latency on a populated index. Both engines are rebuilt from
/// a cached assignment before every measurement, so each repeat deletes from
/// exactly `n` live vectors.
pub fn run_delete(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let max_n = *cfg.n.iter().max().unwrap();
    let data = base_vectors(cfg, max_n)?;
    let mut out = Vec::new();
    for &nlist in &cfg.nlist {
        let centroids = train_centroids(cfg, &data, nlist)?;
        for &n in &cfg.n {
            let lists = centroids.assign(data.rows(0..n))?;
            let all: Vec<u64> = (0..n as u64).collect();
            for &b in &cfg.batch {
                let p = Point {
                    n,
                    nlist,
                    batch: b,
                    ..point(cfg)
                };
                for repeat in 0..cfg.repeats {
                    let (sivf, base) = build_pair(cfg, &centroids, &data, &lists)?;
                    let seed = cfg.seed ^ ((repeat as u64) << 32) ^ b as u64;
                    let victims = pick_distinct(&all, b, seed);

                    let (report, dt) = timed(|| sivf.delete_batch_instrumented(&victims));
                    ensure!(
                        report.deleted == b,
                        "sivf deleted {} of {b}",
                        report.deleted
                    );
                    out.push(BenchRecord::new(
                        Engine::Sivf,
                        &p,
                        "delete_latency",
                        ms(dt),
                        Unit::Ms,
                        repeat,
                    ));
                    out.push(BenchRecord::new(
                        Engine::Sivf,
                        &p,
                        "delete_throughput",
                        per_sec(b, dt),
                        Unit::VecPerSec,
                        repeat,
                    ));
                    out.push(BenchRecord::new(
                        Engine::Sivf,
                        &p,
                        "memory_ops_per_id",
                        report.memory_ops as f64 / b as f64,
                        Unit::Ratio,
                        repeat,
                    ));

                    let (report, dt) = timed(|| base.delete_instrumented(&victims));
                    ensure!(
                        report.deleted == b,
                        "baseline deleted {} of {b}",
                        report.deleted
                    );
                    out.push(BenchRecord::new(
                        Engine::Baseline,
                        &p,
                        "delete_latency",
                        ms(dt),
                        Unit::Ms,
                        repeat,
                    ));
                    out.push(BenchRecord::new(
                        Engine::Baseline,
                        &p,
                        "delete_throughput",
                        per_sec(b, dt),
                        Unit::VecPerSec,
                        repeat,
                    ));
                    out.push(BenchRecord::new(
                        Engine::Baseline,
                        &p,
                        "bytes_moved",
                        report.bytes_moved as f64,
                        Unit::Bytes,
                        repeat,
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// Rows of the sliding stream: the base set cycled as often as needed.
fn stream_rows(cfg: &BenchConfig, total: usize) -> Result<VectorDataset> {
    match cfg.dataset {
        DatasetSpec::Synthetic => base_vectors(cfg, total),
        DatasetSpec::Fvecs { .. } => {
            let base = base_vectors(cfg, cfg.window)?;
            let vectors = gather(&base, (0..total).map(|i| i % base.len()));
            Ok(VectorDataset { vectors, ..base })
        }
    }
}

/// Fixed-size window: each step inserts `batch` new vectors, evicts the
/// oldest `batch`, then runs one probe query batch. Ids are the stream
/// position modulo the id space, so the id space is recycled. The sivf
/// index sizes its pool for two windows and reclaims every `window / batch`
/// steps, which is exactly when the oldest generation of slabs has drained.
pub fn run_sliding(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let w = cfg.window;
    let b = cfg.batch[0];
    let nlist = cfg.nlist[0];
    let nprobe = cfg.nprobe.first().map_or(nlist, |&p| p.min(nlist));
    let reclaim_every = w / b;
    let stream = stream_rows(cfg, w + cfg.steps * b)?;
    let queries = query_vectors(cfg)?;
    let centroids = train_centroids(cfg, &stream.truncated(w), nlist)?;
    let p = Point {
        n: w,
        batch: b,
        nprobe,
        ..point(cfg)
    };
    let mut out = Vec::new();

    for repeat in 0..cfg.repeats {
        let mut sivf = build_sivf(
            cfg,
            &centroids,
            2 * w,
            cfg.maxvec_factor[0],
            cfg.slab_factor[0],
        )?;
        let base = BaselineIndex::new(centroids.clone());
        let cap = sivf.id_capacity() as u64;
        ensure!(
            cap >= (w + b) as u64,
            "id space {cap} cannot hold window plus one batch"
        );
        let id_of = |pos: usize| pos as u64 % cap;

        let warm_ids: Vec<u64> = (0..w).map(id_of).collect();
        let warm = stream.rows(0..w);
        let ok = sivf_insert(&sivf, &warm_ids, warm, INSERT_CHUNK)?;
        ensure!(ok == w, "window fill failed: {ok} of {w}");
        baseline_insert(&base, &warm_ids, warm, INSERT_CHUNK)?;

        for step in 1..=cfg.steps {
            let head = w + (step - 1) * b;
            let new_ids: Vec<u64> = (head..head + b).map(id_of).collect();
            let old_ids: Vec<u64> = (head - w..head - w + b).map(id_of).collect();
            let vectors = stream.rows(head..head + b);

            let (res, dt) = timed(|| -> Result<()> {
                let ok = sivf_insert(&sivf, &new_ids, vectors, b)?;
                ensure!(ok == b, "sliding insert failed at step {step}: {ok} of {b}");
                sivf.delete_batch(&old_ids);
                if step % reclaim_every == 0 {
                    sivf.reclaim_quiescent();
                }
                sivf.search(&queries.vectors, cfg.k, nprobe)?;
                Ok(())
            });
            res?;
            let stats = sivf.stats();
            let used = stats.metadata_bytes + stats.payload_bytes;
            out.push(
                BenchRecord::new(Engine::Sivf, &p, "step_latency", ms(dt), Unit::Ms, repeat)
                    .at_step(step),
            );
            out.push(
                BenchRecord::new(
                    Engine::Sivf,
                    &p,
                    "live_count",
                    stats.live_count as f64,
                    Unit::Ratio,
                    repeat,
                )
                .at_step(step),
            );
            out.push(
                BenchRecord::new(
                    Engine::Sivf,
                    &p,
                    "arena_bytes",
                    stats.arena_bytes as f64,
                    Unit::Bytes,
                    repeat,
                )
                .at_step(step),
            );
            out.push(
                BenchRecord::new(
                    Engine::Sivf,
                    &p,
                    "used_bytes",
                    used as f64,
                    Unit::Bytes,
                    repeat,
                )
                .at_step(step),
            );

            let (res, dt) = timed(|| -> Result<()> {
                baseline_insert(&base, &new_ids, vectors, b)?;
                base.delete(&old_ids);
                base.search(&queries.vectors, cfg.k, nprobe)?;
                Ok(())
            });
            res?;
            out.push(
                BenchRecord::new(
                    Engine::Baseline,
                    &p,
                    "step_latency",
                    ms(dt),
                    Unit::Ms,
                    repeat,
                )
                .at_step(step),
            );
            out.push(
                BenchRecord::new(
                    Engine::Baseline,
                    &p,
                    "live_count",
                    base.len() as f64,
                    Unit::Ratio,
                    repeat,
                )
                .at_step(step),
            );
            out.push(
                BenchRecord::new(
                    Engine::Baseline,
                    &p,
                    "arena_bytes",
                    base.allocated_bytes() as f64,
                    Unit::Bytes,
                    repeat,
                )
                .at_step(step),
            );
        }
    }
    Ok(out)
}

/// Overhead ratio and footprint, plus a delete-half / reclaim / re-insert
/// cycle that must leave the reserved arena untouched.
pub fn run_memory(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let max_n = *cfg.n.iter().max().unwrap();
    let nlist = cfg.nlist[0];
    let data = base_vectors(cfg, max_n)?;
    let centroids = train_centroids(cfg, &data, nlist)?;
    let mut out = Vec::new();
    for &n in &cfg.n {
        let p = Point {
            n,
            nlist,
            ..point(cfg)
        };
        for repeat in 0..cfg.repeats {
            let (mut sivf, base, lists) = populate(cfg, &centroids, &data, n)?;
            let before = sivf.stats();
            let used = |s: &sivf_core::IndexStats| (s.metadata_bytes + s.payload_bytes) as f64;
            let mut rec = |engine, metric: &str, value: f64, unit| {
                out.push(BenchRecord::new(engine, &p, metric, value, unit, repeat));
            };
            rec(
                Engine::Sivf,
                "overhead_ratio",
                before.overhead_ratio,
                Unit::Ratio,
            );
            rec(Engine::Sivf, "used_bytes", used(&before), Unit::Bytes);
            rec(
                Engine::Sivf,
                "arena_bytes",
                before.arena_bytes as f64,
                Unit::Bytes,
            );
            rec(
                Engine::Baseline,
                "compact_bytes",
                (n * cfg.dim * 4) as f64,
                Unit::Bytes,
            );
            rec(
                Engine::Baseline,
                "allocated_bytes",
                base.allocated_bytes() as f64,
                Unit::Bytes,
            );
            drop(base);

            // The oldest half: whole slabs drain, as in a retention sweep.
            let half: Vec<u64> = (0..(n / 2) as u64).collect();
            sivf.delete_batch(&half);
            sivf.reclaim_quiescent();
            let vecs = gather(&data, half.iter().map(|&i| i as usize));
            let hlists: Vec<u32> = half.iter().map(|&i| lists[i as usize]).collect();
            let back = sivf.insert_batch_assigned(&half, &vecs, &hlists)?;
            let failed = back.iter().filter(|s| !s.is_ok()).count();
            let after = sivf.stats();
            rec(
                Engine::Sivf,
                "cycle_insert_failures",
                failed as f64,
                Unit::Ratio,
            );
            rec(
                Engine::Sivf,
                "cycle_arena_bytes",
                after.arena_bytes as f64,
                Unit::Bytes,
            );
            rec(Engine::Sivf, "cycle_used_bytes", used(&after), Unit::Bytes);
        }
    }
    Ok(out)
}

/// Insert throughput and delete latency over the capacity-factor grid.
pub fn run_sensitivity(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let n = cfg.n[0];
    let nlist = cfg.nlist[0];
    let data = base_vectors(cfg, n)?;
    let centroids = train_centroids(cfg, &data, nlist)?;
    let ids: Vec<u64> = (0..n as u64).collect();
    let vectors = data.rows(0..n);
    warm_up(cfg, &centroids, &ids, vectors)?;
    let mut out = Vec::new();
    // Interleaved like run_add: every grid point sees each phase of the run.
    for repeat in 0..cfg.repeats {
        for &maxvec in &cfg.maxvec_factor {
            for &slab in &cfg.slab_factor {
                let p = Point {
                    n,
                    nlist,
                    maxvec_factor: maxvec,
                    slab_factor: slab,
                    batch: INSERT_CHUNK,
                    ..point(cfg)
                };
                let index = build_sivf(cfg, &centroids, n, maxvec, slab)?;
                let (statuses, dt) = timed(|| -> Result<Vec<bool>> {
                    let mut ok = Vec::with_capacity(n);
                    for (ic, vc) in ids
                        .chunks(INSERT_CHUNK)
                        .zip(vectors.chunks(INSERT_CHUNK * cfg.dim))
                    {
                        ok.extend(index.insert_batch(ic, vc)?.iter().map(|s| s.is_ok()));
                    }
                    Ok(ok)
                });
                let statuses = statuses?;
                let live: Vec<u64> = ids
                    .iter()
                    .zip(&statuses)
                    .filter(|(_, &ok)| ok)
                    .map(|(&id, _)| id)
                    .collect();
                let failed = n - live.len();
                out.push(BenchRecord::new(
                    Engine::Sivf,
                    &p,
                    "insert_throughput",
                    per_sec(live.len(), dt),
                    Unit::VecPerSec,
                    repeat,
                ));
                out.push(BenchRecord::new(
                    Engine::Sivf,
                    &p,
                    "insert_failure_rate",
                    failed as f64 / n as f64,
                    Unit::Ratio,
                    repeat,
                ));

                // Disjoint victim sets per batch size, drawn from the live ids.
                let mut pool = live;
                for &b in &cfg.batch {
                    let seed = cfg.seed ^ ((repeat as u64) << 32) ^ b as u64;
                    let victims = pick_distinct(&pool, b, seed);
                    let (deleted, dt) = timed(|| index.delete_batch(&victims));
                    ensure!(
                        deleted == victims.len(),
                        "deleted {deleted} of {}",
                        victims.len()
                    );
                    let pb = Point {
                        batch: b,
                        ..p.clone()
                    };
                    out.push(BenchRecord::new(
                        Engine::Sivf,
                        &pb,
                        "delete_latency",
                        ms(dt),
                        Unit::Ms,
                        repeat,
                    ));
                    out.push(BenchRecord::new(
                        Engine::Sivf,
                        &pb,
                        "delete_latency_per_id",
                        ms(dt) / victims.len().max(1) as f64,
                        Unit::Ms,
                        repeat,
                    ));
                    let gone: std::collections::HashSet<u64> = victims.into_iter().collect();
                    pool.retain(|id| !gone.contains(id));
                }
            }
        }
    }
    Ok(out)
}
