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

//! Concurrent ingestion, deletion and search.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use sivf_core::distance::l2_sq;
use sivf_core::{IndexConfig, InsertStatus, SivfIndex};

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Payload fully determined by the id.
fn payload(id: u64, dim: usize) -> Vec<f32> {
    (0..dim as u64)
        .map(|j| (splitmix(id * 131 + j) >> 40) as f32 / (1u64 << 24) as f32)
        .collect()
}

fn payloads(ids: impl Iterator<Item = u64>, dim: usize) -> Vec<f32> {
    ids.flat_map(|id| payload(id, dim)).collect()
}

fn trained(dim: usize, nlist: usize, expected_n: usize) -> SivfIndex {
    let sample = payloads(0..(nlist as u64 * 4).max(256), dim);
    let cfg = IndexConfig::new(dim, nlist, expected_n).with_factors(1.2, 1.5);
    let mut cfg = cfg;
    cfg.train_iters = 4;
    SivfIndex::train(cfg, &sample).unwrap()
}

#[test]
fn eight_writers_many_lists() {
    let dim = 8;
    let index = trained(dim, 4096, 80_000);
    std::thread::scope(|s| {
        for t in 0..8u64 {
            let index = &index;
            s.spawn(move || {
                for chunk in (t * 10_000..(t + 1) * 10_000)
                    .collect::<Vec<_>>()
                    .chunks(500)
                {
                    let data = payloads(chunk.iter().copied(), dim);
                    let st = index.insert_batch(chunk, &data).unwrap();
                    assert!(st.iter().all(|s| *s == InsertStatus::Ok));
                }
            });
        }
    });
    assert_eq!(index.live_count(), 80_000);
    let mut coords = HashSet::new();
    for id in 0..80_000u64 {
        let coord = index.coordinate(id).unwrap().expect("live id");
        assert!(coords.insert(coord), "slot reused for {id}");
        assert_eq!(index.slot_id(coord), Some(id));
        assert_eq!(index.vector(id).unwrap(), payload(id, dim));
    }
    let problems = index.verify_quiescent();
    assert!(problems.is_empty(), "{problems:?}");
}

#[test]
fn single_list_contention() {
    // Every writer hits the same head slab.
    let dim = 4;
    let cfg = IndexConfig::new(dim, 1, 40_000).with_factors(1.0, 2.0);
    let cents = sivf_core::Centroids::from_values(dim, vec![0.5; dim], 0).unwrap();
    let index = SivfIndex::new(cfg, cents).unwrap();
    std::thread::scope(|s| {
        for t in 0..8u64 {
            let index = &index;
            s.spawn(move || {
                for id in t * 5000..(t + 1) * 5000 {
                    let st = index.insert_batch(&[id], &payload(id, dim)).unwrap();
                    assert_eq!(st, vec![InsertStatus::Ok]);
                }
            });
        }
    });
    assert_eq!(index.live_count(), 40_000);
    let stats = index.stats();
    // Leaked slabs stay allocated but unlinked.
    assert_eq!(
        index.chain(0).len() as u64 + stats.leaked_slabs,
        stats.slabs_in_use as u64
    );
    assert!(index.verify_quiescent().is_empty());
}

#[test]
fn readers_never_see_torn_payloads() {
    let dim = 8;
    let nlist = 32;
    for round in 0..5u64 {
        let index = trained(dim, nlist, 40_000);
        let done = AtomicBool::new(false);
        let checked = AtomicUsize::new(0);
        std::thread::scope(|s| {
            let writers: Vec<_> = (0..4u64)
                .map(|t| {
                    let index = &index;
                    s.spawn(move || {
                        let ids: Vec<u64> = (t * 10_000..(t + 1) * 10_000).collect();
                        for chunk in ids.chunks(250) {
                            let data = payloads(chunk.iter().copied(), dim);
                            index.insert_batch(chunk, &data).unwrap();
                        }
                    })
                })
                .collect();
            for r in 0..3u64 {
                let (index, done, checked) = (&index, &done, &checked);
                s.spawn(move || {
                    let q = payload(1_000_000 + round * 10 + r, dim);
                    while !done.load(Ordering::Acquire) {
                        for hit in &index.search(&q, 10, nlist).unwrap()[0] {
                            assert!(hit.id < 40_000);
                            assert_eq!(
                                hit.distance,
                                l2_sq(&q, &payload(hit.id, dim)),
                                "torn payload for {}",
                                hit.id
                            );
                            checked.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                });
            }
            for w in writers {
                w.join().unwrap();
            }
            done.store(true, Ordering::Release);
        });
        assert_eq!(index.live_count(), 40_000);
        assert!(checked.load(Ordering::Relaxed) > 0);
    }
}

#[test]
fn deletes_race_with_searches_and_inserts() {
    let dim = 6;
    let nlist = 16;
    let index = trained(dim, nlist, 30_000);
    let first: Vec<u64> = (0..15_000).collect();
    index
        .insert_batch(&first, &payloads(first.iter().copied(), dim))
        .unwrap();
    let done = AtomicBool::new(false);

    std::thread::scope(|s| {
        let deleter = s.spawn(|| {
            let mut total = 0;
            for chunk in first.chunks(300) {
                total += index.delete_batch(chunk);
                // A second pass over the same chunk is a no-op.
                assert_eq!(index.delete_batch(chunk), 0);
            }
            total
        });
        let inserter = s.spawn(|| {
            let ids: Vec<u64> = (15_000..30_000).collect();
            for chunk in ids.chunks(300) {
                index
                    .insert_batch(chunk, &payloads(chunk.iter().copied(), dim))
                    .unwrap();
            }
        });
        let (index, done) = (&index, &done);
        let reader = s.spawn(move || {
            let q = payload(99_999_999, dim);
            while !done.load(Ordering::Acquire) {
                for hit in &index.search(&q, 5, nlist).unwrap()[0] {
                    assert_eq!(hit.distance, l2_sq(&q, &payload(hit.id, dim)));
                }
            }
        });
        assert_eq!(deleter.join().unwrap(), 15_000);
        inserter.join().unwrap();
        done.store(true, Ordering::Release);
        reader.join().unwrap();
    });

    assert_eq!(index.live_count(), 15_000);
    assert_eq!(index.deleted_count(), 15_000);
    let q = payload(7, dim);
    let hits = index.search(&q, 50, nlist).unwrap().remove(0);
    assert!(hits.iter().all(|h| h.id >= 15_000));
    assert!(index.verify_quiescent().is_empty());
}

#[test]
fn concurrent_duplicate_inserts_admit_one_winner() {
    let dim = 2;
    let index = trained(dim, 4, 1000);
    let wins = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..8 {
            s.spawn(|| {
                for id in 0..500u64 {
                    if index.insert_batch(&[id], &payload(id, dim)).unwrap()[0].is_ok() {
                        wins.fetch_add(1, Ordering::Relaxed);
                    }
                }
            });
        }
    });
    assert_eq!(wins.load(Ordering::Relaxed), 500);
    assert_eq!(index.live_count(), 500);
    assert!(index.verify_quiescent().is_empty());
}
