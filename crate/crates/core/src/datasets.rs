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

//! Benchmark vectors: TEXMEX `.fvecs`/`.ivecs` files, synthetic uniform data
//! and exact ground truth.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::SearchHit;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    SyntheticUniform { seed: u64, low: f32, high: f32 },
}

/// Row-major matrix of `n` vectors of `dim` floats.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    pub dim: usize,
    pub vectors: Vec<f32>,
    pub source: DataSource,
}

impl VectorDataset {
    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self, range: std::ops::Range<usize>) -> &[f32] {
        &self.vectors[range.start * self.dim..range.end * self.dim]
    }

    /// First `n` rows as a new dataset.
    pub fn truncated(&self, n: usize) -> VectorDataset {
        VectorDataset {
            dim: self.dim,
            vectors: self.rows(0..n.min(self.len())).to_vec(),
            source: self.source.clone(),
        }
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Splits `[dim: i32 LE][dim x 4-byte values]` records, checking every dim
/// against the first. Returns the common dim and the value words.
fn parse_records<'a>(path: &Path, bytes: &'a [u8]) -> Result<(usize, Vec<&'a [u8]>)> {
    let mut rows = Vec::new();
    let mut dim = None;
    let mut pos = 0;
    while pos < bytes.len() {
        let header = bytes
            .get(pos..pos + 4)
            .ok_or_else(|| format_err(path, format!("truncated header at byte {pos}")))?;
        let d = i32::from_le_bytes(header.try_into().unwrap());
        if d <= 0 {
            return Err(format_err(
                path,
                format!("non-positive dim {d} at byte {pos}"),
            ));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(format_err(
                    path,
                    format!(
                        "inconsistent dim: record {} has {d}, expected {expected}",
                        rows.len()
                    ),
                ))
            }
            _ => {}
        }
        let body = bytes
            .get(pos + 4..pos + 4 + 4 * d)
            .ok_or_else(|| format_err(path, format!("truncated record {}", rows.len())))?;
        rows.push(body);
        pos += 4 + 4 * d;
    }
    Ok((dim.unwrap_or(0), rows))
}

pub fn load_fvecs(path: impl AsRef<Path>) -> Result<VectorDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let (dim, rows) = parse_records(path, &bytes)?;
    if rows.is_empty() {
        return Err(format_err(path, "no vectors"));
    }
    let mut vectors = Vec::with_capacity(rows.len() * dim);
    for (i, body) in rows.iter().enumerate() {
        for w in body.chunks_exact(4) {
            let v = f32::from_le_bytes(w.try_into().unwrap());
            if !v.is_finite() {
                return Err(format_err(path, format!("non-finite value in vector {i}")));
            }
            vectors.push(v);
        }
    }
    Ok(VectorDataset {
        dim,
        vectors,
        source: DataSource::File(path.to_path_buf()),
    })
}

/// Integer rows (neighbor ids). An empty file yields zero rows.
pub fn load_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let (_, rows) = parse_records(path, &bytes)?;
    Ok(rows
        .iter()
        .map(|body| {
            body.chunks_exact(4)
                .map(|w| i32::from_le_bytes(w.try_into().unwrap()))
                .collect()
        })
        .collect())
}

pub fn write_fvecs(path: impl AsRef<Path>, data: &VectorDataset) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let header = (data.dim as i32).to_le_bytes();
    for row in data.vectors.chunks_exact(data.dim) {
        out.write_all(&header)?;
        for v in row {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_ivecs(path: impl AsRef<Path>, rows: &[Vec<i32>]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for row in rows {
        out.write_all(&(row.len() as i32).to_le_bytes())?;
        for v in row {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `n` vectors with components drawn uniformly from `[0, 1)`.
pub fn synth_uniform(n: usize, dim: usize, seed: u64) -> VectorDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..n * dim).map(|_| rng.gen::<f32>()).collect();
    VectorDataset {
        dim,
        vectors,
        source: DataSource::SyntheticUniform {
            seed,
            low: 0.0,
            high: 1.0,
        },
    }
}

/// Exact k nearest base rows for every query, distances accumulated in f64.
/// Base row `i` has id `i`. Ordered by (distance, id).
pub fn exact_knn(
    base: &VectorDataset,
    queries: &VectorDataset,
    k: usize,
) -> Result<Vec<Vec<(u64, f64)>>> {
    if base.dim != queries.dim {
        return Err(Error::DimensionMismatch {
            expected: base.dim,
            actual: queries.dim,
        });
    }
    let dim = base.dim;
    Ok(queries
        .vectors
        .par_chunks(dim)
        .map(|q| {
            let mut best: Vec<(f64, u64)> = Vec::with_capacity(k + 1);
            for (id, row) in base.vectors.chunks_exact(dim).enumerate() {
                let d: f64 = q
                    .iter()
                    .zip(row)
                    .map(|(&a, &b)| {
                        let t = a as f64 - b as f64;
                        t * t
                    })
                    .sum();
                let cand = (d, id as u64);
                if best.len() == k && cand >= *best.last().unwrap() {
                    continue;
                }
                let pos = best.partition_point(|x| *x < cand);
                best.insert(pos, cand);
                best.truncate(k);
            }
            best.into_iter().map(|(d, id)| (id, d)).collect()
        })
        .collect())
}

/// Ids of the exact k nearest neighbors, per query.
pub fn ground_truth(
    base: &VectorDataset,
    queries: &VectorDataset,
    k: usize,
) -> Result<Vec<Vec<u64>>> {
    Ok(exact_knn(base, queries, k)?
        .into_iter()
        .map(|row| row.into_iter().map(|(id, _)| id).collect())
        .collect())
}

/// Mean over queries of `|returned ∩ truth[..k]| / k`.
pub fn recall_at_k(results: &[Vec<SearchHit>], truth: &[Vec<u64>], k: usize) -> f64 {
    if results.is_empty() || k == 0 {
        return 0.0;
    }
    let total: f64 = results
        .iter()
        .zip(truth)
        .map(|(hits, want)| {
            let want = &want[..k.min(want.len())];
            let found = hits.iter().take(k).filter(|h| want.contains(&h.id)).count();
            found as f64 / k as f64
        })
        .sum();
    total / results.len() as f64
}
