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

//! Coarse quantizer: k-means centroids that route vectors to inverted lists.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::l2_sq;
use crate::{Error, Result};

/// Default number of Lloyd iterations.
pub const DEFAULT_ITERS: usize = 20;

const ASSIGN_CHUNK: usize = 512;

/// Trained centroid set. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    nlist: usize,
    dim: usize,
    values: Vec<f32>,
    rng_seed: u64,
}

impl Centroids {
    /// Wraps an explicit centroid matrix (`nlist * dim` row-major values).
    pub fn from_values(dim: usize, values: Vec<f32>, rng_seed: u64) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "centroid matrix of {} values does not split into rows of {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim });
        }
        Ok(Self {
            nlist: values.len() / dim,
            dim,
            values,
            rng_seed,
        })
    }

    /// Lloyd's k-means with k-means++ seeding.
    pub fn train(
        vectors: &[f32],
        dim: usize,
        nlist: usize,
        iters: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::train_with_trace(vectors, dim, nlist, iters, seed).map(|(c, _)| c)
    }

    /// Same as [`Centroids::train`], also returning the total within-cluster
    /// squared distance measured at each assignment step.
    pub fn train_with_trace(
        vectors: &[f32],
        dim: usize,
        nlist: usize,
        iters: usize,
        seed: u64,
    ) -> Result<(Self, Vec<f64>)> {
        check_matrix(vectors, dim)?;
        if nlist == 0 {
            return Err(Error::InvalidParameter("nlist must be at least 1".into()));
        }
        let n = vectors.len() / dim;
        if n < nlist {
            return Err(Error::InsufficientData {
                needed: nlist,
                available: n,
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centroids = Self {
            nlist,
            dim,
            values: seed_plus_plus(vectors, dim, nlist, &mut rng),
            rng_seed: seed,
        };

        let mut trace = Vec::with_capacity(iters);
        let mut labels = vec![0u32; n];
        let mut dists = vec![0f32; n];
        for _ in 0..iters {
            centroids.assign_into(vectors, &mut labels, &mut dists);
            trace.push(inertia(vectors, dim, &centroids.values, &labels));
            let mut sizes = vec![0usize; nlist];
            for &l in &labels {
                sizes[l as usize] += 1;
            }
            reseed_empty(
                vectors,
                dim,
                &mut centroids.values,
                &mut labels,
                &mut dists,
                &mut sizes,
            );
            centroids.update_means(vectors, &labels, &sizes);
        }
        Ok((centroids, trace))
    }

    pub fn nlist(&self) -> usize {
        self.nlist
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn centroid(&self, list: usize) -> &[f32] {
        &self.values[list * self.dim..(list + 1) * self.dim]
    }

    /// Nearest list for one vector, ties to the lowest list index.
    #[inline]
    pub fn nearest(&self, vector: &[f32]) -> (u32, f32) {
        let mut best = (0u32, f32::INFINITY);
        for (list, c) in self.values.chunks_exact(self.dim).enumerate() {
            let d = l2_sq(vector, c);
            if d < best.1 {
                best = (list as u32, d);
            }
        }
        best
    }

    /// Nearest list for every row of `vectors`.
    pub fn assign(&self, vectors: &[f32]) -> Result<Vec<u32>> {
        check_matrix(vectors, self.dim)?;
        let n = vectors.len() / self.dim;
        let mut labels = vec![0u32; n];
        let mut dists = vec![0f32; n];
        self.assign_into(vectors, &mut labels, &mut dists);
        Ok(labels)
    }

    fn assign_into(&self, vectors: &[f32], labels: &mut [u32], dists: &mut [f32]) {
        let dim = self.dim;
        vectors
            .par_chunks(ASSIGN_CHUNK * dim)
            .zip(labels.par_chunks_mut(ASSIGN_CHUNK))
            .zip(dists.par_chunks_mut(ASSIGN_CHUNK))
            .for_each(|((rows, labels), dists)| {
                for ((row, label), dist) in rows.chunks_exact(dim).zip(labels).zip(dists) {
                    (*label, *dist) = self.nearest(row);
                }
            });
    }

    /// The `nprobe` nearest lists to `query`, nearest first, ties by index.
    pub fn probe(&self, query: &[f32], nprobe: usize) -> Result<Vec<u32>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        if nprobe == 0 || nprobe > self.nlist {
            return Err(Error::InvalidParameter(format!(
                "nprobe must be in 1..={}, got {nprobe}",
                self.nlist
            )));
        }
        Ok(self.probe_unchecked(query, nprobe))
    }

    pub(crate) fn probe_unchecked(&self, query: &[f32], nprobe: usize) -> Vec<u32> {
        if nprobe == 1 {
            return vec![self.nearest(query).0];
        }
        let mut scored: Vec<(f32, u32)> = self
            .values
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(list, c)| (l2_sq(query, c), list as u32))
            .collect();
        let cmp = |a: &(f32, u32), b: &(f32, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if nprobe < scored.len() {
            scored.select_nth_unstable_by(nprobe - 1, cmp);
            scored.truncate(nprobe);
        }
        scored.sort_unstable_by(cmp);
        scored.into_iter().map(|(_, list)| list).collect()
    }

    /// Writes `nlist`, `dim` (u32 LE) then the values (f32 LE).
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.nlist as u32).to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let nlist = u32::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let dim = u32::from_le_bytes(word) as usize;
        let mut bytes = vec![0u8; nlist * dim * 4];
        input.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Self::from_values(dim, values, 0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn check_matrix(vectors: &[f32], dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dim must be at least 1".into()));
    }
    if !vectors.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: vectors.len() % dim,
        });
    }
    Ok(())
}

fn seed_plus_plus(vectors: &[f32], dim: usize, nlist: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let n = vectors.len() / dim;
    let row = |i: usize| &vectors[i * dim..(i + 1) * dim];
    let mut chosen = vec![false; n];
    let mut values = Vec::with_capacity(nlist * dim);

    let first = rng.gen_range(0..n);
    chosen[first] = true;
    values.extend_from_slice(row(first));
    let mut min_d: Vec<f64> = (0..n).map(|i| l2_sq(row(i), row(first)) as f64).collect();

    while values.len() < nlist * dim {
        let total: f64 = min_d.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in min_d.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just past the last positive weight.
            pick.or_else(|| min_d.iter().rposition(|&d| d > 0.0))
                .unwrap()
        } else {
            // Every remaining point coincides with a centroid.
            let skip = rng.gen_range(0..n - values.len() / dim);
            (0..n).filter(|&i| !chosen[i]).nth(skip).unwrap()
        };
        chosen[pick] = true;
        let c = row(pick).to_vec();
        for (i, d) in min_d.iter_mut().enumerate() {
            let nd = l2_sq(row(i), &c) as f64;
            if nd < *d {
                *d = nd;
            }
        }
        values.extend_from_slice(&c);
    }
    values
}

fn reseed_empty(
    vectors: &[f32],
    dim: usize,
    values: &mut [f32],
    labels: &mut [u32],
    dists: &mut [f32],
    sizes: &mut [usize],
) {
    for empty in 0..sizes.len() {
        if sizes[empty] != 0 {
            continue;
        }
        let largest = (0..sizes.len())
            .max_by_key(|&l| (sizes[l], std::cmp::Reverse(l)))
            .unwrap();
        let farthest = (0..labels.len())
            .filter(|&i| labels[i] as usize == largest)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
            .unwrap();
        values[empty * dim..(empty + 1) * dim]
            .copy_from_slice(&vectors[farthest * dim..(farthest + 1) * dim]);
        labels[farthest] = empty as u32;
        dists[farthest] = 0.0;
        sizes[largest] -= 1;
        sizes[empty] = 1;
    }
}

impl Centroids {
    fn update_means(&mut self, vectors: &[f32], labels: &[u32], sizes: &[usize]) {
        let dim = self.dim;
        let mut sums = vec![0f64; self.nlist * dim];
        for (row, &l) in vectors.chunks_exact(dim).zip(labels) {
            let acc = &mut sums[l as usize * dim..(l as usize + 1) * dim];
            for (a, &x) in acc.iter_mut().zip(row) {
                *a += x as f64;
            }
        }
        for (list, &size) in sizes.iter().enumerate() {
            if size == 0 {
                continue;
            }
            let out = &mut self.values[list * dim..(list + 1) * dim];
            for (v, s) in out.iter_mut().zip(&sums[list * dim..(list + 1) * dim]) {
                *v = (s / size as f64) as f32;
            }
        }
    }
}

fn inertia(vectors: &[f32], dim: usize, values: &[f32], labels: &[u32]) -> f64 {
    vectors
        .chunks_exact(dim)
        .zip(labels)
        .map(|(row, &l)| {
            let c = &values[l as usize * dim..(l as usize + 1) * dim];
            row.iter()
                .zip(c)
                .map(|(&x, &y)| {
                    let d = x as f64 - y as f64;
                    d * d
                })
                .sum::<f64>()
        })
        .sum()
}
