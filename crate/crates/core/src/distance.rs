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

//! Squared-L2 kernel and top-k bookkeeping shared by both engines.

use std::cmp::Ordering;

/// Squared Euclidean distance, no square root.
///
/// Accumulates in eight independent lanes so the loop vectorizes. Both
/// engines call this same function, so equal inputs give bit-identical
/// distances across engines.
#[inline]
pub fn l2_sq(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..8 {
            let d = x[i] - y[i];
            acc[i] += d * d;
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// One search result: external id and squared-L2 distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchHit {
    pub id: u64,
    pub distance: f32,
}

impl SearchHit {
    pub fn new(id: u64, distance: f32) -> Self {
        Self { id, distance }
    }

    /// Total order used everywhere results are ranked: ascending distance,
    /// ties by ascending id.
    #[inline]
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.id.cmp(&other.id))
    }
}

/// Bounded, insertion-sorted candidate list holding the best `k` hits seen.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    hits: Vec<SearchHit>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            hits: Vec::with_capacity(k),
        }
    }

    /// Worst hit currently kept, if the list is full.
    #[inline]
    fn bound(&self) -> Option<&SearchHit> {
        if self.hits.len() == self.k {
            self.hits.last()
        } else {
            None
        }
    }

    #[inline]
    pub fn push(&mut self, hit: SearchHit) {
        if self.k == 0 {
            return;
        }
        if let Some(worst) = self.bound() {
            if hit.rank_cmp(worst) != Ordering::Less {
                return;
            }
            self.hits.pop();
        }
        let mut pos = self.hits.len();
        while pos > 0 && hit.rank_cmp(&self.hits[pos - 1]) == Ordering::Less {
            pos -= 1;
        }
        self.hits.insert(pos, hit);
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn as_slice(&self) -> &[SearchHit] {
        &self.hits
    }

    pub fn into_vec(self) -> Vec<SearchHit> {
        self.hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_matches_naive_sum() {
        let a: Vec<f32> = (0..19).map(|i| i as f32 * 0.5).collect();
        let b: Vec<f32> = (0..19).map(|i| (i as f32).sin()).collect();
        let naive: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| ((*x as f64) - (*y as f64)).powi(2))
            .sum();
        assert!((l2_sq(&a, &b) as f64 - naive).abs() < 1e-4 * naive);
        assert_eq!(l2_sq(&[0.0, 0.0], &[3.0, 4.0]), 25.0);
    }

    #[test]
    fn topk_keeps_best_in_rank_order() {
        let mut top = TopK::new(3);
        for (id, d) in [(5, 2.0), (1, 9.0), (2, 2.0), (7, 0.5), (3, 4.0), (0, 2.0)] {
            top.push(SearchHit::new(id, d));
        }
        let ids: Vec<u64> = top.as_slice().iter().map(|h| h.id).collect();
        assert_eq!(ids, vec![7, 0, 2]);
    }

    #[test]
    fn zero_k_is_empty() {
        let mut top = TopK::new(0);
        top.push(SearchHit::new(1, 1.0));
        assert!(top.is_empty());
    }
}
