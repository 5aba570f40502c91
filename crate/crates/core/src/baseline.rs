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

//! Contiguous-list IVF that rebuilds on every delete.
//!
//! Deletion copies every stored `(list, id, payload)` record into a staging
//! buffer, drops the requested ids, clears all lists and appends the
//! survivors back. The cost is proportional to the index size no matter how
//! few ids are removed, which is the maintenance pattern this type models.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use rayon::prelude::*;

use crate::coarse_quantizer::Centroids;
use crate::distance::{l2_sq, SearchHit, TopK};
use crate::{Error, Result};

#[derive(Debug, Default, Clone)]
struct InvertedList {
    ids: Vec<u64>,
    data: Vec<f32>,
}

#[derive(Debug, Default)]
struct Lists {
    lists: Vec<InvertedList>,
    ids: HashSet<u64>,
}

/// Bytes and records moved by the last rebuild.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RebuildReport {
    pub staged_vectors: usize,
    pub bytes_moved: usize,
    pub deleted: usize,
}

#[derive(Debug)]
pub struct BaselineIndex {
    centroids: Centroids,
    inner: RwLock<Lists>,
    total_bytes_moved: AtomicU64,
}

impl BaselineIndex {
    pub fn new(centroids: Centroids) -> Self {
        let nlist = centroids.nlist();
        Self {
            centroids,
            inner: RwLock::new(Lists {
                lists: vec![InvertedList::default(); nlist],
                ids: HashSet::new(),
            }),
            total_bytes_moved: AtomicU64::new(0),
        }
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn dim(&self) -> usize {
        self.centroids.dim()
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ids of one list in storage order.
    pub fn list_ids(&self, list: usize) -> Vec<u64> {
        self.inner.read().unwrap().lists[list].ids.clone()
    }

    /// Bytes held by list storage (capacity, not length).
    pub fn allocated_bytes(&self) -> usize {
        let inner = self.inner.read().unwrap();
        inner
            .lists
            .iter()
            .map(|l| l.ids.capacity() * 8 + l.data.capacity() * 4)
            .sum()
    }

    pub fn total_bytes_moved(&self) -> u64 {
        self.total_bytes_moved.load(Ordering::Relaxed)
    }

    /// Appends each vector to its nearest list. Fails without inserting
    /// anything if any id is already present or repeated.
    pub fn insert(&self, ids: &[u64], vectors: &[f32]) -> Result<()> {
        self.check_rows(ids.len(), vectors)?;
        let lists = self.centroids.assign(vectors)?;
        self.insert_assigned(ids, vectors, &lists)
    }

    pub fn insert_assigned(&self, ids: &[u64], vectors: &[f32], lists: &[u32]) -> Result<()> {
        self.check_rows(ids.len(), vectors)?;
        if lists.len() != ids.len() || lists.iter().any(|&l| l as usize >= self.centroids.nlist()) {
            return Err(Error::InvalidParameter("bad list assignments".into()));
        }
        let dim = self.dim();
        let mut inner = self.inner.write().unwrap();
        let mut fresh = HashSet::with_capacity(ids.len());
        for &id in ids {
            if inner.ids.contains(&id) || !fresh.insert(id) {
                return Err(Error::DuplicateId(id));
            }
        }
        inner.ids.extend(fresh);
        for ((&id, row), &list) in ids.iter().zip(vectors.chunks_exact(dim)).zip(lists) {
            let l = &mut inner.lists[list as usize];
            l.ids.push(id);
            l.data.extend_from_slice(row);
        }
        Ok(())
    }

    fn check_rows(&self, rows: usize, vectors: &[f32]) -> Result<()> {
        if vectors.len() != rows * self.dim() {
            return Err(Error::DimensionMismatch {
                expected: rows * self.dim(),
                actual: vectors.len(),
            });
        }
        Ok(())
    }

    /// Removes `ids` by a full extract, filter and rebuild.
    pub fn delete(&self, ids: &[u64]) -> usize {
        self.delete_instrumented(ids).deleted
    }

    pub fn delete_instrumented(&self, ids: &[u64]) -> RebuildReport {
        let dim = self.dim();
        let mut inner = self.inner.write().unwrap();
        let Lists {
            lists,
            ids: present,
        } = &mut *inner;

        let total: usize = lists.iter().map(|l| l.ids.len()).sum();
        let mut staged_lists = Vec::with_capacity(total);
        let mut staged_ids = Vec::with_capacity(total);
        let mut staged_data = Vec::with_capacity(total * dim);
        for (list, l) in lists.iter().enumerate() {
            staged_lists.extend(std::iter::repeat_n(list as u32, l.ids.len()));
            staged_ids.extend_from_slice(&l.ids);
            staged_data.extend_from_slice(&l.data);
        }

        let doomed: HashSet<u64> = ids
            .iter()
            .copied()
            .filter(|id| present.contains(id))
            .collect();
        for l in lists.iter_mut() {
            l.ids.clear();
            l.data.clear();
        }
        for ((&list, &id), row) in staged_lists
            .iter()
            .zip(&staged_ids)
            .zip(staged_data.chunks_exact(dim))
        {
            if doomed.contains(&id) {
                continue;
            }
            let l = &mut lists[list as usize];
            l.ids.push(id);
            l.data.extend_from_slice(row);
        }
        for id in &doomed {
            present.remove(id);
        }

        let record_bytes = 4 + 8 + dim * 4;
        let report = RebuildReport {
            staged_vectors: total,
            bytes_moved: total * record_bytes + (total - doomed.len()) * (8 + dim * 4),
            deleted: doomed.len(),
        };
        self.total_bytes_moved
            .fetch_add(report.bytes_moved as u64, Ordering::Relaxed);
        report
    }

    /// Same contract and result order as [`crate::SivfIndex::search`].
    pub fn search(&self, queries: &[f32], k: usize, nprobe: usize) -> Result<Vec<Vec<SearchHit>>> {
        let dim = self.dim();
        if !queries.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: queries.len() % dim,
            });
        }
        if k == 0 || nprobe == 0 || nprobe > self.centroids.nlist() {
            return Err(Error::InvalidParameter(format!(
                "need k >= 1 and nprobe in 1..={}",
                self.centroids.nlist()
            )));
        }
        let inner = self.inner.read().unwrap();
        Ok(queries
            .par_chunks(dim)
            .map(|q| {
                let mut top = TopK::new(k);
                for list in self.centroids.probe_unchecked(q, nprobe) {
                    let l = &inner.lists[list as usize];
                    for (&id, row) in l.ids.iter().zip(l.data.chunks_exact(dim)) {
                        top.push(SearchHit::new(id, l2_sq(q, row)));
                    }
                }
                top.into_vec()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_list() -> BaselineIndex {
        BaselineIndex::new(Centroids::from_values(2, vec![0.0, 0.0], 0).unwrap())
    }

    #[test]
    fn insert_keeps_order() {
        let index = one_list();
        index
            .insert(&[9, 4, 7], &[0.0, 0.0, 3.0, 4.0, 1.0, 1.0])
            .unwrap();
        assert_eq!(index.list_ids(0), vec![9, 4, 7]);
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let index = one_list();
        index.insert(&[1], &[0.0, 0.0]).unwrap();
        assert!(matches!(
            index.insert(&[1], &[1.0, 1.0]),
            Err(Error::DuplicateId(1))
        ));
        assert!(matches!(
            index.insert(&[2, 2], &[1.0, 1.0, 2.0, 2.0]),
            Err(Error::DuplicateId(2))
        ));
        assert_eq!(index.len(), 1);
    }

    #[test]
    fn delete_stages_everything() {
        let index = one_list();
        let ids: Vec<u64> = (0..50).collect();
        let data: Vec<f32> = (0..100).map(|i| i as f32).collect();
        index.insert(&ids, &data).unwrap();
        let report = index.delete_instrumented(&[10, 10, 999]);
        assert_eq!(report.staged_vectors, 50);
        assert_eq!(report.deleted, 1);
        assert_eq!(index.len(), 49);
        assert_eq!(index.delete(&ids), 49);
        assert!(index.is_empty());
        assert_eq!(index.search(&[0.0, 0.0], 3, 1).unwrap(), vec![vec![]]);
    }

    #[test]
    fn search_hand_computed() {
        let index = one_list();
        index
            .insert(&[0, 1, 2], &[0.0, 0.0, 3.0, 4.0, 1.0, 1.0])
            .unwrap();
        let hits = index.search(&[0.0, 0.0], 5, 1).unwrap();
        assert_eq!(
            hits[0],
            vec![
                SearchHit::new(0, 0.0),
                SearchHit::new(2, 2.0),
                SearchHit::new(1, 25.0)
            ]
        );
    }
}
