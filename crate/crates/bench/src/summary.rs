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

//! Aggregation of repeated measurements into mean / median summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::record::{BenchRecord, Point};
use crate::workload::median;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub engine: &'static str,
    pub metric: String,
    pub unit: &'static str,
    /// Grid-point label, e.g. `n=100000 nlist=1024`.
    pub label: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
}

fn label(p: &Point, step: usize) -> String {
    let mut s = format!(
        "n={} nlist={} nprobe={} batch={} maxvec={} slab={}",
        p.n, p.nlist, p.nprobe, p.batch, p.maxvec_factor, p.slab_factor
    );
    if step > 0 {
        let _ = write!(s, " step={step}");
    }
    s
}

/// Groups records that differ only in repeat index and timestamp.
pub fn summarize(records: &[BenchRecord]) -> Vec<Summary> {
    let mut groups: BTreeMap<(String, &'static str, String), (&'static str, Vec<f64>)> =
        BTreeMap::new();
    for r in records {
        let key = (label(&r.point, r.step), r.engine.as_str(), r.metric.clone());
        groups
            .entry(key)
            .or_insert((r.unit.as_str(), Vec::new()))
            .1
            .push(r.value);
    }
    groups
        .into_iter()
        .map(|((label, engine, metric), (unit, values))| Summary {
            engine,
            metric,
            unit,
            label,
            count: values.len(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: median(&values),
        })
        .collect()
}

pub fn render(summaries: &[Summary]) -> String {
    let mut out = String::new();
    for s in summaries {
        let _ = writeln!(
            out,
            "{:<9} {:<24} {:>14.6e} {:>14.6e} {:<6} x{} {}",
            s.engine, s.metric, s.mean, s.median, s.unit, s.count, s.label
        );
    }
    out
}
