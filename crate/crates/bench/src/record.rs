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

//! Long-format benchmark records and their CSV encoding.
//!
//! One row per measurement. Columns, in order: `scenario`, `engine`, the
//! configuration fields sorted by name, then `metric`, `value`, `unit`,
//! `repeat`, `step` and `timestamp`. Floats are written with 17 significant
//! digits so they round-trip exactly.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};

pub const COLUMNS: [&str; 22] = [
    "scenario",
    "engine",
    "batch",
    "dataset",
    "dim",
    "k",
    "maxvec_factor",
    "n",
    "nlist",
    "nprobe",
    "repeats",
    "seed",
    "slab_factor",
    "steps",
    "threads",
    "window",
    "metric",
    "value",
    "unit",
    "repeat",
    "step",
    "timestamp",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Sivf,
    Baseline,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Sivf => "sivf",
            Engine::Baseline => "baseline",
        }
    }
}

impl FromStr for Engine {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sivf" => Ok(Engine::Sivf),
            "baseline" => Ok(Engine::Baseline),
            _ => bail!("unknown engine {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    VecPerSec,
    Qps,
    Ms,
    Bytes,
    Ratio,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::VecPerSec => "vec/s",
            Unit::Qps => "qps",
            Unit::Ms => "ms",
            Unit::Bytes => "bytes",
            Unit::Ratio => "ratio",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Unit::VecPerSec,
            Unit::Qps,
            Unit::Ms,
            Unit::Bytes,
            Unit::Ratio,
        ]
        .into_iter()
        .find(|u| u.as_str() == s)
        .ok_or_else(|| anyhow!("unknown unit {s:?}"))
    }
}

/// The grid point a measurement was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub scenario: String,
    pub batch: usize,
    pub dataset: String,
    pub dim: usize,
    pub k: usize,
    pub maxvec_factor: f64,
    pub n: usize,
    pub nlist: usize,
    pub nprobe: usize,
    pub repeats: usize,
    pub seed: u64,
    pub slab_factor: f64,
    pub steps: usize,
    pub threads: usize,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub engine: Engine,
    pub point: Point,
    pub metric: String,
    pub value: f64,
    pub unit: Unit,
    pub repeat: usize,
    /// Sliding-window step, 0 outside that scenario.
    pub step: usize,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

impl BenchRecord {
    pub fn new(
        engine: Engine,
        point: &Point,
        metric: &str,
        value: f64,
        unit: Unit,
        repeat: usize,
    ) -> Self {
        BenchRecord {
            engine,
            point: point.clone(),
            metric: metric.to_owned(),
            value,
            unit,
            repeat,
            step: 0,
            timestamp: now_millis(),
        }
    }

    pub fn at_step(mut self, step: usize) -> Self {
        self.step = step;
        self
    }

    fn fields(&self) -> [String; 22] {
        let p = &self.point;
        [
            p.scenario.clone(),
            self.engine.as_str().to_owned(),
            p.batch.to_string(),
            p.dataset.clone(),
            p.dim.to_string(),
            p.k.to_string(),
            fmt_float(p.maxvec_factor),
            p.n.to_string(),
            p.nlist.to_string(),
            p.nprobe.to_string(),
            p.repeats.to_string(),
            p.seed.to_string(),
            fmt_float(p.slab_factor),
            p.steps.to_string(),
            p.threads.to_string(),
            p.window.to_string(),
            self.metric.clone(),
            fmt_float(self.value),
            self.unit.as_str().to_owned(),
            self.repeat.to_string(),
            self.step.to_string(),
            self.timestamp.to_string(),
        ]
    }

    fn from_fields(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != COLUMNS.len() {
            bail!("expected {} columns, found {}", COLUMNS.len(), r.len());
        }
        let f = |i: usize| &r[i];
        fn num<T: FromStr>(s: &str, col: &str) -> Result<T>
        where
            T::Err: std::error::Error + Send + Sync + 'static,
        {
            s.parse().with_context(|| format!("column {col}: {s:?}"))
        }
        Ok(BenchRecord {
            engine: f(1).parse()?,
            point: Point {
                scenario: f(0).to_owned(),
                batch: num(f(2), "batch")?,
                dataset: f(3).to_owned(),
                dim: num(f(4), "dim")?,
                k: num(f(5), "k")?,
                maxvec_factor: num(f(6), "maxvec_factor")?,
                n: num(f(7), "n")?,
                nlist: num(f(8), "nlist")?,
                nprobe: num(f(9), "nprobe")?,
                repeats: num(f(10), "repeats")?,
                seed: num(f(11), "seed")?,
                slab_factor: num(f(12), "slab_factor")?,
                steps: num(f(13), "steps")?,
                threads: num(f(14), "threads")?,
                window: num(f(15), "window")?,
            },
            metric: f(16).to_owned(),
            value: num(f(17), "value")?,
            unit: f(18).parse()?,
            repeat: num(f(19), "repeat")?,
            step: num(f(20), "step")?,
            timestamp: num(f(21), "timestamp")?,
        })
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Writes the header and every record. Zero records still produce a header.
pub fn emit_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(COLUMNS) {
        bail!("unexpected CSV header: {:?}", header);
    }
    rdr.records()
        .enumerate()
        .map(|(i, r)| BenchRecord::from_fields(&r?).with_context(|| format!("row {}", i + 1)))
        .collect()
}
