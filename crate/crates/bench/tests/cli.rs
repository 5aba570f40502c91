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

//! The command-line binary: flags, exit codes and the output file.

use std::path::Path;
use std::process::Command;

use sivf_bench::read_csv;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sivf-bench"))
}

const SMALL: &[&str] = &[
    "--n",
    "2000",
    "--dim",
    "8",
    "--nlist",
    "8",
    "--queries",
    "20",
    "--train-iters",
    "3",
];

#[test]
fn writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("add.csv");
    let status = bench()
        .args([
            "--scenario",
            "add",
            "--batch",
            "500",
            "--threads",
            "1",
            "--quiet",
            "--out",
        ])
        .arg(&out)
        .args(SMALL)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let recs = read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(recs.len(), 2 * 3);
    assert!(recs
        .iter()
        .all(|r| r.point.threads == 1 && r.point.n == 2000));
}

#[test]
fn list_flags_take_comma_separated_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("search.csv");
    let status = bench()
        .args([
            "--scenario",
            "search",
            "--nprobe",
            "1,8",
            "--repeats",
            "3",
            "--quiet",
            "--out",
        ])
        .arg(&out)
        .args(SMALL)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let recs = read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    let mut probes: Vec<usize> = recs.iter().map(|r| r.point.nprobe).collect();
    probes.dedup();
    assert_eq!(probes.first(), Some(&1));
    assert!(probes.contains(&8));
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let output = bench()
        .args([
            "--scenario",
            "sliding",
            "--window",
            "2100",
            "--batch",
            "500",
            "--out",
        ])
        .arg(&out)
        .args(SMALL)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("multiple"));
    assert!(!out.exists());
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let output = bench()
        .args(["--scenario", "nope", "--out", "x.csv"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn unwritable_output_exits_nonzero() {
    let status = bench()
        .args([
            "--scenario",
            "memory",
            "--quiet",
            "--out",
            "/nonexistent-dir/out.csv",
        ])
        .args(SMALL)
        .output()
        .unwrap()
        .status;
    assert!(!status.success());
}

#[test]
fn relative_dataset_paths_resolve_against_the_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let data = sivf_core::datasets::synth_uniform(2000, 8, 9);
    sivf_core::datasets::write_fvecs(dir.path().join("base.fvecs"), &data).unwrap();
    let out = dir.path().join("mem.csv");
    let status = bench()
        .env("SIVF_DATA_DIR", dir.path())
        .args([
            "--scenario",
            "memory",
            "--base",
            "base.fvecs",
            "--quiet",
            "--out",
        ])
        .arg(&out)
        .args(SMALL)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let recs = read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(recs.iter().all(|r| r.point.dataset == "base.fvecs"));
    let missing = bench()
        .env("SIVF_DATA_DIR", Path::new("/nonexistent"))
        .args([
            "--scenario",
            "memory",
            "--base",
            "base.fvecs",
            "--quiet",
            "--out",
        ])
        .arg(dir.path().join("y.csv"))
        .args(SMALL)
        .output()
        .unwrap()
        .status;
    assert!(!missing.success());
}
