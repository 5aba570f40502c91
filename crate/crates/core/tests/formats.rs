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

//! File formats and synthetic data determinism.

use proptest::prelude::*;
use sha2::{Digest, Sha256};
use sivf_core::datasets::{
    load_fvecs, load_ivecs, synth_uniform, write_fvecs, write_ivecs, DataSource, VectorDataset,
};

proptest! {
    #[test]
    fn fvecs_round_trip_is_bit_exact(dim in 1usize..20, bits in prop::collection::vec(any::<u32>(), 1..200)) {
        let values: Vec<f32> = bits.iter().map(|b| f32::from_bits(*b)).filter(|v| v.is_finite()).collect();
        let n = values.len() / dim;
        prop_assume!(n > 0);
        let data = VectorDataset { dim, vectors: values[..n * dim].to_vec(), source: DataSource::File("mem".into()) };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.fvecs");
        write_fvecs(&path, &data).unwrap();
        let back = load_fvecs(&path).unwrap();
        prop_assert_eq!(back.dim, dim);
        let a: Vec<u32> = back.vectors.iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = data.vectors.iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ivecs_round_trip(rows in prop::collection::vec(prop::collection::vec(any::<i32>(), 4), 0..30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ivecs");
        write_ivecs(&path, &rows).unwrap();
        prop_assert_eq!(load_ivecs(&path).unwrap(), rows);
    }
}

#[test]
fn synthetic_hash_is_stable() {
    let data = synth_uniform(10_000, 128, 42);
    let mut h = Sha256::new();
    for v in &data.vectors {
        h.update(v.to_le_bytes());
    }
    let digest = format!("{:x}", h.finalize());
    let again = synth_uniform(10_000, 128, 42);
    assert_eq!(data.vectors, again.vectors);
    assert_eq!(
        digest,
        "1211802620cf475c9cb91484c28faab51356dc918df78e26fb9d09c37ccdcb76"
    );
}
