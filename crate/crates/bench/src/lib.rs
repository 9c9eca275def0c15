//! Shared fixtures for the criterion benchmarks.

use core_repr::synth::{synthesize, SynthConfig};
use core_repr::{EmbeddingMatrix, LabelVector};

pub fn fixture(docs: usize, dim: usize, seed: u64) -> (EmbeddingMatrix, LabelVector) {
    let cfg = SynthConfig { docs, classes: 4, rank: 8, dim, seed, ..SynthConfig::default() };
    let ds = synthesize(&cfg).expect("valid synthetic config");
    (ds.embeddings, ds.labels)
}
