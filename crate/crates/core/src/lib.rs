//! Recursive compression of document representations.
//!
//! Embedding matrices are compressed step by step along a dimension schedule
//! (`d_{i+1} = max(floor(d_i / kappa), kappa)`), either recursively or directly
//! from the original matrix, and every step is scored by cross-validated
//! logistic regression relative to the uncompressed baseline. Rank statistics
//! compare compressors across datasets.

pub mod compress;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod stats;
pub mod synth;

pub use compress::{CompressorKind, CompressorSpec, FittedCompressor};
pub use error::{Error, Result};
pub use io::{DatasetManifest, LabelVector};
pub use matrix::EmbeddingMatrix;
pub use pipeline::{dimension_schedule, CompressionRun, CompressionSchedule, Mode};
