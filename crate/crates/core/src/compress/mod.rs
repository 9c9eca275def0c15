//! Compression algorithms behind a common fit/transform interface.

pub mod autoencoder;
mod blob;
pub mod cluster;
pub mod projection;
pub mod subspace;
pub mod svd;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;

pub use autoencoder::{
    autoencoder_forward, batchnorm, embed_autoencoder, softsign, train_autoencoder, AutoencoderParams,
    AutoencoderSize, TrainConfig,
};
pub use cluster::{fit_cluster_aggregate, Aggregation, ClusterAssignment, KMeansConfig};
pub use projection::{fit_sparse_projection, SparseProjection};
pub use subspace::random_subspace;
pub use svd::{fit_svd, RandomizedSvdConfig, SvdMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompressorKind {
    Svd,
    SvdExact,
    SparseProjection,
    RandomSubspace,
    ClusterMax,
    ClusterMean,
    ClusterMedian,
    NeuralSmall,
    NeuralLarge,
}

impl CompressorKind {
    pub const ALL: [CompressorKind; 9] = [
        CompressorKind::Svd,
        CompressorKind::SvdExact,
        CompressorKind::SparseProjection,
        CompressorKind::RandomSubspace,
        CompressorKind::ClusterMax,
        CompressorKind::ClusterMean,
        CompressorKind::ClusterMedian,
        CompressorKind::NeuralSmall,
        CompressorKind::NeuralLarge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CompressorKind::Svd => "svd",
            CompressorKind::SvdExact => "svd-exact",
            CompressorKind::SparseProjection => "sparse-projection",
            CompressorKind::RandomSubspace => "random-subspace",
            CompressorKind::ClusterMax => "cluster-max",
            CompressorKind::ClusterMean => "cluster-mean",
            CompressorKind::ClusterMedian => "cluster-median",
            CompressorKind::NeuralSmall => "neural-small",
            CompressorKind::NeuralLarge => "neural-large",
        }
    }

    fn tag(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u8
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    fn aggregation(self) -> Option<Aggregation> {
        match self {
            CompressorKind::ClusterMax => Some(Aggregation::Max),
            CompressorKind::ClusterMean => Some(Aggregation::Mean),
            CompressorKind::ClusterMedian => Some(Aggregation::Median),
            _ => None,
        }
    }
}

impl fmt::Display for CompressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CompressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown compressor kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompressorParams {
    pub svd: RandomizedSvdConfig,
    pub kmeans: KMeansConfig,
    pub autoencoder: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub kind: CompressorKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: CompressorParams,
}

impl CompressorSpec {
    pub fn new(kind: CompressorKind, seed: u64) -> Self {
        Self { kind, seed, params: CompressorParams::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.autoencoder.validate()?;
        if !(self.params.kmeans.tolerance >= 0.0) {
            return Err(Error::InvalidParameter("kmeans tolerance must be >= 0".into()));
        }
        Ok(())
    }

    /// Fits on `e` with the spec's own seed.
    pub fn fit(&self, e: &EmbeddingMatrix, d_out: usize) -> Result<FittedCompressor> {
        self.fit_seeded(e, d_out, self.seed)
    }

    pub fn fit_seeded(&self, e: &EmbeddingMatrix, d_out: usize, seed: u64) -> Result<FittedCompressor> {
        self.validate()?;
        let d_in = e.cols();
        let state = match self.kind {
            CompressorKind::Svd | CompressorKind::SvdExact => {
                let mode = if self.kind == CompressorKind::Svd { SvdMode::Randomized } else { SvdMode::Exact };
                let svd = fit_svd(e, d_out, mode, self.params.svd, seed)?;
                FittedState::Svd { v: svd.v, singular_values: svd.singular_values }
            }
            CompressorKind::SparseProjection => FittedState::Projection(fit_sparse_projection(d_in, d_out, seed)?),
            CompressorKind::RandomSubspace => FittedState::Subspace(subspace::sample_columns(d_in, d_out, seed)?),
            CompressorKind::ClusterMax | CompressorKind::ClusterMean | CompressorKind::ClusterMedian => {
                let agg = self.kind.aggregation().unwrap();
                FittedState::Cluster(fit_cluster_aggregate(e, d_out, agg, self.params.kmeans, seed)?)
            }
            CompressorKind::NeuralSmall | CompressorKind::NeuralLarge => {
                let size = if self.kind == CompressorKind::NeuralSmall {
                    AutoencoderSize::Small
                } else {
                    AutoencoderSize::Large
                };
                let trained = train_autoencoder(e, d_out, size, seed, self.params.autoencoder)?;
                FittedState::Autoencoder(Box::new(trained.params))
            }
        };
        Ok(FittedCompressor { kind: self.kind, input_dim: d_in, output_dim: d_out, state })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedState {
    /// Right singular vectors (`d_in × d_out`) and singular values.
    Svd { v: DMatrix<f64>, singular_values: Vec<f64> },
    Projection(SparseProjection),
    /// Selected input columns, in output order.
    Subspace(Vec<usize>),
    Cluster(ClusterAssignment),
    Autoencoder(Box<AutoencoderParams>),
}

/// Learned projection state; immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCompressor {
    pub kind: CompressorKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub state: FittedState,
}

impl FittedCompressor {
    pub fn transform(&self, e: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        if e.cols() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: e.cols() });
        }
        match &self.state {
            FittedState::Svd { v, .. } => EmbeddingMatrix::from_dmatrix(&(e.to_dmatrix() * v)),
            FittedState::Projection(p) => {
                let mut out = vec![0.0; e.rows() * p.d_out()];
                for (row, chunk) in e.row_iter().zip(out.chunks_exact_mut(p.d_out())) {
                    p.apply_row(row, chunk);
                }
                EmbeddingMatrix::new(e.rows(), p.d_out(), out)
            }
            FittedState::Subspace(cols) => subspace::project_subspace(e, cols),
            FittedState::Cluster(c) => c.aggregate(e),
            FittedState::Autoencoder(p) => embed_autoencoder(p, e),
        }
    }

    /// Self-describing binary encoding: magic, version, kind tag, shapes, payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        blob::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        blob::decode(bytes)
    }
}

/// Shorthand for `fc.transform(e)`.
pub fn transform(fc: &FittedCompressor, e: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    fc.transform(e)
}
