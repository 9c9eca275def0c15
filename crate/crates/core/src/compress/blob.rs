//! Binary encoding of fitted compressors.
//!
//! Layout (little-endian): `CFIT`, `u32` version, `u8` kind tag, `u32` input
//! dim, `u32` output dim, then a kind-specific payload.

use nalgebra::{DMatrix, DVector};

use super::autoencoder::{AutoencoderParams, AutoencoderSize, BnStats, DenseLayer, TrainConfig};
use super::cluster::{Aggregation, ClusterAssignment};
use super::projection::SparseProjection;
use super::{CompressorKind, FittedCompressor, FittedState};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CFIT";
const VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) {
        for v in vs {
            self.f64(*v);
        }
    }
    fn matrix(&mut self, m: &DMatrix<f64>) {
        self.u32(m.nrows());
        self.u32(m.ncols());
        self.f64s(m.iter());
    }
    fn vector(&mut self, v: &DVector<f64>) {
        self.u32(v.len());
        self.f64s(v.iter());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Blob(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if n.saturating_mul(8) > self.bytes.len() - self.pos {
            return Err(Error::Blob("payload shorter than declared length".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let (r, c) = (self.u32()?, self.u32()?);
        Ok(DMatrix::from_vec(r, c, self.f64s(r.saturating_mul(c))?))
    }
    fn vector(&mut self) -> Result<DVector<f64>> {
        let n = self.u32()?;
        Ok(DVector::from_vec(self.f64s(n)?))
    }
}

pub(super) fn encode(fc: &FittedCompressor) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION as usize);
    w.u8(fc.kind.tag());
    w.u32(fc.input_dim);
    w.u32(fc.output_dim);
    match &fc.state {
        FittedState::Svd { v, singular_values } => {
            w.f64s(singular_values);
            w.matrix(v);
        }
        FittedState::Projection(p) => {
            w.f64(p.scale);
            for col in &p.columns {
                w.u32(col.len());
                for &(i, s) in col {
                    w.u32(i);
                    w.u8(s as u8);
                }
            }
        }
        FittedState::Subspace(cols) => cols.iter().for_each(|&c| w.u32(c)),
        FittedState::Cluster(c) => {
            w.u8(match c.aggregation {
                Aggregation::Max => 0,
                Aggregation::Mean => 1,
                Aggregation::Median => 2,
            });
            c.assignment.iter().for_each(|&a| w.u32(a));
        }
        FittedState::Autoencoder(p) => {
            w.u8(match p.size {
                AutoencoderSize::Small => 0,
                AutoencoderSize::Large => 1,
            });
            w.u32(p.bottleneck);
            w.f64(p.dropout_rate);
            w.f64(p.bn_eps);
            let c = &p.train_config;
            w.u32(c.max_epochs);
            w.f64s([c.tolerance, c.learning_rate, c.momentum, c.dropout, c.bn_eps].iter());
            w.u32(p.layers.len());
            for layer in &p.layers {
                w.matrix(&layer.weights);
                match &layer.bias {
                    Some(b) => {
                        w.u8(1);
                        w.vector(b);
                    }
                    None => w.u8(0),
                }
            }
            w.u32(p.bn_stats.len());
            for s in &p.bn_stats {
                w.vector(&s.mean);
                w.vector(&s.var);
            }
        }
    }
    w.0
}

pub(super) fn decode(bytes: &[u8]) -> Result<FittedCompressor> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Blob("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Blob(format!("unsupported version {version}")));
    }
    let tag = r.u8()?;
    let kind = CompressorKind::from_tag(tag).ok_or_else(|| Error::Blob(format!("unknown kind tag {tag}")))?;
    let input_dim = r.u32()?;
    let output_dim = r.u32()?;
    let state = match kind {
        CompressorKind::Svd | CompressorKind::SvdExact => {
            let singular_values = r.f64s(output_dim)?;
            let v = r.matrix()?;
            if v.shape() != (input_dim, output_dim) {
                return Err(Error::Blob("svd factor shape disagrees with header".into()));
            }
            FittedState::Svd { v, singular_values }
        }
        CompressorKind::SparseProjection => {
            let scale = r.f64()?;
            let mut columns = Vec::with_capacity(output_dim);
            for _ in 0..output_dim {
                let n = r.u32()?;
                let mut col = Vec::with_capacity(n.min(input_dim));
                for _ in 0..n {
                    let i = r.u32()?;
                    if i >= input_dim {
                        return Err(Error::Blob(format!("projection row {i} out of range")));
                    }
                    col.push((i, r.u8()? as i8));
                }
                columns.push(col);
            }
            FittedState::Projection(SparseProjection { d_in: input_dim, scale, columns })
        }
        CompressorKind::RandomSubspace => {
            let cols = (0..output_dim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            if cols.iter().any(|&c| c >= input_dim) {
                return Err(Error::Blob("subspace column out of range".into()));
            }
            FittedState::Subspace(cols)
        }
        CompressorKind::ClusterMax | CompressorKind::ClusterMean | CompressorKind::ClusterMedian => {
            let aggregation = match r.u8()? {
                0 => Aggregation::Max,
                1 => Aggregation::Mean,
                2 => Aggregation::Median,
                t => return Err(Error::Blob(format!("unknown aggregation tag {t}"))),
            };
            let assignment = (0..input_dim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            if assignment.iter().any(|&a| a >= output_dim) {
                return Err(Error::Blob("cluster id out of range".into()));
            }
            FittedState::Cluster(ClusterAssignment { assignment, clusters: output_dim, aggregation })
        }
        CompressorKind::NeuralSmall | CompressorKind::NeuralLarge => {
            let size = match r.u8()? {
                0 => AutoencoderSize::Small,
                1 => AutoencoderSize::Large,
                t => return Err(Error::Blob(format!("unknown autoencoder size tag {t}"))),
            };
            let bottleneck = r.u32()?;
            let dropout_rate = r.f64()?;
            let bn_eps = r.f64()?;
            let max_epochs = r.u32()?;
            let c = r.f64s(5)?;
            let train_config = TrainConfig {
                max_epochs,
                tolerance: c[0],
                learning_rate: c[1],
                momentum: c[2],
                dropout: c[3],
                bn_eps: c[4],
            };
            let n_layers = r.u32()?;
            let mut layers = Vec::new();
            for _ in 0..n_layers {
                let weights = r.matrix()?;
                let bias = match r.u8()? {
                    0 => None,
                    _ => Some(r.vector()?),
                };
                layers.push(DenseLayer { weights, bias });
            }
            let n_stats = r.u32()?;
            let mut bn_stats = Vec::new();
            for _ in 0..n_stats {
                bn_stats.push(BnStats { mean: r.vector()?, var: r.vector()? });
            }
            if layers.len() < 2 || bn_stats.len() + 1 != layers.len() || bottleneck + 1 >= layers.len() {
                return Err(Error::Blob("inconsistent autoencoder layout".into()));
            }
            let params = AutoencoderParams { size, layers, bn_stats, bottleneck, dropout_rate, bn_eps, train_config };
            if params.input_dim() != input_dim || params.output_dim() != output_dim {
                return Err(Error::Blob("autoencoder shape disagrees with header".into()));
            }
            FittedState::Autoencoder(Box::new(params))
        }
    };
    if r.pos != bytes.len() {
        return Err(Error::Blob(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(FittedCompressor { kind, input_dim, output_dim, state })
}
