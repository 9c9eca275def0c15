//! Dense autoencoders with a `Dropout -> BatchNorm -> SoftSign` block after every
//! hidden affine layer and a bias-free linear output layer.
//!
//! The small network has one hidden layer of width `d_out`; the large network
//! is `d_in -> 2 d_out -> d_out -> 2 d_out -> d_in`. The embedding is the
//! non-activated output of the bottleneck layer.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;
use crate::seed::rng_from_seed;

pub const BN_MOMENTUM: f64 = 0.1;

pub fn softsign(x: f64) -> f64 {
    x / (1.0 + x.abs())
}

fn softsign_grad(x: f64) -> f64 {
    let d = 1.0 + x.abs();
    1.0 / (d * d)
}

/// Population-variance batch normalisation of a single unit.
pub fn batchnorm(col: &[f64], eps: f64) -> Vec<f64> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    col.iter().map(|x| (x - mean) * inv).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoencoderSize {
    Small,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Maximum number of full-batch epochs.
    pub max_epochs: usize,
    /// Training stops once loss <= tolerance * initial loss.
    pub tolerance: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub dropout: f64,
    pub bn_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 2000,
            tolerance: 1e-4,
            learning_rate: 1e-3,
            momentum: 0.9,
            dropout: 0.1,
            bn_eps: 1e-5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if !(self.bn_eps > 0.0) {
            return Err(Error::InvalidParameter("bn_eps must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter("momentum must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `inputs × outputs`; applied as `H W + b` with one document per row of `H`.
    pub weights: DMatrix<f64>,
    pub bias: Option<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnStats {
    pub mean: DVector<f64>,
    pub var: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    pub size: AutoencoderSize,
    pub layers: Vec<DenseLayer>,
    /// Running statistics for each hidden layer (every layer but the last).
    pub bn_stats: Vec<BnStats>,
    /// Index of the layer whose affine output is the embedding.
    pub bottleneck: usize,
    pub dropout_rate: f64,
    pub bn_eps: f64,
    pub train_config: TrainConfig,
}

impl AutoencoderParams {
    /// Single-hidden-layer network from explicit weights.
    pub fn small(
        w_emb: DMatrix<f64>,
        b0: DVector<f64>,
        w_out: DMatrix<f64>,
        bn_stats: BnStats,
        config: TrainConfig,
    ) -> Result<Self> {
        let (d_in, d_out) = w_emb.shape();
        if b0.len() != d_out || w_out.shape() != (d_out, d_in) || bn_stats.mean.len() != d_out || bn_stats.var.len() != d_out {
            return Err(Error::Shape("inconsistent autoencoder parameter shapes".into()));
        }
        config.validate()?;
        Ok(Self {
            size: AutoencoderSize::Small,
            layers: vec![
                DenseLayer { weights: w_emb, bias: Some(b0) },
                DenseLayer { weights: w_out, bias: None },
            ],
            bn_stats: vec![bn_stats],
            bottleneck: 0,
            dropout_rate: config.dropout,
            bn_eps: config.bn_eps,
            train_config: config,
        })
    }

    /// Glorot-uniform weights, zero biases, running statistics at (0, 1).
    pub fn init(d_in: usize, d_out: usize, size: AutoencoderSize, config: TrainConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        if d_out == 0 || d_in == 0 {
            return Err(Error::InvalidParameter("autoencoder widths must be >= 1".into()));
        }
        config.validate()?;
        let widths = match size {
            AutoencoderSize::Small => vec![d_in, d_out, d_in],
            AutoencoderSize::Large => vec![d_in, 2 * d_out, d_out, 2 * d_out, d_in],
        };
        let n_layers = widths.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = DMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-limit..limit));
            let bias = (l + 1 < n_layers).then(|| DVector::zeros(fan_out));
            layers.push(DenseLayer { weights, bias });
        }
        let bn_stats = widths[1..n_layers]
            .iter()
            .map(|&w| BnStats { mean: DVector::zeros(w), var: DVector::from_element(w, 1.0) })
            .collect();
        Ok(Self {
            size,
            layers,
            bn_stats,
            bottleneck: match size {
                AutoencoderSize::Small => 0,
                AutoencoderSize::Large => 1,
            },
            dropout_rate: config.dropout,
            bn_eps: config.bn_eps,
            train_config: config,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.bottleneck].weights.ncols()
    }

    fn is_finite(&self) -> bool {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        self.layers
            .iter()
            .all(|l| finite(l.weights.as_slice()) && l.bias.as_ref().is_none_or(|b| finite(b.as_slice())))
            && self.bn_stats.iter().all(|s| finite(s.mean.as_slice()) && finite(s.var.as_slice()))
    }

    fn hidden_count(&self) -> usize {
        self.layers.len() - 1
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.ncols() });
        }
        Ok(())
    }

    /// Fresh dropout masks for one training pass, already scaled by `1 / (1 - p)`.
    pub fn sample_masks(&self, rows: usize, rng: &mut impl Rng) -> Vec<DMatrix<f64>> {
        let p = self.dropout_rate;
        let keep = 1.0 / (1.0 - p);
        self.layers[..self.hidden_count()]
            .iter()
            .map(|l| {
                DMatrix::from_fn(rows, l.weights.ncols(), |_, _| {
                    if p > 0.0 && rng.random::<f64>() < p { 0.0 } else { keep }
                })
            })
            .collect()
    }
}

fn affine(h: &DMatrix<f64>, layer: &DenseLayer) -> DMatrix<f64> {
    let mut z = h * &layer.weights;
    if let Some(b) = &layer.bias {
        for mut row in z.row_iter_mut() {
            row += b.transpose();
        }
    }
    z
}

/// Cached activations of one hidden block for backpropagation.
struct BlockCache {
    input: DMatrix<f64>,
    normalized: DMatrix<f64>,
    inv_std: DVector<f64>,
}

/// Per-layer gradients with the same layout as `AutoencoderParams::layers`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub bias: Vec<Option<DVector<f64>>>,
}

/// Inference-mode forward pass: no dropout, batch norm with running statistics.
pub fn autoencoder_forward_inference(p: &AutoencoderParams, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    p.check_input(x)?;
    let mut h = x.clone();
    for (l, layer) in p.layers.iter().enumerate() {
        let z = affine(&h, layer);
        if l == p.hidden_count() {
            return Ok(z);
        }
        h = normalize_with_stats(&z, &p.bn_stats[l], p.bn_eps).map(softsign);
    }
    unreachable!("autoencoder has an output layer")
}

fn normalize_with_stats(z: &DMatrix<f64>, stats: &BnStats, eps: f64) -> DMatrix<f64> {
    let mut out = z.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let inv = 1.0 / (stats.var[j] + eps).sqrt();
        for v in col.iter_mut() {
            *v = (*v - stats.mean[j]) * inv;
        }
    }
    out
}

/// `W_out^T SoftSign(BN(Dropout(W_emb^T x + b_0)))` per row.
///
/// With `training` set, dropout masks are drawn from `rng` and batch statistics are used.
pub fn autoencoder_forward(
    p: &AutoencoderParams,
    e: &EmbeddingMatrix,
    training: bool,
    rng: &mut impl Rng,
) -> Result<EmbeddingMatrix> {
    let x = e.to_dmatrix();
    let out = if training {
        let masks = p.sample_masks(x.nrows(), rng);
        forward_train(p, &x, &masks)?.0
    } else {
        autoencoder_forward_inference(p, &x)?
    };
    EmbeddingMatrix::from_dmatrix(&out)
}

/// Training-mode forward pass with fixed dropout masks; returns output, caches and batch statistics.
fn forward_train(
    p: &AutoencoderParams,
    x: &DMatrix<f64>,
    masks: &[DMatrix<f64>],
) -> Result<(DMatrix<f64>, Vec<BlockCache>, Vec<BnStats>)> {
    p.check_input(x)?;
    let n = x.nrows() as f64;
    let mut caches = Vec::with_capacity(p.hidden_count());
    let mut batch_stats = Vec::with_capacity(p.hidden_count());
    let mut h = x.clone();
    for (l, layer) in p.layers.iter().enumerate() {
        let z = affine(&h, layer);
        if l == p.hidden_count() {
            caches.push(BlockCache { input: h, normalized: DMatrix::zeros(0, 0), inv_std: DVector::zeros(0) });
            return Ok((z, caches, batch_stats));
        }
        let dropped = z.component_mul(&masks[l]);
        let width = dropped.ncols();
        let mut mean = DVector::zeros(width);
        let mut var = DVector::zeros(width);
        let mut inv_std = DVector::zeros(width);
        let mut normalized = dropped.clone();
        for (j, mut col) in normalized.column_iter_mut().enumerate() {
            let mu = col.sum() / n;
            let v = col.iter().map(|a| (a - mu) * (a - mu)).sum::<f64>() / n;
            let inv = 1.0 / (v + p.bn_eps).sqrt();
            for a in col.iter_mut() {
                *a = (*a - mu) * inv;
            }
            mean[j] = mu;
            var[j] = v;
            inv_std[j] = inv;
        }
        let next = normalized.map(softsign);
        caches.push(BlockCache { input: h, normalized, inv_std });
        batch_stats.push(BnStats { mean, var });
        h = next;
    }
    unreachable!("autoencoder has an output layer")
}

/// Mean squared reconstruction error over all entries.
fn mse(out: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (out - x).norm_squared() / (x.nrows() * x.ncols()) as f64
}

/// Training-mode MSE loss and its exact gradient for fixed dropout masks.
pub fn loss_and_gradients(p: &AutoencoderParams, x: &DMatrix<f64>, masks: &[DMatrix<f64>]) -> Result<(f64, Gradients)> {
    backprop(p, x, masks).map(|(loss, grads, _)| (loss, grads))
}

fn backprop(p: &AutoencoderParams, x: &DMatrix<f64>, masks: &[DMatrix<f64>]) -> Result<(f64, Gradients, Vec<BnStats>)> {
    let (out, caches, batch_stats) = forward_train(p, x, masks)?;
    let loss = mse(&out, x);
    let scale = 2.0 / (x.nrows() * x.ncols()) as f64;
    let mut upstream = (&out - x) * scale;

    let n_layers = p.layers.len();
    let mut gw = vec![DMatrix::zeros(0, 0); n_layers];
    let mut gb: Vec<Option<DVector<f64>>> = vec![None; n_layers];
    let n = x.nrows() as f64;
    for l in (0..n_layers).rev() {
        let layer = &p.layers[l];
        let cache = &caches[l];
        // upstream is dL/dz for this layer's affine output
        gw[l] = cache.input.transpose() * &upstream;
        if layer.bias.is_some() {
            gb[l] = Some(upstream.row_sum().transpose());
        }
        if l == 0 {
            break;
        }
        let d_h = &upstream * layer.weights.transpose();
        let prev = &caches[l - 1];
        // softsign
        let mut d_norm = d_h;
        d_norm.zip_apply(&prev.normalized, |g, xh| *g *= softsign_grad(xh));
        // batch norm with batch statistics
        let mut d_drop = d_norm.clone();
        for (j, mut col) in d_drop.column_iter_mut().enumerate() {
            let g = d_norm.column(j);
            let xh = prev.normalized.column(j);
            let sum_g = g.sum();
            let sum_gx = g.dot(&xh);
            let inv = prev.inv_std[j];
            for (i, v) in col.iter_mut().enumerate() {
                *v = inv / n * (n * g[i] - sum_g - xh[i] * sum_gx);
            }
        }
        // dropout
        upstream = d_drop.component_mul(&masks[l - 1]);
    }
    Ok((loss, Gradients { weights: gw, bias: gb }, batch_stats))
}

/// Result of a training run: fitted parameters and the per-epoch loss.
#[derive(Debug, Clone)]
pub struct TrainedAutoencoder {
    pub params: AutoencoderParams,
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent with momentum on the reconstruction MSE.
pub fn train_autoencoder(
    e: &EmbeddingMatrix,
    d_out: usize,
    size: AutoencoderSize,
    seed: u64,
    config: TrainConfig,
) -> Result<TrainedAutoencoder> {
    let mut rng = rng_from_seed(seed);
    let mut p = AutoencoderParams::init(e.cols(), d_out, size, config, &mut rng)?;
    let x = e.to_dmatrix();
    let mut vel_w: Vec<DMatrix<f64>> = p.layers.iter().map(|l| DMatrix::zeros(l.weights.nrows(), l.weights.ncols())).collect();
    let mut vel_b: Vec<Option<DVector<f64>>> = p.layers.iter().map(|l| l.bias.as_ref().map(|b| DVector::zeros(b.len()))).collect();
    let mut history = Vec::new();
    let mut initial = None;
    for epoch in 0..config.max_epochs {
        let masks = p.sample_masks(x.nrows(), &mut rng);
        let (loss, grads, batch_stats) = backprop(&p, &x, &masks)?;
        if !loss.is_finite() || grads.weights.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged { epoch, loss });
        }
        history.push(loss);
        let init = *initial.get_or_insert(loss);
        if loss <= config.tolerance * init {
            break;
        }
        for (run, batch) in p.bn_stats.iter_mut().zip(batch_stats) {
            run.mean = &run.mean * (1.0 - BN_MOMENTUM) + batch.mean * BN_MOMENTUM;
            run.var = &run.var * (1.0 - BN_MOMENTUM) + batch.var * BN_MOMENTUM;
        }
        for (l, layer) in p.layers.iter_mut().enumerate() {
            vel_w[l] = &vel_w[l] * config.momentum - &grads.weights[l] * config.learning_rate;
            layer.weights += &vel_w[l];
            if let (Some(b), Some(vb), Some(gb)) = (layer.bias.as_mut(), vel_b[l].as_mut(), grads.bias[l].as_ref()) {
                *vb = &*vb * config.momentum - gb * config.learning_rate;
                *b += &*vb;
            }
        }
        if !p.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
    }
    Ok(TrainedAutoencoder { params: p, loss_history: history })
}

/// Bottleneck output without activation: `W_emb^T x + b_0` for the small network.
///
/// For the large network the first hidden block runs in inference mode and the
/// bottleneck layer's affine output is returned.
pub fn embed_autoencoder(p: &AutoencoderParams, e: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let x = e.to_dmatrix();
    p.check_input(&x)?;
    let mut h = x;
    for l in 0..p.bottleneck {
        let z = affine(&h, &p.layers[l]);
        h = normalize_with_stats(&z, &p.bn_stats[l], p.bn_eps).map(softsign);
    }
    EmbeddingMatrix::from_dmatrix(&affine(&h, &p.layers[p.bottleneck]))
}

/// Reconstruction MSE in inference mode.
pub fn reconstruction_mse(p: &AutoencoderParams, e: &EmbeddingMatrix) -> Result<f64> {
    let x = e.to_dmatrix();
    Ok(mse(&autoencoder_forward_inference(p, &x)?, &x))
}
