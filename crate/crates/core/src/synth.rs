//! Seeded synthetic corpora: Gaussian class clusters in a low-rank latent
//! space, embedded in a higher ambient dimension with isotropic noise.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::LabelVector;
use crate::matrix::EmbeddingMatrix;
use crate::seed::{mix64, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub docs: usize,
    pub classes: usize,
    /// Dimension of the latent space holding the class structure.
    pub rank: usize,
    /// Ambient embedding dimension.
    pub dim: usize,
    /// Standard deviation of class means along each latent axis.
    pub separation: f64,
    /// Standard deviation of within-class latent spread.
    pub spread: f64,
    /// Standard deviation of isotropic ambient noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { docs: 600, classes: 4, rank: 8, dim: 64, separation: 1.0, spread: 1.0, noise: 0.3, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub embeddings: EmbeddingMatrix,
    pub labels: LabelVector,
}

pub fn synthesize(cfg: &SynthConfig) -> Result<SynthDataset> {
    if cfg.classes < 2 || cfg.docs < cfg.classes {
        return Err(Error::InvalidParameter("need at least 2 classes and one document per class".into()));
    }
    if cfg.rank == 0 || cfg.rank > cfg.dim {
        return Err(Error::InvalidParameter(format!("rank {} outside 1..={}", cfg.rank, cfg.dim)));
    }
    if !(cfg.noise >= 0.0 && cfg.spread >= 0.0 && cfg.separation >= 0.0) {
        return Err(Error::InvalidParameter("scales must be non-negative".into()));
    }
    let mut rng = rng_from_seed(mix64(cfg.seed, 0));
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng| rng.sample::<f64, _>(StandardNormal);

    let basis = DMatrix::from_fn(cfg.dim, cfg.rank, |_, _| gauss(&mut rng)).qr().q();
    let means: Vec<Vec<f64>> =
        (0..cfg.classes).map(|_| (0..cfg.rank).map(|_| cfg.separation * gauss(&mut rng)).collect()).collect();

    let mut labels: Vec<usize> = (0..cfg.docs).map(|i| i % cfg.classes).collect();
    labels.shuffle(&mut rng);

    let mut data = Vec::with_capacity(cfg.docs * cfg.dim);
    let mut latent = vec![0.0; cfg.rank];
    for &c in &labels {
        for (z, m) in latent.iter_mut().zip(&means[c]) {
            *z = m + cfg.spread * gauss(&mut rng);
        }
        for r in 0..cfg.dim {
            let signal: f64 = (0..cfg.rank).map(|j| basis[(r, j)] * latent[j]).sum();
            data.push(signal + cfg.noise * gauss(&mut rng));
        }
    }
    let names = (0..cfg.classes).map(|c| format!("class{c}")).collect();
    Ok(SynthDataset {
        embeddings: EmbeddingMatrix::new(cfg.docs, cfg.dim, data)?,
        labels: LabelVector::from_ids(labels, names)?,
    })
}
