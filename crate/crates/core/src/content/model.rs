use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, SparseVector};
use super::LabeledExample;
use crate::error::{Result, SieveError};
use crate::thai::Tokenizer;

const MAGIC: &[u8; 4] = b"LTXM";
const VERSION: u32 = 1;

pub const DEFAULT_DIM: usize = 1 << 20;
pub const DEFAULT_NGRAM_MAX: usize = 2;

/// Hyperparameters for [`train_classifier`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    pub seed: u64,
    pub dim: usize,
    pub ngram_max: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 5,
            lr: 0.1,
            l2: 1e-6,
            seed: 0,
            dim: DEFAULT_DIM,
            ngram_max: DEFAULT_NGRAM_MAX,
        }
    }
}

/// Logistic regression over hashed token n-grams.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTextModel {
    label: String,
    dim: usize,
    ngram_max: usize,
    weights: Vec<f32>,
    bias: f32,
    params: Option<TrainParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean log loss over the training set after each epoch.
    pub epoch_losses: Vec<f64>,
    pub accuracy: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl LinearTextModel {
    /// An all-zero model.
    pub fn zeros(label: impl Into<String>, dim: usize, ngram_max: usize) -> Result<Self> {
        if !dim.is_power_of_two() || dim > u32::MAX as usize {
            return Err(SieveError::Param(format!("feature dimension {dim} is not a power of two")));
        }
        if ngram_max == 0 {
            return Err(SieveError::Param("ngram_max must be at least 1".into()));
        }
        Ok(LinearTextModel {
            label: label.into(),
            dim,
            ngram_max,
            weights: vec![0.0; dim],
            bias: 0.0,
            params: None,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ngram_max(&self) -> usize {
        self.ngram_max
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f32] {
        &mut self.weights
    }

    pub fn bias(&self) -> f32 {
        self.bias
    }

    /// Hyperparameters, when the model was trained in this process.
    pub fn params(&self) -> Option<&TrainParams> {
        self.params.as_ref()
    }

    pub fn featurize(&self, text: &str, tokenizer: &Tokenizer) -> SparseVector {
        featurize(text, tokenizer, self.dim, self.ngram_max)
    }

    fn prob(&self, x: &SparseVector) -> f64 {
        sigmoid(x.dot(&self.weights) + f64::from(self.bias))
    }

    /// Probability of the positive label.
    pub fn predict(&self, text: &str, tokenizer: &Tokenizer) -> f64 {
        self.prob(&self.featurize(text, tokenizer))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let label = self.label.as_bytes();
        let mut buf = Vec::with_capacity(24 + label.len() + self.weights.len() * 4);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(label.len() as u32).to_le_bytes());
        buf.extend_from_slice(label);
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.ngram_max as u32).to_le_bytes());
        buf.extend_from_slice(&self.bias.to_le_bytes());
        for w in &self.weights {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| SieveError::io(parent, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| SieveError::io(path, e))?;
        f.write_all(&buf).map_err(|e| SieveError::io(path, e))
    }

    /// Loads a model. When `expected_dim` is given, a model hashed into a
    /// different feature space is a configuration error.
    pub fn load(path: &Path, expected_dim: Option<usize>) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| SieveError::io(path, e))?;
        let model = Self::decode(&bytes)
            .map_err(|m| SieveError::Format(format!("{}: {m}", path.display())))?;
        if let Some(d) = expected_dim {
            if d != model.dim {
                return Err(SieveError::Config(format!(
                    "{}: model feature dimension {} does not match configured {d}",
                    path.display(),
                    model.dim
                )));
            }
        }
        Ok(model)
    }

    fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err("bad magic".into());
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let label_len = r.u32()? as usize;
        let label = std::str::from_utf8(r.take(label_len)?)
            .map_err(|_| "label is not UTF-8".to_string())?
            .to_string();
        let dim = r.u32()? as usize;
        let ngram_max = r.u32()? as usize;
        let bias = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if !dim.is_power_of_two() || ngram_max == 0 {
            return Err(format!("invalid header: dim {dim}, ngram_max {ngram_max}"));
        }
        let body = r.take(dim * 4)?;
        if r.pos != bytes.len() {
            return Err("trailing bytes after weights".into());
        }
        let weights: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err("non-finite weights".into());
        }
        Ok(LinearTextModel {
            label,
            dim,
            ngram_max,
            weights,
            bias,
            params: None,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err("truncated file".into()),
        }
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn log_loss(p: f64, y: bool) -> f64 {
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Trains a binary classifier by stochastic gradient descent on the
/// logistic loss. Examples are shuffled every epoch from `params.seed`, and
/// the step size decays as `lr / (1 + epoch)`; the same inputs always yield
/// bit-identical weights.
pub fn train_classifier(
    examples: &[LabeledExample],
    label: &str,
    params: &TrainParams,
    tokenizer: &Tokenizer,
) -> Result<(LinearTextModel, TrainReport)> {
    let positives = examples.iter().filter(|e| e.label).count();
    if positives == 0 || positives == examples.len() {
        return Err(SieveError::Training(format!(
            "need at least one positive and one negative example ({positives} of {} positive)",
            examples.len()
        )));
    }
    if params.epochs == 0 || !(params.lr > 0.0) || params.l2 < 0.0 {
        return Err(SieveError::Param(
            "epochs must be >= 1, lr > 0 and l2 >= 0".into(),
        ));
    }
    let mut model = LinearTextModel::zeros(label, params.dim, params.ngram_max)?;
    let features: Vec<SparseVector> = examples
        .iter()
        .map(|e| model.featurize(&e.text, tokenizer))
        .collect();

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let lr = params.lr / (1.0 + epoch as f64);
        for &i in &order {
            let x = &features[i];
            let y = if examples[i].label { 1.0 } else { 0.0 };
            let g = model.prob(x) - y;
            for &(j, v) in &x.0 {
                let w = &mut model.weights[j as usize];
                let step = g * f64::from(v) + params.l2 * f64::from(*w);
                *w = (f64::from(*w) - lr * step) as f32;
            }
            model.bias = (f64::from(model.bias) - lr * g) as f32;
        }
        let loss = features
            .iter()
            .zip(examples)
            .map(|(x, e)| log_loss(model.prob(x), e.label))
            .sum::<f64>()
            / examples.len() as f64;
        epoch_losses.push(loss);
    }
    let correct = features
        .iter()
        .zip(examples)
        .filter(|(x, e)| (model.prob(x) >= 0.5) == e.label)
        .count();
    model.params = Some(params.clone());
    Ok((
        model,
        TrainReport {
            epoch_losses,
            accuracy: correct as f64 / examples.len() as f64,
        },
    ))
}
