//! Mini-batch training with an adaptive-moment optimizer and
//! lowest-validation-loss model selection. Per-document gradients inside a
//! batch may be computed in parallel; the reduction is ordered, so results
//! are identical across thread counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bce_loss, forward, gradients, ExtractorError, ExtractorParams, Tensor};
use crate::encoder::SentenceVec;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Stop after this many epochs without a validation improvement;
    /// None trains for all `max_epochs`.
    pub early_stop_patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            batch_size: 8,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 50,
            early_stop_patience: None,
            seed: 0,
        }
    }
}

/// One encoded training document.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub doc: Vec<SentenceVec>,
    pub has_numeral: Vec<bool>,
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

struct AdamState {
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    step: usize,
}

impl AdamState {
    fn new(params: &ExtractorParams) -> Self {
        let shapes: Vec<Tensor> = params
            .tensors()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.rows, t.cols))
            .collect();
        Self {
            first: shapes.clone(),
            second: shapes,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut ExtractorParams, grads: &ExtractorParams, cfg: &TrainConfig) {
        self.step += 1;
        let bias1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bias2 = 1.0 - cfg.beta2.powi(self.step as i32);
        let grad_tensors = grads.tensors();
        for (k, (_, tensor)) in params.tensors_mut().into_iter().enumerate() {
            let grad = grad_tensors[k].1;
            let m = &mut self.first[k];
            let v = &mut self.second[k];
            for j in 0..tensor.data.len() {
                let g = grad.data[j];
                m.data[j] = cfg.beta1 * m.data[j] + (1.0 - cfg.beta1) * g;
                v.data[j] = cfg.beta2 * v.data[j] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m.data[j] / bias1;
                let v_hat = v.data[j] / bias2;
                tensor.data[j] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

fn mean_loss(examples: &[TrainExample], params: &ExtractorParams) -> Result<f64, ExtractorError> {
    let losses: Vec<f64> = examples
        .par_iter()
        .map(|ex| {
            forward(&ex.doc, &ex.has_numeral, params)
                .map(|(probs, _)| bce_loss(&probs, &ex.labels))
        })
        .collect::<Result<_, _>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Train on `train_set`, score `val_set` after every epoch, and return the
/// parameters of the epoch with the lowest validation loss together with
/// the per-epoch log. Fully deterministic for a given config.
pub fn train(
    train_set: &[TrainExample],
    val_set: &[TrainExample],
    initial: ExtractorParams,
    cfg: &TrainConfig,
) -> Result<(ExtractorParams, Vec<EpochLog>), ExtractorError> {
    let mut params = initial;
    let mut adam = AdamState::new(&params);
    let mut rng = SplitMix64::new(cfg.seed);
    let mut best: Option<(f64, ExtractorParams)> = None;
    let mut log = Vec::new();
    let mut epochs_since_best = 0usize;

    for epoch in 0..cfg.max_epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for (step, batch) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            let results: Vec<(f64, ExtractorParams)> = batch
                .par_iter()
                .map(|&i| {
                    let ex = &train_set[i];
                    gradients(&ex.doc, &ex.has_numeral, &ex.labels, &params)
                })
                .collect::<Result<_, _>>()?;
            let mut batch_grads = ExtractorParams::zeros(params.dims);
            let mut batch_loss = 0.0;
            for (loss, grads) in &results {
                batch_loss += loss;
                batch_grads.add_scaled(1.0 / batch.len() as f64, grads);
            }
            if !batch_loss.is_finite() {
                return Err(ExtractorError::TrainingDiverged { epoch, step });
            }
            epoch_loss += batch_loss;
            seen += batch.len();
            adam.update(&mut params, &batch_grads, cfg);
        }
        let train_loss = epoch_loss / seen.max(1) as f64;
        let val_loss = mean_loss(val_set, &params)?;
        if !val_loss.is_finite() {
            return Err(ExtractorError::TrainingDiverged { epoch, step: 0 });
        }
        log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
        });
        let improved = best.as_ref().is_none_or(|(b, _)| val_loss < *b);
        if improved {
            best = Some((val_loss, params.clone()));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if let Some(patience) = cfg.early_stop_patience {
                if epochs_since_best >= patience {
                    break;
                }
            }
        }
    }
    let (_, best_params) = best.unwrap_or((f64::INFINITY, params));
    Ok((best_params, log))
}
