//! The extractive sentence classifier.
//!
//! A bi-directional gated recurrent layer runs over the document's sentence
//! vectors; the per-sentence hidden states feed a scoring pass that weighs
//! content, salience against the document representation, novelty against
//! the summary built so far, two positional terms, and a flag for sentences
//! that carry numerical values. Training minimizes binary cross-entropy
//! against the oracle labels with exact reverse-mode gradients, and
//! inference selects sentences greedily under a word budget.

mod checkpoint;
mod tensor;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use tensor::{sigmoid, Tensor};
pub use train::{train, EpochLog, TrainConfig, TrainExample};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::SentenceVec;
use crate::rng::SplitMix64;
use crate::text::Sentence;
use tensor::{add_scaled_in_place, dot};

#[derive(Debug, Error)]
pub enum ExtractorError {
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("training diverged to NaN at epoch {epoch}, step {step}")]
    TrainingDiverged { epoch: usize, step: usize },
    #[error("checkpoint {path}: {reason}")]
    BadCheckpoint { path: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Relative sentence position is quantized into this many document deciles.
pub const REL_POS_BUCKETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub pos_dim: usize,
    pub max_pos: usize,
}

impl Dims {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim: 64,
            pos_dim: 16,
            max_pos: 100,
        }
    }
}

/// One gated recurrent cell: update gate, reset gate, candidate state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    pub w_update: Tensor,
    pub u_update: Tensor,
    pub b_update: Tensor,
    pub w_reset: Tensor,
    pub u_reset: Tensor,
    pub b_reset: Tensor,
    pub w_cand: Tensor,
    pub u_cand: Tensor,
    pub b_cand: Tensor,
}

impl GruCell {
    fn zeros(dims: Dims) -> Self {
        let (d, h) = (dims.input_dim, dims.hidden_dim);
        Self {
            w_update: Tensor::zeros(h, d),
            u_update: Tensor::zeros(h, h),
            b_update: Tensor::zeros(h, 1),
            w_reset: Tensor::zeros(h, d),
            u_reset: Tensor::zeros(h, h),
            b_reset: Tensor::zeros(h, 1),
            w_cand: Tensor::zeros(h, d),
            u_cand: Tensor::zeros(h, h),
            b_cand: Tensor::zeros(h, 1),
        }
    }

    fn uniform(rng: &mut SplitMix64, dims: Dims) -> Self {
        let (d, h) = (dims.input_dim, dims.hidden_dim);
        let in_scale = 1.0 / (d as f64).sqrt();
        let hid_scale = 1.0 / (h as f64).sqrt();
        Self {
            w_update: Tensor::uniform(rng, h, d, in_scale),
            u_update: Tensor::uniform(rng, h, h, hid_scale),
            b_update: Tensor::zeros(h, 1),
            w_reset: Tensor::uniform(rng, h, d, in_scale),
            u_reset: Tensor::uniform(rng, h, h, hid_scale),
            b_reset: Tensor::zeros(h, 1),
            w_cand: Tensor::uniform(rng, h, d, in_scale),
            u_cand: Tensor::uniform(rng, h, h, hid_scale),
            b_cand: Tensor::zeros(h, 1),
        }
    }
}

/// Every weight of the model. The gradient of a parameter set has the same
/// shape, so this type doubles as the gradient accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorParams {
    pub dims: Dims,
    pub gru_fwd: GruCell,
    pub gru_bwd: GruCell,
    /// Affine map from concatenated directional states to the combined
    /// per-sentence representation.
    pub combine_w: Tensor,
    pub combine_b: Tensor,
    /// Affine map from the mean concatenated state to the document
    /// representation.
    pub doc_w: Tensor,
    pub doc_b: Tensor,
    pub content_w: Tensor,
    pub salience_w: Tensor,
    pub novelty_w: Tensor,
    pub abs_pos: Tensor,
    pub abs_readout: Tensor,
    pub rel_pos: Tensor,
    pub rel_readout: Tensor,
    pub numeric_w: Tensor,
    pub bias: Tensor,
}

impl ExtractorParams {
    pub fn zeros(dims: Dims) -> Self {
        let h = dims.hidden_dim;
        let p = dims.pos_dim;
        Self {
            dims,
            gru_fwd: GruCell::zeros(dims),
            gru_bwd: GruCell::zeros(dims),
            combine_w: Tensor::zeros(h, 2 * h),
            combine_b: Tensor::zeros(h, 1),
            doc_w: Tensor::zeros(h, 2 * h),
            doc_b: Tensor::zeros(h, 1),
            content_w: Tensor::zeros(h, 1),
            salience_w: Tensor::zeros(h, h),
            novelty_w: Tensor::zeros(h, h),
            abs_pos: Tensor::zeros(dims.max_pos, p),
            abs_readout: Tensor::zeros(p, 1),
            rel_pos: Tensor::zeros(REL_POS_BUCKETS, p),
            rel_readout: Tensor::zeros(p, 1),
            numeric_w: Tensor::scalar(0.0),
            bias: Tensor::scalar(0.0),
        }
    }

    /// Seeded uniform initialization scaled by fan-in.
    pub fn init(dims: Dims, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let h = dims.hidden_dim;
        let p = dims.pos_dim;
        let hid_scale = 1.0 / (h as f64).sqrt();
        let cat_scale = 1.0 / (2.0 * h as f64).sqrt();
        let pos_scale = 1.0 / (p as f64).sqrt();
        Self {
            dims,
            gru_fwd: GruCell::uniform(&mut rng, dims),
            gru_bwd: GruCell::uniform(&mut rng, dims),
            combine_w: Tensor::uniform(&mut rng, h, 2 * h, cat_scale),
            combine_b: Tensor::zeros(h, 1),
            doc_w: Tensor::uniform(&mut rng, h, 2 * h, cat_scale),
            doc_b: Tensor::zeros(h, 1),
            content_w: Tensor::uniform(&mut rng, h, 1, hid_scale),
            salience_w: Tensor::uniform(&mut rng, h, h, hid_scale),
            novelty_w: Tensor::uniform(&mut rng, h, h, hid_scale),
            abs_pos: Tensor::uniform(&mut rng, dims.max_pos, p, pos_scale),
            abs_readout: Tensor::uniform(&mut rng, p, 1, pos_scale),
            rel_pos: Tensor::uniform(&mut rng, REL_POS_BUCKETS, p, pos_scale),
            rel_readout: Tensor::uniform(&mut rng, p, 1, pos_scale),
            numeric_w: Tensor::scalar(0.0),
            bias: Tensor::scalar(0.0),
        }
    }

    /// Named tensors in a fixed order; checkpoints, the optimizer, and the
    /// finite-difference harness all walk the model through this list.
    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("gru_fwd.w_update", &self.gru_fwd.w_update),
            ("gru_fwd.u_update", &self.gru_fwd.u_update),
            ("gru_fwd.b_update", &self.gru_fwd.b_update),
            ("gru_fwd.w_reset", &self.gru_fwd.w_reset),
            ("gru_fwd.u_reset", &self.gru_fwd.u_reset),
            ("gru_fwd.b_reset", &self.gru_fwd.b_reset),
            ("gru_fwd.w_cand", &self.gru_fwd.w_cand),
            ("gru_fwd.u_cand", &self.gru_fwd.u_cand),
            ("gru_fwd.b_cand", &self.gru_fwd.b_cand),
            ("gru_bwd.w_update", &self.gru_bwd.w_update),
            ("gru_bwd.u_update", &self.gru_bwd.u_update),
            ("gru_bwd.b_update", &self.gru_bwd.b_update),
            ("gru_bwd.w_reset", &self.gru_bwd.w_reset),
            ("gru_bwd.u_reset", &self.gru_bwd.u_reset),
            ("gru_bwd.b_reset", &self.gru_bwd.b_reset),
            ("gru_bwd.w_cand", &self.gru_bwd.w_cand),
            ("gru_bwd.u_cand", &self.gru_bwd.u_cand),
            ("gru_bwd.b_cand", &self.gru_bwd.b_cand),
            ("combine_w", &self.combine_w),
            ("combine_b", &self.combine_b),
            ("doc_w", &self.doc_w),
            ("doc_b", &self.doc_b),
            ("content_w", &self.content_w),
            ("salience_w", &self.salience_w),
            ("novelty_w", &self.novelty_w),
            ("abs_pos", &self.abs_pos),
            ("abs_readout", &self.abs_readout),
            ("rel_pos", &self.rel_pos),
            ("rel_readout", &self.rel_readout),
            ("numeric_w", &self.numeric_w),
            ("bias", &self.bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("gru_fwd.w_update", &mut self.gru_fwd.w_update),
            ("gru_fwd.u_update", &mut self.gru_fwd.u_update),
            ("gru_fwd.b_update", &mut self.gru_fwd.b_update),
            ("gru_fwd.w_reset", &mut self.gru_fwd.w_reset),
            ("gru_fwd.u_reset", &mut self.gru_fwd.u_reset),
            ("gru_fwd.b_reset", &mut self.gru_fwd.b_reset),
            ("gru_fwd.w_cand", &mut self.gru_fwd.w_cand),
            ("gru_fwd.u_cand", &mut self.gru_fwd.u_cand),
            ("gru_fwd.b_cand", &mut self.gru_fwd.b_cand),
            ("gru_bwd.w_update", &mut self.gru_bwd.w_update),
            ("gru_bwd.u_update", &mut self.gru_bwd.u_update),
            ("gru_bwd.b_update", &mut self.gru_bwd.b_update),
            ("gru_bwd.w_reset", &mut self.gru_bwd.w_reset),
            ("gru_bwd.u_reset", &mut self.gru_bwd.u_reset),
            ("gru_bwd.b_reset", &mut self.gru_bwd.b_reset),
            ("gru_bwd.w_cand", &mut self.gru_bwd.w_cand),
            ("gru_bwd.u_cand", &mut self.gru_bwd.u_cand),
            ("gru_bwd.b_cand", &mut self.gru_bwd.b_cand),
            ("combine_w", &mut self.combine_w),
            ("combine_b", &mut self.combine_b),
            ("doc_w", &mut self.doc_w),
            ("doc_b", &mut self.doc_b),
            ("content_w", &mut self.content_w),
            ("salience_w", &mut self.salience_w),
            ("novelty_w", &mut self.novelty_w),
            ("abs_pos", &mut self.abs_pos),
            ("abs_readout", &mut self.abs_readout),
            ("rel_pos", &mut self.rel_pos),
            ("rel_readout", &mut self.rel_readout),
            ("numeric_w", &mut self.numeric_w),
            ("bias", &mut self.bias),
        ]
    }

    /// self += scale * other, tensor by tensor.
    pub fn add_scaled(&mut self, scale: f64, other: &Self) {
        let other_tensors = other.tensors();
        for ((_, mine), (_, theirs)) in self.tensors_mut().into_iter().zip(other_tensors) {
            mine.add_scaled(scale, theirs);
        }
    }
}

/// Per-sentence state exposed by the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceStates {
    pub fwd_hidden: Vec<Vec<f64>>,
    pub bwd_hidden: Vec<Vec<f64>>,
    pub combined: Vec<Vec<f64>>,
    pub doc_rep: Vec<f64>,
    pub has_numeral: Vec<bool>,
    pub abs_idx: Vec<usize>,
    pub rel_idx: Vec<usize>,
}

/// Running decode state: the probability-weighted sum of combined states
/// for the summary formed so far, and the emitted probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeState {
    pub summary_state: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DecodeState {
    pub fn new(hidden_dim: usize) -> Self {
        Self {
            summary_state: vec![0.0; hidden_dim],
            probs: Vec::new(),
        }
    }

    /// Fold one scored sentence into the state.
    pub fn push(&mut self, prob: f64, combined: &[f64]) {
        add_scaled_in_place(&mut self.summary_state, prob, combined);
        self.probs.push(prob);
    }

    /// Rebuild the decode state from emitted probabilities and combined
    /// sentence representations.
    pub fn replay(probs: &[f64], combined: &[Vec<f64>]) -> Self {
        let dim = combined.first().map_or(0, Vec::len);
        let mut state = Self::new(dim);
        for (p, c) in probs.iter().zip(combined) {
            state.push(*p, c);
        }
        state
    }
}

struct GruStepCache {
    h_prev: Vec<f64>,
    update: Vec<f64>,
    reset: Vec<f64>,
    cand: Vec<f64>,
    hidden: Vec<f64>,
}

fn gru_step(cell: &GruCell, x: &[f64], h_prev: &[f64]) -> GruStepCache {
    let h = h_prev.len();
    let mut update = cell.w_update.matvec(x);
    add_scaled_in_place(&mut update, 1.0, &cell.u_update.matvec(h_prev));
    add_scaled_in_place(&mut update, 1.0, cell.b_update.as_vec());
    for v in &mut update {
        *v = sigmoid(*v);
    }
    let mut reset = cell.w_reset.matvec(x);
    add_scaled_in_place(&mut reset, 1.0, &cell.u_reset.matvec(h_prev));
    add_scaled_in_place(&mut reset, 1.0, cell.b_reset.as_vec());
    for v in &mut reset {
        *v = sigmoid(*v);
    }
    let gated: Vec<f64> = reset.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    let mut cand = cell.w_cand.matvec(x);
    add_scaled_in_place(&mut cand, 1.0, &cell.u_cand.matvec(&gated));
    add_scaled_in_place(&mut cand, 1.0, cell.b_cand.as_vec());
    for v in &mut cand {
        *v = v.tanh();
    }
    let mut hidden = vec![0.0; h];
    for i in 0..h {
        hidden[i] = (1.0 - update[i]) * cand[i] + update[i] * h_prev[i];
    }
    GruStepCache {
        h_prev: h_prev.to_vec(),
        update,
        reset,
        cand,
        hidden,
    }
}

struct ForwardCache {
    fwd_steps: Vec<GruStepCache>,
    /// Backward-direction steps, indexed by sentence (step order is the
    /// reverse sentence order).
    bwd_steps: Vec<GruStepCache>,
    concat_mean: Vec<f64>,
    summary_tanh: Vec<Vec<f64>>,
}

pub fn rel_bucket(index: usize, n_sentences: usize) -> usize {
    REL_POS_BUCKETS * index / n_sentences
}

fn check_shapes(
    doc: &[SentenceVec],
    has_numeral: &[bool],
    params: &ExtractorParams,
) -> Result<(), ExtractorError> {
    if doc.is_empty() {
        return Err(ExtractorError::ShapeError(
            "document has no sentence vectors".to_string(),
        ));
    }
    if doc.len() != has_numeral.len() {
        return Err(ExtractorError::ShapeError(format!(
            "{} sentence vectors but {} numeral flags",
            doc.len(),
            has_numeral.len()
        )));
    }
    for (i, v) in doc.iter().enumerate() {
        if v.dim() != params.dims.input_dim {
            return Err(ExtractorError::ShapeError(format!(
                "sentence {i} has dimension {}, model expects {}",
                v.dim(),
                params.dims.input_dim
            )));
        }
    }
    Ok(())
}

fn forward_full(
    doc: &[SentenceVec],
    has_numeral: &[bool],
    params: &ExtractorParams,
) -> Result<(Vec<f64>, SentenceStates, ForwardCache), ExtractorError> {
    check_shapes(doc, has_numeral, params)?;
    let n = doc.len();
    let h = params.dims.hidden_dim;

    let mut fwd_steps = Vec::with_capacity(n);
    let mut hidden = vec![0.0; h];
    for vec in doc {
        let step = gru_step(&params.gru_fwd, &vec.values, &hidden);
        hidden = step.hidden.clone();
        fwd_steps.push(step);
    }

    let mut bwd_steps: Vec<Option<GruStepCache>> = (0..n).map(|_| None).collect();
    let mut hidden = vec![0.0; h];
    for i in (0..n).rev() {
        let step = gru_step(&params.gru_bwd, &doc[i].values, &hidden);
        hidden = step.hidden.clone();
        bwd_steps[i] = Some(step);
    }
    let bwd_steps: Vec<GruStepCache> = bwd_steps.into_iter().map(Option::unwrap).collect();

    let mut concat_mean = vec![0.0; 2 * h];
    for i in 0..n {
        add_scaled_in_place(&mut concat_mean[..h], 1.0 / n as f64, &fwd_steps[i].hidden);
        add_scaled_in_place(&mut concat_mean[h..], 1.0 / n as f64, &bwd_steps[i].hidden);
    }
    let mut doc_rep = params.doc_w.matvec(&concat_mean);
    add_scaled_in_place(&mut doc_rep, 1.0, params.doc_b.as_vec());
    for v in &mut doc_rep {
        *v = v.tanh();
    }

    let mut combined = Vec::with_capacity(n);
    for i in 0..n {
        let mut concat = fwd_steps[i].hidden.clone();
        concat.extend_from_slice(&bwd_steps[i].hidden);
        let mut c = params.combine_w.matvec(&concat);
        add_scaled_in_place(&mut c, 1.0, params.combine_b.as_vec());
        for v in &mut c {
            *v = v.tanh();
        }
        combined.push(c);
    }

    let mut decode = DecodeState::new(h);
    let mut summary_tanh = Vec::with_capacity(n);
    let mut abs_idx = Vec::with_capacity(n);
    let mut rel_idx = Vec::with_capacity(n);
    for i in 0..n {
        let tanh_sum: Vec<f64> = decode.summary_state.iter().map(|v: &f64| v.tanh()).collect();
        let a_idx = i.min(params.dims.max_pos - 1);
        let r_idx = rel_bucket(i, n);
        let score = dot(params.content_w.as_vec(), &combined[i])
            + dot(&combined[i], &params.salience_w.matvec(&doc_rep))
            - dot(&combined[i], &params.novelty_w.matvec(&tanh_sum))
            + dot(params.abs_readout.as_vec(), params.abs_pos.row(a_idx))
            + dot(params.rel_readout.as_vec(), params.rel_pos.row(r_idx))
            + params.numeric_w.item() * f64::from(has_numeral[i])
            + params.bias.item();
        let p = sigmoid(score);
        decode.push(p, &combined[i]);
        summary_tanh.push(tanh_sum);
        abs_idx.push(a_idx);
        rel_idx.push(r_idx);
    }
    let probs = decode.probs;

    let states = SentenceStates {
        fwd_hidden: fwd_steps.iter().map(|s| s.hidden.clone()).collect(),
        bwd_hidden: bwd_steps.iter().map(|s| s.hidden.clone()).collect(),
        combined,
        doc_rep,
        has_numeral: has_numeral.to_vec(),
        abs_idx,
        rel_idx,
    };
    let cache = ForwardCache {
        fwd_steps,
        bwd_steps,
        concat_mean,
        summary_tanh,
    };
    Ok((probs, states, cache))
}

/// Inclusion probabilities for every sentence of a document.
pub fn forward(
    doc: &[SentenceVec],
    has_numeral: &[bool],
    params: &ExtractorParams,
) -> Result<(Vec<f64>, SentenceStates), ExtractorError> {
    let (probs, states, _) = forward_full(doc, has_numeral, params)?;
    Ok((probs, states))
}

const PROB_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy with probabilities clamped away from 0 and 1.
pub fn bce_loss(probs: &[f64], labels: &[u8]) -> f64 {
    debug_assert_eq!(probs.len(), labels.len());
    let n = probs.len().max(1);
    let mut total = 0.0;
    for (p, y) in probs.iter().zip(labels) {
        let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total -= match y {
            1 => p.ln(),
            _ => (1.0 - p).ln(),
        };
    }
    total / n as f64
}

fn bce_dprob(p: f64, y: u8, n: usize) -> f64 {
    // Clamped probabilities sit on a flat segment of the loss.
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        return 0.0;
    }
    let grad = match y {
        1 => -1.0 / p,
        _ => 1.0 / (1.0 - p),
    };
    grad / n as f64
}

/// Accumulate gradients for one GRU direction. `external` holds the loss
/// gradient arriving at each step's hidden state from outside the
/// recurrence; steps are walked opposite to their forward order.
fn gru_backward(
    cell: &GruCell,
    grads: &mut GruCell,
    inputs: &[&[f64]],
    steps: &[&GruStepCache],
    external: &[Vec<f64>],
) {
    let h = cell.b_update.rows;
    let mut carry = vec![0.0; h];
    for t in (0..steps.len()).rev() {
        let step = steps[t];
        let x = inputs[t];
        let mut dh = external[t].clone();
        add_scaled_in_place(&mut dh, 1.0, &carry);

        let mut d_update = vec![0.0; h];
        let mut d_cand = vec![0.0; h];
        let mut dh_prev = vec![0.0; h];
        for i in 0..h {
            d_update[i] = dh[i] * (step.h_prev[i] - step.cand[i]);
            d_cand[i] = dh[i] * (1.0 - step.update[i]);
            dh_prev[i] = dh[i] * step.update[i];
        }

        let da_cand: Vec<f64> = d_cand
            .iter()
            .zip(&step.cand)
            .map(|(d, c)| d * (1.0 - c * c))
            .collect();
        let gated: Vec<f64> = step
            .reset
            .iter()
            .zip(&step.h_prev)
            .map(|(r, hp)| r * hp)
            .collect();
        grads.w_cand.add_outer(1.0, &da_cand, x);
        grads.u_cand.add_outer(1.0, &da_cand, &gated);
        grads.b_cand.add_scaled_vec(1.0, &da_cand);
        let d_gated = cell.u_cand.matvec_t(&da_cand);
        let mut d_reset = vec![0.0; h];
        for i in 0..h {
            d_reset[i] = d_gated[i] * step.h_prev[i];
            dh_prev[i] += d_gated[i] * step.reset[i];
        }

        let da_update: Vec<f64> = d_update
            .iter()
            .zip(&step.update)
            .map(|(d, z)| d * z * (1.0 - z))
            .collect();
        grads.w_update.add_outer(1.0, &da_update, x);
        grads.u_update.add_outer(1.0, &da_update, &step.h_prev);
        grads.b_update.add_scaled_vec(1.0, &da_update);
        add_scaled_in_place(&mut dh_prev, 1.0, &cell.u_update.matvec_t(&da_update));

        let da_reset: Vec<f64> = d_reset
            .iter()
            .zip(&step.reset)
            .map(|(d, r)| d * r * (1.0 - r))
            .collect();
        grads.w_reset.add_outer(1.0, &da_reset, x);
        grads.u_reset.add_outer(1.0, &da_reset, &step.h_prev);
        grads.b_reset.add_scaled_vec(1.0, &da_reset);
        add_scaled_in_place(&mut dh_prev, 1.0, &cell.u_reset.matvec_t(&da_reset));

        carry = dh_prev;
    }
}

/// Loss and exact reverse-mode gradients for one document, differentiating
/// through both recurrent passes, the document representation, and the
/// summary-state recursion (probabilities feed the state that scores later
/// sentences).
pub fn gradients(
    doc: &[SentenceVec],
    has_numeral: &[bool],
    labels: &[u8],
    params: &ExtractorParams,
) -> Result<(f64, ExtractorParams), ExtractorError> {
    if labels.len() != doc.len() {
        return Err(ExtractorError::ShapeError(format!(
            "{} labels for {} sentences",
            labels.len(),
            doc.len()
        )));
    }
    let (probs, states, cache) = forward_full(doc, has_numeral, params)?;
    let n = doc.len();
    let h = params.dims.hidden_dim;
    let loss = bce_loss(&probs, labels);
    let mut grads = ExtractorParams::zeros(params.dims);

    let salience_doc = params.salience_w.matvec(&states.doc_rep);
    let mut d_combined: Vec<Vec<f64>> = vec![vec![0.0; h]; n];
    let mut d_doc_rep = vec![0.0; h];
    let mut g_sum = vec![0.0; h];
    for i in (0..n).rev() {
        let combined = &states.combined[i];
        let tanh_sum = &cache.summary_tanh[i];
        let dp = bce_dprob(probs[i], labels[i], n) + dot(&g_sum, combined);
        add_scaled_in_place(&mut d_combined[i], probs[i], &g_sum);
        let dscore = dp * probs[i] * (1.0 - probs[i]);

        grads.content_w.add_scaled_vec(dscore, combined);
        add_scaled_in_place(&mut d_combined[i], dscore, params.content_w.as_vec());

        grads.salience_w.add_outer(dscore, combined, &states.doc_rep);
        add_scaled_in_place(&mut d_combined[i], dscore, &salience_doc);
        add_scaled_in_place(
            &mut d_doc_rep,
            dscore,
            &params.salience_w.matvec_t(combined),
        );

        grads.novelty_w.add_outer(-dscore, combined, tanh_sum);
        add_scaled_in_place(
            &mut d_combined[i],
            -dscore,
            &params.novelty_w.matvec(tanh_sum),
        );
        let d_tanh_sum = params.novelty_w.matvec_t(combined);
        for k in 0..h {
            g_sum[k] += -dscore * d_tanh_sum[k] * (1.0 - tanh_sum[k] * tanh_sum[k]);
        }

        let a_idx = states.abs_idx[i];
        let r_idx = states.rel_idx[i];
        add_scaled_in_place(
            grads.abs_pos.row_mut(a_idx),
            dscore,
            params.abs_readout.as_vec(),
        );
        grads
            .abs_readout
            .add_scaled_vec(dscore, params.abs_pos.row(a_idx));
        add_scaled_in_place(
            grads.rel_pos.row_mut(r_idx),
            dscore,
            params.rel_readout.as_vec(),
        );
        grads
            .rel_readout
            .add_scaled_vec(dscore, params.rel_pos.row(r_idx));
        grads.numeric_w.data[0] += dscore * f64::from(has_numeral[i]);
        grads.bias.data[0] += dscore;
    }

    // Document representation: doc_rep = tanh(doc_w . mean + doc_b)
    let da_doc: Vec<f64> = d_doc_rep
        .iter()
        .zip(&states.doc_rep)
        .map(|(d, v)| d * (1.0 - v * v))
        .collect();
    grads.doc_w.add_outer(1.0, &da_doc, &cache.concat_mean);
    grads.doc_b.add_scaled_vec(1.0, &da_doc);
    let d_mean = params.doc_w.matvec_t(&da_doc);

    // Combined states and the mean both fan gradients back to the
    // concatenated directional states.
    let mut d_fwd_ext: Vec<Vec<f64>> = vec![vec![0.0; h]; n];
    let mut d_bwd_ext: Vec<Vec<f64>> = vec![vec![0.0; h]; n];
    for i in 0..n {
        let combined = &states.combined[i];
        let da: Vec<f64> = d_combined[i]
            .iter()
            .zip(combined)
            .map(|(d, v)| d * (1.0 - v * v))
            .collect();
        let mut concat = cache.fwd_steps[i].hidden.clone();
        concat.extend_from_slice(&cache.bwd_steps[i].hidden);
        grads.combine_w.add_outer(1.0, &da, &concat);
        grads.combine_b.add_scaled_vec(1.0, &da);
        let d_concat = params.combine_w.matvec_t(&da);
        for k in 0..h {
            d_fwd_ext[i][k] = d_concat[k] + d_mean[k] / n as f64;
            d_bwd_ext[i][k] = d_concat[h + k] + d_mean[h + k] / n as f64;
        }
    }

    let inputs: Vec<&[f64]> = doc.iter().map(|v| v.values.as_slice()).collect();
    let fwd_refs: Vec<&GruStepCache> = cache.fwd_steps.iter().collect();
    gru_backward(
        &params.gru_fwd,
        &mut grads.gru_fwd,
        &inputs,
        &fwd_refs,
        &d_fwd_ext,
    );
    // The backward direction consumed sentences last-to-first, so reverse
    // everything to put its steps in forward order.
    let rev_inputs: Vec<&[f64]> = inputs.iter().rev().copied().collect();
    let bwd_refs: Vec<&GruStepCache> = cache.bwd_steps.iter().rev().collect();
    let rev_ext: Vec<Vec<f64>> = d_bwd_ext.into_iter().rev().collect();
    gru_backward(
        &params.gru_bwd,
        &mut grads.gru_bwd,
        &rev_inputs,
        &bwd_refs,
        &rev_ext,
    );

    Ok((loss, grads))
}

/// Budgeted greedy selection: rank by probability (ties to the earlier
/// sentence), keep taking while the running word count is under the
/// budget, and always take at least one. Returns indices in document
/// order.
pub fn select(probs: &[f64], sentences: &[Sentence], word_budget: usize) -> Vec<usize> {
    debug_assert_eq!(probs.len(), sentences.len());
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut taken = Vec::new();
    let mut words = 0usize;
    for i in order {
        taken.push(i);
        words += sentences[i].tokens.len();
        if words >= word_budget {
            break;
        }
    }
    taken.sort_unstable();
    taken
}
