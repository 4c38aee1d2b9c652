//! Meta-controller networks.
//!
//! The attention controller runs, at every meta-step,
//! `crop → conv → ReLU → flatten ⧺ instruction → FC → ReLU → LSTM` and reads
//! two independent softmax heads off the LSTM output: one over subgoal
//! colours and one over attention moves. The no-attention controller sees
//! the whole image and is purely feedforward.

mod checkpoint;

pub use checkpoint::{load_params, read_params, save_params, write_params};

use crate::attention::{AttentionAction, NUM_ATTENTION_ACTIONS, WINDOW_ROWS};
use crate::env::{GRID_COLS, GRID_ROWS, IMAGE_CHANNELS, NUM_ROOMS};
use crate::error::{Error, Result};
use crate::numeric::{
    categorical_sample, relu, relu_backward, softmax, Conv2d, Dense, LstmCache, LstmCell, LstmState, ParamStore, Tensor,
};
use crate::rng::Rng;

pub const CONV_SIZE: usize = 3;
pub const CONV_FILTERS: usize = 8;
pub const FC_UNITS: usize = 32;
pub const LSTM_HIDDEN: usize = 32;
pub const INIT_SCALE: f64 = 0.1;

/// Recurrent state carried across one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaHidden(pub LstmState);

impl MetaHidden {
    pub fn fresh() -> Self {
        MetaHidden(LstmState::zeros(LSTM_HIDDEN))
    }
}

/// Sampled meta-action. `attention` is `None` for the no-attention controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaAction {
    pub subgoal: usize,
    pub attention: Option<AttentionAction>,
    pub joint_log_prob: f64,
}

/// Samples subgoal and attention move independently.
pub fn select_action(p_goal: &[f64], p_attn: &[f64], rng: &mut Rng) -> Result<MetaAction> {
    let (subgoal, lg) = categorical_sample(p_goal, rng)?;
    let (a, la) = categorical_sample(p_attn, rng)?;
    let attention =
        AttentionAction::from_index(a).ok_or_else(|| Error::config("attention head must have 3 outputs"))?;
    Ok(MetaAction { subgoal, attention: Some(attention), joint_log_prob: lg + la })
}

pub fn select_subgoal(p_goal: &[f64], rng: &mut Rng) -> Result<MetaAction> {
    let (subgoal, lg) = categorical_sample(p_goal, rng)?;
    Ok(MetaAction { subgoal, attention: None, joint_log_prob: lg })
}

fn flatten_with_instruction(features: &Tensor, instruction: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(features.len() + instruction.len());
    v.extend_from_slice(features.data());
    v.extend_from_slice(instruction);
    v
}

fn check_instruction(instruction: &[f64]) -> Result<()> {
    if instruction.len() != NUM_ROOMS {
        return Err(Error::config(format!("instruction must have length {NUM_ROOMS}, got {}", instruction.len())));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AttentionOutput {
    pub p_goal: Vec<f64>,
    pub p_attn: Vec<f64>,
}

/// Per-step activations kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct AttentionStepCache {
    crop: Tensor,
    conv_pre: Tensor,
    fc_in: Vec<f64>,
    fc_pre: Vec<f64>,
    lstm: LstmCache,
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AttentionNet {
    pub params: ParamStore,
    conv: Conv2d,
    fc: Dense,
    lstm: LstmCell,
    goal_head: Dense,
    attn_head: Dense,
}

impl AttentionNet {
    pub fn new(rng: &mut Rng) -> Self {
        Self::with_init(INIT_SCALE, rng)
    }

    /// Parameters uniform in `[-scale, scale]`.
    pub fn with_init(scale: f64, rng: &mut Rng) -> Self {
        let mut params = ParamStore::new();
        let conv = Conv2d::new(&mut params, "conv", CONV_SIZE, IMAGE_CHANNELS, CONV_FILTERS, scale, rng);
        let [oh, ow, oc] = conv.output_shape(WINDOW_ROWS, GRID_COLS);
        let fc = Dense::new(&mut params, "fc", oh * ow * oc + NUM_ROOMS, FC_UNITS, scale, rng);
        let lstm = LstmCell::new(&mut params, "lstm", FC_UNITS, LSTM_HIDDEN, scale, rng);
        let goal_head = Dense::new(&mut params, "goal_head", LSTM_HIDDEN, NUM_ROOMS, scale, rng);
        let attn_head = Dense::new(&mut params, "attn_head", LSTM_HIDDEN, NUM_ATTENTION_ACTIONS, scale, rng);
        AttentionNet { params, conv, fc, lstm, goal_head, attn_head }
    }

    pub fn goal_head(&self) -> &Dense {
        &self.goal_head
    }

    pub fn attn_head(&self) -> &Dense {
        &self.attn_head
    }

    pub fn forward(
        &self,
        crop: &Tensor,
        instruction: &[f64],
        hidden: &MetaHidden,
    ) -> Result<(AttentionOutput, MetaHidden, AttentionStepCache)> {
        crop.ensure_shape(&[WINDOW_ROWS, GRID_COLS, IMAGE_CHANNELS], "attention crop")?;
        check_instruction(instruction)?;
        let conv_pre = self.conv.forward(&self.params, crop)?;
        let conv_out = Tensor::from_vec(conv_pre.shape(), relu(conv_pre.data()))?;
        let fc_in = flatten_with_instruction(&conv_out, instruction);
        let fc_pre = self.fc.forward(&self.params, &fc_in)?;
        let fc_out = relu(&fc_pre);
        let (next, lstm) = self.lstm.step(&self.params, &fc_out, &hidden.0)?;
        let p_goal = softmax(&self.goal_head.forward(&self.params, &next.h)?);
        let p_attn = softmax(&self.attn_head.forward(&self.params, &next.h)?);
        let cache = AttentionStepCache { crop: crop.clone(), conv_pre, fc_in, fc_pre, lstm, h: next.h.clone() };
        Ok((AttentionOutput { p_goal, p_attn }, MetaHidden(next), cache))
    }

    /// Backpropagates an episode. `goal_logit_grads[t]` and
    /// `attn_logit_grads[t]` are the loss gradients with respect to step
    /// `t`'s head logits. Gradients accumulate into `self.params`.
    pub fn backward(
        &mut self,
        caches: &[AttentionStepCache],
        goal_logit_grads: &[Vec<f64>],
        attn_logit_grads: &[Vec<f64>],
    ) {
        assert_eq!(caches.len(), goal_logit_grads.len());
        assert_eq!(caches.len(), attn_logit_grads.len());
        let mut dh_next = vec![0.0; LSTM_HIDDEN];
        let mut dc_next = vec![0.0; LSTM_HIDDEN];
        for t in (0..caches.len()).rev() {
            let cache = &caches[t];
            let dh_goal = self.goal_head.backward(&mut self.params, &cache.h, &goal_logit_grads[t]);
            let dh_attn = self.attn_head.backward(&mut self.params, &cache.h, &attn_logit_grads[t]);
            let dh: Vec<f64> = (0..LSTM_HIDDEN).map(|k| dh_goal[k] + dh_attn[k] + dh_next[k]).collect();
            let (dx, dh_prev, dc_prev) = self.lstm.backward(&mut self.params, &cache.lstm, &dh, &dc_next);
            dh_next = dh_prev;
            dc_next = dc_prev;
            let dfc_pre = relu_backward(&cache.fc_pre, &dx);
            let dfc_in = self.fc.backward(&mut self.params, &cache.fc_in, &dfc_pre);
            let conv_len = cache.conv_pre.len();
            let dconv = relu_backward(cache.conv_pre.data(), &dfc_in[..conv_len]);
            let dconv = Tensor::from_vec(cache.conv_pre.shape(), dconv).expect("conv grad shape");
            self.conv.backward(&mut self.params, &cache.crop, &dconv, false);
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoAttentionStepCache {
    image: Tensor,
    conv_pre: Tensor,
    fc_in: Vec<f64>,
    fc_pre: Vec<f64>,
    fc_out: Vec<f64>,
}

/// Feedforward controller over the full 10×5 image.
#[derive(Debug, Clone)]
pub struct NoAttentionNet {
    pub params: ParamStore,
    conv: Conv2d,
    fc: Dense,
    goal_head: Dense,
}

impl NoAttentionNet {
    pub fn new(rng: &mut Rng) -> Self {
        Self::with_init(INIT_SCALE, rng)
    }

    pub fn with_init(scale: f64, rng: &mut Rng) -> Self {
        let mut params = ParamStore::new();
        let conv = Conv2d::new(&mut params, "conv", CONV_SIZE, IMAGE_CHANNELS, CONV_FILTERS, scale, rng);
        let [oh, ow, oc] = conv.output_shape(GRID_ROWS, GRID_COLS);
        let fc = Dense::new(&mut params, "fc", oh * ow * oc + NUM_ROOMS, FC_UNITS, scale, rng);
        let goal_head = Dense::new(&mut params, "goal_head", FC_UNITS, NUM_ROOMS, scale, rng);
        NoAttentionNet { params, conv, fc, goal_head }
    }

    pub fn forward(&self, image: &Tensor, instruction: &[f64]) -> Result<(Vec<f64>, NoAttentionStepCache)> {
        image.ensure_shape(&[GRID_ROWS, GRID_COLS, IMAGE_CHANNELS], "full image")?;
        check_instruction(instruction)?;
        let conv_pre = self.conv.forward(&self.params, image)?;
        let conv_out = Tensor::from_vec(conv_pre.shape(), relu(conv_pre.data()))?;
        let fc_in = flatten_with_instruction(&conv_out, instruction);
        let fc_pre = self.fc.forward(&self.params, &fc_in)?;
        let fc_out = relu(&fc_pre);
        let p_goal = softmax(&self.goal_head.forward(&self.params, &fc_out)?);
        Ok((p_goal, NoAttentionStepCache { image: image.clone(), conv_pre, fc_in, fc_pre, fc_out }))
    }

    pub fn backward(&mut self, caches: &[NoAttentionStepCache], goal_logit_grads: &[Vec<f64>]) {
        assert_eq!(caches.len(), goal_logit_grads.len());
        for (cache, dlogits) in caches.iter().zip(goal_logit_grads) {
            let dfc_out = self.goal_head.backward(&mut self.params, &cache.fc_out, dlogits);
            let dfc_pre = relu_backward(&cache.fc_pre, &dfc_out);
            let dfc_in = self.fc.backward(&mut self.params, &cache.fc_in, &dfc_pre);
            let conv_len = cache.conv_pre.len();
            let dconv = relu_backward(cache.conv_pre.data(), &dfc_in[..conv_len]);
            let dconv = Tensor::from_vec(cache.conv_pre.shape(), dconv).expect("conv grad shape");
            self.conv.backward(&mut self.params, &cache.image, &dconv, false);
        }
    }
}

/// Either controller variant.
#[derive(Debug, Clone)]
pub enum MetaController {
    Attention(AttentionNet),
    NoAttention(NoAttentionNet),
}

impl MetaController {
    pub fn params(&self) -> &ParamStore {
        match self {
            MetaController::Attention(n) => &n.params,
            MetaController::NoAttention(n) => &n.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        match self {
            MetaController::Attention(n) => &mut n.params,
            MetaController::NoAttention(n) => &mut n.params,
        }
    }

    pub fn uses_attention(&self) -> bool {
        matches!(self, MetaController::Attention(_))
    }
}
