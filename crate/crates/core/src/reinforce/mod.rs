//! REINFORCE with a moving-average baseline over meta-controller episodes.
//!
//! The surrogate minimised for one episode is
//! `L = -Σ_t log π(g_t, a_t | s_1..t) · (R_t - b)` where `R_t` is the
//! undiscounted reward-to-go and `b` is held constant during the update.

mod bandit;
mod rollout;

pub use bandit::{bandit_expected_gradient, train_bandit, BanditConfig, BanditOutcome};
pub use rollout::{
    replay, rollout_episode, Decider, Episode, EpisodeStats, MetaView, NetDecider, PolicyTrace, ScriptedDecider,
    StepInput, UniformDecider,
};

use std::collections::VecDeque;

use crate::controller::{AttentionNet, MetaAction, MetaController, NoAttentionNet};
use crate::env::{EnvConfig, EnvMode, DEFAULT_TIMEOUT};
use crate::error::{Error, Result};
use crate::numeric::{log_prob_grad_into, Adam};
use crate::oracle::GatingMode;
use crate::rng::{split, Rng};

use rollout::TraceCaches;

pub const BASELINE_WINDOW: usize = 100;
pub const DEFAULT_LR: f64 = 1e-5;
/// One episode per update. Adam moves each parameter by at most about `lr`
/// per step, so at 1e-5 the number of updates, not gradient noise, limits
/// how far a run can get; larger batches divide that number.
pub const DEFAULT_BATCH: usize = 1;
pub const DEFAULT_GRAD_CLIP: f64 = 10.0;

/// Per-step log-probabilities and rewards of one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Undiscounted reward-to-go.
pub fn compute_returns(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::contract("compute_returns: empty reward list"));
    }
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        acc += r;
        *o = acc;
    }
    Ok(out)
}

/// What the baseline averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineKind {
    /// Total return of each of the last N episodes.
    #[default]
    EpisodeReturn,
    /// The last N individual step rewards.
    StepReward,
}

/// Ring buffer of the last [`BASELINE_WINDOW`] values.
#[derive(Debug, Clone)]
pub struct BaselineBuffer {
    values: VecDeque<f64>,
    capacity: usize,
}

impl Default for BaselineBuffer {
    fn default() -> Self {
        Self::new()
    }
}

impl BaselineBuffer {
    pub fn new() -> Self {
        Self::with_capacity(BASELINE_WINDOW)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0);
        BaselineBuffer { values: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn push(&mut self, value: f64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(value);
    }

    /// Mean of the stored values, 0 when empty.
    pub fn value(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }

    pub(crate) fn record(&mut self, kind: BaselineKind, trajectory: &Trajectory) {
        match kind {
            BaselineKind::EpisodeReturn => self.push(trajectory.rewards.iter().sum()),
            BaselineKind::StepReward => trajectory.rewards.iter().for_each(|&r| self.push(r)),
        }
    }
}

pub fn baseline_value(buffer: &BaselineBuffer) -> f64 {
    buffer.value()
}

fn check_surrogate_lengths(trace: &PolicyTrace, actions: &[MetaAction], advantages: &[f64]) -> Result<()> {
    let steps = trace.len();
    if actions.len() != steps || advantages.len() != steps {
        return Err(Error::contract(format!(
            "surrogate: {} steps traced, {} actions, {} advantages",
            steps,
            actions.len(),
            advantages.len()
        )));
    }
    Ok(())
}

/// `scale · L` for a traced episode, where
/// `L = -Σ_t advantages[t] · log π(actions[t])`.
pub fn surrogate_loss(trace: &PolicyTrace, actions: &[MetaAction], advantages: &[f64], scale: f64) -> Result<f64> {
    check_surrogate_lengths(trace, actions, advantages)?;
    let mut loss = 0.0;
    for (t, action) in actions.iter().enumerate() {
        let mut log_prob = trace.p_goal[t][action.subgoal].ln();
        if let Some(attn) = action.attention {
            let p_attn =
                trace.p_attn.get(t).ok_or_else(|| Error::contract("attention action without attention head"))?;
            log_prob += p_attn[attn.index()].ln();
        }
        loss += -scale * advantages[t] * log_prob;
    }
    Ok(loss)
}

/// Backpropagates [`surrogate_loss`] into the controller and returns it.
pub fn backprop_surrogate(
    net: &mut MetaController,
    trace: &PolicyTrace,
    actions: &[MetaAction],
    advantages: &[f64],
    scale: f64,
) -> Result<f64> {
    let loss = surrogate_loss(trace, actions, advantages, scale)?;
    let steps = trace.len();
    let mut goal_grads = Vec::with_capacity(steps);
    let mut attn_grads = Vec::with_capacity(steps);
    for (t, action) in actions.iter().enumerate() {
        let coef = -scale * advantages[t];
        let p_goal = &trace.p_goal[t];
        let mut g = vec![0.0; p_goal.len()];
        log_prob_grad_into(p_goal, action.subgoal, coef, &mut g);
        goal_grads.push(g);
        if let (Some(attn), Some(p_attn)) = (action.attention, trace.p_attn.get(t)) {
            let mut a = vec![0.0; p_attn.len()];
            log_prob_grad_into(p_attn, attn.index(), coef, &mut a);
            attn_grads.push(a);
        }
    }
    match (net, &trace.caches) {
        (MetaController::Attention(n), TraceCaches::Attention(c)) => {
            if attn_grads.len() != steps {
                return Err(Error::contract("attention controller trace lacks attention actions"));
            }
            n.backward(c, &goal_grads, &attn_grads)
        }
        (MetaController::NoAttention(n), TraceCaches::NoAttention(c)) => n.backward(c, &goal_grads),
        _ => return Err(Error::contract("trace was produced by a different controller kind")),
    }
    Ok(loss)
}

/// Accumulates `scale · ∇L` for one episode with scalar baseline `baseline`.
/// The advantages `R_t - b` are constants.
pub fn accumulate_policy_gradient(
    net: &mut MetaController,
    episode: &Episode,
    trace: &PolicyTrace,
    baseline: f64,
    scale: f64,
) -> Result<f64> {
    let returns = compute_returns(&episode.trajectory.rewards)?;
    let advantages: Vec<f64> = returns.iter().map(|r| r - baseline).collect();
    let loss = backprop_surrogate(net, trace, &episode.actions, &advantages, scale)?;
    for id in net.params().ids() {
        if !net.params().grad(id).is_finite() {
            return Err(Error::NonFinite { param: net.params().name(id).to_string() });
        }
    }
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub episodes: usize,
    pub timeout: usize,
    pub gating: GatingMode,
    pub env_mode: EnvMode,
    pub target_room: usize,
    pub seed: u64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    /// Whether the controller sees a cropped window.
    pub attention: bool,
    pub baseline: BaselineKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: DEFAULT_LR,
            batch_size: DEFAULT_BATCH,
            episodes: 20_000,
            timeout: DEFAULT_TIMEOUT,
            gating: GatingMode::Unconstrained,
            env_mode: EnvMode::Fixed,
            target_room: crate::env::BOTTOM_ROOM,
            seed: 0,
            grad_clip: Some(DEFAULT_GRAD_CLIP),
            attention: false,
            baseline: BaselineKind::EpisodeReturn,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("learning rate {} must be finite and non-negative", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if self.timeout == 0 {
            return Err(Error::config("timeout must be positive"));
        }
        if self.target_room >= crate::env::NUM_ROOMS {
            return Err(Error::config(format!("target room {} out of range", self.target_room)));
        }
        if let Some(c) = self.grad_clip {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::config("gradient clip must be positive"));
            }
        }
        if !self.attention && self.gating != GatingMode::Unconstrained {
            return Err(Error::config("gated base agents need an attention controller"));
        }
        Ok(())
    }

    pub fn env(&self) -> EnvConfig {
        EnvConfig { mode: self.env_mode, timeout: self.timeout, target_room: self.target_room }
    }
}

/// One line of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub length: usize,
    pub total_return: f64,
    pub success: bool,
    /// Baseline value used for this episode's update.
    pub baseline: f64,
    pub optimal_length: usize,
}

pub struct TrainOutcome {
    pub net: MetaController,
    pub records: Vec<EpisodeRecord>,
}

const INIT_STREAM: u64 = 0;

/// Fresh controller for `config`, initialised from the run seed.
pub fn initial_controller(config: &TrainConfig) -> MetaController {
    let mut rng = split(config.seed, INIT_STREAM);
    if config.attention {
        MetaController::Attention(AttentionNet::new(&mut rng))
    } else {
        MetaController::NoAttention(NoAttentionNet::new(&mut rng))
    }
}

/// RNG stream of episode `index`. Streams are independent of batching, so
/// results do not depend on how episodes are grouped across workers.
pub fn episode_rng(seed: u64, index: usize) -> Rng {
    split(seed, INIT_STREAM + 1 + index as u64)
}

/// Trains a controller, calling `on_episode` once per finished episode.
pub fn train<F>(config: &TrainConfig, mut on_episode: F) -> Result<TrainOutcome>
where
    F: FnMut(&EpisodeRecord) -> Result<()>,
{
    config.validate()?;
    let env = config.env();
    let mut net = initial_controller(config);
    let mut adam = Adam::new(net.params(), config.lr);
    let mut baseline = BaselineBuffer::new();
    let mut records = Vec::with_capacity(config.episodes);

    let mut next = 0;
    while next < config.episodes {
        let batch_end = (next + config.batch_size).min(config.episodes);
        let scale = 1.0 / (batch_end - next) as f64;
        let b = baseline.value();
        let mut finished = Vec::with_capacity(batch_end - next);
        for index in next..batch_end {
            let mut rng = episode_rng(config.seed, index);
            let mut decider = NetDecider::new(&net);
            let episode = rollout_episode(&mut decider, &env, config.gating, &mut rng)?;
            let (trace, _) = decider.finish();
            accumulate_policy_gradient(&mut net, &episode, &trace, b, scale)?;
            let record = EpisodeRecord {
                episode: index,
                length: episode.stats.length,
                total_return: episode.stats.total_return,
                success: episode.stats.success,
                baseline: b,
                optimal_length: episode.stats.optimal_length,
            };
            on_episode(&record)?;
            records.push(record);
            finished.push(episode.trajectory);
        }
        for t in &finished {
            baseline.record(config.baseline, t);
        }
        if let Some(max_norm) = config.grad_clip {
            let norm = net.params().grad_norm();
            if norm > max_norm {
                net.params_mut().scale_grads(max_norm / norm);
            }
        }
        adam.step(net.params_mut())?;
        next = batch_end;
    }
    Ok(TrainOutcome { net, records })
}
