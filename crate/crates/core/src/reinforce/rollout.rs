//! Meta-step loop: observe, decide, let the oracle act, move the attention.

use rand::Rng as _;

use crate::attention::{crop, visible_rooms, AttentionAction, AttentionWindow, MAX_TOP_ROW, WINDOW_ROWS};
use crate::controller::{
    select_action, select_subgoal, AttentionStepCache, MetaAction, MetaController, MetaHidden, NoAttentionStepCache,
};
use crate::env::{reset, Color, EnvConfig, GridState, Observation, NUM_ROOMS};
use crate::error::{Error, Result};
use crate::numeric::Tensor;
use crate::oracle::{act, optimal_delta, GatingMode, Subgoal};
use crate::rng::Rng;

use super::Trajectory;

/// What a decider may look at on one meta-step.
pub struct MetaView<'a> {
    pub state: &'a GridState,
    pub observation: &'a Observation,
    pub window: AttentionWindow,
}

pub trait Decider {
    fn decide(&mut self, view: &MetaView<'_>, rng: &mut Rng) -> Result<MetaAction>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub length: usize,
    pub total_return: f64,
    pub success: bool,
    /// Shortest possible length for this episode's layout.
    pub optimal_length: usize,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub trajectory: Trajectory,
    pub actions: Vec<MetaAction>,
    pub stats: EpisodeStats,
}

pub fn rollout_episode<D: Decider + ?Sized>(
    decider: &mut D,
    env: &EnvConfig,
    gating: GatingMode,
    rng: &mut Rng,
) -> Result<Episode> {
    let (mut state, _) = reset(env, rng)?;
    let optimal_length = state.optimal_length();
    let mut window = AttentionWindow::new(0);
    let mut trajectory = Trajectory::default();
    let mut actions = Vec::new();
    loop {
        let observation = state.render();
        let action = decider.decide(&MetaView { state: &state, observation: &observation, window }, rng)?;
        let color = Color::from_index(action.subgoal)
            .ok_or_else(|| Error::config(format!("subgoal index {} out of range", action.subgoal)))?;
        let delta = act(gating, &state, window, Subgoal::new(color));
        let (next, outcome) = state.apply_agent_move(delta)?;
        if let Some(a) = action.attention {
            window = window.apply(a);
        }
        trajectory.log_probs.push(action.joint_log_prob);
        trajectory.rewards.push(outcome.reward);
        actions.push(action);
        state = next;
        if outcome.done {
            let stats = EpisodeStats {
                length: trajectory.len(),
                total_return: trajectory.rewards.iter().sum(),
                success: outcome.success,
                optimal_length,
            };
            return Ok(Episode { trajectory, actions, stats });
        }
    }
}

/// Network input for one step.
#[derive(Debug, Clone)]
pub struct StepInput {
    pub tensor: Tensor,
    pub instruction: [f64; NUM_ROOMS],
}

#[derive(Debug, Clone)]
pub(crate) enum TraceCaches {
    Attention(Vec<AttentionStepCache>),
    NoAttention(Vec<NoAttentionStepCache>),
}

/// Activations and head distributions of one episode, in step order.
#[derive(Debug, Clone)]
pub struct PolicyTrace {
    pub(crate) caches: TraceCaches,
    pub p_goal: Vec<Vec<f64>>,
    pub p_attn: Vec<Vec<f64>>,
}

impl PolicyTrace {
    fn new(net: &MetaController) -> Self {
        let caches = if net.uses_attention() {
            TraceCaches::Attention(Vec::new())
        } else {
            TraceCaches::NoAttention(Vec::new())
        };
        PolicyTrace { caches, p_goal: Vec::new(), p_attn: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.p_goal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_goal.is_empty()
    }
}

/// Samples from the network and records what backpropagation needs.
pub struct NetDecider<'a> {
    net: &'a MetaController,
    hidden: MetaHidden,
    trace: PolicyTrace,
    inputs: Vec<StepInput>,
    record_inputs: bool,
}

impl<'a> NetDecider<'a> {
    pub fn new(net: &'a MetaController) -> Self {
        NetDecider {
            net,
            hidden: MetaHidden::fresh(),
            trace: PolicyTrace::new(net),
            inputs: Vec::new(),
            record_inputs: false,
        }
    }

    /// Also keep every network input, for replaying the episode later.
    pub fn recording_inputs(mut self) -> Self {
        self.record_inputs = true;
        self
    }

    pub fn push_step(&mut self, input: &StepInput) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        let probs = match (self.net, &mut self.trace.caches) {
            (MetaController::Attention(net), TraceCaches::Attention(caches)) => {
                let (out, hidden, cache) = net.forward(&input.tensor, &input.instruction, &self.hidden)?;
                self.hidden = hidden;
                caches.push(cache);
                (out.p_goal, Some(out.p_attn))
            }
            (MetaController::NoAttention(net), TraceCaches::NoAttention(caches)) => {
                let (p_goal, cache) = net.forward(&input.tensor, &input.instruction)?;
                caches.push(cache);
                (p_goal, None)
            }
            _ => unreachable!("trace kind follows the network"),
        };
        self.trace.p_goal.push(probs.0.clone());
        if let Some(p) = &probs.1 {
            self.trace.p_attn.push(p.clone());
        }
        if self.record_inputs {
            self.inputs.push(input.clone());
        }
        Ok(probs)
    }

    pub fn finish(self) -> (PolicyTrace, Vec<StepInput>) {
        (self.trace, self.inputs)
    }
}

impl Decider for NetDecider<'_> {
    fn decide(&mut self, view: &MetaView<'_>, rng: &mut Rng) -> Result<MetaAction> {
        let tensor = if self.net.uses_attention() {
            crop(view.observation, view.window)
        } else {
            view.observation.image.clone()
        };
        let input = StepInput { tensor, instruction: view.observation.instruction };
        match self.push_step(&input)? {
            (p_goal, Some(p_attn)) => select_action(&p_goal, &p_attn, rng),
            (p_goal, None) => select_subgoal(&p_goal, rng),
        }
    }
}

/// Recomputes the trace of an episode from its recorded inputs.
pub fn replay(net: &MetaController, inputs: &[StepInput]) -> Result<PolicyTrace> {
    let mut d = NetDecider::new(net);
    for input in inputs {
        d.push_step(input)?;
    }
    Ok(d.finish().0)
}

/// Uniformly random subgoal and attention move.
pub struct UniformDecider {
    pub attention: bool,
}

impl Decider for UniformDecider {
    fn decide(&mut self, _view: &MetaView<'_>, rng: &mut Rng) -> Result<MetaAction> {
        let subgoal = rng.gen_range(0..NUM_ROOMS);
        let mut joint_log_prob = -(NUM_ROOMS as f64).ln();
        let attention = if self.attention {
            joint_log_prob -= 3f64.ln();
            Some(AttentionAction::ALL[rng.gen_range(0..3)])
        } else {
            None
        };
        Ok(MetaAction { subgoal, attention, joint_log_prob })
    }
}

/// Hand-written optimal controller using privileged state.
///
/// It names the target when the target room is visible, otherwise the
/// visible room closest to it, and slides the window toward the target.
pub struct ScriptedDecider {
    pub attention: bool,
}

impl Decider for ScriptedDecider {
    fn decide(&mut self, view: &MetaView<'_>, _rng: &mut Rng) -> Result<MetaAction> {
        let state = view.state;
        let target = state.target_room();
        if !self.attention {
            return Ok(MetaAction { subgoal: state.target_color.index(), attention: None, joint_log_prob: 0.0 });
        }
        let visible = visible_rooms(&state.layout, view.window);
        let room = visible
            .iter()
            .copied()
            .min_by_key(|&r| (r as i64 - target as i64).abs())
            .expect("window always shows a room");
        let next_row =
            (state.agent_row as i64 + optimal_delta(state, Subgoal::new(state.layout.color_of(room))) as i64) as usize;
        // Keep the agent at the window edge facing away from the target so
        // the window leads toward it.
        let desired_top =
            if target >= state.agent_room() { next_row } else { next_row.saturating_sub(WINDOW_ROWS - 1) };
        let desired_top = desired_top.min(MAX_TOP_ROW);
        let attention = match desired_top.cmp(&view.window.top_row()) {
            std::cmp::Ordering::Greater => AttentionAction::Down,
            std::cmp::Ordering::Less => AttentionAction::Up,
            std::cmp::Ordering::Equal => AttentionAction::Noop,
        };
        Ok(MetaAction { subgoal: state.layout.color_of(room).index(), attention: Some(attention), joint_log_prob: 0.0 })
    }
}
