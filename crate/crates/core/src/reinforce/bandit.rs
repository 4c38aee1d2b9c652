//! Softmax policy on a two-armed bandit, trained by the same REINFORCE
//! pieces the meta-controller uses. Small enough to reason about exactly.

use super::{compute_returns, BaselineBuffer};
use crate::error::Result;
use crate::numeric::{categorical_sample, log_prob_grad_into, softmax, Adam, ParamStore, Tensor};
use crate::rng::split;

#[derive(Debug, Clone, PartialEq)]
pub struct BanditConfig {
    pub rewards: [f64; 2],
    pub lr: f64,
    pub episodes: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for BanditConfig {
    fn default() -> Self {
        BanditConfig { rewards: [1.0, 0.0], lr: 1e-2, episodes: 2000, batch_size: 1, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct BanditOutcome {
    pub logits: [f64; 2],
    pub probs: Vec<f64>,
    /// `P(arm 0)` after each update.
    pub history: Vec<f64>,
}

/// `E_a[(r_a - b) ∇ log π(a)]` with respect to the logits, summed over both
/// arms.
pub fn bandit_expected_gradient(logits: &[f64], rewards: &[f64], baseline: f64) -> Vec<f64> {
    let probs = softmax(logits);
    let mut grad = vec![0.0; logits.len()];
    for (arm, (&p, &r)) in probs.iter().zip(rewards).enumerate() {
        log_prob_grad_into(&probs, arm, p * (r - baseline), &mut grad);
    }
    grad
}

pub fn train_bandit(config: &BanditConfig) -> Result<BanditOutcome> {
    let mut store = ParamStore::new();
    let logits = store.add("logits", Tensor::zeros(&[2]));
    let mut adam = Adam::new(&store, config.lr);
    let mut baseline = BaselineBuffer::new();
    let mut history = Vec::new();
    let mut rng = split(config.seed, 1);

    let mut done = 0;
    while done < config.episodes {
        let n = config.batch_size.min(config.episodes - done);
        let b = baseline.value();
        let probs = softmax(store.value(logits).data());
        let mut returns = Vec::with_capacity(n);
        for _ in 0..n {
            let (arm, _) = categorical_sample(&probs, &mut rng)?;
            let ret = compute_returns(&[config.rewards[arm]])?[0];
            // Minimising -(R - b) log π(arm).
            log_prob_grad_into(&probs, arm, -(ret - b) / n as f64, store.grad_mut(logits).data_mut());
            returns.push(ret);
        }
        returns.into_iter().for_each(|r| baseline.push(r));
        adam.step(&mut store)?;
        history.push(softmax(store.value(logits).data())[0]);
        done += n;
    }
    let l = store.value(logits).data();
    Ok(BanditOutcome { logits: [l[0], l[1]], probs: softmax(l), history })
}
