use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Softmax with max-subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Gradient of `coef * log p[index]` with respect to the logits that produced
/// `probs`, added into `out`.
pub fn log_prob_grad_into(probs: &[f64], index: usize, coef: f64, out: &mut [f64]) {
    for (i, (o, &p)) in out.iter_mut().zip(probs).enumerate() {
        let indicator = if i == index { 1.0 } else { 0.0 };
        *o += coef * (indicator - p);
    }
}

/// Draws an index from `probs` and returns it with its log-probability.
pub fn categorical_sample(probs: &[f64], rng: &mut Rng) -> Result<(usize, f64)> {
    if probs.is_empty() {
        return Err(Error::config("categorical_sample: empty probability vector"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 || probs.iter().any(|p| p.is_nan() || *p < 0.0) {
        return Err(Error::contract(format!("categorical_sample: not a distribution (sum {total})")));
    }
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        chosen = Some(i);
        if u < acc {
            break;
        }
    }
    // Some(_) because at least one entry is positive when the sum is ~1.
    let index = chosen.expect("distribution has positive mass");
    Ok((index, probs[index].ln()))
}
