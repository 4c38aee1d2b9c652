use super::linalg::{affine, affine_backward};
use super::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Fully-connected layer `y = W x + b` with `W` stored `[out × in]`.
#[derive(Debug, Clone, Copy)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub fn new(store: &mut ParamStore, name: &str, inputs: usize, outputs: usize, init: f64, rng: &mut Rng) -> Self {
        let weight = store.add_uniform(format!("{name}.weight"), &[outputs, inputs], init, rng);
        let bias = store.add_uniform(format!("{name}.bias"), &[outputs], init, rng);
        Dense { weight, bias, inputs, outputs }
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::config(format!("dense: expected {} inputs, got {}", self.inputs, x.len())));
        }
        let w = store.value(self.weight).data();
        let b = store.value(self.bias).data();
        Ok(affine(w, b, x))
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward(&self, store: &mut ParamStore, x: &[f64], grad_out: &[f64]) -> Vec<f64> {
        {
            let gb = store.grad_mut(self.bias).data_mut();
            gb.iter_mut().zip(grad_out).for_each(|(g, d)| *g += d);
        }
        let (w, gw) = store.value_and_grad(self.weight);
        affine_backward(w.data(), gw.data_mut(), x, grad_out)
    }
}
