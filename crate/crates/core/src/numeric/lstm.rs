//! LSTM cell with backpropagation through time.
//!
//! Gate order in the stacked weight matrix is input, forget, candidate,
//! output:
//!
//! ```text
//! i = σ(W_i [x; h] + b_i)    f = σ(W_f [x; h] + b_f)
//! g = tanh(W_g [x; h] + b_g) o = σ(W_o [x; h] + b_o)
//! c' = f ⊙ c + i ⊙ g         h' = o ⊙ tanh(c')
//! ```

use super::activation::sigmoid;
use super::linalg::{affine, affine_backward};
use super::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Everything one step's backward pass needs.
#[derive(Debug, Clone)]
pub struct LstmCache {
    xh: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct LstmCell {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(store: &mut ParamStore, name: &str, inputs: usize, hidden: usize, init: f64, rng: &mut Rng) -> Self {
        let weight = store.add_uniform(format!("{name}.weight"), &[4 * hidden, inputs + hidden], init, rng);
        let bias = store.add_uniform(format!("{name}.bias"), &[4 * hidden], init, rng);
        LstmCell { weight, bias, inputs, hidden }
    }

    pub fn step(&self, store: &ParamStore, x: &[f64], state: &LstmState) -> Result<(LstmState, LstmCache)> {
        if x.len() != self.inputs {
            return Err(Error::config(format!("lstm: expected {} inputs, got {}", self.inputs, x.len())));
        }
        if state.h.len() != self.hidden || state.c.len() != self.hidden {
            return Err(Error::config(format!("lstm: state size differs from hidden size {}", self.hidden)));
        }
        let n = self.inputs + self.hidden;
        let hs = self.hidden;
        let mut xh = Vec::with_capacity(n);
        xh.extend_from_slice(x);
        xh.extend_from_slice(&state.h);

        let w = store.value(self.weight).data();
        let b = store.value(self.bias).data();
        let pre = affine(w, b, &xh);

        let i: Vec<f64> = pre[..hs].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = pre[hs..2 * hs].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = pre[2 * hs..3 * hs].iter().map(|v| v.tanh()).collect();
        let o: Vec<f64> = pre[3 * hs..].iter().map(|&v| sigmoid(v)).collect();

        let c: Vec<f64> = (0..hs).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..hs).map(|k| o[k] * tanh_c[k]).collect();

        let cache = LstmCache { xh, c_prev: state.c.clone(), i, f, g, o, tanh_c };
        Ok((LstmState { h, c }, cache))
    }

    /// Backward through one step. `dh`/`dc` are the total gradients arriving
    /// at this step's outputs; returns `(dx, dh_prev, dc_prev)`.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &LstmCache,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hs = self.hidden;
        let mut dpre = vec![0.0; 4 * hs];
        let mut dc_prev = vec![0.0; hs];
        for k in 0..hs {
            let do_ = dh[k] * cache.tanh_c[k];
            let dct = dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
            let di = dct * cache.g[k];
            let df = dct * cache.c_prev[k];
            let dg = dct * cache.i[k];
            dc_prev[k] = dct * cache.f[k];
            dpre[k] = di * cache.i[k] * (1.0 - cache.i[k]);
            dpre[hs + k] = df * cache.f[k] * (1.0 - cache.f[k]);
            dpre[2 * hs + k] = dg * (1.0 - cache.g[k] * cache.g[k]);
            dpre[3 * hs + k] = do_ * cache.o[k] * (1.0 - cache.o[k]);
        }
        {
            let gb = store.grad_mut(self.bias).data_mut();
            gb.iter_mut().zip(&dpre).for_each(|(g, d)| *g += d);
        }
        let (w, gw) = store.value_and_grad(self.weight);
        let mut dxh = affine_backward(w.data(), gw.data_mut(), &cache.xh, &dpre);
        let dh_prev = dxh.split_off(self.inputs);
        (dxh, dh_prev, dc_prev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn zero_weights_keep_hidden_zero() {
        let mut store = ParamStore::new();
        let cell = LstmCell::new(&mut store, "lstm", 3, 4, 0.0, &mut seeded(0));
        let (next, _) = cell.step(&store, &[0.3, -2.0, 1.0], &LstmState::zeros(4)).unwrap();
        assert_eq!(next.h, vec![0.0; 4]);
    }

    #[test]
    fn deterministic_step() {
        let mut store = ParamStore::new();
        let cell = LstmCell::new(&mut store, "lstm", 3, 4, 0.5, &mut seeded(7));
        let state = LstmState { h: vec![0.1, -0.2, 0.3, 0.0], c: vec![0.5, 0.5, -1.0, 2.0] };
        let a = cell.step(&store, &[1.0, 2.0, 3.0], &state).unwrap().0;
        let b = cell.step(&store, &[1.0, 2.0, 3.0], &state).unwrap().0;
        assert_eq!(a, b);
        assert!(a.h.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn wrong_input_size_is_config_error() {
        let mut store = ParamStore::new();
        let cell = LstmCell::new(&mut store, "lstm", 3, 4, 0.1, &mut seeded(0));
        assert!(matches!(cell.step(&store, &[1.0], &LstmState::zeros(4)), Err(Error::Config(_))));
        assert!(matches!(cell.step(&store, &[1.0; 3], &LstmState::zeros(2)), Err(Error::Config(_))));
    }
}
