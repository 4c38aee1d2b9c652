//! Valid (unpadded), stride-1 2-d convolution over `H×W×C` tensors.

use super::linalg::{axpy, dot};
use super::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

fn check_shapes(input: &Tensor, kernels: &Tensor) -> Result<(usize, usize, usize, usize, usize)> {
    let (is, ks) = (input.shape(), kernels.shape());
    if is.len() != 3 || ks.len() != 4 {
        return Err(Error::config(format!("conv2d: input {:?} / kernels {:?} have wrong rank", is, ks)));
    }
    let (h, w, cin) = (is[0], is[1], is[2]);
    let (k, k2, kcin, cout) = (ks[0], ks[1], ks[2], ks[3]);
    if k != k2 || kcin != cin {
        return Err(Error::config(format!("conv2d: kernels {:?} incompatible with input {:?}", ks, is)));
    }
    if h < k || w < k {
        return Err(Error::config(format!("conv2d: input {h}×{w} smaller than kernel {k}×{k}")));
    }
    Ok((h, w, cin, k, cout))
}

/// Convolves `input[H×W×Cin]` with `kernels[K×K×Cin×Cout]`, no bias.
pub fn conv2d_forward(input: &Tensor, kernels: &Tensor) -> Result<Tensor> {
    let (h, w, cin, k, cout) = check_shapes(input, kernels)?;
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut out = Tensor::zeros(&[oh, ow, cout]);
    let x = input.data();
    let wk = kernels.data();
    let span = k * cin;
    for (pos, o) in out.data_mut().chunks_exact_mut(cout).enumerate() {
        let (y, xx) = (pos / ow, pos % ow);
        for ki in 0..k {
            // One kernel row touches K·Cin contiguous input values.
            let patch = &x[((y + ki) * w + xx) * cin..][..span];
            let krow = &wk[ki * span * cout..][..span * cout];
            for (&v, kcol) in patch.iter().zip(krow.chunks_exact(cout)) {
                if v != 0.0 {
                    axpy(v, kcol, o);
                }
            }
        }
    }
    Ok(out)
}

/// Convolution layer with a per-output-channel bias.
#[derive(Debug, Clone, Copy)]
pub struct Conv2d {
    pub kernels: ParamId,
    pub bias: ParamId,
    pub size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl Conv2d {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        size: usize,
        cin: usize,
        cout: usize,
        init: f64,
        rng: &mut Rng,
    ) -> Self {
        let kernels = store.add_uniform(format!("{name}.kernels"), &[size, size, cin, cout], init, rng);
        let bias = store.add_uniform(format!("{name}.bias"), &[cout], init, rng);
        Conv2d { kernels, bias, size, in_channels: cin, out_channels: cout }
    }

    pub fn output_shape(&self, h: usize, w: usize) -> [usize; 3] {
        [h + 1 - self.size, w + 1 - self.size, self.out_channels]
    }

    pub fn forward(&self, store: &ParamStore, input: &Tensor) -> Result<Tensor> {
        let mut out = conv2d_forward(input, store.value(self.kernels))?;
        let b = store.value(self.bias).data();
        for chunk in out.data_mut().chunks_mut(self.out_channels) {
            for (o, bb) in chunk.iter_mut().zip(b) {
                *o += bb;
            }
        }
        Ok(out)
    }

    /// Accumulates kernel and bias gradients. Returns the input gradient when
    /// `want_input` is set.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        input: &Tensor,
        grad_out: &Tensor,
        want_input: bool,
    ) -> Option<Tensor> {
        let (w, cin) = (input.shape()[1], input.shape()[2]);
        let (k, cout) = (self.size, self.out_channels);
        let ow = w - k + 1;
        let x = input.data();
        let go = grad_out.data();

        {
            let gb = store.grad_mut(self.bias).data_mut();
            for chunk in go.chunks(cout) {
                for (g, v) in gb.iter_mut().zip(chunk) {
                    *g += v;
                }
            }
        }
        let span = k * cin;
        {
            let gk = store.grad_mut(self.kernels).data_mut();
            for (pos, g) in go.chunks_exact(cout).enumerate() {
                let (y, xx) = (pos / ow, pos % ow);
                for ki in 0..k {
                    let patch = &x[((y + ki) * w + xx) * cin..][..span];
                    let krow = &mut gk[ki * span * cout..][..span * cout];
                    for (&v, kcol) in patch.iter().zip(krow.chunks_exact_mut(cout)) {
                        if v != 0.0 {
                            axpy(v, g, kcol);
                        }
                    }
                }
            }
        }
        if !want_input {
            return None;
        }
        let wk = store.value(self.kernels).data();
        let mut gin = Tensor::zeros(input.shape());
        let gi = gin.data_mut();
        for (pos, g) in go.chunks_exact(cout).enumerate() {
            let (y, xx) = (pos / ow, pos % ow);
            for ki in 0..k {
                let patch = &mut gi[((y + ki) * w + xx) * cin..][..span];
                let krow = &wk[ki * span * cout..][..span * cout];
                for (p, kcol) in patch.iter_mut().zip(krow.chunks_exact(cout)) {
                    *p += dot(kcol, g);
                }
            }
        }
        Some(gin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng as _;

    fn random(shape: &[usize], rng: &mut Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Straightforward six-deep loop over explicit 4-d indices.
    fn reference(input: &Tensor, kernels: &Tensor) -> Vec<Vec<Vec<f64>>> {
        let (h, w, cin) = (input.shape()[0], input.shape()[1], input.shape()[2]);
        let (k, cout) = (kernels.shape()[0], kernels.shape()[3]);
        let kat = |a: usize, b: usize, c: usize, d: usize| kernels.data()[((a * k + b) * cin + c) * cout + d];
        let mut out = vec![vec![vec![0.0; cout]; w - k + 1]; h - k + 1];
        for (y, row) in out.iter_mut().enumerate() {
            for (x, cell) in row.iter_mut().enumerate() {
                for (co, o) in cell.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for a in 0..k {
                        for b in 0..k {
                            for c in 0..cin {
                                s += input.at3(y + a, x + b, c) * kat(a, b, c, co);
                            }
                        }
                    }
                    *o = s;
                }
            }
        }
        out
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let mut rng = seeded(1);
        let out = conv2d_forward(&Tensor::zeros(&[5, 5, 2]), &random(&[3, 3, 2, 4], &mut rng)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ones_kernel_sums_window() {
        let out = conv2d_forward(&Tensor::filled(&[3, 3, 1], 1.0), &Tensor::filled(&[3, 3, 1, 1], 1.0)).unwrap();
        assert_eq!(out.shape(), &[1, 1, 1]);
        assert_eq!(out.data(), &[9.0]);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn matches_nested_loop_reference() {
        let mut rng = seeded(2);
        let input = random(&[5, 5, 5], &mut rng);
        let kernels = random(&[3, 3, 5, 8], &mut rng);
        let out = conv2d_forward(&input, &kernels).unwrap();
        assert_eq!(out.shape(), &[3, 3, 8]);
        let expected = reference(&input, &kernels);
        for y in 0..3 {
            for x in 0..3 {
                for c in 0..8 {
                    assert!((out.at3(y, x, c) - expected[y][x][c]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let err = conv2d_forward(&Tensor::zeros(&[5, 5, 4]), &Tensor::zeros(&[3, 3, 5, 8])).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = conv2d_forward(&Tensor::zeros(&[2, 5, 5]), &Tensor::zeros(&[3, 3, 5, 8])).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
