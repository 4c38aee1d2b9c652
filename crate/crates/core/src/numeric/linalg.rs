//! Inner loops shared by the layers.

/// Dot product with four independent accumulators so the loop vectorises.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `W x + b` for row-major `W` with `x.len()` columns.
pub fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    w.chunks_exact(x.len()).zip(b).map(|(row, bias)| bias + dot(row, x)).collect()
}

/// Accumulates `dW += d xᵀ` and returns `Wᵀ d`.
pub fn affine_backward(w: &[f64], gw: &mut [f64], x: &[f64], d: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut gx = vec![0.0; n];
    for ((row, grow), &di) in w.chunks_exact(n).zip(gw.chunks_exact_mut(n)).zip(d) {
        if di == 0.0 {
            continue;
        }
        axpy(di, x, grow);
        axpy(di, row, &mut gx);
    }
    gx
}
