//! Trainable parameters and the individual layer computations with their
//! hand-written backward passes.

use rand::Rng;

use super::tensor::Tensor2;

/// A trainable tensor with its gradient and optimizer moment buffers.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Tensor2,
    pub grad: Tensor2,
    pub m: Tensor2,
    pub v: Tensor2,
}

impl Param {
    pub fn new(value: Tensor2) -> Self {
        let zero = Tensor2::zeros(value.rows, value.cols);
        Param {
            grad: zero.clone(),
            m: zero.clone(),
            v: zero,
            value,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Rectified linear unit; the backward pass gates on the pre-activation.
pub fn relu(z: &Tensor2) -> Tensor2 {
    Tensor2 {
        rows: z.rows,
        cols: z.cols,
        values: z.values.iter().map(|&v| v.max(0.0)).collect(),
    }
}

pub fn relu_backward(z: &Tensor2, d_out: &Tensor2) -> Tensor2 {
    Tensor2 {
        rows: z.rows,
        cols: z.cols,
        values: z
            .values
            .iter()
            .zip(&d_out.values)
            .map(|(&zi, &di)| if zi > 0.0 { di } else { 0.0 })
            .collect(),
    }
}

/// Inverted dropout: surviving entries are scaled by `1/(1-rate)` so the
/// expectation matches evaluation mode. The mask stores that scale.
pub struct DropoutMask {
    scale_per_entry: Vec<f64>,
}

pub fn dropout<R: Rng>(x: &Tensor2, rate: f64, rng: &mut R) -> (Tensor2, DropoutMask) {
    debug_assert!((0.0..1.0).contains(&rate));
    if rate == 0.0 {
        return (
            x.clone(),
            DropoutMask {
                scale_per_entry: vec![1.0; x.values.len()],
            },
        );
    }
    let keep = 1.0 - rate;
    let scale_per_entry: Vec<f64> = x
        .values
        .iter()
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    let values = x
        .values
        .iter()
        .zip(&scale_per_entry)
        .map(|(&v, &s)| v * s)
        .collect();
    (
        Tensor2 {
            rows: x.rows,
            cols: x.cols,
            values,
        },
        DropoutMask { scale_per_entry },
    )
}

pub fn dropout_backward(mask: &DropoutMask, d_out: &Tensor2) -> Tensor2 {
    Tensor2 {
        rows: d_out.rows,
        cols: d_out.cols,
        values: d_out
            .values
            .iter()
            .zip(&mask.scale_per_entry)
            .map(|(&d, &s)| d * s)
            .collect(),
    }
}

/// Per-row normalization to zero mean and unit variance followed by a
/// learned scale and shift.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: Param,
    pub beta: Param,
    pub eps: f64,
}

pub struct LayerNormCache {
    normalized: Tensor2,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(width: usize) -> Self {
        LayerNorm {
            gamma: Param::new(Tensor2::from_values(1, width, vec![1.0; width])),
            beta: Param::new(Tensor2::zeros(1, width)),
            eps: 1e-5,
        }
    }

    pub fn forward(&self, x: &Tensor2) -> (Tensor2, LayerNormCache) {
        let width = x.cols as f64;
        let mut normalized = Tensor2::zeros(x.rows, x.cols);
        let mut inv_std = vec![0.0; x.rows];
        let gamma = self.gamma.value.row(0);
        let beta = self.beta.value.row(0);
        let mut out = Tensor2::zeros(x.rows, x.cols);
        for r in 0..x.rows {
            let row = x.row(r);
            let mean = row.iter().sum::<f64>() / width;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / width;
            let inv = 1.0 / (var + self.eps).sqrt();
            inv_std[r] = inv;
            let n_row = normalized.row_mut(r);
            let o_row = out.row_mut(r);
            for j in 0..row.len() {
                let xhat = (row[j] - mean) * inv;
                n_row[j] = xhat;
                o_row[j] = gamma[j] * xhat + beta[j];
            }
        }
        (out, LayerNormCache { normalized, inv_std })
    }

    /// Accumulates gamma/beta gradients and returns the input gradient.
    pub fn backward(&mut self, cache: &LayerNormCache, d_out: &Tensor2) -> Tensor2 {
        let width = d_out.cols as f64;
        let gamma = self.gamma.value.row(0).to_vec();
        let mut d_x = Tensor2::zeros(d_out.rows, d_out.cols);
        for r in 0..d_out.rows {
            let d_row = d_out.row(r);
            let xhat = cache.normalized.row(r);
            let inv = cache.inv_std[r];

            let d_gamma = self.gamma.grad.row_mut(0);
            for j in 0..d_row.len() {
                d_gamma[j] += d_row[j] * xhat[j];
            }
            let d_beta = self.beta.grad.row_mut(0);
            for j in 0..d_row.len() {
                d_beta[j] += d_row[j];
            }

            // d_xhat = d_out * gamma; then the standard normalization
            // backward in terms of row sums.
            let d_xhat: Vec<f64> = d_row
                .iter()
                .zip(&gamma)
                .map(|(&d, &g)| d * g)
                .collect();
            let sum_d: f64 = d_xhat.iter().sum();
            let sum_dx: f64 = d_xhat.iter().zip(xhat).map(|(&d, &x)| d * x).sum();
            let dx_row = d_x.row_mut(r);
            for j in 0..d_row.len() {
                dx_row[j] = inv / width * (width * d_xhat[j] - sum_d - xhat[j] * sum_dx);
            }
        }
        d_x
    }
}

/// Affine map `x W + b` shared by channel layers and the fusion head.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    pub fn new<R: Rng>(in_width: usize, out_width: usize, rng: &mut R) -> Self {
        Linear {
            weight: Param::new(Tensor2::glorot(in_width, out_width, rng)),
            bias: Param::new(Tensor2::zeros(1, out_width)),
        }
    }

    pub fn forward(&self, x: &Tensor2) -> Tensor2 {
        let mut out = super::tensor::matmul(x, &self.weight.value);
        let bias = self.bias.value.row(0);
        for r in 0..out.rows {
            for (o, &b) in out.row_mut(r).iter_mut().zip(bias) {
                *o += b;
            }
        }
        out
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor2, d_out: &Tensor2) -> Tensor2 {
        let d_w = super::tensor::matmul_tn(x, d_out);
        for (g, d) in self.weight.grad.values.iter_mut().zip(&d_w.values) {
            *g += d;
        }
        let d_b = self.bias.grad.row_mut(0);
        for r in 0..d_out.rows {
            for (g, &d) in d_b.iter_mut().zip(d_out.row(r)) {
                *g += d;
            }
        }
        super::tensor::matmul_nt(d_out, &self.weight.value)
    }
}
