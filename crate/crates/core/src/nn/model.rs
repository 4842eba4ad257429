//! Channel networks, gate baselines, and the fused dual-channel model.
//!
//! A channel is a stack of layers sharing one input routing: the graph
//! channel aggregates each layer input over the self-loop-renormalized
//! adjacency before its affine map, the dense channel applies the affine
//! map directly. The fused model concatenates the two channel outputs and
//! applies a linear head. Gate baselines replace the frozen column
//! partition with learned per-column splits of the full input.

use rand::Rng;

use crate::graph::Graph;

use super::layers::{
    dropout, dropout_backward, relu, relu_backward, DropoutMask, LayerNorm, LayerNormCache,
    Linear, Param,
};
use super::tensor::{matmul, matmul_nt, matmul_tn, Tensor2};

/// Architecture and optimization settings shared by every model kind.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub use_skip: bool,
    pub use_layer_norm: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_layers: 2,
            hidden_dim: 128,
            dropout: 0.2,
            learning_rate: 3e-4,
            weight_decay: 0.0,
            epochs: 1000,
            seed: 0,
            use_skip: true,
            use_layer_norm: true,
        }
    }
}

/// One channel layer: affine map of the (optionally aggregated) input,
/// plus a learned skip projection of the raw input, then normalization,
/// activation, and dropout.
#[derive(Debug, Clone)]
pub struct ChannelLayer {
    pub weight: Param,
    pub skip: Option<Param>,
    pub bias: Param,
    pub norm: Option<LayerNorm>,
}

pub struct LayerCache {
    input: Tensor2,
    aggregated: Tensor2,
    pre_activation: Tensor2,
    norm: Option<LayerNormCache>,
    drop: Option<DropoutMask>,
}

/// A stack of channel layers over one input routing.
#[derive(Debug, Clone)]
pub struct Channel {
    pub uses_graph: bool,
    pub layers: Vec<ChannelLayer>,
    pub in_width: usize,
    pub out_width: usize,
}

impl Channel {
    /// Builds `num_layers` layers from `in_width` to `hidden_dim`. A
    /// zero-width input yields an inert channel that emits zeros of the
    /// hidden width and owns no parameters; zero layers yield an identity
    /// channel.
    pub fn new<R: Rng>(
        uses_graph: bool,
        in_width: usize,
        cfg: &ModelConfig,
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::new();
        let out_width = if cfg.num_layers == 0 {
            in_width
        } else if in_width == 0 {
            cfg.hidden_dim
        } else {
            let mut width = in_width;
            for _ in 0..cfg.num_layers {
                let weight = Param::new(Tensor2::glorot(width, cfg.hidden_dim, rng));
                let skip = cfg
                    .use_skip
                    .then(|| Param::new(Tensor2::glorot(width, cfg.hidden_dim, rng)));
                let bias = Param::new(Tensor2::zeros(1, cfg.hidden_dim));
                let norm = cfg.use_layer_norm.then(|| LayerNorm::new(cfg.hidden_dim));
                layers.push(ChannelLayer {
                    weight,
                    skip,
                    bias,
                    norm,
                });
                width = cfg.hidden_dim;
            }
            cfg.hidden_dim
        };
        Channel {
            uses_graph,
            layers,
            in_width,
            out_width,
        }
    }

    fn aggregate(&self, g: &Graph, h: &Tensor2) -> Tensor2 {
        if !self.uses_graph {
            return h.clone();
        }
        let values = g
            .aggregate_with_self_loops(&h.values, h.cols)
            .expect("channel input rows match the graph");
        Tensor2 {
            rows: h.rows,
            cols: h.cols,
            values,
        }
    }

    pub fn forward<R: Rng>(
        &self,
        g: &Graph,
        x: &Tensor2,
        train: bool,
        dropout_rate: f64,
        rng: &mut R,
    ) -> (Tensor2, Vec<LayerCache>) {
        if self.layers.is_empty() {
            if self.in_width == 0 && self.out_width > 0 {
                return (Tensor2::zeros(x.rows, self.out_width), Vec::new());
            }
            return (x.clone(), Vec::new());
        }
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let aggregated = self.aggregate(g, &h);
            let mut z = matmul(&aggregated, &layer.weight.value);
            if let Some(skip) = &layer.skip {
                let skipped = matmul(&h, &skip.value);
                for (zv, sv) in z.values.iter_mut().zip(&skipped.values) {
                    *zv += sv;
                }
            }
            let bias = layer.bias.value.row(0);
            for r in 0..z.rows {
                for (zv, &b) in z.row_mut(r).iter_mut().zip(bias) {
                    *zv += b;
                }
            }
            let (pre_activation, norm_cache) = match &layer.norm {
                Some(norm) => {
                    let (t, c) = norm.forward(&z);
                    (t, Some(c))
                }
                None => (z, None),
            };
            let activated = relu(&pre_activation);
            let (out, drop) = if train && dropout_rate > 0.0 {
                let (o, m) = dropout(&activated, dropout_rate, rng);
                (o, Some(m))
            } else {
                (activated, None)
            };
            caches.push(LayerCache {
                input: h,
                aggregated,
                pre_activation,
                norm: norm_cache,
                drop: None,
            });
            if let (Some(cache), Some(mask)) = (caches.last_mut(), drop) {
                cache.drop = Some(mask);
            }
            h = out;
        }
        (h, caches)
    }

    /// Accumulates parameter gradients and returns the gradient with
    /// respect to the channel input.
    pub fn backward(&mut self, g: &Graph, caches: &[LayerCache], d_out: &Tensor2) -> Tensor2 {
        if self.layers.is_empty() {
            if self.in_width == 0 && self.out_width > 0 {
                return Tensor2::zeros(d_out.rows, 0);
            }
            return d_out.clone();
        }
        let mut d_h = d_out.clone();
        for (layer, cache) in self.layers.iter_mut().zip(caches).rev() {
            let d_after_drop = match &cache.drop {
                Some(mask) => dropout_backward(mask, &d_h),
                None => d_h,
            };
            let d_pre = relu_backward(&cache.pre_activation, &d_after_drop);
            let d_z = match (&mut layer.norm, &cache.norm) {
                (Some(norm), Some(norm_cache)) => norm.backward(norm_cache, &d_pre),
                _ => d_pre,
            };

            let d_w = matmul_tn(&cache.aggregated, &d_z);
            for (gracc, dv) in layer.weight.grad.values.iter_mut().zip(&d_w.values) {
                *gracc += dv;
            }
            let d_bias = layer.bias.grad.row_mut(0);
            for r in 0..d_z.rows {
                for (gb, &dv) in d_bias.iter_mut().zip(d_z.row(r)) {
                    *gb += dv;
                }
            }
            let d_aggregated = matmul_nt(&d_z, &layer.weight.value);
            let mut d_input = if self.uses_graph {
                let values = g
                    .aggregate_with_self_loops(&d_aggregated.values, d_aggregated.cols)
                    .expect("gradient rows match the graph");
                Tensor2 {
                    rows: d_aggregated.rows,
                    cols: d_aggregated.cols,
                    values,
                }
            } else {
                d_aggregated
            };
            if let Some(skip) = &mut layer.skip {
                let d_skip_w = matmul_tn(&cache.input, &d_z);
                for (gracc, dv) in skip.grad.values.iter_mut().zip(&d_skip_w.values) {
                    *gracc += dv;
                }
                let d_through_skip = matmul_nt(&d_z, &skip.value);
                for (di, &ds) in d_input.values.iter_mut().zip(&d_through_skip.values) {
                    *di += ds;
                }
            }
            d_h = d_input;
        }
        d_h
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut params = Vec::new();
        for layer in &mut self.layers {
            params.push(&mut layer.weight);
            if let Some(skip) = &mut layer.skip {
                params.push(skip);
            }
            params.push(&mut layer.bias);
            if let Some(norm) = &mut layer.norm {
                params.push(&mut norm.gamma);
                params.push(&mut norm.beta);
            }
        }
        params
    }
}

/// Learned per-column input splits standing in for the frozen partition.
#[derive(Debug, Clone)]
pub enum Gate {
    /// Squared-weight shares of each column routed to either channel.
    Soft {
        w_gnn: Param,
        w_mlp: Param,
        epsilon: f64,
    },
    /// Per-column two-way choice sampled with Gumbel noise during
    /// training; evaluation takes the noiseless argmax.
    Hard {
        logits: Param,
        temperature: f64,
        straight_through: bool,
    },
}

pub struct GateCache {
    /// Hard gate only: softmax probabilities per column, kept for the
    /// straight-through backward pass.
    soft_rows: Option<Vec<[f64; 2]>>,
}

impl Gate {
    pub fn soft(num_columns: usize) -> Self {
        Gate::Soft {
            w_gnn: Param::new(Tensor2::from_values(1, num_columns, vec![1.0; num_columns])),
            w_mlp: Param::new(Tensor2::from_values(1, num_columns, vec![1.0; num_columns])),
            epsilon: 1e-7,
        }
    }

    pub fn hard(num_columns: usize) -> Self {
        Gate::Hard {
            logits: Param::new(Tensor2::zeros(num_columns, 2)),
            temperature: 1.0,
            straight_through: true,
        }
    }

    /// Splits `x` into the two channel copies.
    pub fn forward<R: Rng>(
        &self,
        x: &Tensor2,
        train: bool,
        rng: &mut R,
    ) -> (Tensor2, Tensor2, GateCache) {
        let m = x.cols;
        match self {
            Gate::Soft {
                w_gnn,
                w_mlp,
                epsilon,
            } => {
                let mut graph_share = vec![0.0; m];
                let mut dense_share = vec![0.0; m];
                for j in 0..m {
                    let wg = w_gnn.value.values[j];
                    let wm = w_mlp.value.values[j];
                    let s = wg * wg + wm * wm + epsilon;
                    graph_share[j] = wg * wg / s;
                    dense_share[j] = wm * wm / s;
                }
                let (x_g, x_d) = scale_columns(x, &graph_share, &dense_share);
                (x_g, x_d, GateCache { soft_rows: None })
            }
            Gate::Hard {
                logits,
                temperature,
                straight_through,
            } => {
                let mut graph_share = vec![0.0; m];
                let mut dense_share = vec![0.0; m];
                let mut soft_rows = vec![[0.0; 2]; m];
                for j in 0..m {
                    let l0 = logits.value.values[j * 2];
                    let l1 = logits.value.values[j * 2 + 1];
                    if train {
                        let g0 = gumbel(rng);
                        let g1 = gumbel(rng);
                        let z0 = (l0 + g0) / temperature;
                        let z1 = (l1 + g1) / temperature;
                        let max = z0.max(z1);
                        let e0 = (z0 - max).exp();
                        let e1 = (z1 - max).exp();
                        let y0 = e0 / (e0 + e1);
                        soft_rows[j] = [y0, 1.0 - y0];
                        if *straight_through {
                            let pick_graph = z0 >= z1;
                            graph_share[j] = f64::from(pick_graph);
                            dense_share[j] = f64::from(!pick_graph);
                        } else {
                            graph_share[j] = y0;
                            dense_share[j] = 1.0 - y0;
                        }
                    } else {
                        let pick_graph = l0 >= l1;
                        graph_share[j] = f64::from(pick_graph);
                        dense_share[j] = f64::from(!pick_graph);
                        soft_rows[j] = [graph_share[j], dense_share[j]];
                    }
                }
                let (x_g, x_d) = scale_columns(x, &graph_share, &dense_share);
                (
                    x_g,
                    x_d,
                    GateCache {
                        soft_rows: Some(soft_rows),
                    },
                )
            }
        }
    }

    /// Accumulates gate-parameter gradients from the two channel-input
    /// gradients.
    pub fn backward(&mut self, x: &Tensor2, cache: &GateCache, d_xg: &Tensor2, d_xd: &Tensor2) {
        let m = x.cols;
        let mut p = vec![0.0; m];
        let mut q = vec![0.0; m];
        for r in 0..x.rows {
            let x_row = x.row(r);
            let g_row = d_xg.row(r);
            let d_row = d_xd.row(r);
            for j in 0..m {
                p[j] += g_row[j] * x_row[j];
                q[j] += d_row[j] * x_row[j];
            }
        }
        match self {
            Gate::Soft {
                w_gnn,
                w_mlp,
                epsilon,
            } => {
                let epsilon = *epsilon;
                for j in 0..m {
                    let wg = w_gnn.value.values[j];
                    let wm = w_mlp.value.values[j];
                    let s = wg * wg + wm * wm + epsilon;
                    let s2 = s * s;
                    w_gnn.grad.values[j] +=
                        p[j] * 2.0 * wg * (wm * wm + epsilon) / s2 - q[j] * 2.0 * wg * wm * wm / s2;
                    w_mlp.grad.values[j] +=
                        q[j] * 2.0 * wm * (wg * wg + epsilon) / s2 - p[j] * 2.0 * wm * wg * wg / s2;
                }
            }
            Gate::Hard {
                logits, temperature, ..
            } => {
                let temperature = *temperature;
                let soft_rows = cache
                    .soft_rows
                    .as_ref()
                    .expect("hard gate cache carries softmax rows");
                for j in 0..m {
                    let [y0, y1] = soft_rows[j];
                    // Gradient through the softmax the noise produced,
                    // regardless of the hard mask used in the forward pass.
                    let inner = p[j] * y0 + q[j] * y1;
                    logits.grad.values[j * 2] += y0 * (p[j] - inner) / temperature;
                    logits.grad.values[j * 2 + 1] += y1 * (q[j] - inner) / temperature;
                }
            }
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Gate::Soft { w_gnn, w_mlp, .. } => vec![w_gnn, w_mlp],
            Gate::Hard { logits, .. } => vec![logits],
        }
    }

    /// Column shares currently routed to the graph channel, noiseless.
    pub fn graph_shares(&self) -> Vec<f64> {
        match self {
            Gate::Soft {
                w_gnn,
                w_mlp,
                epsilon,
            } => w_gnn
                .value
                .values
                .iter()
                .zip(&w_mlp.value.values)
                .map(|(&wg, &wm)| wg * wg / (wg * wg + wm * wm + epsilon))
                .collect(),
            Gate::Hard { logits, .. } => (0..logits.value.rows)
                .map(|j| f64::from(logits.value.values[j * 2] >= logits.value.values[j * 2 + 1]))
                .collect(),
        }
    }
}

fn gumbel<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    -(-u.ln()).ln()
}

fn scale_columns(x: &Tensor2, a: &[f64], b: &[f64]) -> (Tensor2, Tensor2) {
    let mut x_g = Tensor2::zeros(x.rows, x.cols);
    let mut x_d = Tensor2::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let src = x.row(r);
        let g_row = x_g.row_mut(r);
        let d_row = x_d.row_mut(r);
        for j in 0..x.cols {
            g_row[j] = src[j] * a[j];
            d_row[j] = src[j] * b[j];
        }
    }
    (x_g, x_d)
}

/// The fused model: up to two channels over disjoint (or gated) column
/// sets, concatenated and mapped to logits by a linear head.
#[derive(Debug, Clone)]
pub struct DualModel {
    pub graph_channel: Option<Channel>,
    pub dense_channel: Option<Channel>,
    pub gate: Option<Gate>,
    pub favored: Vec<usize>,
    pub disfavored: Vec<usize>,
    pub head: Linear,
    pub dropout_rate: f64,
}

pub struct ModelCache {
    x_g: Option<Tensor2>,
    x_d: Option<Tensor2>,
    graph_caches: Vec<LayerCache>,
    dense_caches: Vec<LayerCache>,
    concat: Tensor2,
    gate_cache: Option<GateCache>,
}

impl DualModel {
    pub fn forward<R: Rng>(
        &self,
        g: &Graph,
        x_full: &Tensor2,
        train: bool,
        rng: &mut R,
    ) -> (Tensor2, ModelCache) {
        let n = x_full.rows;
        let (x_g, x_d, gate_cache) = match &self.gate {
            Some(gate) => {
                let (a, b, c) = gate.forward(x_full, train, rng);
                (Some(a), Some(b), Some(c))
            }
            None => (
                self.graph_channel
                    .as_ref()
                    .map(|_| take_columns(x_full, &self.favored)),
                self.dense_channel
                    .as_ref()
                    .map(|_| take_columns(x_full, &self.disfavored)),
                None,
            ),
        };

        let mut parts: Vec<Tensor2> = Vec::new();
        let mut graph_caches = Vec::new();
        let mut dense_caches = Vec::new();
        if let (Some(channel), Some(x)) = (&self.graph_channel, &x_g) {
            let (h, caches) = channel.forward(g, x, train, self.dropout_rate, rng);
            graph_caches = caches;
            parts.push(h);
        }
        if let (Some(channel), Some(x)) = (&self.dense_channel, &x_d) {
            let (h, caches) = channel.forward(g, x, train, self.dropout_rate, rng);
            dense_caches = caches;
            parts.push(h);
        }
        let concat = concat_columns(n, &parts);
        let logits = self.head.forward(&concat);
        (
            logits,
            ModelCache {
                x_g,
                x_d,
                graph_caches,
                dense_caches,
                concat,
                gate_cache,
            },
        )
    }

    /// Accumulates gradients for every parameter.
    pub fn backward(&mut self, g: &Graph, x_full: &Tensor2, cache: &ModelCache, d_logits: &Tensor2) {
        let d_concat = self.head.backward(&cache.concat, d_logits);
        let mut offset = 0;
        let d_xg = match (&mut self.graph_channel, &cache.x_g) {
            (Some(channel), Some(_)) => {
                let width = channel.out_width;
                let slice = slice_columns(&d_concat, offset, width);
                offset += width;
                Some(channel.backward(g, &cache.graph_caches, &slice))
            }
            _ => None,
        };
        let d_xd = match (&mut self.dense_channel, &cache.x_d) {
            (Some(channel), Some(_)) => {
                let width = channel.out_width;
                let slice = slice_columns(&d_concat, offset, width);
                Some(channel.backward(g, &cache.dense_caches, &slice))
            }
            _ => None,
        };
        if let (Some(gate), Some(gate_cache)) = (&mut self.gate, &cache.gate_cache) {
            let d_xg = d_xg.expect("gated models run both channels");
            let d_xd = d_xd.expect("gated models run both channels");
            gate.backward(x_full, gate_cache, &d_xg, &d_xd);
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut params = Vec::new();
        if let Some(channel) = &mut self.graph_channel {
            params.extend(channel.params_mut());
        }
        if let Some(channel) = &mut self.dense_channel {
            params.extend(channel.params_mut());
        }
        if let Some(gate) = &mut self.gate {
            params.extend(gate.params_mut());
        }
        params.push(&mut self.head.weight);
        params.push(&mut self.head.bias);
        params
    }

    pub fn zero_grads(&mut self) {
        for param in self.params_mut() {
            param.zero_grad();
        }
    }

    /// Channel outputs before the head, in evaluation mode.
    pub fn embeddings(&self, g: &Graph, x_full: &Tensor2) -> Tensor2 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let (_, cache) = self.forward(g, x_full, false, &mut rng);
        cache.concat
    }
}

pub fn take_columns(x: &Tensor2, columns: &[usize]) -> Tensor2 {
    let mut out = Tensor2::zeros(x.rows, columns.len());
    for r in 0..x.rows {
        let src = x.row(r);
        let dst = out.row_mut(r);
        for (slot, &j) in dst.iter_mut().zip(columns) {
            *slot = src[j];
        }
    }
    out
}

fn concat_columns(rows: usize, parts: &[Tensor2]) -> Tensor2 {
    let total: usize = parts.iter().map(|p| p.cols).sum();
    let mut out = Tensor2::zeros(rows, total);
    for r in 0..rows {
        let dst = out.row_mut(r);
        let mut offset = 0;
        for part in parts {
            dst[offset..offset + part.cols].copy_from_slice(part.row(r));
            offset += part.cols;
        }
    }
    out
}

fn slice_columns(x: &Tensor2, start: usize, width: usize) -> Tensor2 {
    let mut out = Tensor2::zeros(x.rows, width);
    for r in 0..x.rows {
        out.row_mut(r)
            .copy_from_slice(&x.row(r)[start..start + width]);
    }
    out
}
