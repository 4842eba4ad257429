//! Full-batch training of the reference models with validation-based
//! epoch selection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};

use super::adam::adam_step;
use super::layers::Linear;
use super::metrics::{accuracy, binary_auc};
use super::model::{Channel, DualModel, Gate, ModelConfig};
use super::tensor::Tensor2;

/// Which reference model to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Dense channel over all columns.
    Mlp,
    /// Graph channel over all columns.
    Gcn,
    /// Graph channel on the favored columns, dense channel on the rest.
    Gfs,
    /// Both channels see all columns, scaled by learned squared-weight shares.
    GateSoft,
    /// Both channels see all columns, masked by a learned hard choice.
    GateHard,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Gcn => "gcn",
            ModelKind::Gfs => "gfs",
            ModelKind::GateSoft => "gate_soft",
            ModelKind::GateHard => "gate_hard",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(ModelKind::Mlp),
            "gcn" => Ok(ModelKind::Gcn),
            "gfs" => Ok(ModelKind::Gfs),
            "gate_soft" => Ok(ModelKind::GateSoft),
            "gate_hard" => Ok(ModelKind::GateHard),
            other => Err(Error::InvalidInput(format!(
                "unknown model kind '{other}'; expected mlp, gcn, gfs, gate_soft, or gate_hard"
            ))),
        }
    }
}

/// History and selected-epoch results of one training run.
#[derive(Debug)]
pub struct TrainOutcome {
    pub kind: ModelKind,
    pub train_loss: Vec<f64>,
    pub val_metric: Vec<f64>,
    pub test_metric: Vec<f64>,
    /// Epoch (0-based) with the best validation metric; earliest wins ties.
    pub best_epoch: usize,
    pub best_val_metric: f64,
    /// Test metric measured at the selected epoch.
    pub test_at_best: f64,
    /// Model parameters as of the selected epoch.
    pub model: DualModel,
}

fn validate_config(cfg: &ModelConfig) -> Result<()> {
    if !(0.0..1.0).contains(&cfg.dropout) {
        return Err(Error::InvalidConfig(format!(
            "dropout must lie in [0, 1), got {}",
            cfg.dropout
        )));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "learning_rate must be positive and finite, got {}",
            cfg.learning_rate
        )));
    }
    if cfg.weight_decay < 0.0 || !cfg.weight_decay.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "weight_decay must be non-negative and finite, got {}",
            cfg.weight_decay
        )));
    }
    if cfg.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be at least 1".into()));
    }
    Ok(())
}

fn build_model(
    kind: ModelKind,
    num_columns: usize,
    num_outputs: usize,
    partition: Option<(&[usize], &[usize])>,
    cfg: &ModelConfig,
) -> Result<DualModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let all: Vec<usize> = (0..num_columns).collect();
    let (graph_channel, dense_channel, gate, favored, disfavored) = match kind {
        ModelKind::Mlp => (
            None,
            Some(Channel::new(false, num_columns, cfg, &mut rng)),
            None,
            Vec::new(),
            all,
        ),
        ModelKind::Gcn => (
            Some(Channel::new(true, num_columns, cfg, &mut rng)),
            None,
            None,
            all,
            Vec::new(),
        ),
        ModelKind::Gfs => {
            let (favored, disfavored) = partition.ok_or_else(|| {
                Error::InvalidConfig("the gfs model requires a column partition".into())
            })?;
            let mut seen = vec![false; num_columns];
            for &j in favored.iter().chain(disfavored) {
                if j >= num_columns {
                    return Err(Error::InvalidConfig(format!(
                        "partition column {j} out of range for {num_columns} features"
                    )));
                }
                if seen[j] {
                    return Err(Error::InvalidConfig(format!(
                        "column {j} appears twice in partition"
                    )));
                }
                seen[j] = true;
            }
            (
                Some(Channel::new(true, favored.len(), cfg, &mut rng)),
                Some(Channel::new(false, disfavored.len(), cfg, &mut rng)),
                None,
                favored.to_vec(),
                disfavored.to_vec(),
            )
        }
        ModelKind::GateSoft | ModelKind::GateHard => {
            let gate = if kind == ModelKind::GateSoft {
                Gate::soft(num_columns)
            } else {
                Gate::hard(num_columns)
            };
            (
                Some(Channel::new(true, num_columns, cfg, &mut rng)),
                Some(Channel::new(false, num_columns, cfg, &mut rng)),
                Some(gate),
                all.clone(),
                all,
            )
        }
    };
    let head_in = graph_channel.as_ref().map_or(0, |c| c.out_width)
        + dense_channel.as_ref().map_or(0, |c| c.out_width);
    let head = Linear::new(head_in, num_outputs, &mut rng);
    Ok(DualModel {
        graph_channel,
        dense_channel,
        gate,
        favored,
        disfavored,
        head,
        dropout_rate: cfg.dropout,
    })
}

/// Mean softmax cross-entropy over the masked rows, with the gradient
/// written into a full-size logits-shaped tensor (zero off the mask).
pub fn loss_softmax_ce(logits: &Tensor2, labels: &[usize], mask: &[usize]) -> (f64, Tensor2) {
    let mut grad = Tensor2::zeros(logits.rows, logits.cols);
    let scale = 1.0 / mask.len() as f64;
    let mut loss = 0.0;
    for &i in mask {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for &v in row {
            denom += (v - max).exp();
        }
        loss += denom.ln() - (row[labels[i]] - max);
        let g_row = grad.row_mut(i);
        for (j, &v) in row.iter().enumerate() {
            let p = (v - max).exp() / denom;
            g_row[j] = (p - f64::from(labels[i] == j)) * scale;
        }
    }
    (loss * scale, grad)
}

/// Mean binary cross-entropy on raw logits over the masked rows.
pub fn loss_bce_logit(logits: &Tensor2, labels: &[usize], mask: &[usize]) -> (f64, Tensor2) {
    let mut grad = Tensor2::zeros(logits.rows, logits.cols);
    let scale = 1.0 / mask.len() as f64;
    let mut loss = 0.0;
    for &i in mask {
        let z = logits.row(i)[0];
        let y = labels[i] as f64;
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        let sigmoid = 1.0 / (1.0 + (-z).exp());
        grad.row_mut(i)[0] = (sigmoid - y) * scale;
    }
    (loss * scale, grad)
}

fn eval_metric(task: Task, logits: &Tensor2, labels: &[usize], mask: &[usize]) -> f64 {
    match task {
        Task::Multiclass => accuracy(logits, labels, mask),
        Task::Binary => {
            let scores: Vec<f64> = (0..logits.rows).map(|i| logits.row(i)[0]).collect();
            binary_auc(&scores, labels, mask)
        }
    }
}

/// Trains one model kind on the dataset's split with full-batch Adam,
/// records per-epoch histories, and returns the parameters and test
/// metric of the best validation epoch.
pub fn train(
    kind: ModelKind,
    dataset: &Dataset,
    partition: Option<(&[usize], &[usize])>,
    cfg: &ModelConfig,
) -> Result<TrainOutcome> {
    validate_config(cfg)?;
    dataset.validate()?;
    if dataset.task == Task::Binary && dataset.labels.num_classes() != 2 {
        return Err(Error::InvalidConfig(format!(
            "binary task requires 2 classes, dataset has {}",
            dataset.labels.num_classes()
        )));
    }
    let num_outputs = match dataset.task {
        Task::Multiclass => dataset.labels.num_classes(),
        Task::Binary => 1,
    };
    let num_columns = dataset.features.num_features();
    let mut model = build_model(kind, num_columns, num_outputs, partition, cfg)?;
    let x_full = Tensor2 {
        rows: dataset.features.num_nodes(),
        cols: num_columns,
        values: dataset.features.values().to_vec(),
    };
    let labels = dataset.labels.labels();
    let g = &dataset.graph;
    let split = &dataset.split;

    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut val_metric = Vec::with_capacity(cfg.epochs);
    let mut test_metric = Vec::with_capacity(cfg.epochs);
    let mut best_epoch = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_test = 0.0;
    let mut best_model: Option<DualModel> = None;

    for epoch in 0..cfg.epochs {
        let mut epoch_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64 + 1));
        let (logits, cache) = model.forward(g, &x_full, true, &mut epoch_rng);
        let (loss, d_logits) = match dataset.task {
            Task::Multiclass => loss_softmax_ce(&logits, labels, &split.train),
            Task::Binary => loss_bce_logit(&logits, labels, &split.train),
        };
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        model.zero_grads();
        model.backward(g, &x_full, &cache, &d_logits);
        adam_step(
            &mut model.params_mut(),
            cfg.learning_rate,
            cfg.weight_decay,
            epoch + 1,
        );

        let mut eval_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (eval_logits, _) = model.forward(g, &x_full, false, &mut eval_rng);
        let val = eval_metric(dataset.task, &eval_logits, labels, &split.val);
        let test = eval_metric(dataset.task, &eval_logits, labels, &split.test);
        train_loss.push(loss);
        val_metric.push(val);
        test_metric.push(test);
        if val > best_val {
            best_val = val;
            best_epoch = epoch;
            best_test = test;
            best_model = Some(model.clone());
        }
    }

    Ok(TrainOutcome {
        kind,
        train_loss,
        val_metric,
        test_metric,
        best_epoch,
        best_val_metric: best_val,
        test_at_best: best_test,
        model: best_model.expect("at least one epoch ran"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DataSplit, FeatureMatrix, LabelVector};
    use crate::graph::Graph;

    fn separable_dataset(n: usize) -> Dataset {
        // Two blobs in feature space, no informative edges.
        let mut values = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 2;
            let t = (i / 2) as f64 * 0.01;
            if c == 0 {
                values.extend([1.0 + t, -1.0 - t]);
            } else {
                values.extend([-1.0 - t, 1.0 + t]);
            }
            labels.push(c);
        }
        let graph = Graph::from_edges(n, &[(0, 1)]).unwrap();
        let features = FeatureMatrix::new(n, 2, values).unwrap();
        let labels = LabelVector::new(labels, 2).unwrap();
        let split = DataSplit::random(n, 9).unwrap();
        Dataset {
            graph,
            features,
            labels,
            split,
            task: Task::Multiclass,
        }
    }

    fn quick_config() -> ModelConfig {
        ModelConfig {
            num_layers: 1,
            hidden_dim: 8,
            dropout: 0.0,
            learning_rate: 1e-2,
            epochs: 60,
            seed: 5,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn mlp_fits_linearly_separable_features() {
        let dataset = separable_dataset(40);
        let out = train(ModelKind::Mlp, &dataset, None, &quick_config()).unwrap();
        let final_train_acc = eval_metric(
            Task::Multiclass,
            &{
                let x = Tensor2 {
                    rows: 40,
                    cols: 2,
                    values: dataset.features.values().to_vec(),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                out.model.forward(&dataset.graph, &x, false, &mut rng).0
            },
            dataset.labels.labels(),
            &dataset.split.train,
        );
        assert!(
            final_train_acc >= 0.99,
            "train accuracy {final_train_acc} below 0.99"
        );
        assert!(out.best_val_metric >= 0.9);
    }

    #[test]
    fn identical_seeds_give_bitwise_identical_histories() {
        let dataset = separable_dataset(24);
        let cfg = ModelConfig {
            dropout: 0.3,
            epochs: 15,
            ..quick_config()
        };
        let a = train(ModelKind::GateSoft, &dataset, None, &cfg).unwrap();
        let b = train(ModelKind::GateSoft, &dataset, None, &cfg).unwrap();
        assert_eq!(a.train_loss, b.train_loss);
        assert_eq!(a.val_metric, b.val_metric);
        assert_eq!(a.test_metric, b.test_metric);
        assert_eq!(a.best_epoch, b.best_epoch);
    }

    #[test]
    fn gfs_requires_a_partition() {
        let dataset = separable_dataset(16);
        let err = train(ModelKind::Gfs, &dataset, None, &quick_config()).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn gfs_rejects_overlapping_partition() {
        let dataset = separable_dataset(16);
        let err = train(
            ModelKind::Gfs,
            &dataset,
            Some((&[0, 1], &[1])),
            &quick_config(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn gfs_with_empty_side_still_trains() {
        let dataset = separable_dataset(24);
        let cfg = ModelConfig {
            epochs: 30,
            ..quick_config()
        };
        let out = train(ModelKind::Gfs, &dataset, Some((&[0, 1], &[])), &cfg).unwrap();
        assert!(out.best_val_metric > 0.5);
        // Fusion still sees both channel widths.
        assert_eq!(out.model.head.weight.value.rows, 16);
    }

    #[test]
    fn uniform_logits_loss_is_ln_c() {
        let logits = Tensor2::zeros(4, 3);
        let labels = vec![0, 1, 2, 0];
        let (loss, _) = loss_softmax_ce(&logits, &labels, &[0, 1, 2, 3]);
        assert!((loss - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logits_drive_loss_to_zero() {
        let mut logits = Tensor2::zeros(2, 3);
        logits.row_mut(0)[0] = 50.0;
        logits.row_mut(1)[2] = 50.0;
        let (loss, _) = loss_softmax_ce(&logits, &[0, 2], &[0, 1]);
        assert!(loss < 1e-12);
    }

    #[test]
    fn binary_task_trains_with_auc_selection() {
        let mut dataset = separable_dataset(24);
        dataset.task = Task::Binary;
        let out = train(ModelKind::Mlp, &dataset, None, &quick_config()).unwrap();
        assert_eq!(out.model.head.weight.value.cols, 1);
        assert!(out.best_val_metric > 0.9, "AUC {}", out.best_val_metric);
    }

    #[test]
    fn zeroing_disfavored_columns_leaves_graph_channel_unchanged() {
        let dataset = separable_dataset(20);
        let cfg = quick_config();
        let out = train(ModelKind::Gfs, &dataset, Some((&[0], &[1])), &cfg).unwrap();
        let x_a = Tensor2 {
            rows: 20,
            cols: 2,
            values: dataset.features.values().to_vec(),
        };
        let mut x_b = x_a.clone();
        for r in 0..20 {
            x_b.row_mut(r)[1] = 0.0;
        }
        let model = &out.model;
        let channel = model.graph_channel.as_ref().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sel_a = crate::nn::model::take_columns(&x_a, &model.favored);
        let sel_b = crate::nn::model::take_columns(&x_b, &model.favored);
        let (h_a, _) = channel.forward(&dataset.graph, &sel_a, false, 0.0, &mut rng);
        let (h_b, _) = channel.forward(&dataset.graph, &sel_b, false, 0.0, &mut rng);
        assert_eq!(h_a.values, h_b.values);
    }

    #[test]
    fn divergent_learning_rate_reports_epoch() {
        let dataset = separable_dataset(16);
        let cfg = ModelConfig {
            learning_rate: 1e200,
            epochs: 50,
            ..quick_config()
        };
        match train(ModelKind::Mlp, &dataset, None, &cfg) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {:?}", other.map(|o| o.best_epoch)),
        }
    }
}
