//! A minimal deterministic neural stack: dense tensors, hand-written
//! backpropagation, Adam, and the dual-channel reference models.

pub mod adam;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use adam::adam_step;
pub use layers::{LayerNorm, Linear, Param};
pub use metrics::{accuracy, binary_auc};
pub use model::{Channel, DualModel, Gate, ModelConfig};
pub use tensor::Tensor2;
pub use train::{loss_bce_logit, loss_softmax_ce, train, ModelKind, TrainOutcome};
