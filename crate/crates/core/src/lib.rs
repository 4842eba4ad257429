//! Feature-level analysis of attributed graphs for node classification.
//!
//! The central quantity is the topological feature informativeness of a
//! feature column: the mutual information between node labels and the
//! column after symmetric-normalized neighborhood aggregation. Columns
//! with high scores benefit from graph convolution; columns with low
//! scores are better served by a plain feed-forward path. The crate
//! computes the score, partitions features on it, trains a dual-channel
//! reference model on the partition, and ships the synthetic benchmarks
//! and experiment protocols used to validate the whole pipeline.

pub mod data;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod homophily;
pub mod mi;
pub mod nn;
pub mod synth;
pub mod tfi;

pub use data::{DataSplit, Dataset, FeatureMatrix, LabelVector, Task};
pub use error::{Error, Result};
pub use experiments::{
    run_binning, run_embedding_reuse, run_metric_comparison, run_ratio_sweep, run_supervision_sweep,
    run_swap, spearman, ExperimentCell, ExperimentConfig, ExperimentReport, SelectorKind,
};
pub use graph::Graph;
pub use homophily::{CtfSampling, MetricReport, SimilarityMode};
pub use mi::{digamma, mi_histogram, mi_knn, MiEstimate, MiEstimatorConfig};
pub use nn::{train, DualModel, ModelConfig, ModelKind, Tensor2, TrainOutcome};
pub use synth::{generate_synthetic, ColumnKind, SynthConfig, SyntheticData};
pub use tfi::{
    bin_features_by_tfi, compute_tfi, fano_bound, select_features, tfi_report, SelectionConfig,
    TfiReport,
};
