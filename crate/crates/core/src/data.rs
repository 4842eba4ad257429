//! Dense feature storage, class labels, and train/val/test splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Dense `N x M` real matrix, row-major, with column access.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    num_nodes: usize,
    num_features: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Wraps a row-major buffer. Every value must be finite.
    pub fn new(num_nodes: usize, num_features: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_nodes * num_features {
            return Err(Error::DimensionMismatch {
                context: "feature matrix buffer",
                expected: num_nodes * num_features,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "feature matrix",
            });
        }
        Ok(FeatureMatrix {
            num_nodes,
            num_features,
            values,
        })
    }

    /// Single-column matrix from a vector.
    pub fn from_column(column: Vec<f64>) -> Result<Self> {
        let n = column.len();
        FeatureMatrix::new(n, 1, column)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, node: usize, feature: usize) -> f64 {
        self.values[node * self.num_features + feature]
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.values[node * self.num_features..(node + 1) * self.num_features]
    }

    /// Copies column `m` into a fresh vector of length `num_nodes`.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.num_nodes).map(|u| self.get(u, feature)).collect()
    }

    /// New matrix keeping only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.num_nodes * columns.len());
        for u in 0..self.num_nodes {
            let row = self.row(u);
            for &m in columns {
                values.push(row[m]);
            }
        }
        FeatureMatrix {
            num_nodes: self.num_nodes,
            num_features: columns.len(),
            values,
        }
    }
}

/// Integer class labels in `[0, C)` with per-class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
    class_counts: Vec<usize>,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::DegenerateLabels("zero classes".into()));
        }
        let mut class_counts = vec![0usize; num_classes];
        for (u, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "label {y} at node {u} exceeds class count {num_classes}"
                )));
            }
            class_counts[y] += 1;
        }
        Ok(LabelVector {
            labels,
            num_classes,
            class_counts,
        })
    }

    /// Builds from raw labels, inferring `C = max + 1`.
    pub fn from_raw(labels: Vec<usize>) -> Result<Self> {
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
        LabelVector::new(labels, num_classes)
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    /// Number of nodes carrying each class.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Sum of node degrees per class, computed from a graph on demand.
    pub fn class_degree_sums(&self, g: &Graph) -> Vec<usize> {
        let mut sums = vec![0usize; self.num_classes];
        for (u, &y) in self.labels.iter().enumerate() {
            sums[y] += g.degree(u);
        }
        sums
    }
}

/// Disjoint train/validation/test node index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl DataSplit {
    /// Validates disjointness, range, and non-emptiness.
    pub fn new(num_nodes: usize, train: Vec<usize>, val: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        if train.is_empty() || val.is_empty() || test.is_empty() {
            return Err(Error::InvalidInput("empty split part".into()));
        }
        let mut seen = vec![false; num_nodes];
        for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
            for &u in part {
                if u >= num_nodes {
                    return Err(Error::InvalidInput(format!(
                        "{name} split index {u} out of range for {num_nodes} nodes"
                    )));
                }
                if seen[u] {
                    return Err(Error::InvalidInput(format!(
                        "node {u} appears in more than one split part"
                    )));
                }
                seen[u] = true;
            }
        }
        Ok(DataSplit { train, val, test })
    }

    /// Seeded random 50/25/25 split over all nodes.
    pub fn random(num_nodes: usize, seed: u64) -> Result<Self> {
        if num_nodes < 4 {
            return Err(Error::InvalidInput(format!(
                "need at least 4 nodes to split, got {num_nodes}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..num_nodes).collect();
        order.shuffle(&mut rng);
        let n_train = num_nodes / 2;
        let n_val = num_nodes / 4;
        let train = order[..n_train].to_vec();
        let val = order[n_train..n_train + n_val].to_vec();
        let test = order[n_train + n_val..].to_vec();
        DataSplit::new(num_nodes, train, val, test)
    }
}

/// Classification task carried in dataset metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Multiclass,
    Binary,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Multiclass => "multiclass",
            Task::Binary => "binary",
        }
    }
}

/// An attributed graph with labels and a fixed split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    pub split: DataSplit,
    pub task: Task,
}

impl Dataset {
    /// Checks that all parts agree on the node count.
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_nodes();
        if self.features.num_nodes() != n {
            return Err(Error::DimensionMismatch {
                context: "feature rows vs graph nodes",
                expected: n,
                found: self.features.num_nodes(),
            });
        }
        if self.labels.num_nodes() != n {
            return Err(Error::DimensionMismatch {
                context: "labels vs graph nodes",
                expected: n,
                found: self.labels.num_nodes(),
            });
        }
        Ok(())
    }
}
