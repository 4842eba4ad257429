//! Undirected graph storage and feature aggregation.
//!
//! Graphs are stored in compressed sparse row form with sorted, deduplicated
//! neighbor lists. Two aggregation operators are provided: a loop-free
//! symmetric normalization used by the informativeness score, and the
//! self-loop renormalization used by the convolutional channel.

use crate::error::{Error, Result};

/// An undirected graph in CSR form.
///
/// Neighbor lists are sorted ascending and contain no duplicates and no
/// self-loops. `num_edges` counts undirected edges, so the neighbor arrays
/// hold `2 * num_edges` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    num_edges: usize,
    row_offsets: Vec<usize>,
    neighbor_ids: Vec<usize>,
    degrees: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Edges are symmetrized, duplicates (including reversed duplicates) are
    /// merged, and self-loops are dropped. Endpoints must lie in
    /// `[0, num_nodes)`.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::EdgeOutOfRange {
                    source: u,
                    target: v,
                    num_nodes,
                });
            }
        }

        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            if u == v {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }

        let mut row_offsets = Vec::with_capacity(num_nodes + 1);
        row_offsets.push(0);
        let mut neighbor_ids = Vec::new();
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            list.dedup();
            neighbor_ids.extend_from_slice(list);
            row_offsets.push(neighbor_ids.len());
        }

        let degrees: Vec<usize> = (0..num_nodes)
            .map(|u| row_offsets[u + 1] - row_offsets[u])
            .collect();
        let num_edges = neighbor_ids.len() / 2;
        Ok(Graph {
            num_nodes,
            num_edges,
            row_offsets,
            neighbor_ids,
            degrees,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges after deduplication.
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Degree of node `u` (self-loops were removed at construction).
    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u]
    }

    /// Degrees of all nodes.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Sorted neighbor list of node `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbor_ids[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    /// Iterates each undirected edge once as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Applies the loop-free symmetric normalization `D^{-1/2} A D^{-1/2}`
    /// to `features` (row-major, `num_nodes x num_cols`), `k` times.
    ///
    /// Rows of isolated nodes become zero: they have no neighbors to pool
    /// from and the normalization gives them no self-contribution.
    pub fn sym_normalized_aggregate(
        &self,
        features: &[f64],
        num_cols: usize,
        k: usize,
    ) -> Result<Vec<f64>> {
        self.check_feature_shape(features, num_cols)?;
        let inv_sqrt_deg: Vec<f64> = (0..self.num_nodes)
            .map(|u| {
                let d = self.degree(u);
                if d == 0 {
                    0.0
                } else {
                    1.0 / (d as f64).sqrt()
                }
            })
            .collect();

        let mut current = features.to_vec();
        let mut next = vec![0.0; features.len()];
        for _ in 0..k {
            for u in 0..self.num_nodes {
                let row = &mut next[u * num_cols..(u + 1) * num_cols];
                row.fill(0.0);
                let su = inv_sqrt_deg[u];
                if su == 0.0 {
                    continue;
                }
                for &v in self.neighbors(u) {
                    let w = su * inv_sqrt_deg[v];
                    let src = &current[v * num_cols..(v + 1) * num_cols];
                    for (r, s) in row.iter_mut().zip(src) {
                        *r += w * s;
                    }
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// Applies the self-loop renormalization
    /// `(D + I)^{-1/2} (A + I) (D + I)^{-1/2}` to `features` once.
    ///
    /// This is the propagation used inside the convolutional channel; unlike
    /// the loop-free operator, every node keeps a scaled copy of its own row.
    pub fn aggregate_with_self_loops(&self, features: &[f64], num_cols: usize) -> Result<Vec<f64>> {
        self.check_feature_shape(features, num_cols)?;
        let inv_sqrt_deg: Vec<f64> = (0..self.num_nodes)
            .map(|u| 1.0 / ((self.degree(u) + 1) as f64).sqrt())
            .collect();

        let mut out = vec![0.0; features.len()];
        for u in 0..self.num_nodes {
            let row = &mut out[u * num_cols..(u + 1) * num_cols];
            let su = inv_sqrt_deg[u];
            let self_w = su * su;
            let src = &features[u * num_cols..(u + 1) * num_cols];
            for (r, s) in row.iter_mut().zip(src) {
                *r = self_w * s;
            }
            for &v in self.neighbors(u) {
                let w = su * inv_sqrt_deg[v];
                let src = &features[v * num_cols..(v + 1) * num_cols];
                for (r, s) in row.iter_mut().zip(src) {
                    *r += w * s;
                }
            }
        }
        Ok(out)
    }

    fn check_feature_shape(&self, features: &[f64], num_cols: usize) -> Result<()> {
        if num_cols == 0 && features.is_empty() {
            return Ok(());
        }
        if num_cols == 0 || features.len() != self.num_nodes * num_cols {
            return Err(Error::DimensionMismatch {
                context: "feature matrix rows",
                expected: self.num_nodes * num_cols,
                found: features.len(),
            });
        }
        Ok(())
    }
}
