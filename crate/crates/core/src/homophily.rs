//! Label- and feature-homophily metrics.
//!
//! Label metrics quantify how often connected nodes share a class; feature
//! metrics quantify how similar connected nodes' attribute rows are. All of
//! them are pure functions of the graph plus labels or features, and the
//! feature-wise ones can double as per-column selection scores.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Seed of the node sample used by the class-controlled metric on large
/// graphs. Fixed so repeated runs agree.
const CTF_SAMPLE_SEED: u64 = 0x0c1f;

/// Node-count threshold above which the class-controlled metric switches
/// from the exact double loop to a sampled estimate.
const CTF_EXACT_LIMIT: usize = 2000;

/// A named metric value, with per-column scores when the metric is
/// feature-wise.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricReport {
    pub metric_name: String,
    pub scalar_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_feature: Option<Vec<f64>>,
}

/// Fraction of undirected edges whose endpoints share a label.
pub fn h_edge(g: &Graph, y: &LabelVector) -> Result<f64> {
    check_labels(g, y)?;
    if g.num_edges() == 0 {
        return Err(Error::InvalidInput("graph has no edges".into()));
    }
    let same = g
        .edges()
        .filter(|&(u, v)| y.label(u) == y.label(v))
        .count();
    Ok(same as f64 / g.num_edges() as f64)
}

/// Mean over non-isolated nodes of the same-label neighbor fraction.
pub fn h_node(g: &Graph, y: &LabelVector) -> Result<f64> {
    check_labels(g, y)?;
    let mut total = 0.0;
    let mut counted = 0usize;
    for u in 0..g.num_nodes() {
        let d = g.degree(u);
        if d == 0 {
            continue;
        }
        let same = g
            .neighbors(u)
            .iter()
            .filter(|&&v| y.label(v) == y.label(u))
            .count();
        total += same as f64 / d as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::InvalidInput("all nodes are isolated".into()));
    }
    Ok(total / counted as f64)
}

/// Class homophily: per class, the same-label share of its incident edge
/// endpoints minus the class prior, clipped at zero, summed and scaled by
/// `1/(C-1)`. Classes with zero degree sum contribute zero.
pub fn h_class(g: &Graph, y: &LabelVector) -> Result<f64> {
    check_labels(g, y)?;
    let c = y.num_classes();
    if c < 2 {
        return Err(Error::DegenerateLabels(
            "class homophily needs at least two classes".into(),
        ));
    }
    let n = y.num_nodes() as f64;
    let mut same_endpoints = vec![0usize; c];
    for u in 0..g.num_nodes() {
        let yu = y.label(u);
        same_endpoints[yu] += g
            .neighbors(u)
            .iter()
            .filter(|&&v| y.label(v) == yu)
            .count();
    }
    let degree_sums = y.class_degree_sums(g);
    let mut total = 0.0;
    for cls in 0..c {
        if degree_sums[cls] == 0 {
            continue;
        }
        let fraction = same_endpoints[cls] as f64 / degree_sums[cls] as f64;
        let prior = y.class_counts()[cls] as f64 / n;
        total += (fraction - prior).max(0.0);
    }
    Ok(total / (c - 1) as f64)
}

/// Edge homophily recentered by the degree-weighted class distribution so
/// that random labelings score near zero; can be negative.
pub fn h_adj(g: &Graph, y: &LabelVector) -> Result<f64> {
    let edge = h_edge(g, y)?;
    let two_e = (2 * g.num_edges()) as f64;
    let expected: f64 = y
        .class_degree_sums(g)
        .iter()
        .map(|&d| {
            let share = d as f64 / two_e;
            share * share
        })
        .sum();
    let denom = 1.0 - expected;
    if denom.abs() < 1e-12 {
        return Err(Error::InvalidInput(
            "adjusted homophily undefined: one class holds all edge endpoints".into(),
        ));
    }
    Ok((edge - expected) / denom)
}

/// Mean cosine similarity of endpoint feature rows over edges. Edges with
/// an all-zero endpoint row contribute zero.
pub fn h_generalized_edge(g: &Graph, x: &FeatureMatrix) -> Result<f64> {
    check_features(g, x)?;
    if g.num_edges() == 0 {
        return Err(Error::InvalidInput("graph has no edges".into()));
    }
    let norms = row_norms(x);
    let mut total = 0.0;
    for (u, v) in g.edges() {
        total += cosine(x.row(u), x.row(v), norms[u], norms[v]);
    }
    Ok(total / g.num_edges() as f64)
}

/// Similarity used by the node-local feature homophily.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMode {
    Cosine,
    /// Negated Euclidean distance; 0 means identical rows.
    NegEuclidean,
}

/// Node-averaged neighbor similarity; isolated nodes are excluded from
/// the mean.
pub fn h_local_sim(g: &Graph, x: &FeatureMatrix, mode: SimilarityMode) -> Result<f64> {
    check_features(g, x)?;
    let norms = row_norms(x);
    let mut total = 0.0;
    let mut counted = 0usize;
    for u in 0..g.num_nodes() {
        let d = g.degree(u);
        if d == 0 {
            continue;
        }
        let mut acc = 0.0;
        for &v in g.neighbors(u) {
            acc += match mode {
                SimilarityMode::Cosine => cosine(x.row(u), x.row(v), norms[u], norms[v]),
                SimilarityMode::NegEuclidean => -euclidean(x.row(u), x.row(v)),
            };
        }
        total += acc / d as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::InvalidInput("all nodes are isolated".into()));
    }
    Ok(total / counted as f64)
}

/// Attribute homophily: per column, the feature-weighted mean of neighbor
/// averages, normalized by the column sum. Columns summing to zero score
/// zero; isolated nodes contribute a zero neighbor mean.
pub fn h_attr(g: &Graph, x: &FeatureMatrix) -> Result<MetricReport> {
    check_features(g, x)?;
    let n = g.num_nodes();
    let m = x.num_features();
    let mut per_feature = vec![0.0; m];
    let mut column_sums = vec![0.0; m];
    for u in 0..n {
        let d = g.degree(u);
        let row = x.row(u);
        let mut neighbor_mean = vec![0.0; m];
        if d > 0 {
            for &v in g.neighbors(u) {
                for (acc, &value) in neighbor_mean.iter_mut().zip(x.row(v)) {
                    *acc += value;
                }
            }
            for acc in neighbor_mean.iter_mut() {
                *acc /= d as f64;
            }
        }
        for j in 0..m {
            per_feature[j] += row[j] * neighbor_mean[j];
            column_sums[j] += row[j];
        }
    }
    for j in 0..m {
        if column_sums[j] == 0.0 {
            per_feature[j] = 0.0;
        } else {
            per_feature[j] /= column_sums[j];
        }
    }
    let scalar_value = per_feature.iter().sum();
    Ok(MetricReport {
        metric_name: "h_attr".into(),
        scalar_value,
        per_feature: Some(per_feature),
    })
}

/// How the class-controlled metric evaluates distances to the rest of the
/// graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtfSampling {
    /// Exact below the built-in node limit, sampled above it.
    Auto,
    /// Always the exact double loop.
    Exact,
    /// Always a seeded uniform node sample of the given size.
    Sampled(usize),
}

/// Class-controlled feature homophily: with class means subtracted from
/// every row, the average over edges of how much farther a neighbor sits
/// from the rest of the graph than from the node itself. Positive values
/// mean neighbors are closer than random nodes even after the label
/// signal is removed.
pub fn h_class_controlled(
    g: &Graph,
    x: &FeatureMatrix,
    y: &LabelVector,
    sampling: CtfSampling,
) -> Result<f64> {
    check_features(g, x)?;
    check_labels(g, y)?;
    let n = g.num_nodes();
    let m = x.num_features();
    if n == 0 {
        return Ok(0.0);
    }

    // Center every row by its class mean.
    let mut class_means = vec![0.0; y.num_classes() * m];
    for u in 0..n {
        let target = &mut class_means[y.label(u) * m..(y.label(u) + 1) * m];
        for (acc, &value) in target.iter_mut().zip(x.row(u)) {
            *acc += value;
        }
    }
    for (cls, &count) in y.class_counts().iter().enumerate() {
        if count > 0 {
            for slot in &mut class_means[cls * m..(cls + 1) * m] {
                *slot /= count as f64;
            }
        }
    }
    let mut centered = vec![0.0; n * m];
    for u in 0..n {
        let mean = &class_means[y.label(u) * m..(y.label(u) + 1) * m];
        for j in 0..m {
            centered[u * m + j] = x.get(u, j) - mean[j];
        }
    }
    let dist = |a: usize, b: usize| -> f64 {
        euclidean(&centered[a * m..(a + 1) * m], &centered[b * m..(b + 1) * m])
    };

    // Mean distance from each node to a reference set: the whole graph
    // (exact) or a fixed seeded sample of it.
    let reference: Option<Vec<usize>> = match sampling {
        CtfSampling::Exact => None,
        CtfSampling::Sampled(size) => Some(draw_sample(n, size)),
        CtfSampling::Auto => {
            if n <= CTF_EXACT_LIMIT {
                None
            } else {
                Some(draw_sample(n, 512))
            }
        }
    };
    let (sums, in_reference, reference_len) = match &reference {
        None => {
            let mut sums = vec![0.0; n];
            for v in 0..n {
                for w in (v + 1)..n {
                    let d = dist(v, w);
                    sums[v] += d;
                    sums[w] += d;
                }
            }
            (sums, vec![true; n], n)
        }
        Some(sample) => {
            let mut sums = vec![0.0; n];
            let mut member = vec![false; n];
            for &w in sample {
                member[w] = true;
            }
            for v in 0..n {
                for &w in sample {
                    sums[v] += dist(v, w);
                }
            }
            (sums, member, sample.len())
        }
    };

    let mut total = 0.0;
    for u in 0..n {
        let d = g.degree(u);
        if d == 0 {
            continue;
        }
        let mut acc = 0.0;
        for &v in g.neighbors(u) {
            let d_uv = dist(v, u);
            let (pool_sum, pool_len) = if in_reference[u] {
                (sums[v] - d_uv, reference_len - 1)
            } else {
                (sums[v], reference_len)
            };
            if pool_len == 0 {
                continue;
            }
            acc += pool_sum / pool_len as f64 - d_uv;
        }
        total += acc / d as f64;
    }
    Ok(total / n as f64)
}

fn draw_sample(n: usize, size: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(CTF_SAMPLE_SEED);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    nodes.truncate(size.min(n));
    nodes
}

fn check_labels(g: &Graph, y: &LabelVector) -> Result<()> {
    if y.num_nodes() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            context: "labels vs graph nodes",
            expected: g.num_nodes(),
            found: y.num_nodes(),
        });
    }
    Ok(())
}

fn check_features(g: &Graph, x: &FeatureMatrix) -> Result<()> {
    if x.num_nodes() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            context: "feature rows vs graph nodes",
            expected: g.num_nodes(),
            found: x.num_nodes(),
        });
    }
    Ok(())
}

fn row_norms(x: &FeatureMatrix) -> Vec<f64> {
    (0..x.num_nodes())
        .map(|u| x.row(u).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

fn cosine(a: &[f64], b: &[f64], norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (norm_a * norm_b)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
