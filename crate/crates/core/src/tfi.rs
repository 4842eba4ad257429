//! Topological feature informativeness and percentile-based selection.
//!
//! The informativeness of a feature column is the mutual information
//! between node labels and the column *after* loop-free symmetric
//! aggregation: high values mean neighborhoods carry label signal in that
//! column, so it belongs in a convolutional channel; values near zero mean
//! aggregation destroys whatever signal the raw column had. Selection
//! keeps the top percentile, and a Fano-type bound converts each score
//! into a ceiling on single-column classifier accuracy.

use rayon::prelude::*;

use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mi::{mi_knn, MiEstimatorConfig};

/// Configuration of scoring and selection.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SelectionConfig {
    /// Fraction of columns routed to the convolutional channel.
    pub ratio_r: f64,
    /// Number of aggregation hops applied before scoring.
    pub k_hop: usize,
    /// Mutual-information estimator parameters; the jitter seed is offset
    /// by the column index so each column gets its own stream.
    pub mi: MiEstimatorConfig,
    /// Rows whose labels the score may see; `None` means all of them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supervision_indices: Option<Vec<usize>>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            ratio_r: 0.5,
            k_hop: 1,
            mi: MiEstimatorConfig::default(),
            supervision_indices: None,
        }
    }
}

impl SelectionConfig {
    fn validate(&self, num_nodes: usize) -> Result<()> {
        if !(self.ratio_r > 0.0 && self.ratio_r <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "ratio_r must lie in (0, 1], got {}",
                self.ratio_r
            )));
        }
        if self.k_hop == 0 {
            return Err(Error::InvalidConfig("k_hop must be at least 1".into()));
        }
        if let Some(indices) = &self.supervision_indices {
            if let Some(&bad) = indices.iter().find(|&&u| u >= num_nodes) {
                return Err(Error::InvalidInput(format!(
                    "supervision index {bad} out of range for {num_nodes} nodes"
                )));
            }
        }
        Ok(())
    }
}

/// Scores, ranking, partition, and per-column accuracy bounds.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TfiReport {
    /// Informativeness per column, non-negative.
    pub tfi: Vec<f64>,
    /// Column indices by descending score, ties by ascending index.
    pub ranking: Vec<usize>,
    /// Smallest score among the favored columns.
    pub threshold_delta: f64,
    /// Columns routed to the convolutional channel, ascending.
    pub favored: Vec<usize>,
    /// Remaining columns, ascending.
    pub disfavored: Vec<usize>,
    /// Fano-type accuracy ceiling per column; values above 1 are vacuous.
    pub fano_bounds: Vec<f64>,
}

/// Informativeness of every column: labels against the k-hop aggregated
/// column, restricted to the supervised rows.
pub fn compute_tfi(
    g: &Graph,
    x: &FeatureMatrix,
    y: &LabelVector,
    cfg: &SelectionConfig,
) -> Result<Vec<f64>> {
    cfg.validate(g.num_nodes())?;
    if x.num_nodes() != g.num_nodes() || y.num_nodes() != g.num_nodes() {
        return Err(Error::DimensionMismatch {
            context: "graph vs features/labels",
            expected: g.num_nodes(),
            found: x.num_nodes().min(y.num_nodes()),
        });
    }

    let rows: Vec<usize> = match &cfg.supervision_indices {
        Some(indices) => indices.clone(),
        None => (0..g.num_nodes()).collect(),
    };
    let sub_labels: Vec<usize> = rows.iter().map(|&u| y.label(u)).collect();
    let distinct = sub_labels
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if distinct < 2 {
        return Err(Error::DegenerateLabels(format!(
            "supervision covers {distinct} class(es), need at least 2"
        )));
    }

    let aggregated = g.sym_normalized_aggregate(x.values(), x.num_features(), cfg.k_hop)?;
    let m = x.num_features();
    let n_rows = rows.len();

    let scores: Result<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = rows.iter().map(|&u| aggregated[u * m + j]).collect();
            let matrix = FeatureMatrix::new(n_rows, 1, column)?;
            let mi_cfg = MiEstimatorConfig {
                seed: cfg.mi.seed.wrapping_add(j as u64),
                ..cfg.mi
            };
            Ok(mi_knn(&matrix, &sub_labels, &mi_cfg)?.nats)
        })
        .collect();
    scores
}

/// Splits columns into a favored top percentile and the rest.
///
/// `|favored| = max(1, round(r * M))`, ties broken by ascending column
/// index; both returned sets are sorted ascending. The third value is
/// the smallest score among the favored columns.
pub fn select_features(tfi: &[f64], ratio_r: f64) -> Result<(Vec<usize>, Vec<usize>, f64)> {
    if tfi.is_empty() {
        return Err(Error::InvalidInput("no columns to select from".into()));
    }
    if !(ratio_r > 0.0 && ratio_r <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "ratio_r must lie in (0, 1], got {ratio_r}"
        )));
    }
    let m = tfi.len();
    let take = ((ratio_r * m as f64).round() as usize).clamp(1, m);
    let ranking = rank_descending(tfi);
    let mut favored: Vec<usize> = ranking[..take].to_vec();
    let mut disfavored: Vec<usize> = ranking[take..].to_vec();
    favored.sort_unstable();
    disfavored.sort_unstable();
    let delta = favored
        .iter()
        .map(|&j| tfi[j])
        .fold(f64::INFINITY, f64::min);
    Ok((favored, disfavored, delta))
}

/// Column indices by descending score, ties by ascending index.
pub fn rank_descending(tfi: &[f64]) -> Vec<usize> {
    let mut ranking: Vec<usize> = (0..tfi.len()).collect();
    ranking.sort_by(|&a, &b| {
        tfi[b]
            .partial_cmp(&tfi[a])
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    ranking
}

/// Accuracy ceiling for any classifier reading a single column with the
/// given informativeness: `(tfi + ln 2) / ln C`. Not clipped at 1; a
/// value above 1 carries no information about the classifier.
pub fn fano_bound(tfi_m: f64, num_classes: usize) -> Result<f64> {
    if num_classes < 2 {
        return Err(Error::InvalidConfig(
            "the accuracy bound needs at least 2 classes".into(),
        ));
    }
    if !(tfi_m >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "informativeness must be non-negative, got {tfi_m}"
        )));
    }
    Ok((tfi_m + std::f64::consts::LN_2) / (num_classes as f64).ln())
}

/// Sorts columns by ascending score and splits them into `num_bins`
/// contiguous groups whose sizes differ by at most one, larger groups
/// first. Bin 0 holds the lowest scores.
pub fn bin_features_by_tfi(tfi: &[f64], num_bins: usize) -> Result<Vec<Vec<usize>>> {
    let m = tfi.len();
    if num_bins == 0 || num_bins > m {
        return Err(Error::InvalidConfig(format!(
            "need 1..={m} bins, got {num_bins}"
        )));
    }
    let mut ascending: Vec<usize> = (0..m).collect();
    ascending.sort_by(|&a, &b| {
        tfi[a]
            .partial_cmp(&tfi[b])
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    let base = m / num_bins;
    let extra = m % num_bins;
    let mut bins = Vec::with_capacity(num_bins);
    let mut start = 0;
    for b in 0..num_bins {
        let size = base + usize::from(b < extra);
        bins.push(ascending[start..start + size].to_vec());
        start += size;
    }
    Ok(bins)
}

/// Full scoring pipeline: scores, ranking, partition at `cfg.ratio_r`,
/// and per-column accuracy bounds against `y.num_classes()`.
pub fn tfi_report(
    g: &Graph,
    x: &FeatureMatrix,
    y: &LabelVector,
    cfg: &SelectionConfig,
) -> Result<TfiReport> {
    let tfi = compute_tfi(g, x, y, cfg)?;
    let ranking = rank_descending(&tfi);
    let (favored, disfavored, threshold_delta) = select_features(&tfi, cfg.ratio_r)?;
    let fano_bounds = tfi
        .iter()
        .map(|&t| fano_bound(t, y.num_classes()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(TfiReport {
        tfi,
        ranking,
        threshold_delta,
        favored,
        disfavored,
        fano_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mi::standard_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_cliques(size: usize) -> (Graph, LabelVector) {
        let mut edges = Vec::new();
        for block in 0..2 {
            let offset = block * size;
            for u in 0..size {
                for v in (u + 1)..size {
                    edges.push((offset + u, offset + v));
                }
            }
        }
        let g = Graph::from_edges(2 * size, &edges).unwrap();
        let labels: Vec<usize> = (0..2 * size).map(|u| u / size).collect();
        (g, LabelVector::new(labels, 2).unwrap())
    }

    #[test]
    fn constant_column_scores_zero() {
        let cycle_edges: Vec<(usize, usize)> = (0..20).map(|u| (u, (u + 1) % 20)).collect();
        let g = Graph::from_edges(20, &cycle_edges).unwrap();
        let x = FeatureMatrix::new(20, 1, vec![4.2; 20]).unwrap();
        let y = LabelVector::from_raw((0..20).map(|u| u % 2).collect()).unwrap();
        let tfi = compute_tfi(&g, &x, &y, &SelectionConfig::default()).unwrap();
        assert_eq!(tfi[0], 0.0);
    }

    #[test]
    fn planted_class_column_recovers_label_entropy() {
        let (g, y) = two_cliques(250);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let values: Vec<f64> = (0..500)
            .map(|u| y.label(u) as f64 + 0.3 * standard_normal(&mut rng))
            .collect();
        let x = FeatureMatrix::new(500, 1, values).unwrap();
        let tfi = compute_tfi(&g, &x, &y, &SelectionConfig::default()).unwrap();
        assert!(
            (tfi[0] - std::f64::consts::LN_2).abs() < 0.05,
            "got {}",
            tfi[0]
        );
    }

    #[test]
    fn iid_bits_score_near_zero_after_aggregation() {
        // Communities wire the edges; the bit column is independent of
        // them. Varied random neighborhoods average the bits out, so the
        // aggregated column carries almost nothing about the label even
        // though the raw bit would.
        use rand::Rng;
        let n = 600;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let p = if u / (n / 2) == v / (n / 2) { 0.15 } else { 0.02 };
                if rng.gen::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).unwrap();
        let y = LabelVector::from_raw((0..n).map(|u| u / (n / 2)).collect()).unwrap();
        let values: Vec<f64> = (0..n).map(|_| f64::from(rng.gen::<bool>())).collect();
        let x = FeatureMatrix::new(n, 1, values).unwrap();
        let tfi = compute_tfi(&g, &x, &y, &SelectionConfig::default()).unwrap();
        assert!(tfi[0] <= 0.05, "got {}", tfi[0]);
    }

    #[test]
    fn supervision_subset_restricts_the_sample() {
        let (g, y) = two_cliques(100);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..200)
            .map(|u| y.label(u) as f64 * 2.0 + 0.1 * standard_normal(&mut rng))
            .collect();
        let x = FeatureMatrix::new(200, 1, values).unwrap();
        let cfg = SelectionConfig {
            supervision_indices: Some((0..200).step_by(2).collect()),
            ..SelectionConfig::default()
        };
        let tfi = compute_tfi(&g, &x, &y, &cfg).unwrap();
        assert!((tfi[0] - std::f64::consts::LN_2).abs() < 0.1, "got {}", tfi[0]);

        let single_class = SelectionConfig {
            supervision_indices: Some((0..50).collect()),
            ..SelectionConfig::default()
        };
        assert!(matches!(
            compute_tfi(&g, &x, &y, &single_class),
            Err(Error::DegenerateLabels(_))
        ));
    }

    #[test]
    fn selection_takes_top_percentile() {
        let tfi = vec![0.9, 0.1, 0.5, 0.8, 0.2, 0.7, 0.3, 0.6, 0.4, 0.05];
        let (favored, disfavored, delta) = select_features(&tfi, 0.3).unwrap();
        assert_eq!(favored, vec![0, 3, 5]);
        assert_eq!(disfavored, vec![1, 2, 4, 6, 7, 8, 9]);
        assert!((delta - 0.7).abs() < 1e-12);
    }

    #[test]
    fn selection_breaks_ties_by_index() {
        let tfi = vec![0.5, 0.5, 0.5, 0.5];
        let (favored, disfavored, delta) = select_features(&tfi, 0.5).unwrap();
        assert_eq!(favored, vec![0, 1]);
        assert_eq!(disfavored, vec![2, 3]);
        assert_eq!(delta, 0.5);
    }

    #[test]
    fn full_ratio_favors_everything() {
        let tfi = vec![0.1, 0.2, 0.3];
        let (favored, disfavored, _) = select_features(&tfi, 1.0).unwrap();
        assert_eq!(favored, vec![0, 1, 2]);
        assert!(disfavored.is_empty());
    }

    #[test]
    fn tiny_ratio_still_keeps_one_column() {
        let tfi = vec![0.1, 0.9, 0.3];
        let (favored, _, _) = select_features(&tfi, 0.01).unwrap();
        assert_eq!(favored, vec![1]);
    }

    #[test]
    fn fano_bound_examples() {
        assert!((fano_bound(0.0, 4).unwrap() - 0.5).abs() < 1e-12);
        assert!((fano_bound(0.0, 2).unwrap() - 1.0).abs() < 1e-12);
        let vacuous = fano_bound(4.0_f64.ln(), 4).unwrap();
        assert!((vacuous - 1.5).abs() < 1e-12);
        assert!(fano_bound(0.5, 1).is_err());
        assert!(fano_bound(-0.1, 2).is_err());
    }

    #[test]
    fn binning_splits_evenly_with_larger_bins_first() {
        let tfi: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let bins = bin_features_by_tfi(&tfi, 3).unwrap();
        assert_eq!(bins.len(), 3);
        assert_eq!(bins[0], vec![0, 1, 2]);
        assert_eq!(bins[1], vec![3, 4]);
        assert_eq!(bins[2], vec![5, 6]);
    }

    #[test]
    fn binning_is_sort_invariant() {
        let tfi = vec![0.3, 0.1, 0.4, 0.2];
        let reversed: Vec<f64> = tfi.iter().rev().copied().collect();
        let a = bin_features_by_tfi(&tfi, 2).unwrap();
        let b = bin_features_by_tfi(&reversed, 2).unwrap();
        let values_a: Vec<Vec<f64>> = a.iter().map(|bin| bin.iter().map(|&j| tfi[j]).collect()).collect();
        let values_b: Vec<Vec<f64>> = b
            .iter()
            .map(|bin| bin.iter().map(|&j| reversed[j]).collect())
            .collect();
        assert_eq!(values_a, values_b);
    }

    #[test]
    fn singleton_bins_sort_ascending() {
        let tfi = vec![0.5, 0.1, 0.9];
        let bins = bin_features_by_tfi(&tfi, 3).unwrap();
        assert_eq!(bins, vec![vec![1], vec![0], vec![2]]);
    }

    #[test]
    fn report_is_internally_consistent() {
        let (g, y) = two_cliques(50);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut values = Vec::new();
        for u in 0..100 {
            values.push(y.label(u) as f64 + 0.2 * standard_normal(&mut rng));
            values.push(standard_normal(&mut rng));
            values.push(standard_normal(&mut rng));
            values.push(standard_normal(&mut rng));
        }
        let x = FeatureMatrix::new(100, 4, values).unwrap();
        let cfg = SelectionConfig {
            ratio_r: 0.25,
            ..SelectionConfig::default()
        };
        let report = tfi_report(&g, &x, &y, &cfg).unwrap();
        assert_eq!(report.favored.len(), 1);
        assert_eq!(report.favored, vec![0]);
        assert_eq!(report.disfavored, vec![1, 2, 3]);
        assert_eq!(report.ranking[0], 0);
        assert!(report.tfi.iter().all(|&t| t >= 0.0));
        assert!((report.threshold_delta - report.tfi[0]).abs() < 1e-15);
        let min_favored = report.favored.iter().map(|&j| report.tfi[j]).fold(f64::INFINITY, f64::min);
        let max_disfavored = report
            .disfavored
            .iter()
            .map(|&j| report.tfi[j])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_favored >= max_disfavored);
        assert_eq!(report.fano_bounds.len(), 4);
    }
}
