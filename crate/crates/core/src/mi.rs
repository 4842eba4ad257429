//! Mutual information between discrete labels and continuous features.
//!
//! The estimator is the nearest-neighbor form for a categorical variable
//! against a continuous one: for each sample, measure the Chebyshev radius
//! to its k-th nearest neighbor *within its own class*, count how many
//! samples of any class fall strictly inside that radius, and combine the
//! counts through the digamma function. A histogram plug-in estimator over
//! discrete values serves as the verification oracle.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Parameters of the nearest-neighbor estimator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MiEstimatorConfig {
    /// Neighbor order k.
    pub k_nn: usize,
    /// Relative amplitude of the tie-breaking noise, scaled by each
    /// column's max absolute value.
    pub jitter_scale: f64,
    /// Seed of the jitter stream; callers evaluating many columns derive
    /// one seed per column so runs are reproducible.
    pub seed: u64,
}

impl Default for MiEstimatorConfig {
    fn default() -> Self {
        MiEstimatorConfig {
            k_nn: 3,
            jitter_scale: 1e-10,
            seed: 0,
        }
    }
}

impl MiEstimatorConfig {
    fn validate(&self) -> Result<()> {
        if self.k_nn == 0 {
            return Err(Error::InvalidConfig("k_nn must be at least 1".into()));
        }
        if !(self.jitter_scale >= 0.0) {
            return Err(Error::InvalidConfig(
                "jitter_scale must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Estimate along with a flag for inputs whose MI is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    /// Mutual information in nats, clamped at zero.
    pub nats: f64,
    /// Set when fewer than two classes survive preprocessing; the value
    /// is reported as 0 in that case.
    pub degenerate_labels: bool,
}

/// Digamma function for positive arguments, accurate to 1e-10.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "digamma requires a positive argument, got {x}"
        )));
    }
    Ok(digamma_raw(x))
}

/// Recurrence pushes the argument to at least 10, where the asymptotic
/// series through the x^-14 term is well inside 1e-10.
fn digamma_raw(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 * inv - series
}

/// Plug-in mutual information between two discrete variables, in nats.
///
/// Empirical frequencies with the convention 0 * ln 0 = 0. Joint counts
/// are accumulated in ordered maps so the floating-point summation order
/// does not depend on input order.
pub fn mi_histogram(x_discrete: &[i64], y: &[usize]) -> Result<f64> {
    if x_discrete.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "histogram inputs",
            expected: x_discrete.len(),
            found: y.len(),
        });
    }
    let n = x_discrete.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut joint: BTreeMap<(i64, usize), usize> = BTreeMap::new();
    let mut x_marginal: BTreeMap<i64, usize> = BTreeMap::new();
    let mut y_marginal: BTreeMap<usize, usize> = BTreeMap::new();
    for (&xv, &yv) in x_discrete.iter().zip(y) {
        *joint.entry((xv, yv)).or_insert(0) += 1;
        *x_marginal.entry(xv).or_insert(0) += 1;
        *y_marginal.entry(yv).or_insert(0) += 1;
    }
    let n = n as f64;
    let mut total = 0.0;
    for (&(xv, yv), &c_xy) in &joint {
        let p_xy = c_xy as f64 / n;
        let p_x = x_marginal[&xv] as f64 / n;
        let p_y = y_marginal[&yv] as f64 / n;
        total += p_xy * (p_xy / (p_x * p_y)).ln();
    }
    Ok(total)
}

/// Nearest-neighbor mutual information between labels `y` and the rows of
/// `x`, in nats, clamped at zero.
///
/// Samples whose class appears only once are dropped and the sample count
/// adjusted; if fewer than two classes remain the result is 0 with
/// `degenerate_labels` set. Ties are broken by seeded Gaussian jitter
/// whose amplitude is `jitter_scale` times each column's max absolute
/// value.
pub fn mi_knn(x: &FeatureMatrix, y: &[usize], cfg: &MiEstimatorConfig) -> Result<MiEstimate> {
    cfg.validate()?;
    let n = x.num_nodes();
    let d = x.num_features();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "labels vs samples",
            expected: n,
            found: y.len(),
        });
    }
    if d == 0 {
        return Err(Error::InvalidInput("zero-dimensional features".into()));
    }

    let mut class_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &label in y {
        *class_counts.entry(label).or_insert(0) += 1;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| class_counts[&y[i]] >= 2).collect();
    let surviving_classes = class_counts.values().filter(|&&c| c >= 2).count();
    if surviving_classes < 2 {
        return Ok(MiEstimate {
            nats: 0.0,
            degenerate_labels: true,
        });
    }

    // A matrix that is constant in every column carries no information;
    // report the exact answer rather than jittering pure ties.
    let all_constant = (0..d).all(|j| {
        let first = x.get(kept[0], j);
        kept.iter().all(|&i| x.get(i, j) == first)
    });
    if all_constant {
        return Ok(MiEstimate {
            nats: 0.0,
            degenerate_labels: false,
        });
    }

    // Jitter every sample (kept or not) so the stream layout depends only
    // on the input shape, then keep the surviving rows.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jittered = vec![0.0; kept.len() * d];
    for j in 0..d {
        let mut amp = 0.0f64;
        for i in 0..n {
            amp = amp.max(x.get(i, j).abs());
        }
        amp *= cfg.jitter_scale;
        let mut noise = vec![0.0; n];
        for slot in noise.iter_mut() {
            *slot = standard_normal(&mut rng);
        }
        for (row, &i) in kept.iter().enumerate() {
            jittered[row * d + j] = x.get(i, j) + amp * noise[i];
        }
    }

    let n_eff = kept.len();
    let labels: Vec<usize> = kept.iter().map(|&i| y[i]).collect();
    let counts: Vec<usize> = labels.iter().map(|&c| class_counts[&c]).collect();

    let (k_of, m_of) = if d == 1 {
        neighbor_stats_sorted(&jittered, &labels, &counts, cfg.k_nn)
    } else {
        neighbor_stats_brute(&jittered, d, &labels, &counts, cfg.k_nn)
    };

    // Averages of digamma over integer counts, accumulated per distinct
    // value so the summation order is canonical.
    let mean_psi = |values: &[usize]| -> f64 {
        let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in values {
            *hist.entry(v).or_insert(0) += 1;
        }
        let mut total = 0.0;
        for (&v, &c) in &hist {
            total += c as f64 * digamma_raw(v as f64);
        }
        total / values.len() as f64
    };

    let ihat = digamma_raw(n_eff as f64) - mean_psi(&counts) + mean_psi(&k_of) - mean_psi(&m_of);
    Ok(MiEstimate {
        nats: ihat.max(0.0),
        degenerate_labels: false,
    })
}

/// Per-sample neighbor statistics by exhaustive Chebyshev distance scan.
///
/// Returns, for each sample, the effective neighbor order
/// `k_i = min(k, n_class - 1)` and the count `m_i` of samples of any class
/// strictly inside the radius to the k_i-th nearest same-class neighbor
/// (the sample itself included).
fn neighbor_stats_brute(
    x: &[f64],
    d: usize,
    labels: &[usize],
    counts: &[usize],
    k_nn: usize,
) -> (Vec<usize>, Vec<usize>) {
    let n = labels.len();
    let cheb = |a: usize, b: usize| -> f64 {
        let mut best = 0.0f64;
        for j in 0..d {
            best = best.max((x[a * d + j] - x[b * d + j]).abs());
        }
        best
    };
    let mut k_of = vec![0usize; n];
    let mut m_of = vec![0usize; n];
    let mut nearest = Vec::with_capacity(k_nn);
    for i in 0..n {
        let k_i = k_nn.min(counts[i] - 1);
        nearest.clear();
        for j in 0..n {
            if j == i || labels[j] != labels[i] {
                continue;
            }
            let dist = cheb(i, j);
            if nearest.len() < k_i {
                nearest.push(dist);
                nearest.sort_by(|a: &f64, b: &f64| a.partial_cmp(b).unwrap());
            } else if dist < nearest[k_i - 1] {
                nearest[k_i - 1] = dist;
                nearest.sort_by(|a: &f64, b: &f64| a.partial_cmp(b).unwrap());
            }
        }
        let radius = nearest[k_i - 1];
        let mut inside = 1usize;
        for j in 0..n {
            if j != i && cheb(i, j) < radius {
                inside += 1;
            }
        }
        k_of[i] = k_i;
        m_of[i] = inside;
    }
    (k_of, m_of)
}

/// One-dimensional neighbor statistics on sorted values.
///
/// The k-th same-class neighbor radius is the smallest window of k+1
/// consecutive class members containing the sample; the strict-inside
/// count comes from binary searches whose comparisons use the same
/// subtraction the exhaustive scan would, so both paths agree exactly.
fn neighbor_stats_sorted(
    x: &[f64],
    labels: &[usize],
    counts: &[usize],
    k_nn: usize,
) -> (Vec<usize>, Vec<usize>) {
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut position = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        position[i] = pos;
    }

    let mut class_positions: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        class_positions.entry(labels[i]).or_default().push(pos);
    }
    let mut class_rank = vec![0usize; n];
    for positions in class_positions.values() {
        for (rank, &pos) in positions.iter().enumerate() {
            class_rank[order[pos]] = rank;
        }
    }

    let mut k_of = vec![0usize; n];
    let mut m_of = vec![0usize; n];
    for i in 0..n {
        let k_i = k_nn.min(counts[i] - 1);
        let members = &class_positions[&labels[i]];
        let rank = class_rank[i];
        let value = x[i];
        let mut radius = f64::INFINITY;
        let lo = rank.saturating_sub(k_i);
        let hi = rank.min(members.len() - 1 - k_i);
        for a in lo..=hi {
            let left = value - sorted[members[a]];
            let right = sorted[members[a + k_i]] - value;
            radius = radius.min(left.max(right));
        }

        let pos = position[i];
        let left_outside = sorted[..pos].partition_point(|&v| value - v >= radius);
        let right_inside = sorted[pos + 1..].partition_point(|&v| v - value < radius);
        k_of[i] = k_i;
        m_of[i] = (pos - left_outside) + right_inside + 1;
    }
    (k_of, m_of)
}

/// Standard normal draw via the Box-Muller transform.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
