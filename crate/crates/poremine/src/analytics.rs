//! Numerical kernels: standardization, Pearson correlation with
//! hierarchical ordering, seeded k-means with elbow selection, PCA, and
//! kernel density estimation.
//!
//! Everything here is pure and deterministic given its seed. Sample
//! statistics use n−1 denominators throughout. Randomized operations
//! (k-means initialization) draw from `ChaCha8Rng` so repeated runs are
//! bit-identical; restarts run concurrently and merge by lowest
//! within-cluster sum of squares, ties to the lowest restart index.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Default number of k-means restarts.
pub const DEFAULT_RESTARTS: usize = 20;
/// Lloyd iteration cap per restart.
const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("matrix needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("matrix has no columns left")]
    MatrixEmpty,
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("matrix has {names} column names but {cols} columns")]
    ColumnNameMismatch { names: usize, cols: usize },
    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("constant feature `{0}`: zero variance")]
    ConstantFeature(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("bad cluster count {k}: must lie in 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("degenerate sample: need at least 2 values with nonzero spread")]
    DegenerateSample,
}

/// A dense row-major numeric table with named columns.
///
/// Construction rejects non-finite entries, fewer than 2 rows, and
/// zero columns, so every kernel can assume clean input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(column_names: Vec<String>, values: Vec<f64>) -> Result<Self, AnalyticsError> {
        let n_cols = column_names.len();
        if n_cols == 0 {
            return Err(AnalyticsError::MatrixEmpty);
        }
        if values.len() % n_cols != 0 {
            return Err(AnalyticsError::RaggedRow {
                row: values.len() / n_cols,
                got: values.len() % n_cols,
                expected: n_cols,
            });
        }
        let n_rows = values.len() / n_cols;
        if n_rows < 2 {
            return Err(AnalyticsError::TooFewRows(n_rows));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(AnalyticsError::NonFiniteValue {
                    row: i / n_cols,
                    col: i % n_cols,
                });
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
            column_names,
        })
    }

    pub fn from_rows(
        column_names: Vec<String>,
        rows: &[Vec<f64>],
    ) -> Result<Self, AnalyticsError> {
        let expected = column_names.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != expected {
                return Err(AnalyticsError::RaggedRow {
                    row: i,
                    got: row.len(),
                    expected,
                });
            }
        }
        Self::new(column_names, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }
}

fn column_mean_sd(m: &FeatureMatrix, col: usize) -> (f64, f64) {
    let n = m.n_rows() as f64;
    let mean = (0..m.n_rows()).map(|r| m.get(r, col)).sum::<f64>() / n;
    let ss = (0..m.n_rows())
        .map(|r| (m.get(r, col) - mean).powi(2))
        .sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Centers each column to mean 0 and scales it to sample standard
/// deviation 1.
pub fn standardize(m: &FeatureMatrix) -> Result<FeatureMatrix, AnalyticsError> {
    let mut stats = Vec::with_capacity(m.n_cols());
    for c in 0..m.n_cols() {
        let (mean, sd) = column_mean_sd(m, c);
        if sd == 0.0 {
            return Err(AnalyticsError::ConstantFeature(m.column_names()[c].clone()));
        }
        stats.push((mean, sd));
    }
    let values: Vec<f64> = m
        .rows()
        .flat_map(|row| {
            row.iter()
                .zip(&stats)
                .map(|(v, (mean, sd))| (v - mean) / sd)
        })
        .collect();
    FeatureMatrix::new(m.column_names().to_vec(), values)
}

/// Pearson correlation between all column pairs.
///
/// The result is exactly symmetric with an exact unit diagonal, entries
/// clamped to [−1, 1].
pub fn pearson_matrix(m: &FeatureMatrix) -> Result<Vec<Vec<f64>>, AnalyticsError> {
    let d = m.n_cols();
    let mut stats = Vec::with_capacity(d);
    for c in 0..d {
        let (mean, sd) = column_mean_sd(m, c);
        if sd == 0.0 {
            return Err(AnalyticsError::ConstantFeature(m.column_names()[c].clone()));
        }
        stats.push((mean, sd));
    }
    let n = m.n_rows() as f64;
    let mut corr = vec![vec![0.0; d]; d];
    for i in 0..d {
        corr[i][i] = 1.0;
        for j in (i + 1)..d {
            let cov = (0..m.n_rows())
                .map(|r| (m.get(r, i) - stats[i].0) * (m.get(r, j) - stats[j].0))
                .sum::<f64>()
                / (n - 1.0);
            let r = (cov / (stats[i].1 * stats[j].1)).clamp(-1.0, 1.0);
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    Ok(corr)
}

/// Dendrogram leaf order from average-linkage agglomerative clustering
/// of the correlation-matrix rows under Euclidean distance.
///
/// Linkage distance between clusters is the mean of all original
/// pairwise row distances. Ties — both in merge choice and in leaf
/// concatenation — resolve toward the lowest original index, so an
/// identity correlation matrix returns the original order.
pub fn correlogram_order(corr: &[Vec<f64>]) -> Vec<usize> {
    let d = corr.len();
    if d <= 1 {
        return (0..d).collect();
    }
    let row_distance = |a: usize, b: usize| -> f64 {
        corr[a]
            .iter()
            .zip(&corr[b])
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    // Active clusters as leaf lists; linkage recomputed from original
    // pairwise distances (UPGMA definition, no update shortcut needed
    // at feature-count scale).
    let mut clusters: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut total = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        total += row_distance(i, j);
                    }
                }
                let linkage = total / (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|(current, _, _)| linkage < current) {
                    best = Some((linkage, a, b));
                }
            }
        }
        let (_, a, b) = best.expect("at least one pair");
        // Clusters stay sorted by their minimum original index, so the
        // scan order above realizes the tie-break rule and a+b merge
        // keeps the lower-index cluster's leaves first.
        let merged_tail = clusters.remove(b);
        clusters[a].extend(merged_tail);
    }
    clusters.pop().expect("one cluster left")
}

/// Removes one named column.
pub fn drop_feature(m: &FeatureMatrix, name: &str) -> Result<FeatureMatrix, AnalyticsError> {
    let Some(drop_idx) = m.column_names().iter().position(|n| n == name) else {
        return Err(AnalyticsError::UnknownFeature(name.to_string()));
    };
    if m.n_cols() == 1 {
        return Err(AnalyticsError::MatrixEmpty);
    }
    let column_names: Vec<String> = m
        .column_names()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != drop_idx)
        .map(|(_, n)| n.clone())
        .collect();
    let values: Vec<f64> = m
        .rows()
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .filter(|(i, _)| *i != drop_idx)
                .map(|(_, v)| *v)
        })
        .collect();
    FeatureMatrix::new(column_names, values)
}

/// A converged k-means fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input row; always the nearest centroid.
    pub assignments: Vec<usize>,
    /// Total within-cluster sum of squared Euclidean distances.
    pub wss: f64,
    pub seed: u64,
}

fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest_centroid(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let dist = distance_sq(row, c);
        if dist < best.1 {
            best = (i, dist);
        }
    }
    best
}

fn assign_all(m: &FeatureMatrix, centroids: &[Vec<f64>]) -> Vec<usize> {
    m.rows().map(|r| nearest_centroid(r, centroids).0).collect()
}

fn total_wss(m: &FeatureMatrix, centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    m.rows()
        .zip(assignments)
        .map(|(r, &a)| distance_sq(r, &centroids[a]))
        .sum()
}

/// k-means++ seeding: first centroid uniform, then D²-weighted draws.
fn kmeanspp_init(m: &FeatureMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = m.n_rows();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(m.row(rng.random_range(0..n)).to_vec());
    let mut best_dist: Vec<f64> = (0..n)
        .map(|i| distance_sq(m.row(i), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = best_dist.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in best_dist.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // all remaining points coincide with a centroid
            rng.random_range(0..n)
        };
        let centroid = m.row(chosen).to_vec();
        for i in 0..n {
            let dist = distance_sq(m.row(i), &centroid);
            if dist < best_dist[i] {
                best_dist[i] = dist;
            }
        }
        centroids.push(centroid);
    }
    centroids
}

struct LloydFit {
    centroids: Vec<Vec<f64>>,
    assignments: Vec<usize>,
    wss: f64,
    /// wss after each assignment pass; tests check it never increases.
    #[cfg_attr(not(test), allow(dead_code))]
    wss_trace: Vec<f64>,
}

/// Lloyd iterations from the given initial centroids until assignments
/// stabilize (or the iteration cap). A cluster that empties is reseeded
/// on the point with the largest current residual.
fn lloyd(m: &FeatureMatrix, mut centroids: Vec<Vec<f64>>) -> LloydFit {
    let k = centroids.len();
    let d = m.n_cols();
    let mut assignments = assign_all(m, &centroids);
    let mut wss_trace = vec![total_wss(m, &centroids, &assignments)];
    for _ in 0..MAX_LLOYD_ITERS {
        // means per cluster
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (row, &a) in m.rows().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            }
        }
        // reseed empty clusters on the farthest points
        if counts.contains(&0) {
            let mut residuals: Vec<f64> = m
                .rows()
                .zip(&assignments)
                .map(|(r, &a)| {
                    if counts[a] > 0 {
                        distance_sq(r, &centroids[a])
                    } else {
                        0.0
                    }
                })
                .collect();
            for c in 0..k {
                if counts[c] > 0 {
                    continue;
                }
                let far = residuals
                    .iter()
                    .enumerate()
                    .max_by(|(ia, a), (ib, b)| {
                        a.partial_cmp(b).unwrap().then(ib.cmp(ia))
                    })
                    .map(|(i, _)| i)
                    .expect("nonempty matrix");
                centroids[c] = m.row(far).to_vec();
                residuals[far] = 0.0;
            }
        }
        let next = assign_all(m, &centroids);
        wss_trace.push(total_wss(m, &centroids, &next));
        let stable = next == assignments;
        assignments = next;
        if stable {
            break;
        }
    }
    let wss = total_wss(m, &centroids, &assignments);
    LloydFit {
        centroids,
        assignments,
        wss,
        wss_trace,
    }
}

fn restart_seed(seed: u64, restart: u64) -> u64 {
    seed.wrapping_add(restart.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn run_restart(m: &FeatureMatrix, k: usize, seed: u64, restart: usize) -> LloydFit {
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, restart as u64));
    lloyd(m, kmeanspp_init(m, k, &mut rng))
}

/// Best-of-`restarts` k-means with k-means++ seeding.
///
/// Restarts run concurrently; the winner is the lowest wss, ties to the
/// lowest restart index, so the result does not depend on scheduling.
pub fn kmeans(
    m: &FeatureMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel, AnalyticsError> {
    if k < 1 || k > m.n_rows() {
        return Err(AnalyticsError::BadK {
            k,
            max: m.n_rows(),
        });
    }
    assert!(restarts >= 1, "need at least one restart");
    let fits: Vec<LloydFit> = (0..restarts)
        .into_par_iter()
        .map(|r| run_restart(m, k, seed, r))
        .collect();
    let best = fits
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.wss.partial_cmp(&b.wss).unwrap().then(ia.cmp(ib)))
        .map(|(_, fit)| fit)
        .expect("restarts >= 1");
    Ok(ClusterModel {
        k,
        centroids: best.centroids,
        assignments: best.assignments,
        wss: best.wss,
        seed,
    })
}

/// Elbow rule: the k in [2, len−1] (1-based cluster counts) maximizing
/// the second difference wss(k−1) − 2·wss(k) + wss(k+1); ties take the
/// smallest k. `curve[i]` is the wss at k = i+1; needs length ≥ 3.
pub fn elbow_from_curve(curve: &[f64]) -> usize {
    assert!(curve.len() >= 3, "elbow needs wss for at least k=1..=3");
    let mut best_k = 2;
    let mut best = f64::NEG_INFINITY;
    for k in 2..curve.len() {
        let second_diff = curve[k - 2] - 2.0 * curve[k - 1] + curve[k];
        if second_diff > best {
            best = second_diff;
            best_k = k;
        }
    }
    best_k
}

/// Outcome of automatic k selection.
#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    /// Elbow choice.
    pub k: usize,
    /// wss at k = 1..=k_max, non-increasing by construction.
    pub curve: Vec<f64>,
    /// The fitted model at the chosen k.
    pub model: ClusterModel,
}

/// Fits k = 1..=k_max and picks the elbow of the wss curve.
///
/// Besides the regular restarts, each k ≥ 2 tries one extra candidate
/// initialized from the previous k's converged centroids plus the
/// largest-residual point. That candidate can only improve on the
/// previous wss, which keeps the reported curve monotone.
pub fn select_k(m: &FeatureMatrix, k_max: usize, seed: u64) -> Result<KSelection, AnalyticsError> {
    if k_max < 3 || k_max > m.n_rows() {
        return Err(AnalyticsError::BadK {
            k: k_max,
            max: m.n_rows(),
        });
    }
    let mut models: Vec<ClusterModel> = vec![kmeans(m, 1, seed, 1)?];
    for k in 2..=k_max {
        let prev = models.last().expect("k-1 model");
        let fresh = kmeans(m, k, seed, DEFAULT_RESTARTS)?;
        let mut nested_init = prev.centroids.clone();
        let far = m
            .rows()
            .zip(&prev.assignments)
            .map(|(r, &a)| distance_sq(r, &prev.centroids[a]))
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
            .map(|(i, _)| i)
            .expect("nonempty matrix");
        nested_init.push(m.row(far).to_vec());
        let nested = lloyd(m, nested_init);
        let chosen = if nested.wss < fresh.wss {
            ClusterModel {
                k,
                centroids: nested.centroids,
                assignments: nested.assignments,
                wss: nested.wss,
                seed,
            }
        } else {
            fresh
        };
        models.push(chosen);
    }
    let curve: Vec<f64> = models.iter().map(|model| model.wss).collect();
    let k = elbow_from_curve(&curve);
    let model = models.into_iter().nth(k - 1).expect("k <= k_max");
    Ok(KSelection { k, curve, model })
}

/// A principal-component basis with all components retained.
#[derive(Debug, Clone, PartialEq)]
pub struct PCAModel {
    /// Column means of the fitted matrix.
    pub mean: Vec<f64>,
    /// Orthonormal components, descending variance; each component's
    /// largest-magnitude entry is positive.
    pub components: Vec<Vec<f64>>,
    /// Per-component fraction of total variance; sums to 1.
    pub explained_fraction: Vec<f64>,
}

/// PCA via eigendecomposition of the sample covariance matrix.
///
/// Returns the model (all components) and the rows projected onto the
/// first `n_components`. The pipeline standardizes first, making this
/// correlation PCA; raw-column covariance PCA is what you get otherwise.
pub fn pca(
    m: &FeatureMatrix,
    n_components: usize,
) -> Result<(PCAModel, Vec<Vec<f64>>), AnalyticsError> {
    assert!(
        n_components >= 1 && n_components <= m.n_cols(),
        "n_components {n_components} outside 1..={}",
        m.n_cols()
    );
    let d = m.n_cols();
    let n = m.n_rows() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|c| (0..m.n_rows()).map(|r| m.get(r, c)).sum::<f64>() / n)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for row in m.rows() {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap().then(a.cmp(&b)));

    let total: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    if total <= 0.0 {
        return Err(AnalyticsError::DegenerateSample);
    }
    let mut components = Vec::with_capacity(d);
    let mut explained_fraction = Vec::with_capacity(d);
    for &idx in &order {
        let mut component: Vec<f64> = (0..d).map(|i| eigenvectors[i][idx]).collect();
        let dominant = component
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.abs().partial_cmp(&b.abs()).unwrap().then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .expect("d >= 1");
        if component[dominant] < 0.0 {
            for v in component.iter_mut() {
                *v = -*v;
            }
        }
        components.push(component);
        explained_fraction.push(eigenvalues[idx].max(0.0) / total);
    }

    let projected: Vec<Vec<f64>> = m
        .rows()
        .map(|row| {
            components[..n_components]
                .iter()
                .map(|comp| {
                    row.iter()
                        .zip(&mean)
                        .zip(comp)
                        .map(|((v, mu), c)| (v - mu) * c)
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok((
        PCAModel {
            mean,
            components,
            explained_fraction,
        },
        projected,
    ))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; returns
/// eigenvalues and the orthonormal eigenvector matrix (eigenvectors in
/// columns, matching the eigenvalue order).
fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let frobenius_sq: f64 = a.iter().flatten().map(|x| x * x).sum();
    let threshold = (frobenius_sq * 1e-24).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off_sq: f64 = (0..d)
            .flat_map(|p| ((p + 1)..d).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum::<f64>()
            * 2.0;
        if off_sq <= threshold {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..d {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..d {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigenvalues: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

/// Linear-interpolation quantile of a sorted slice (the convention where
/// the p-quantile sits at rank (n−1)·p).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let position = (sorted.len() - 1) as f64 * p;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    sorted[lo] + (position - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb: 0.9·min(sd, IQR/1.34)·n^(−1/5).
///
/// A zero IQR (heavily tied data) falls back to the sd alone; a zero sd
/// is a degenerate sample.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64, AnalyticsError> {
    let n = values.len();
    if n < 2 || values.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::DegenerateSample);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(AnalyticsError::DegenerateSample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Evenly spaced evaluation grid covering the data ± 3 bandwidths.
pub fn kde_grid(values: &[f64], points: usize) -> Result<Vec<f64>, AnalyticsError> {
    assert!(points >= 2, "grid needs at least 2 points");
    let h = silverman_bandwidth(values)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| lo + i as f64 * step).collect())
}

/// Gaussian kernel density of `values` evaluated at `grid`, with
/// Silverman bandwidth.
pub fn kde_density(values: &[f64], grid: &[f64]) -> Result<Vec<f64>, AnalyticsError> {
    let h = silverman_bandwidth(values)?;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * PI).sqrt());
    Ok(grid
        .iter()
        .map(|&g| {
            values
                .iter()
                .map(|&x| (-0.5 * ((g - x) / h).powi(2)).exp())
                .sum::<f64>()
                * norm
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn matrix(names: &[&str], rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows(names.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n_rows: usize, n_cols: usize) -> FeatureMatrix {
        let names: Vec<&str> = (0..n_cols)
            .map(|i| ["a", "b", "c", "d", "e", "f", "g", "h", "i"][i])
            .collect();
        let rows: Vec<Vec<f64>> = (0..n_rows)
            .map(|_| (0..n_cols).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        matrix(&names, &rows)
    }

    #[test]
    fn matrix_construction_validates() {
        assert!(matches!(
            FeatureMatrix::new(vec![], vec![]),
            Err(AnalyticsError::MatrixEmpty)
        ));
        assert!(matches!(
            FeatureMatrix::new(vec!["a".into()], vec![1.0]),
            Err(AnalyticsError::TooFewRows(1))
        ));
        assert!(matches!(
            FeatureMatrix::new(vec!["a".into()], vec![1.0, f64::NAN]),
            Err(AnalyticsError::NonFiniteValue { row: 1, col: 0 })
        ));
        assert!(matches!(
            FeatureMatrix::new(vec!["a".into(), "b".into()], vec![1.0, 2.0, 3.0]),
            Err(AnalyticsError::RaggedRow { .. })
        ));
        let m = matrix(&["a", "b"], &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.column(1), vec![2.0, 4.0]);
    }

    #[test]
    fn standardize_symmetric_column() {
        let m = matrix(&["x"], &[vec![1.0], vec![2.0], vec![3.0]]);
        let z = standardize(&m).unwrap();
        assert_relative_eq!(z.get(0, 0), -1.0, epsilon = 1e-12);
        assert_relative_eq!(z.get(1, 0), 0.0, epsilon = 1e-12);
        assert_relative_eq!(z.get(2, 0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let m = matrix(&["x", "flat"], &[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]);
        match standardize(&m) {
            Err(AnalyticsError::ConstantFeature(name)) => assert_eq!(name, "flat"),
            other => panic!("expected ConstantFeature, got {other:?}"),
        }
    }

    #[test]
    fn standardize_leaves_unit_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 20, 3);
        let z = standardize(&m).unwrap();
        for c in 0..z.n_cols() {
            let (mean, sd) = column_mean_sd(&z, c);
            assert_relative_eq!(mean, 0.0, epsilon = 1e-9);
            assert_relative_eq!(sd, 1.0, epsilon = 1e-9);
        }
        // idempotence
        let zz = standardize(&z).unwrap();
        for (a, b) in zz.rows().zip(z.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert_relative_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn pearson_exact_small_cases() {
        let m = matrix(
            &["x", "rev", "perm"],
            &[vec![1.0, 3.0, 1.0], vec![2.0, 2.0, 3.0], vec![3.0, 1.0, 2.0]],
        );
        let corr = pearson_matrix(&m).unwrap();
        assert_eq!(corr[0][0], 1.0);
        assert_eq!(corr[1][1], 1.0);
        assert_relative_eq!(corr[0][1], -1.0, epsilon = 1e-12);
        assert_relative_eq!(corr[0][2], 0.5, epsilon = 1e-12);
        assert_relative_eq!(corr[1][2], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn pearson_matrix_shape_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let m = random_matrix(&mut rng, 12, 4);
            let corr = pearson_matrix(&m).unwrap();
            for i in 0..4 {
                assert_eq!(corr[i][i], 1.0);
                for j in 0..4 {
                    assert_eq!(corr[i][j], corr[j][i]);
                    assert!((-1.0..=1.0).contains(&corr[i][j]));
                }
            }
        }
    }

    #[test]
    fn pearson_invariant_under_positive_affine_rescale() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 15, 3);
        let corr = pearson_matrix(&m).unwrap();
        let rescaled_rows: Vec<Vec<f64>> = m
            .rows()
            .map(|r| vec![3.5 * r[0] + 100.0, r[1], 0.01 * r[2] - 7.0])
            .collect();
        let rescaled = matrix(&["a", "b", "c"], &rescaled_rows);
        let corr2 = pearson_matrix(&rescaled).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(corr[i][j], corr2[i][j], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn correlogram_order_trivial_and_tied() {
        assert_eq!(correlogram_order(&[vec![1.0, 0.3], vec![0.3, 1.0]]), vec![0, 1]);
        let identity: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(correlogram_order(&identity), vec![0, 1, 2, 3]);
    }

    #[test]
    fn correlogram_groups_nearest_rows() {
        // features 0 and 2 strongly correlated, 1 uncorrelated
        let corr = vec![
            vec![1.0, 0.0, 0.9],
            vec![0.0, 1.0, 0.0],
            vec![0.9, 0.0, 1.0],
        ];
        assert_eq!(correlogram_order(&corr), vec![0, 2, 1]);
    }

    #[test]
    fn correlogram_average_linkage_hand_case() {
        // rows 0,1 merge first (distance ~0), then 2,3; the pair order
        // follows hand-computed average linkage
        let corr = vec![
            vec![1.0, 0.95, -0.8, -0.75],
            vec![0.95, 1.0, -0.75, -0.8],
            vec![-0.8, -0.75, 1.0, 0.9],
            vec![-0.75, -0.8, 0.9, 1.0],
        ];
        assert_eq!(correlogram_order(&corr), vec![0, 1, 2, 3]);
    }

    #[test]
    fn drop_feature_removes_one_column() {
        let names = ["area", "perimeter", "angle", "solidity"];
        let m = matrix(
            &names,
            &[vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]],
        );
        let out = drop_feature(&m, "angle").unwrap();
        assert_eq!(out.column_names(), &["area", "perimeter", "solidity"]);
        assert_eq!(out.row(0), &[1.0, 2.0, 4.0]);
        assert_eq!(out.row(1), &[5.0, 6.0, 8.0]);
        assert!(matches!(
            drop_feature(&m, "missing"),
            Err(AnalyticsError::UnknownFeature(_))
        ));
        let single = matrix(&["only"], &[vec![1.0], vec![2.0]]);
        assert!(matches!(
            drop_feature(&single, "only"),
            Err(AnalyticsError::MatrixEmpty)
        ));
    }

    #[test]
    fn kmeans_k_equals_rows_zeroes_wss() {
        let m = matrix(&["x", "y"], &[vec![0.0, 0.0], vec![5.0, 1.0], vec![9.0, 3.0]]);
        let model = kmeans(&m, 3, 1, 5).unwrap();
        assert_eq!(model.wss, 0.0);
        let mut seen: Vec<usize> = model.assignments.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn kmeans_single_cluster_is_mean() {
        let m = matrix(&["x"], &[vec![0.0], vec![1.0], vec![2.0]]);
        let model = kmeans(&m, 1, 7, 3).unwrap();
        assert_relative_eq!(model.centroids[0][0], 1.0);
        assert_relative_eq!(model.wss, 2.0);
        assert_eq!(model.assignments, vec![0, 0, 0]);
    }

    #[test]
    fn kmeans_rejects_bad_k() {
        let m = matrix(&["x"], &[vec![0.0], vec![1.0]]);
        assert!(matches!(kmeans(&m, 0, 1, 1), Err(AnalyticsError::BadK { .. })));
        assert!(matches!(kmeans(&m, 3, 1, 1), Err(AnalyticsError::BadK { .. })));
    }

    #[test]
    fn kmeans_two_blob_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut rows = Vec::new();
        for _ in 0..20 {
            rows.push(vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]);
        }
        for _ in 0..20 {
            rows.push(vec![
                10.0 + rng.random_range(-0.5..0.5),
                10.0 + rng.random_range(-0.5..0.5),
            ]);
        }
        let m = matrix(&["x", "y"], &rows);
        let model = kmeans(&m, 2, 99, DEFAULT_RESTARTS).unwrap();
        let first = model.assignments[0];
        assert!(model.assignments[..20].iter().all(|&a| a == first));
        assert!(model.assignments[20..].iter().all(|&a| a != first));
    }

    /// Minimum wss over every 2-partition, by brute force.
    fn exhaustive_best_two_partition(rows: &[Vec<f64>]) -> f64 {
        let n = rows.len();
        let d = rows[0].len();
        let mut best = f64::INFINITY;
        // point 0 pinned to side A kills the mirror duplicates
        for split in 0..(1u32 << (n - 1)) {
            let side = |i: usize| -> bool { i != 0 && (split >> (i - 1)) & 1 == 1 };
            if (1..n).all(|i| !side(i)) {
                continue; // side B empty
            }
            let mut wss = 0.0;
            for b_side in [false, true] {
                let members: Vec<&Vec<f64>> =
                    (0..n).filter(|&i| side(i) == b_side).map(|i| &rows[i]).collect();
                let mut mean = vec![0.0; d];
                for row in &members {
                    for (s, v) in mean.iter_mut().zip(row.iter()) {
                        *s += v;
                    }
                }
                for s in mean.iter_mut() {
                    *s /= members.len() as f64;
                }
                for row in &members {
                    wss += distance_sq(row, &mean);
                }
            }
            best = best.min(wss);
        }
        best
    }

    #[test]
    fn kmeans_matches_exhaustive_two_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..10 {
            let rows: Vec<Vec<f64>> = (0..10)
                .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                .collect();
            let m = matrix(&["x", "y"], &rows);
            let model = kmeans(&m, 2, trial, DEFAULT_RESTARTS).unwrap();
            let oracle = exhaustive_best_two_partition(&rows);
            assert_relative_eq!(model.wss, oracle, epsilon = 1e-9);
        }
    }

    #[test]
    fn kmeans_is_deterministic_and_assigns_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let m = random_matrix(&mut rng, 40, 3);
        let a = kmeans(&m, 4, 13, DEFAULT_RESTARTS).unwrap();
        let b = kmeans(&m, 4, 13, DEFAULT_RESTARTS).unwrap();
        assert_eq!(a, b);
        for (i, row) in m.rows().enumerate() {
            let (nearest, _) = nearest_centroid(row, &a.centroids);
            assert_eq!(a.assignments[i], nearest);
        }
        let c = kmeans(&m, 4, 14, DEFAULT_RESTARTS).unwrap();
        assert_eq!(c.seed, 14);
    }

    #[test]
    fn lloyd_wss_trace_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 30, 2);
            let init = kmeanspp_init(&m, 3, &mut rng);
            let fit = lloyd(&m, init);
            for pair in fit.wss_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-9, "wss rose: {pair:?}");
            }
        }
    }

    #[test]
    fn elbow_rule_on_reference_curves() {
        assert_eq!(elbow_from_curve(&[100.0, 70.0, 30.0, 25.0, 23.0]), 3);
        assert_eq!(elbow_from_curve(&[100.0, 40.0, 15.0, 13.0, 12.0]), 2);
        // equal second differences everywhere → smallest k
        assert_eq!(elbow_from_curve(&[30.0, 20.0, 12.0, 6.0, 2.0]), 2);
    }

    fn three_blob_matrix(seed: u64) -> (FeatureMatrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 8;
        let spread = 0.6;
        let centers: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..dim).map(|j| ((c * dim + j) as f64 * 2.1).sin() * 6.0).collect())
            .collect();
        let noise = Normal::new(0.0, spread).unwrap();
        let mut rows = Vec::new();
        let mut planted = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..50 {
                rows.push(center.iter().map(|v| v + noise.sample(&mut rng)).collect());
                planted.push(c);
            }
        }
        let names: Vec<&str> = ["a", "b", "c", "d", "e", "f", "g", "h"].to_vec();
        (matrix(&names, &rows), planted)
    }

    #[test]
    fn select_k_finds_three_blobs_with_monotone_curve() {
        let (m, _) = three_blob_matrix(1234);
        let selection = select_k(&m, 10, 42).unwrap();
        assert_eq!(selection.k, 3);
        assert_eq!(selection.curve.len(), 10);
        for pair in selection.curve.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "curve not monotone: {pair:?}");
        }
        assert_eq!(selection.model.k, 3);
        assert_relative_eq!(selection.model.wss, selection.curve[2]);
    }

    #[test]
    fn select_k_validates_k_max() {
        let m = matrix(&["x"], &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        assert!(matches!(select_k(&m, 2, 1), Err(AnalyticsError::BadK { .. })));
        assert!(matches!(select_k(&m, 5, 1), Err(AnalyticsError::BadK { .. })));
        assert!(select_k(&m, 4, 1).is_ok());
    }

    #[test]
    fn pca_rank_one_data() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let m = matrix(&["x", "y"], &rows);
        let (model, projected) = pca(&m, 2).unwrap();
        assert_relative_eq!(model.explained_fraction[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(model.explained_fraction[1], 0.0, epsilon = 1e-9);
        assert_eq!(projected.len(), 10);
        // second coordinate collapses
        for p in &projected {
            assert_relative_eq!(p[1], 0.0, epsilon = 1e-9);
        }
    }

    /// Eigenvalues of a 2×2 symmetric matrix via its characteristic
    /// polynomial.
    fn eigen_2x2_oracle(a: f64, b: f64, c: f64) -> (f64, f64) {
        let disc = ((a - c).powi(2) + 4.0 * b * b).sqrt();
        (((a + c) + disc) / 2.0, ((a + c) - disc) / 2.0)
    }

    #[test]
    fn pca_matches_characteristic_polynomial_in_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| vec![normal.sample(&mut rng), normal.sample(&mut rng)])
            .collect();
        let m = matrix(&["x", "y"], &rows);
        let (model, projected) = pca(&m, 2).unwrap();
        // isotropic sample: fractions near 1/2
        assert!((model.explained_fraction[0] - 0.5).abs() < 0.1);
        assert!((model.explained_fraction[1] - 0.5).abs() < 0.1);

        // covariance entries recomputed independently
        let n = rows.len() as f64;
        let mx = rows.iter().map(|r| r[0]).sum::<f64>() / n;
        let my = rows.iter().map(|r| r[1]).sum::<f64>() / n;
        let sxx = rows.iter().map(|r| (r[0] - mx).powi(2)).sum::<f64>() / (n - 1.0);
        let syy = rows.iter().map(|r| (r[1] - my).powi(2)).sum::<f64>() / (n - 1.0);
        let sxy = rows.iter().map(|r| (r[0] - mx) * (r[1] - my)).sum::<f64>() / (n - 1.0);
        let (l1, l2) = eigen_2x2_oracle(sxx, sxy, syy);
        let total = l1 + l2;
        assert_relative_eq!(model.explained_fraction[0], l1 / total, epsilon = 1e-9);
        assert_relative_eq!(model.explained_fraction[1], l2 / total, epsilon = 1e-9);

        // sample variance of each projected coordinate equals its eigenvalue
        for (j, lambda) in [l1, l2].into_iter().enumerate() {
            let pm = projected.iter().map(|p| p[j]).sum::<f64>() / n;
            let pv = projected.iter().map(|p| (p[j] - pm).powi(2)).sum::<f64>() / (n - 1.0);
            assert_relative_eq!(pv, lambda, epsilon = 1e-9);
        }
    }

    #[test]
    fn pca_components_are_orthonormal_with_positive_dominant_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = random_matrix(&mut rng, 50, 5);
        let (model, _) = pca(&m, 2).unwrap();
        assert_eq!(model.components.len(), 5);
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = model.components[i]
                    .iter()
                    .zip(&model.components[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(dot, expected, epsilon = 1e-9);
            }
            let dominant = model.components[i]
                .iter()
                .cloned()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            assert!(dominant > 0.0);
        }
        let sum: f64 = model.explained_fraction.iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-9);
        for pair in model.explained_fraction.windows(2) {
            assert!(pair[0] >= pair[1] - 1e-12);
        }
    }

    #[test]
    fn pca_reconstructs_with_all_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let m = random_matrix(&mut rng, 25, 4);
        let (model, projected) = pca(&m, 4).unwrap();
        for (row, proj) in m.rows().zip(&projected) {
            for j in 0..4 {
                let rebuilt: f64 = model.mean[j]
                    + proj
                        .iter()
                        .zip(&model.components)
                        .map(|(p, comp)| p * comp[j])
                        .sum::<f64>();
                assert_relative_eq!(rebuilt, row[j], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn bandwidth_matches_hand_computation() {
        let values: Vec<f64> = (0..10).map(|i| i as f64).collect();
        // sd = 3.02765..., IQR = 4.5 → sd branch
        assert_relative_eq!(
            silverman_bandwidth(&values).unwrap(),
            1.719286404692283,
            epsilon = 1e-12
        );
        // heavy ties: IQR 0, sd fallback
        let ties = [0.0, 0.0, 0.0, 0.0, 1.0];
        assert_relative_eq!(
            silverman_bandwidth(&ties).unwrap(),
            0.2917181874046973,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kde_degenerate_sample_is_rejected() {
        assert!(matches!(
            silverman_bandwidth(&[0.0, 0.0]),
            Err(AnalyticsError::DegenerateSample)
        ));
        assert!(matches!(
            kde_density(&[3.0], &[0.0, 1.0]),
            Err(AnalyticsError::DegenerateSample)
        ));
    }

    #[test]
    fn kde_integrates_to_one_with_peak_near_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let values: Vec<f64> = (0..1000).map(|_| normal.sample(&mut rng)).collect();
        let grid = kde_grid(&values, 512).unwrap();
        let density = kde_density(&values, &grid).unwrap();
        let mut integral = 0.0;
        for i in 1..grid.len() {
            integral += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
        }
        assert!((0.99..=1.01).contains(&integral), "integral {integral}");
        let peak = grid[density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0];
        assert!(peak.abs() < 0.25, "peak at {peak}");
    }

    #[test]
    fn kde_symmetric_input_gives_symmetric_curve() {
        let values = [-1.0, 1.0];
        let grid = kde_grid(&values, 101).unwrap();
        let density = kde_density(&values, &grid).unwrap();
        for i in 0..grid.len() {
            let mirror = grid.len() - 1 - i;
            assert_relative_eq!(density[i], density[mirror], epsilon = 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn kmeans_partitions_all_rows(seed in 0u64..1000, k in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 12, 2);
            let model = kmeans(&m, k, seed, 4).unwrap();
            prop_assert_eq!(model.assignments.len(), 12);
            prop_assert!(model.assignments.iter().all(|&a| a < k));
            prop_assert!(model.wss >= 0.0);
            // no empty clusters
            for c in 0..k {
                prop_assert!(model.assignments.iter().any(|&a| a == c));
            }
        }

        #[test]
        fn correlogram_order_is_permutation(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 10, 5);
            let corr = pearson_matrix(&m).unwrap();
            let mut order = correlogram_order(&corr);
            order.sort_unstable();
            prop_assert_eq!(order, (0..5).collect::<Vec<_>>());
        }
    }
}
