//! Pipeline orchestration: from micrographs (or assembled pore records)
//! to the clustered dataset, cluster–artifact cross-tabulation, and
//! per-cluster summaries.
//!
//! Cluster indices coming out of k-means are exchangeable, so the
//! pipeline relabels them by ascending mean pore area: cluster 0 always
//! holds the smallest pores. All downstream artifacts — crosstab,
//! summaries, plots, CSVs — use that canonical order, which makes the
//! "small-pore cluster" a stable, reproducible notion.
//!
//! Everything is deterministic given the seed; per-image stages run
//! concurrently and merge in input order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::{
    self, AnalyticsError, ClusterModel, FeatureMatrix, PCAModel, DEFAULT_RESTARTS,
};
use crate::filtering::{
    self, format_sig6, FilteringError, LabelRow, PoreDataset, PoreLabel, PoreRecord,
    DEFAULT_CUTOFF_UM2,
};
use crate::imaging::{self, BinaryMask, ImagingError};
use crate::morphology::{self, Pore, DEFAULT_MIN_PIXELS, FEATURE_NAMES};
use crate::render::DensityCurve;

/// Fixed crosstab column order.
pub const LABEL_ORDER: [PoreLabel; 4] = [
    PoreLabel::Real,
    PoreLabel::Shade,
    PoreLabel::Overlap,
    PoreLabel::Unlabeled,
];

/// Evaluation points per density curve.
const DENSITY_GRID_POINTS: usize = 200;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("imaging stage failed for `{image}`: {source}")]
    Imaging {
        image: String,
        source: ImagingError,
    },
    #[error("feature stage failed for `{image}`: {source}")]
    Features {
        image: String,
        source: FilteringError,
    },
    #[error("two input images share the id `{0}`")]
    DuplicateImageId(String),
    #[error("label join failed: {0}")]
    Labels(#[source] FilteringError),
    #[error("analytics stage failed: {0}")]
    Analytics(#[from] AnalyticsError),
    #[error("assignments and labels differ in length: {assignments} vs {labels}")]
    LengthMismatch { assignments: usize, labels: usize },
    #[error("dataset too small after filtering: {kept} pores kept, need at least {min}")]
    DatasetTooSmall { kept: usize, min: usize },
}

/// Tunable pipeline parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MiningConfig {
    /// Lower area cutoff, µm² (inclusive keep boundary).
    pub cutoff_um2: f64,
    /// Optional upper cutoff, µm².
    pub upper_cutoff_um2: Option<f64>,
    /// Fixed cluster count; `None` selects k by the elbow rule.
    pub k: Option<usize>,
    /// Largest k probed by automatic selection.
    pub k_max: usize,
    pub seed: u64,
    /// Minimum pixel count for a component to count as a pore.
    pub min_pixels: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            cutoff_um2: DEFAULT_CUTOFF_UM2,
            upper_cutoff_um2: None,
            k: None,
            k_max: 10,
            seed: 0,
            min_pixels: DEFAULT_MIN_PIXELS,
        }
    }
}

/// Per-cluster descriptive statistics and density curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub cluster: usize,
    pub count: usize,
    pub mean_area_um2: f64,
    pub mean_log10_area: f64,
    pub median_log10_area: f64,
    pub mean_roundness: f64,
    /// Area density on the natural scale; empty when the cluster is too
    /// small or too uniform for a kernel estimate.
    pub area_density: DensityCurve,
    /// Area density over log10(area), same caveat.
    pub log_area_density: DensityCurve,
}

/// The analysis products of one mining run.
#[derive(Debug, Clone, PartialEq)]
pub struct MiningReport {
    pub k: usize,
    /// True when k came from configuration rather than the elbow rule.
    pub k_was_fixed: bool,
    pub cluster_sizes: Vec<usize>,
    /// Rows = clusters (canonical order), columns = [`LABEL_ORDER`].
    pub crosstab: Vec<[usize; 4]>,
    /// Explained fractions of PC1 and PC2.
    pub pc_variance: (f64, f64),
    /// wss at k = 1..=k_max; present only for automatic selection.
    pub wss_curve: Option<Vec<f64>>,
    pub cluster_stats: Vec<ClusterStats>,
    /// Cluster holding the most labeled artifacts, if any are labeled.
    pub modal_artifact_cluster: Option<usize>,
    /// Fraction of labeled artifacts (shade + overlap) sitting in the
    /// modal artifact cluster; 0 when nothing is labeled.
    pub artifact_concentration: f64,
    pub kept: usize,
    pub dropped: usize,
}

/// Everything produced by [`mine_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct MiningOutput {
    pub dataset: PoreDataset,
    pub model: ClusterModel,
    pub pca: PCAModel,
    /// Rows projected onto PC1/PC2, aligned with the dataset.
    pub projection: Vec<Vec<f64>>,
    /// Pearson correlations of all features (angle included).
    pub correlation: Vec<Vec<f64>>,
    /// Dendrogram leaf order for the heatmap.
    pub feature_order: Vec<usize>,
    pub feature_names: Vec<String>,
    pub report: MiningReport,
}

/// Per-image segmentation artifacts from [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct ImageArtifacts {
    pub image_id: String,
    pub threshold: u8,
    pub mask: BinaryMask,
    /// All extracted pores, including those later dropped by the cutoff.
    pub pores: Vec<Pore>,
}

/// End-to-end result: per-image artifacts plus the mined analysis.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub images: Vec<ImageArtifacts>,
    pub mining: MiningOutput,
}

/// Cross-tabulates cluster assignments against labels.
///
/// Rows are clusters 0..k in order; columns follow [`LABEL_ORDER`].
pub fn crosstab(
    assignments: &[usize],
    labels: &[PoreLabel],
    k: usize,
) -> Result<Vec<[usize; 4]>, MiningError> {
    if assignments.len() != labels.len() {
        return Err(MiningError::LengthMismatch {
            assignments: assignments.len(),
            labels: labels.len(),
        });
    }
    let mut table = vec![[0usize; 4]; k];
    for (&a, &label) in assignments.iter().zip(labels) {
        table[a][label_column(label)] += 1;
    }
    Ok(table)
}

fn label_column(label: PoreLabel) -> usize {
    LABEL_ORDER
        .iter()
        .position(|&l| l == label)
        .expect("every label is in LABEL_ORDER")
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn density_or_empty(values: &[f64], label: String) -> DensityCurve {
    match analytics::kde_grid(values, DENSITY_GRID_POINTS)
        .and_then(|grid| analytics::kde_density(values, &grid).map(|ys| (grid, ys)))
    {
        Ok((xs, ys)) => DensityCurve { label, xs, ys },
        // too few or too uniform values for a kernel estimate
        Err(_) => DensityCurve {
            label,
            xs: Vec::new(),
            ys: Vec::new(),
        },
    }
}

/// Per-cluster counts, log-area statistics, mean roundness, and area
/// density curves (natural and log10 scale).
pub fn cluster_summaries(
    ds: &PoreDataset,
    assignments: &[usize],
    k: usize,
) -> Result<Vec<ClusterStats>, MiningError> {
    if assignments.len() != ds.len() {
        return Err(MiningError::LengthMismatch {
            assignments: assignments.len(),
            labels: ds.len(),
        });
    }
    let mut stats = Vec::with_capacity(k);
    for cluster in 0..k {
        let areas: Vec<f64> = ds
            .records()
            .iter()
            .zip(assignments)
            .filter(|(_, &a)| a == cluster)
            .map(|(r, _)| r.features.area)
            .collect();
        let roundness: Vec<f64> = ds
            .records()
            .iter()
            .zip(assignments)
            .filter(|(_, &a)| a == cluster)
            .map(|(r, _)| r.features.roundness)
            .collect();
        let count = areas.len();
        let n = count as f64;
        let mut log_areas: Vec<f64> = areas.iter().map(|a| a.log10()).collect();
        let mean_log10_area = log_areas.iter().sum::<f64>() / n;
        log_areas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        stats.push(ClusterStats {
            cluster,
            count,
            mean_area_um2: areas.iter().sum::<f64>() / n,
            mean_log10_area,
            median_log10_area: median_sorted(&log_areas),
            mean_roundness: roundness.iter().sum::<f64>() / n,
            area_density: density_or_empty(&areas, format!("cluster {cluster}")),
            log_area_density: density_or_empty(
                &areas.iter().map(|a| a.log10()).collect::<Vec<f64>>(),
                format!("cluster {cluster}"),
            ),
        });
    }
    Ok(stats)
}

/// Relabels clusters so index 0 has the lowest mean raw area, returning
/// `new_index[old_index]`.
fn area_rank_permutation(ds: &PoreDataset, model: &ClusterModel) -> Vec<usize> {
    let k = model.k;
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (record, &a) in ds.records().iter().zip(&model.assignments) {
        sums[a] += record.features.area;
        counts[a] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let mean_a = sums[a] / counts[a].max(1) as f64;
        let mean_b = sums[b] / counts[b].max(1) as f64;
        mean_a.partial_cmp(&mean_b).unwrap().then(a.cmp(&b))
    });
    let mut new_index = vec![0usize; k];
    for (rank, &old) in order.iter().enumerate() {
        new_index[old] = rank;
    }
    new_index
}

fn relabel_model(model: &mut ClusterModel, new_index: &[usize]) {
    let mut centroids = vec![Vec::new(); model.k];
    for (old, centroid) in model.centroids.drain(..).enumerate() {
        centroids[new_index[old]] = centroid;
    }
    model.centroids = centroids;
    for a in model.assignments.iter_mut() {
        *a = new_index[*a];
    }
}

/// Runs filtering → analytics → report over assembled pore records.
///
/// Stages, in order: lower (and optional upper) area cutoff, label
/// join, 9-feature correlation for the heatmap, drop of the angle
/// column, standardization, k selection (elbow unless fixed), k-means,
/// two-component PCA, canonical relabeling by mean area, crosstab and
/// per-cluster summaries.
pub fn mine_dataset(
    records: Vec<PoreRecord>,
    labels: &[LabelRow],
    config: &MiningConfig,
) -> Result<MiningOutput, MiningError> {
    let ds = filtering::apply_lower_cutoff(records, config.cutoff_um2);
    let ds = match config.upper_cutoff_um2 {
        Some(upper) => filtering::apply_upper_cutoff(ds, upper),
        None => ds,
    };
    let ds = filtering::join_labels(ds, labels).map_err(MiningError::Labels)?;

    let min_needed = config.k.unwrap_or(3).max(2);
    if ds.len() < min_needed {
        return Err(MiningError::DatasetTooSmall {
            kept: ds.len(),
            min: min_needed,
        });
    }

    let feature_names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<f64>> = ds
        .records()
        .iter()
        .map(|r| r.features.values().to_vec())
        .collect();
    let full = FeatureMatrix::from_rows(feature_names.clone(), &rows)?;
    let correlation = analytics::pearson_matrix(&full)?;
    let feature_order = analytics::correlogram_order(&correlation);

    let reduced = analytics::drop_feature(&full, "angle")?;
    let standardized = analytics::standardize(&reduced)?;

    let (k, k_was_fixed, wss_curve, mut model) = match config.k {
        Some(k) => {
            let model = analytics::kmeans(&standardized, k, config.seed, DEFAULT_RESTARTS)?;
            (k, true, None, model)
        }
        None => {
            let k_max = config.k_max.min(standardized.n_rows());
            let selection = analytics::select_k(&standardized, k_max, config.seed)?;
            (selection.k, false, Some(selection.curve), selection.model)
        }
    };

    let (pca, projection) = analytics::pca(&standardized, 2)?;

    let new_index = area_rank_permutation(&ds, &model);
    relabel_model(&mut model, &new_index);

    let record_labels: Vec<PoreLabel> = ds.records().iter().map(|r| r.label).collect();
    let table = crosstab(&model.assignments, &record_labels, k)?;
    let cluster_sizes: Vec<usize> = table.iter().map(|row| row.iter().sum()).collect();
    let cluster_stats = cluster_summaries(&ds, &model.assignments, k)?;

    let artifact_counts: Vec<usize> = table
        .iter()
        .map(|row| row[label_column(PoreLabel::Shade)] + row[label_column(PoreLabel::Overlap)])
        .collect();
    let total_artifacts: usize = artifact_counts.iter().sum();
    let (modal_artifact_cluster, artifact_concentration) = if total_artifacts == 0 {
        (None, 0.0)
    } else {
        let modal = artifact_counts
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
            .map(|(i, _)| i)
            .expect("k >= 1");
        (
            Some(modal),
            artifact_counts[modal] as f64 / total_artifacts as f64,
        )
    };

    let report = MiningReport {
        k,
        k_was_fixed,
        cluster_sizes,
        crosstab: table,
        pc_variance: (pca.explained_fraction[0], pca.explained_fraction[1]),
        wss_curve,
        cluster_stats,
        modal_artifact_cluster,
        artifact_concentration,
        kept: ds.len(),
        dropped: ds.dropped(),
    };
    Ok(MiningOutput {
        dataset: ds,
        model,
        pca,
        projection,
        correlation,
        feature_order,
        feature_names,
        report,
    })
}

/// Segments one image, extracts pores, and builds its table rows.
fn process_image(
    path: &Path,
    scale: f64,
    min_pixels: usize,
) -> Result<(ImageArtifacts, Vec<PoreRecord>), MiningError> {
    let image_id = image_id_from_path(path);
    let imaging_stage = |source| MiningError::Imaging {
        image: image_id.clone(),
        source,
    };
    let micrograph = imaging::load_micrograph(path, scale).map_err(imaging_stage)?;
    let threshold = imaging::otsu_threshold(&micrograph).map_err(imaging_stage)?;
    let mask = imaging::segment(&micrograph, threshold);
    let pores = morphology::extract_pores(&mask, min_pixels);
    let records = filtering::records_from_pores(&image_id, &pores, scale).map_err(|source| {
        MiningError::Features {
            image: image_id.clone(),
            source,
        }
    })?;
    Ok((
        ImageArtifacts {
            image_id,
            threshold,
            mask,
            pores,
        },
        records,
    ))
}

/// Default image id: the file stem.
pub fn image_id_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Full pipeline from micrograph files: segment → extract → features
/// per image (concurrently, merged in input order), then
/// [`mine_dataset`] over the combined records.
pub fn run_pipeline(
    image_paths: &[PathBuf],
    scale: f64,
    labels: &[LabelRow],
    config: &MiningConfig,
) -> Result<PipelineOutput, MiningError> {
    let processed: Vec<Result<(ImageArtifacts, Vec<PoreRecord>), MiningError>> = image_paths
        .par_iter()
        .map(|path| process_image(path, scale, config.min_pixels))
        .collect();
    let mut images = Vec::with_capacity(image_paths.len());
    let mut records = Vec::new();
    for result in processed {
        let (artifacts, image_records) = result?;
        if images
            .iter()
            .any(|existing: &ImageArtifacts| existing.image_id == artifacts.image_id)
        {
            return Err(MiningError::DuplicateImageId(artifacts.image_id));
        }
        images.push(artifacts);
        records.extend(image_records);
    }
    let mining = mine_dataset(records, labels, config)?;
    Ok(PipelineOutput { images, mining })
}

/// Cluster and label overlays for one image's pores, aligned with
/// `pores`; pores that were dropped before clustering get `None`.
pub fn image_cluster_overlay(
    mining: &MiningOutput,
    image_id: &str,
    pores: &[Pore],
) -> (Vec<Option<usize>>, Vec<PoreLabel>) {
    let mut clusters = Vec::with_capacity(pores.len());
    let mut labels = Vec::with_capacity(pores.len());
    for pore in pores {
        let row = mining
            .dataset
            .records()
            .iter()
            .position(|r| r.image_id == image_id && r.pore_id == pore.id());
        clusters.push(row.map(|i| mining.model.assignments[i]));
        labels.push(row.map_or(PoreLabel::Unlabeled, |i| mining.dataset.records()[i].label));
    }
    (clusters, labels)
}

fn csv_string(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    build(&mut writer).expect("writing CSV to memory cannot fail");
    String::from_utf8(writer.into_inner().expect("flushed")).expect("CSV output is UTF-8")
}

/// `crosstab.csv`: per-cluster label counts plus totals.
pub fn crosstab_csv(report: &MiningReport) -> String {
    csv_string(|w| {
        w.write_record(["cluster", "real", "shade", "overlap", "unlabeled", "total"])?;
        for (cluster, row) in report.crosstab.iter().enumerate() {
            let total: usize = row.iter().sum();
            w.write_record([
                cluster.to_string(),
                row[0].to_string(),
                row[1].to_string(),
                row[2].to_string(),
                row[3].to_string(),
                total.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// `wss_curve.csv`: the elbow input, when k was selected automatically.
pub fn wss_curve_csv(report: &MiningReport) -> Option<String> {
    let curve = report.wss_curve.as_ref()?;
    Some(csv_string(|w| {
        w.write_record(["k", "wss"])?;
        for (i, wss) in curve.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format_sig6(*wss)])?;
        }
        Ok(())
    }))
}

/// `pca_projection.csv`: PC1/PC2 coordinates and cluster per pore.
pub fn pca_projection_csv(output: &MiningOutput) -> String {
    csv_string(|w| {
        w.write_record(["image_id", "pore_id", "pc1", "pc2", "cluster"])?;
        for ((record, proj), &cluster) in output
            .dataset
            .records()
            .iter()
            .zip(&output.projection)
            .zip(&output.model.assignments)
        {
            w.write_record([
                record.image_id.clone(),
                record.pore_id.to_string(),
                format_sig6(proj[0]),
                format_sig6(proj[1]),
                cluster.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// `cluster_summary.csv`: sizes, area statistics, and label counts.
pub fn cluster_summary_csv(report: &MiningReport) -> String {
    csv_string(|w| {
        w.write_record([
            "cluster",
            "count",
            "mean_area_um2",
            "mean_log10_area",
            "median_log10_area",
            "mean_roundness",
            "real",
            "shade",
            "overlap",
            "unlabeled",
        ])?;
        for stats in &report.cluster_stats {
            let row = report.crosstab[stats.cluster];
            w.write_record([
                stats.cluster.to_string(),
                stats.count.to_string(),
                format_sig6(stats.mean_area_um2),
                format_sig6(stats.mean_log10_area),
                format_sig6(stats.median_log10_area),
                format_sig6(stats.mean_roundness),
                row[0].to_string(),
                row[1].to_string(),
                row[2].to_string(),
                row[3].to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Human-readable run summary.
pub fn report_text(report: &MiningReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "pores kept: {} (dropped {} outside the area cutoffs)",
        report.kept, report.dropped
    );
    let _ = writeln!(
        out,
        "k = {} ({})",
        report.k,
        if report.k_was_fixed {
            "fixed by configuration"
        } else {
            "elbow of the wss curve"
        }
    );
    let _ = writeln!(
        out,
        "cluster sizes (ascending mean area): {:?}",
        report.cluster_sizes
    );
    let _ = writeln!(
        out,
        "PC1+PC2 explained variance: {:.1}%",
        (report.pc_variance.0 + report.pc_variance.1) * 100.0
    );
    let _ = writeln!(out, "crosstab (cluster: real shade overlap unlabeled):");
    for (cluster, row) in report.crosstab.iter().enumerate() {
        let _ = writeln!(
            out,
            "  cluster {cluster}: {} {} {} {}",
            row[0], row[1], row[2], row[3]
        );
    }
    match report.modal_artifact_cluster {
        Some(cluster) => {
            let _ = writeln!(
                out,
                "modal artifact cluster: {cluster} (concentration {:.3})",
                report.artifact_concentration
            );
        }
        None => {
            let _ = writeln!(out, "no labeled artifacts");
        }
    }
    for stats in &report.cluster_stats {
        let _ = writeln!(
            out,
            "cluster {}: n={} mean area {} µm², mean log10(area) {:.4}, \
             median log10(area) {:.4}, mean roundness {:.4}",
            stats.cluster,
            stats.count,
            format_sig6(stats.mean_area_um2),
            stats.mean_log10_area,
            stats.median_log10_area,
            stats.mean_roundness
        );
    }
    out
}
