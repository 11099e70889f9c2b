//! The four subcommands. Each builds every output in memory first and
//! only then commits files, so failures exit without touching disk.

use std::collections::HashSet;
use std::path::Path;

use poremine::analytics::AnalyticsError;
use poremine::filtering::{self, FilteringError, LabelRow, PoreRecord, DEFAULT_CUTOFF_UM2};
use poremine::imaging::{self, ImagingError};
use poremine::mining::{self, MiningConfig, MiningError, MiningOutput};
use poremine::morphology::{self, MorphologyError, DEFAULT_MIN_PIXELS};
use poremine::render::{self, DensityCurve};
use poremine::synth::{self, SynthError, SynthSpec};

use crate::config::{self, parse_kv_file, ConfigFile};
use crate::outputs::OutputSet;
use crate::{CliError, KChoice, MineArgs, PoresArgs, SegmentArgs, SynthArgs};

fn imaging_code(e: &ImagingError) -> i32 {
    match e {
        ImagingError::FileUnreadable { .. } | ImagingError::UnsupportedFormat(_) => 2,
        ImagingError::InvalidScale(_) => 3,
        ImagingError::DegenerateHistogram => 4,
    }
}

fn morphology_code(e: &MorphologyError) -> i32 {
    match e {
        MorphologyError::InvalidScale(_) => 3,
        MorphologyError::DegeneratePore(_) => 4,
    }
}

fn filtering_code(e: &FilteringError) -> i32 {
    match e {
        FilteringError::Morphology(m) => morphology_code(m),
        _ => 2,
    }
}

fn analytics_code(e: &AnalyticsError) -> i32 {
    match e {
        AnalyticsError::BadK { .. } => 3,
        _ => 4,
    }
}

fn imaging_error(e: ImagingError) -> CliError {
    CliError {
        code: imaging_code(&e),
        message: e.to_string(),
    }
}

fn filtering_error(e: FilteringError) -> CliError {
    CliError {
        code: filtering_code(&e),
        message: e.to_string(),
    }
}

fn mining_error(e: MiningError) -> CliError {
    let code = match &e {
        MiningError::Imaging { source, .. } => imaging_code(source),
        MiningError::Features { source, .. } | MiningError::Labels(source) => {
            filtering_code(source)
        }
        MiningError::DuplicateImageId(_) => 3,
        MiningError::Analytics(source) => analytics_code(source),
        MiningError::LengthMismatch { .. } | MiningError::DatasetTooSmall { .. } => 4,
    };
    CliError {
        code,
        message: e.to_string(),
    }
}

pub fn segment(args: SegmentArgs, config: &ConfigFile) -> Result<(), CliError> {
    let scale = config::resolve_scale(args.scale, config)?;
    let micrograph = imaging::load_micrograph(&args.input, scale).map_err(imaging_error)?;
    let threshold = match args.threshold {
        Some(t) => t,
        None => imaging::otsu_threshold(&micrograph).map_err(imaging_error)?,
    };
    let mask = imaging::segment(&micrograph, threshold);
    let mut outputs = OutputSet::new();
    outputs.add(args.out.clone(), imaging::mask_pgm_bytes(&mask));
    outputs.commit()?;
    println!("threshold: {threshold}");
    println!("pore fraction: {:.4}", {
        let total = (mask.width() as u64 * mask.height() as u64) as f64;
        mask.pore_pixel_count() as f64 / total
    });
    Ok(())
}

fn image_id_or_args_error(path: &Path) -> Result<String, CliError> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| CliError::args(format!("{} has no file stem", path.display())))
}

pub fn pores(args: PoresArgs, config: &ConfigFile) -> Result<(), CliError> {
    let scale = config::resolve_scale(args.scale, config)?;
    let min_pixels = match args.min_pixels {
        Some(n) => n,
        None => config
            .get_usize("min_pixels")?
            .unwrap_or(DEFAULT_MIN_PIXELS),
    };
    let mask = imaging::load_mask_pgm(&args.mask).map_err(imaging_error)?;
    let pores = morphology::extract_pores(&mask, min_pixels);
    let image_id = image_id_or_args_error(&args.mask)?;
    let records =
        filtering::records_from_pores(&image_id, &pores, scale).map_err(filtering_error)?;
    let mut buffer = Vec::new();
    filtering::write_feature_csv(&mut buffer, &records)
        .map_err(|e| CliError::io(format!("cannot encode feature CSV: {e}")))?;
    let mut outputs = OutputSet::new();
    outputs.add(args.out.clone(), buffer);
    outputs.commit()?;
    println!("pores: {}", records.len());
    Ok(())
}

/// Recovers µm-per-pixel from a record: area_um2 = area_px · scale².
fn infer_scale(records: &[PoreRecord]) -> Option<f64> {
    records
        .iter()
        .find(|r| r.area_px > 0)
        .map(|r| (r.features.area / r.area_px as f64).sqrt())
}

pub fn mine(args: MineArgs, config: &ConfigFile) -> Result<(), CliError> {
    let cutoff = match args.cutoff {
        Some(c) => c,
        None => config.get_f64("cutoff")?.unwrap_or(DEFAULT_CUTOFF_UM2),
    };
    if !(cutoff.is_finite() && cutoff >= 0.0) {
        return Err(CliError::args(format!(
            "--cutoff must be finite and non-negative, got {cutoff}"
        )));
    }
    let upper_cutoff = match args.upper_cutoff {
        Some(u) => Some(u),
        None => config.get_f64("upper_cutoff")?,
    };
    if let Some(u) = upper_cutoff {
        if !(u.is_finite() && u >= cutoff) {
            return Err(CliError::args(format!(
                "--upper-cutoff must be finite and at least the lower cutoff, got {u}"
            )));
        }
    }
    let k_choice = match args.k {
        Some(k) => k,
        None => config.get_k("k")?.unwrap_or(KChoice::Auto),
    };
    let k_max = match args.kmax {
        Some(k) => k,
        None => config.get_usize("kmax")?.unwrap_or(10),
    };
    let seed = config::resolve_seed(args.seed, config)?;
    let min_pixels = match args.min_pixels {
        Some(n) => n,
        None => config
            .get_usize("min_pixels")?
            .unwrap_or(DEFAULT_MIN_PIXELS),
    };

    let mut records = Vec::new();
    for path in &args.features {
        records.extend(filtering::read_feature_csv(path).map_err(filtering_error)?);
    }
    let mut seen = HashSet::new();
    for record in &records {
        if !seen.insert((record.image_id.clone(), record.pore_id)) {
            return Err(CliError::io(format!(
                "duplicate pore ({}, {}) across feature CSVs",
                record.image_id, record.pore_id
            )));
        }
    }
    let labels: Vec<LabelRow> = match &args.labels {
        Some(path) => filtering::read_label_csv(path).map_err(filtering_error)?,
        None => Vec::new(),
    };

    let mining_config = MiningConfig {
        cutoff_um2: cutoff,
        upper_cutoff_um2: upper_cutoff,
        k: match k_choice {
            KChoice::Auto => None,
            KChoice::Fixed(k) => Some(k),
        },
        k_max,
        seed,
        min_pixels,
    };
    let output = mining::mine_dataset(records, &labels, &mining_config).map_err(mining_error)?;

    let mut outputs = OutputSet::new();
    stage_mine_outputs(&mut outputs, &args, &output, cutoff, min_pixels)?;
    outputs.commit()?;

    let report = &output.report;
    println!("kept: {} dropped: {}", report.kept, report.dropped);
    println!(
        "k: {} ({})",
        report.k,
        if report.k_was_fixed { "fixed" } else { "elbow" }
    );
    println!("seed: {seed}");
    println!(
        "pc1+pc2 explained: {:.1}%",
        (report.pc_variance.0 + report.pc_variance.1) * 100.0
    );
    match report.modal_artifact_cluster {
        Some(cluster) => println!(
            "artifact concentration: {:.3} (modal cluster {cluster})",
            report.artifact_concentration
        ),
        None => println!("artifact concentration: n/a (no labeled artifacts)"),
    }
    Ok(())
}

/// Builds every mine output file in memory.
fn stage_mine_outputs(
    outputs: &mut OutputSet,
    args: &MineArgs,
    output: &MiningOutput,
    cutoff: f64,
    min_pixels: usize,
) -> Result<(), CliError> {
    let dir = &args.out_dir;
    let report = &output.report;

    outputs.add(
        dir.join("crosstab.csv"),
        mining::crosstab_csv(report).into_bytes(),
    );
    outputs.add(
        dir.join("cluster_summary.csv"),
        mining::cluster_summary_csv(report).into_bytes(),
    );
    outputs.add(
        dir.join("pca_projection.csv"),
        mining::pca_projection_csv(output).into_bytes(),
    );
    if let Some(csv) = mining::wss_curve_csv(report) {
        outputs.add(dir.join("wss_curve.csv"), csv.into_bytes());
    }
    outputs.add(
        dir.join("report.txt"),
        mining::report_text(report).into_bytes(),
    );

    outputs.add(
        dir.join("heatmap.svg"),
        render::render_heatmap(
            &output.correlation,
            &output.feature_order,
            &output.feature_names,
        )
        .into_bytes(),
    );
    if let Some(curve) = &report.wss_curve {
        outputs.add(
            dir.join("elbow.svg"),
            render::render_elbow(curve, report.k).into_bytes(),
        );
    }
    let pca_svg =
        render::render_pca_scatter(&output.projection, &output.model.assignments, report.pc_variance)
            .expect("pipeline projection is always two-dimensional");
    outputs.add(dir.join("pca.svg"), pca_svg.into_bytes());

    let natural: Vec<DensityCurve> = report
        .cluster_stats
        .iter()
        .map(|s| s.area_density.clone())
        .filter(|c| !c.xs.is_empty())
        .collect();
    let log: Vec<DensityCurve> = report
        .cluster_stats
        .iter()
        .map(|s| s.log_area_density.clone())
        .filter(|c| !c.xs.is_empty())
        .collect();
    outputs.add(
        dir.join("density.svg"),
        render::render_densities(&natural, Some(cutoff), "pore area (µm²)").into_bytes(),
    );
    let log_cutoff = (cutoff > 0.0).then(|| cutoff.log10());
    outputs.add(
        dir.join("density_log.svg"),
        render::render_densities(&log, log_cutoff, "log10 pore area (µm²)").into_bytes(),
    );

    for mask_path in &args.masks {
        let image_id = image_id_or_args_error(mask_path)?;
        let known = output
            .dataset
            .records()
            .iter()
            .any(|r| r.image_id == image_id);
        if !known {
            return Err(CliError::args(format!(
                "--mask {}: no feature rows with image_id `{image_id}`",
                mask_path.display()
            )));
        }
        let scale = infer_scale(output.dataset.records())
            .expect("a known image_id implies at least one record");
        let mask = imaging::load_mask_pgm(mask_path).map_err(imaging_error)?;
        let pores = morphology::extract_pores(&mask, min_pixels);
        let (clusters, labels) = mining::image_cluster_overlay(output, &image_id, &pores);
        let svg = render::render_pore_map(
            mask.width(),
            mask.height(),
            &pores,
            &clusters,
            &labels,
            scale,
        );
        outputs.add(dir.join(format!("{image_id}_poremap.svg")), svg.into_bytes());
    }
    Ok(())
}

/// Keys accepted in the synth spec file.
const SYNTH_KEYS: [&str; 11] = [
    "width",
    "height",
    "fiber_count",
    "fiber_width_min",
    "fiber_width_max",
    "fiber_gray_mean",
    "fiber_gray_sd",
    "background_gray_mean",
    "background_gray_sd",
    "scale",
    "seed",
];

fn spec_value<T: std::str::FromStr>(
    values: &std::collections::HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    match values.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse::<T>()
            .map_err(|_| CliError::args(format!("spec: bad value `{raw}` for `{key}`"))),
    }
}

pub fn synth(args: SynthArgs, _config: &ConfigFile) -> Result<(), CliError> {
    let values = parse_kv_file(&args.spec, &SYNTH_KEYS)?;
    let defaults = SynthSpec::default();
    let mut spec = SynthSpec {
        width: 0,
        height: 0,
        ..defaults
    };
    for required in ["width", "height"] {
        if !values.contains_key(required) {
            return Err(CliError::args(format!("spec: missing required key `{required}`")));
        }
    }
    spec.width = spec_value(&values, "width", 0u32)?;
    spec.height = spec_value(&values, "height", 0u32)?;
    spec.fiber_count = spec_value(&values, "fiber_count", spec.fiber_count)?;
    spec.fiber_width_min = spec_value(&values, "fiber_width_min", spec.fiber_width_min)?;
    spec.fiber_width_max = spec_value(&values, "fiber_width_max", spec.fiber_width_max)?;
    spec.fiber_gray_mean = spec_value(&values, "fiber_gray_mean", spec.fiber_gray_mean)?;
    spec.fiber_gray_sd = spec_value(&values, "fiber_gray_sd", spec.fiber_gray_sd)?;
    spec.background_gray_mean =
        spec_value(&values, "background_gray_mean", spec.background_gray_mean)?;
    spec.background_gray_sd = spec_value(&values, "background_gray_sd", spec.background_gray_sd)?;
    spec.scale = spec_value(&values, "scale", spec.scale)?;
    spec.seed = match values.get("seed") {
        Some(_) => spec_value(&values, "seed", 0u64)?,
        None => config::seed_from_env()?,
    };

    let generated = synth::generate(&spec).map_err(|e| match e {
        SynthError::InvalidSpec(_)
        | SynthError::InsufficientContrast { .. }
        | SynthError::BadSeparation { .. } => CliError::args(format!("bad spec: {e}")),
        other => CliError::degenerate(other.to_string()),
    })?;

    let stem = image_id_or_args_error(&args.spec)?;
    let records = filtering::records_from_pores(&stem, &generated.pores, spec.scale)
        .map_err(filtering_error)?;
    let mut csv_buffer = Vec::new();
    filtering::write_feature_csv(&mut csv_buffer, &records)
        .map_err(|e| CliError::io(format!("cannot encode feature CSV: {e}")))?;

    let mut outputs = OutputSet::new();
    outputs.add(
        args.out_dir.join(format!("{stem}.pgm")),
        imaging::micrograph_pgm_bytes(&generated.micrograph),
    );
    outputs.add(
        args.out_dir.join(format!("{stem}_mask.pgm")),
        imaging::mask_pgm_bytes(&generated.mask),
    );
    outputs.add(args.out_dir.join(format!("{stem}_pores.csv")), csv_buffer);
    outputs.commit()?;
    println!(
        "image: {}x{} fibers: {} ground-truth pores: {}",
        spec.width,
        spec.height,
        generated.segments.len(),
        generated.pores.len()
    );
    Ok(())
}
