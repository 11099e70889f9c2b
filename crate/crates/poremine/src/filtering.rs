//! Pore dataset assembly: outlier cutoff, expert labels, and CSV I/O.
//!
//! The dataset is a flat table of per-pore records keyed by
//! `(image_id, pore_id)`. Records below the lower area cutoff
//! (default 0.4 µm², inclusive boundary: area ≥ cutoff is kept) are
//! dropped before any analysis. Expert artifact labels live in a
//! separate CSV and are joined onto the surviving records; pores without
//! a label row stay [`PoreLabel::Unlabeled`].
//!
//! All CSV output formats reals with [`format_sig6`] (6 significant
//! digits) so repeated runs are byte-identical.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::morphology::{self, Pore, PoreFeatures};

/// Default lower area cutoff in µm².
pub const DEFAULT_CUTOFF_UM2: f64 = 0.4;

/// Header of the per-pore feature CSV, in fixed column order.
pub const FEATURE_CSV_HEADER: [&str; 14] = [
    "image_id",
    "pore_id",
    "centroid_x_px",
    "centroid_y_px",
    "area_px",
    "area_um2",
    "perimeter_um",
    "major_um",
    "minor_um",
    "angle_deg",
    "circularity",
    "aspect_ratio",
    "roundness",
    "solidity",
];

/// Header of the label CSV.
pub const LABEL_CSV_HEADER: [&str; 3] = ["image_id", "pore_id", "label"];

#[derive(Debug, Error)]
pub enum FilteringError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {source}")]
    MalformedCsv { path: PathBuf, source: csv::Error },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    HeaderMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path} data row {row}: bad value `{value}` for {field}")]
    BadField {
        path: PathBuf,
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("label references unknown pore ({image_id}, {pore_id})")]
    UnknownPoreId { image_id: String, pore_id: u32 },
    #[error("duplicate label rows for pore ({image_id}, {pore_id})")]
    DuplicateLabel { image_id: String, pore_id: u32 },
    #[error("invalid label value `{0}`: expected real, shade, or overlap")]
    InvalidLabelValue(String),
    #[error(transparent)]
    Morphology(#[from] morphology::MorphologyError),
}

/// Expert classification of a pore. Label files carry the first three;
/// `Unlabeled` is the in-memory default for pores without a label row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoreLabel {
    Real,
    Shade,
    Overlap,
    Unlabeled,
}

impl PoreLabel {
    /// Parses a label file value, case-insensitively.
    pub fn parse(s: &str) -> Result<Self, FilteringError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(PoreLabel::Real),
            "shade" => Ok(PoreLabel::Shade),
            "overlap" => Ok(PoreLabel::Overlap),
            other => Err(FilteringError::InvalidLabelValue(other.to_string())),
        }
    }

    /// True for the two artifact classes.
    pub fn is_artifact(self) -> bool {
        matches!(self, PoreLabel::Shade | PoreLabel::Overlap)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PoreLabel::Real => "real",
            PoreLabel::Shade => "shade",
            PoreLabel::Overlap => "overlap",
            PoreLabel::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for PoreLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One pore's full table row: identity, location, and shape descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct PoreRecord {
    pub image_id: String,
    /// 1-based id, unique within one image.
    pub pore_id: u32,
    pub centroid_x_px: f64,
    pub centroid_y_px: f64,
    pub area_px: u64,
    pub features: PoreFeatures,
    pub label: PoreLabel,
}

/// An ordered pore table that has passed the lower cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct PoreDataset {
    records: Vec<PoreRecord>,
    cutoff_um2: f64,
    dropped: usize,
}

impl PoreDataset {
    pub fn records(&self) -> &[PoreRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<PoreRecord> {
        self.records
    }

    pub fn cutoff_um2(&self) -> f64 {
        self.cutoff_um2
    }

    /// Records removed by cutoff filtering.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Builds table rows for all pores of one image at the given µm/px
/// scale. Row order is pore id order.
pub fn records_from_pores(
    image_id: &str,
    pores: &[Pore],
    scale: f64,
) -> Result<Vec<PoreRecord>, FilteringError> {
    pores
        .iter()
        .map(|p| {
            let features = morphology::compute_features(p, scale)?;
            let (cx, cy) = p.centroid();
            Ok(PoreRecord {
                image_id: image_id.to_string(),
                pore_id: p.id(),
                centroid_x_px: cx,
                centroid_y_px: cy,
                area_px: p.pixel_count() as u64,
                features,
                label: PoreLabel::Unlabeled,
            })
        })
        .collect()
}

/// Keeps records with area ≥ `cutoff` µm² (inclusive), preserving order
/// and counting the dropped remainder.
///
/// `cutoff` must be finite and ≥ 0; 0 keeps everything.
pub fn apply_lower_cutoff(records: Vec<PoreRecord>, cutoff: f64) -> PoreDataset {
    assert!(
        cutoff.is_finite() && cutoff >= 0.0,
        "cutoff must be finite and non-negative, got {cutoff}"
    );
    let total = records.len();
    let kept: Vec<PoreRecord> = records
        .into_iter()
        .filter(|r| r.features.area >= cutoff)
        .collect();
    let dropped = total - kept.len();
    PoreDataset {
        records: kept,
        cutoff_um2: cutoff,
        dropped,
    }
}

/// Optional upper cutoff: additionally drops records with area > `upper`
/// µm², adding to the dataset's dropped count.
pub fn apply_upper_cutoff(ds: PoreDataset, upper: f64) -> PoreDataset {
    assert!(
        upper.is_finite() && upper >= 0.0,
        "cutoff must be finite and non-negative, got {upper}"
    );
    let total = ds.records.len();
    let kept: Vec<PoreRecord> = ds
        .records
        .into_iter()
        .filter(|r| r.features.area <= upper)
        .collect();
    let dropped = ds.dropped + (total - kept.len());
    PoreDataset {
        records: kept,
        cutoff_um2: ds.cutoff_um2,
        dropped,
    }
}

/// One parsed row of a label CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub image_id: String,
    pub pore_id: u32,
    pub label: PoreLabel,
}

/// Applies label rows to matching records; unmatched records stay
/// `Unlabeled`.
///
/// Every row must reference a record present in the dataset, and no pore
/// may be labeled twice. Feature values are never touched.
pub fn join_labels(
    mut ds: PoreDataset,
    labels: &[LabelRow],
) -> Result<PoreDataset, FilteringError> {
    let mut index: HashMap<(String, u32), usize> = HashMap::with_capacity(ds.records.len());
    for (i, r) in ds.records.iter().enumerate() {
        index.insert((r.image_id.clone(), r.pore_id), i);
    }
    let mut labeled = vec![false; ds.records.len()];
    for row in labels {
        let Some(&i) = index.get(&(row.image_id.clone(), row.pore_id)) else {
            return Err(FilteringError::UnknownPoreId {
                image_id: row.image_id.clone(),
                pore_id: row.pore_id,
            });
        };
        if labeled[i] {
            return Err(FilteringError::DuplicateLabel {
                image_id: row.image_id.clone(),
                pore_id: row.pore_id,
            });
        }
        labeled[i] = true;
        ds.records[i].label = row.label;
    }
    Ok(ds)
}

/// Formats a real with 6 significant digits.
///
/// Fixed notation while the leading digit sits in 10⁻⁴…10⁵, scientific
/// (`1.23457e-8`) outside; trailing zeros trimmed; zero is `0`. The
/// mapping is deterministic, so identical numbers always yield identical
/// bytes.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // {:.5e} rounds to 6 significant digits and exposes the exponent.
    let sci = format!("{x:.5e}");
    let (mantissa, exp_str) = sci.split_once('e').expect("exponent in {:.5e} output");
    let exp: i32 = exp_str.parse().expect("numeric exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_trailing_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_trailing_zeros(mantissa.to_string()), exp)
    }
}

fn trim_trailing_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// Writes the feature CSV (header + one row per record) to `w`.
pub fn write_feature_csv<W: Write>(w: W, records: &[PoreRecord]) -> Result<(), csv::Error> {
    let mut csv_writer = csv::Writer::from_writer(w);
    csv_writer.write_record(FEATURE_CSV_HEADER)?;
    for r in records {
        let f = &r.features;
        csv_writer.write_record([
            r.image_id.as_str(),
            &r.pore_id.to_string(),
            &format_sig6(r.centroid_x_px),
            &format_sig6(r.centroid_y_px),
            &r.area_px.to_string(),
            &format_sig6(f.area),
            &format_sig6(f.perimeter),
            &format_sig6(f.major),
            &format_sig6(f.minor),
            &format_sig6(f.angle),
            &format_sig6(f.circularity),
            &format_sig6(f.aspect_ratio),
            &format_sig6(f.roundness),
            &format_sig6(f.solidity),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<File, FilteringError> {
    File::open(path).map_err(|source| FilteringError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })
}

fn check_header(
    path: &Path,
    found: &csv::StringRecord,
    expected: &[&str],
) -> Result<(), FilteringError> {
    let found_cols: Vec<&str> = found.iter().map(str::trim).collect();
    if found_cols != expected {
        return Err(FilteringError::HeaderMismatch {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: found_cols.join(","),
        });
    }
    Ok(())
}

/// Reads a feature CSV produced by [`write_feature_csv`]. Labels come
/// back `Unlabeled`; the header must match the canonical schema exactly.
pub fn read_feature_csv(path: &Path) -> Result<Vec<PoreRecord>, FilteringError> {
    read_feature_csv_from(open(path)?, path)
}

fn read_feature_csv_from<R: Read>(r: R, path: &Path) -> Result<Vec<PoreRecord>, FilteringError> {
    let malformed = |source| FilteringError::MalformedCsv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_reader(r);
    check_header(path, reader.headers().map_err(malformed)?, &FEATURE_CSV_HEADER)?;
    let mut records = Vec::new();
    for (row_index, row) in reader.records().enumerate() {
        let row = row.map_err(malformed)?;
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let bad = |field_name: &'static str, value: &str| FilteringError::BadField {
            path: path.to_path_buf(),
            row: row_index + 1,
            field: field_name,
            value: value.to_string(),
        };
        let parse_f64 = |i: usize, name: &'static str| -> Result<f64, FilteringError> {
            let value = field(i);
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(name, value))
        };
        records.push(PoreRecord {
            image_id: field(0).to_string(),
            pore_id: field(1)
                .parse()
                .map_err(|_| bad("pore_id", field(1)))?,
            centroid_x_px: parse_f64(2, "centroid_x_px")?,
            centroid_y_px: parse_f64(3, "centroid_y_px")?,
            area_px: field(4)
                .parse()
                .map_err(|_| bad("area_px", field(4)))?,
            features: PoreFeatures {
                area: parse_f64(5, "area_um2")?,
                perimeter: parse_f64(6, "perimeter_um")?,
                major: parse_f64(7, "major_um")?,
                minor: parse_f64(8, "minor_um")?,
                angle: parse_f64(9, "angle_deg")?,
                circularity: parse_f64(10, "circularity")?,
                aspect_ratio: parse_f64(11, "aspect_ratio")?,
                roundness: parse_f64(12, "roundness")?,
                solidity: parse_f64(13, "solidity")?,
            },
            label: PoreLabel::Unlabeled,
        });
    }
    Ok(records)
}

/// Reads a label CSV (`image_id,pore_id,label`); label values are
/// case-insensitive `real`/`shade`/`overlap`.
pub fn read_label_csv(path: &Path) -> Result<Vec<LabelRow>, FilteringError> {
    read_label_csv_from(open(path)?, path)
}

fn read_label_csv_from<R: Read>(r: R, path: &Path) -> Result<Vec<LabelRow>, FilteringError> {
    let malformed = |source| FilteringError::MalformedCsv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_reader(r);
    check_header(path, reader.headers().map_err(malformed)?, &LABEL_CSV_HEADER)?;
    let mut rows = Vec::new();
    for (row_index, row) in reader.records().enumerate() {
        let row = row.map_err(malformed)?;
        let pore_id_field = row.get(1).unwrap_or("").trim();
        let pore_id = pore_id_field
            .parse()
            .map_err(|_| FilteringError::BadField {
                path: path.to_path_buf(),
                row: row_index + 1,
                field: "pore_id",
                value: pore_id_field.to_string(),
            })?;
        rows.push(LabelRow {
            image_id: row.get(0).unwrap_or("").trim().to_string(),
            pore_id,
            label: PoreLabel::parse(row.get(2).unwrap_or(""))?,
        });
    }
    Ok(rows)
}
