//! Synthetic fibrous micrographs and feature blobs with known ground
//! truth.
//!
//! The image generator draws randomly placed constant-width bright
//! fiber segments over a dark background, then adds per-phase Gaussian
//! noise. The noise-free two-phase image is the ground-truth mask, and
//! its dark 8-connected components of at least 10 pixels are the
//! ground-truth pores — so segmentation and pore extraction can be
//! checked pixel-for-pixel without any real micrograph.
//!
//! The blob generator plants labeled Gaussian clusters in feature space
//! for exercising k selection and cluster recovery. Noise vectors are
//! redrawn until they fall strictly inside 3 spreads of their center,
//! so centers 6 spreads apart guarantee exact nearest-center recovery.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::analytics::{AnalyticsError, FeatureMatrix};
use crate::imaging::{BinaryMask, ImagingError, Micrograph, Phase};
use crate::morphology::{self, Pore, DEFAULT_MIN_PIXELS};

/// Minimum ratio of center separation to spread for planted blobs.
pub const MIN_SEPARATION_SPREADS: f64 = 6.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(
        "fiber gray {fiber} must exceed background gray {background} \
         by more than 3 combined noise sd (> {min_gap:.2})"
    )]
    InsufficientContrast {
        fiber: f64,
        background: f64,
        min_gap: f64,
    },
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("centers {a} and {b} are {dist:.3} apart, closer than 6 spreads ({required:.3})")]
    BadSeparation {
        a: usize,
        b: usize,
        dist: f64,
        required: f64,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// Recipe for one synthetic micrograph.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: u32,
    pub height: u32,
    pub fiber_count: u32,
    /// Fiber stroke width range in pixels, inclusive.
    pub fiber_width_min: f64,
    pub fiber_width_max: f64,
    /// Bright phase gray level and noise sd.
    pub fiber_gray_mean: f64,
    pub fiber_gray_sd: f64,
    /// Dark (pore) phase gray level and noise sd.
    pub background_gray_mean: f64,
    pub background_gray_sd: f64,
    /// µm per pixel stamped on the generated micrograph.
    pub scale: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            fiber_count: 25,
            fiber_width_min: 4.0,
            fiber_width_max: 12.0,
            fiber_gray_mean: 200.0,
            fiber_gray_sd: 4.0,
            background_gray_mean: 30.0,
            background_gray_sd: 4.0,
            scale: 0.0447,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Checks dimensional sanity and the contrast margin that makes the
    /// two gray populations separable.
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::InvalidSpec(format!(
                "dimensions {}x{} must be positive",
                self.width, self.height
            )));
        }
        let widths_ok = self.fiber_width_min.is_finite()
            && self.fiber_width_max.is_finite()
            && self.fiber_width_min > 0.0
            && self.fiber_width_max >= self.fiber_width_min;
        if !widths_ok {
            return Err(SynthError::InvalidSpec(format!(
                "fiber width range {}..{} must be positive and ordered",
                self.fiber_width_min, self.fiber_width_max
            )));
        }
        for (name, v) in [
            ("fiber_gray_mean", self.fiber_gray_mean),
            ("fiber_gray_sd", self.fiber_gray_sd),
            ("background_gray_mean", self.background_gray_mean),
            ("background_gray_sd", self.background_gray_sd),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(SynthError::InvalidSpec(format!(
                    "{name} = {v} must be finite and non-negative"
                )));
            }
        }
        for (name, v) in [
            ("fiber_gray_mean", self.fiber_gray_mean),
            ("background_gray_mean", self.background_gray_mean),
        ] {
            if v > 255.0 {
                return Err(SynthError::InvalidSpec(format!(
                    "{name} = {v} exceeds the 8-bit range"
                )));
            }
        }
        let combined_sd =
            (self.fiber_gray_sd.powi(2) + self.background_gray_sd.powi(2)).sqrt();
        let min_gap = 3.0 * combined_sd;
        if self.fiber_gray_mean <= self.background_gray_mean + min_gap {
            return Err(SynthError::InsufficientContrast {
                fiber: self.fiber_gray_mean,
                background: self.background_gray_mean,
                min_gap,
            });
        }
        Ok(())
    }
}

/// One constant-width fiber stroke between two endpoints, in pixel
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSegment {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub width: f64,
}

impl FiberSegment {
    /// Distance from a point to the segment.
    fn distance_to(&self, px: f64, py: f64) -> f64 {
        let (dx, dy) = (self.x1 - self.x0, self.y1 - self.y0);
        let len_sq = dx * dx + dy * dy;
        let t = if len_sq == 0.0 {
            0.0
        } else {
            (((px - self.x0) * dx + (py - self.y0) * dy) / len_sq).clamp(0.0, 1.0)
        };
        let (cx, cy) = (self.x0 + t * dx, self.y0 + t * dy);
        (px - cx).hypot(py - cy)
    }
}

/// Rasterizes fiber strokes over a pore-phase canvas: a pixel whose
/// center lies within half a stroke width of any segment becomes fiber.
pub fn rasterize_fibers(width: u32, height: u32, segments: &[FiberSegment]) -> BinaryMask {
    let mut mask = BinaryMask::filled(width, height, Phase::Pore);
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            if segments
                .iter()
                .any(|s| s.distance_to(px, py) <= s.width / 2.0)
            {
                mask.set(x, y, Phase::Fiber);
            }
        }
    }
    mask
}

/// A generated micrograph with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub micrograph: Micrograph,
    /// Noise-free two-phase image.
    pub mask: BinaryMask,
    /// Dark 8-connected components of ≥ 10 px in the ground-truth mask.
    pub pores: Vec<Pore>,
    /// The fiber strokes actually drawn.
    pub segments: Vec<FiberSegment>,
}

/// Generates a synthetic micrograph: random fiber strokes, per-phase
/// Gaussian noise clipped to [0, 255], and the exact ground truth.
/// Identical specs produce identical bytes.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let segments: Vec<FiberSegment> = (0..spec.fiber_count)
        .map(|_| FiberSegment {
            x0: rng.random_range(0.0..w as f64),
            y0: rng.random_range(0.0..h as f64),
            x1: rng.random_range(0.0..w as f64),
            y1: rng.random_range(0.0..h as f64),
            width: if spec.fiber_width_max > spec.fiber_width_min {
                rng.random_range(spec.fiber_width_min..=spec.fiber_width_max)
            } else {
                spec.fiber_width_min
            },
        })
        .collect();
    let mask = rasterize_fibers(w, h, &segments);

    let fiber_noise = Normal::new(spec.fiber_gray_mean, spec.fiber_gray_sd)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let background_noise = Normal::new(spec.background_gray_mean, spec.background_gray_sd)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let intensities: Vec<u8> = mask
        .phases()
        .iter()
        .map(|phase| {
            let gray = match phase {
                Phase::Fiber => fiber_noise.sample(&mut rng),
                Phase::Pore => background_noise.sample(&mut rng),
            };
            gray.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    let micrograph = Micrograph::new(w, h, intensities, spec.scale)?;
    let pores = morphology::extract_pores(&mask, DEFAULT_MIN_PIXELS);
    Ok(SynthOutput {
        micrograph,
        mask,
        pores,
        segments,
    })
}

/// Plants `n_per_cluster` points around each center with truncated
/// Gaussian noise (per-axis sd `spread`, total deviation < 3·spread).
///
/// Centers must be pairwise at least 6·spread apart, which makes the
/// returned assignment recoverable exactly by the nearest-center rule.
pub fn generate_feature_blobs(
    n_per_cluster: usize,
    centers: &[Vec<f64>],
    spread: f64,
    seed: u64,
) -> Result<(FeatureMatrix, Vec<usize>), SynthError> {
    if centers.is_empty() || n_per_cluster == 0 {
        return Err(SynthError::InvalidSpec(
            "need at least one center and one point per cluster".to_string(),
        ));
    }
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return Err(SynthError::InvalidSpec(
            "centers must share one positive dimension".to_string(),
        ));
    }
    if !(spread.is_finite() && spread > 0.0) {
        return Err(SynthError::InvalidSpec(format!(
            "spread {spread} must be positive and finite"
        )));
    }
    let required = MIN_SEPARATION_SPREADS * spread;
    for a in 0..centers.len() {
        for b in (a + 1)..centers.len() {
            let dist = centers[a]
                .iter()
                .zip(&centers[b])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist < required {
                return Err(SynthError::BadSeparation {
                    a,
                    b,
                    dist,
                    required,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let limit = 3.0 * spread;
    let mut rows = Vec::with_capacity(n_per_cluster * centers.len());
    let mut assignments = Vec::with_capacity(n_per_cluster * centers.len());
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..n_per_cluster {
            let offset = loop {
                let candidate: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
                let norm = candidate.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm < limit {
                    break candidate;
                }
            };
            rows.push(
                center
                    .iter()
                    .zip(&offset)
                    .map(|(c, o)| c + o)
                    .collect::<Vec<f64>>(),
            );
            assignments.push(label);
        }
    }
    let names: Vec<String> = (0..dim).map(|i| format!("f{i}")).collect();
    let matrix = FeatureMatrix::from_rows(names, &rows)?;
    Ok((matrix, assignments))
}
