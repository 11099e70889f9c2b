//! Micrograph loading, physical calibration, and two-phase segmentation.
//!
//! Accepted inputs are binary PGM (P5, 8-bit) and 8-bit grayscale PNG.
//! Color or deeper images are rejected rather than converted, so no
//! silent luminance weighting ever enters the pipeline. Masks follow the
//! dark-pore convention: the pore phase is black, the fiber phase white.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable { path: String, source: io::Error },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid scale {0}: must be positive and finite")]
    InvalidScale(f64),
    #[error("degenerate histogram: image has a single distinct intensity")]
    DegenerateHistogram,
}

/// A calibrated 8-bit grayscale micrograph.
#[derive(Debug, Clone, PartialEq)]
pub struct Micrograph {
    width: u32,
    height: u32,
    intensities: Vec<u8>,
    scale: f64,
}

impl Micrograph {
    /// Builds a micrograph from row-major intensities and a µm-per-pixel
    /// scale.
    ///
    /// Panics if the dimensions are zero or do not match the intensity
    /// buffer; returns `InvalidScale` for a non-positive or non-finite
    /// scale.
    pub fn new(
        width: u32,
        height: u32,
        intensities: Vec<u8>,
        scale: f64,
    ) -> Result<Self, ImagingError> {
        assert!(width >= 1 && height >= 1, "empty micrograph");
        assert_eq!(
            intensities.len(),
            width as usize * height as usize,
            "intensity buffer does not match dimensions"
        );
        check_scale(scale)?;
        Ok(Self {
            width,
            height,
            intensities,
            scale,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// µm per pixel.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Row-major intensity buffer.
    pub fn intensities(&self) -> &[u8] {
        &self.intensities
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.intensities[y as usize * self.width as usize + x as usize]
    }
}

/// Phase of one mask pixel. Pore is the dark (black) phase, fiber the
/// bright (white) one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Pore,
    Fiber,
}

/// A two-phase segmentation of a micrograph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    phases: Vec<Phase>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, phases: Vec<Phase>) -> Self {
        assert!(width >= 1 && height >= 1, "empty mask");
        assert_eq!(
            phases.len(),
            width as usize * height as usize,
            "phase buffer does not match dimensions"
        );
        Self {
            width,
            height,
            phases,
        }
    }

    /// Mask of uniform phase, mostly useful in tests and synthesis.
    pub fn filled(width: u32, height: u32, phase: Phase) -> Self {
        Self::new(
            width,
            height,
            vec![phase; width as usize * height as usize],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn get(&self, x: u32, y: u32) -> Phase {
        self.phases[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, phase: Phase) {
        self.phases[y as usize * self.width as usize + x as usize] = phase;
    }

    pub fn pore_pixel_count(&self) -> usize {
        self.phases.iter().filter(|p| **p == Phase::Pore).count()
    }
}

fn check_scale(scale: f64) -> Result<(), ImagingError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ImagingError::InvalidScale(scale));
    }
    Ok(())
}

/// Loads an 8-bit grayscale image (binary PGM or PNG, detected by magic
/// bytes) and attaches the given µm-per-pixel scale.
///
/// PGM loading is bit-exact: the raster bytes become the intensity buffer
/// unchanged. Color, paletted, or >8-bit inputs are rejected with
/// `UnsupportedFormat`.
pub fn load_micrograph(path: &Path, scale: f64) -> Result<Micrograph, ImagingError> {
    check_scale(scale)?;
    let bytes = fs::read(path).map_err(|source| ImagingError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    let (width, height, intensities) = decode_gray8(&bytes)?;
    Micrograph::new(width, height, intensities, scale)
}

const PNG_MAGIC: [u8; 4] = [0x89, b'P', b'N', b'G'];

fn decode_gray8(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), ImagingError> {
    if bytes.starts_with(b"P5") {
        parse_pgm(bytes)
    } else if bytes.starts_with(&PNG_MAGIC) {
        parse_png(bytes)
    } else {
        Err(ImagingError::UnsupportedFormat(
            "not a binary PGM (P5) or PNG file".into(),
        ))
    }
}

/// Parses a binary PGM (P5). Comments (`#` to end of line) are allowed in
/// the header; maxval must be at most 255.
fn parse_pgm(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), ImagingError> {
    let bad = |msg: &str| ImagingError::UnsupportedFormat(format!("PGM: {msg}"));
    let mut pos = 2; // past "P5"

    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(b) = bytes.get(pos) {
                        pos += 1;
                        if *b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while let Some(b) = bytes.get(pos) {
            if b.is_ascii_digit() {
                pos += 1;
            } else {
                break;
            }
        }
        if pos == start {
            return Err(bad("malformed header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are UTF-8");
        *field = text.parse().map_err(|_| bad("header value out of range"))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    if maxval > 255 {
        return Err(bad("maxval above 255 (>8-bit)"));
    }
    if maxval == 0 {
        return Err(bad("maxval must be positive"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(bad("missing raster separator")),
    }
    let n = width as usize * height as usize;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| bad("truncated raster"))?;
    Ok((width as u32, height as u32, raster.to_vec()))
}

fn parse_png(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), ImagingError> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| ImagingError::UnsupportedFormat(format!("PNG: {e}")))?;
    match decoded {
        image::DynamicImage::ImageLuma8(img) => {
            Ok((img.width(), img.height(), img.into_raw()))
        }
        other => Err(ImagingError::UnsupportedFormat(format!(
            "PNG must be 8-bit grayscale, got {:?}",
            other.color()
        ))),
    }
}

fn pgm_bytes(width: u32, height: u32, raster: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(raster);
    out
}

/// Encodes a micrograph as binary PGM bytes; a reload reproduces the
/// intensity buffer byte for byte.
pub fn micrograph_pgm_bytes(m: &Micrograph) -> Vec<u8> {
    pgm_bytes(m.width, m.height, &m.intensities)
}

/// Writes a micrograph as binary PGM.
pub fn write_micrograph_pgm(m: &Micrograph, path: &Path) -> io::Result<()> {
    fs::write(path, micrograph_pgm_bytes(m))
}

/// Encodes a mask as binary PGM bytes with pore = 0 and fiber = 255.
pub fn mask_pgm_bytes(mask: &BinaryMask) -> Vec<u8> {
    let raster: Vec<u8> = mask
        .phases
        .iter()
        .map(|p| match p {
            Phase::Pore => 0u8,
            Phase::Fiber => 255u8,
        })
        .collect();
    pgm_bytes(mask.width, mask.height, &raster)
}

/// Writes a mask as binary PGM with pore = 0 and fiber = 255.
pub fn write_mask_pgm(mask: &BinaryMask, path: &Path) -> io::Result<()> {
    fs::write(path, mask_pgm_bytes(mask))
}

/// Loads a mask PGM written by [`write_mask_pgm`]. The raster must be
/// bilevel (0 or 255); anything else is rejected rather than guessed at.
pub fn load_mask_pgm(path: &Path) -> Result<BinaryMask, ImagingError> {
    let bytes = fs::read(path).map_err(|source| ImagingError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    if !bytes.starts_with(b"P5") {
        return Err(ImagingError::UnsupportedFormat(
            "mask must be a binary PGM (P5)".into(),
        ));
    }
    let (width, height, raster) = parse_pgm(&bytes)?;
    let phases = raster
        .iter()
        .map(|b| match b {
            0 => Ok(Phase::Pore),
            255 => Ok(Phase::Fiber),
            other => Err(ImagingError::UnsupportedFormat(format!(
                "mask raster must be bilevel 0/255, found {other}"
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BinaryMask::new(width, height, phases))
}

/// Otsu's threshold over the 256-bin intensity histogram.
///
/// Returns the level `t` maximizing the between-class variance of the
/// split low = [0, t], high = [t+1, 255]; ties break toward the smallest
/// `t`. Requires at least two distinct intensities.
pub fn otsu_threshold(m: &Micrograph) -> Result<u8, ImagingError> {
    let mut histogram = [0u64; 256];
    for &v in &m.intensities {
        histogram[v as usize] += 1;
    }
    if histogram.iter().filter(|c| **c > 0).count() < 2 {
        return Err(ImagingError::DegenerateHistogram);
    }

    let total = m.intensities.len() as f64;
    let total_sum: f64 = histogram
        .iter()
        .enumerate()
        .map(|(v, c)| v as f64 * *c as f64)
        .sum();

    let mut best_t = 0u8;
    let mut best_variance = f64::NEG_INFINITY;
    let mut count_low = 0.0;
    let mut sum_low = 0.0;
    for t in 0..=254u8 {
        count_low += histogram[t as usize] as f64;
        sum_low += t as f64 * histogram[t as usize] as f64;
        let count_high = total - count_low;
        if count_low == 0.0 || count_high == 0.0 {
            continue;
        }
        let mean_low = sum_low / count_low;
        let mean_high = (total_sum - sum_low) / count_high;
        let variance = count_low * count_high * (mean_low - mean_high).powi(2);
        if variance > best_variance {
            best_variance = variance;
            best_t = t;
        }
    }
    Ok(best_t)
}

/// Thresholds a micrograph: intensity ≤ `t` becomes pore (dark phase),
/// anything brighter becomes fiber.
pub fn segment(m: &Micrograph, t: u8) -> BinaryMask {
    let phases = m
        .intensities
        .iter()
        .map(|&v| if v <= t { Phase::Pore } else { Phase::Fiber })
        .collect();
    BinaryMask::new(m.width, m.height, phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gray(width: u32, height: u32, values: &[u8]) -> Micrograph {
        Micrograph::new(width, height, values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn loads_smallest_legal_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.pgm");
        fs::write(&path, b"P5\n1 1\n255\n\x00").unwrap();
        let m = load_micrograph(&path, 0.0447).unwrap();
        assert_eq!((m.width(), m.height()), (1, 1));
        assert_eq!(m.intensities(), &[0]);
        assert_eq!(m.scale(), 0.0447);
    }

    #[test]
    fn pgm_bytes_preserved_row_major() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let raster: Vec<u8> = vec![10, 20, 30, 40, 50, 60, 70, 80];
        let mut file = b"P5 4 2 255 ".to_vec();
        file.extend_from_slice(&raster);
        fs::write(&path, file).unwrap();
        let m = load_micrograph(&path, 1.0).unwrap();
        assert_eq!((m.width(), m.height()), (4, 2));
        assert_eq!(m.intensities(), raster.as_slice());
        assert_eq!(m.get(3, 1), 80);
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        fs::write(&path, b"P5\n# made by hand\n2 1\n255\n\x05\x06").unwrap();
        let m = load_micrograph(&path, 1.0).unwrap();
        assert_eq!(m.intensities(), &[5, 6]);
    }

    #[test]
    fn rejects_color_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let img = image::RgbImage::from_pixel(3, 3, image::Rgb([10, 200, 30]));
        img.save(&path).unwrap();
        let err = load_micrograph(&path, 1.0).unwrap_err();
        assert!(matches!(err, ImagingError::UnsupportedFormat(_)), "{err}");
    }

    #[test]
    fn accepts_gray_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gray.png");
        let img = image::GrayImage::from_fn(4, 3, |x, y| image::Luma([(x * 10 + y) as u8]));
        img.save(&path).unwrap();
        let m = load_micrograph(&path, 0.5).unwrap();
        assert_eq!((m.width(), m.height()), (4, 3));
        assert_eq!(m.get(3, 2), 32);
    }

    #[test]
    fn rejects_deep_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.pgm");
        fs::write(&path, b"P5\n1 1\n65535\n\x00\x00").unwrap();
        let err = load_micrograph(&path, 1.0).unwrap_err();
        assert!(matches!(err, ImagingError::UnsupportedFormat(_)));
    }

    #[test]
    fn rejects_truncated_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.pgm");
        fs::write(&path, b"P5\n4 4\n255\n\x00\x01").unwrap();
        assert!(matches!(
            load_micrograph(&path, 1.0),
            Err(ImagingError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn rejects_bad_scale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        fs::write(&path, b"P5\n1 1\n255\n\x00").unwrap();
        for scale in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                load_micrograph(&path, scale),
                Err(ImagingError::InvalidScale(_))
            ));
        }
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = load_micrograph(Path::new("/nonexistent/x.pgm"), 1.0).unwrap_err();
        assert!(matches!(err, ImagingError::FileUnreadable { .. }));
    }

    #[test]
    fn otsu_separates_two_modes() {
        // 60% at 50, 40% at 200: any t in [50, 200) separates them.
        let mut values = vec![50u8; 60];
        values.extend(vec![200u8; 40]);
        let t = otsu_threshold(&gray(10, 10, &values)).unwrap();
        assert!((50..200).contains(&t), "t = {t}");
    }

    #[test]
    fn otsu_rejects_uniform_image() {
        let m = gray(4, 4, &[128; 16]);
        assert!(matches!(
            otsu_threshold(&m),
            Err(ImagingError::DegenerateHistogram)
        ));
    }

    /// Independent oracle: between-class variance computed per candidate
    /// threshold by direct passes over the raw pixel list.
    fn otsu_oracle(values: &[u8]) -> u8 {
        let mut best_t = 0u8;
        let mut best = f64::NEG_INFINITY;
        for t in 0..=254u8 {
            let low: Vec<f64> = values.iter().filter(|v| **v <= t).map(|v| *v as f64).collect();
            let high: Vec<f64> = values.iter().filter(|v| **v > t).map(|v| *v as f64).collect();
            if low.is_empty() || high.is_empty() {
                continue;
            }
            let mean_low = low.iter().sum::<f64>() / low.len() as f64;
            let mean_high = high.iter().sum::<f64>() / high.len() as f64;
            let variance =
                low.len() as f64 * high.len() as f64 * (mean_low - mean_high).powi(2);
            if variance > best {
                best = variance;
                best_t = t;
            }
        }
        best_t
    }

    #[test]
    fn otsu_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let values: Vec<u8> = (0..64).map(|_| rng.random()).collect();
            let m = gray(8, 8, &values);
            assert_eq!(otsu_threshold(&m).unwrap(), otsu_oracle(&values));
        }
    }

    #[test]
    fn segment_extremes() {
        let all_zero = gray(3, 3, &[0; 9]);
        assert!(segment(&all_zero, 0)
            .phases()
            .iter()
            .all(|p| *p == Phase::Pore));

        let all_bright = gray(3, 3, &[255; 9]);
        assert!(segment(&all_bright, 0)
            .phases()
            .iter()
            .all(|p| *p == Phase::Fiber));
    }

    #[test]
    fn segment_checkerboard() {
        let values: Vec<u8> = (0..16)
            .map(|i| if (i / 4 + i % 4) % 2 == 0 { 0 } else { 255 })
            .collect();
        let mask = segment(&gray(4, 4, &values), 128);
        for y in 0..4 {
            for x in 0..4 {
                let expect = if (x + y) % 2 == 0 {
                    Phase::Pore
                } else {
                    Phase::Fiber
                };
                assert_eq!(mask.get(x, y), expect);
            }
        }
    }

    #[test]
    fn mask_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.pgm");
        let mut mask = BinaryMask::filled(5, 4, Phase::Fiber);
        mask.set(2, 1, Phase::Pore);
        mask.set(4, 3, Phase::Pore);
        write_mask_pgm(&mask, &path).unwrap();
        assert_eq!(load_mask_pgm(&path).unwrap(), mask);
    }

    #[test]
    fn mask_pgm_rejects_mid_gray() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("notmask.pgm");
        fs::write(&path, b"P5\n2 1\n255\n\x00\x80").unwrap();
        assert!(matches!(
            load_mask_pgm(&path),
            Err(ImagingError::UnsupportedFormat(_))
        ));
    }

    proptest! {
        #[test]
        fn pgm_round_trip_is_bit_exact(
            width in 1u32..24,
            height in 1u32..24,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raster: Vec<u8> = (0..width * height).map(|_| rng.random()).collect();
            let m = Micrograph::new(width, height, raster.clone(), 0.1).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("rt.pgm");
            write_micrograph_pgm(&m, &path).unwrap();
            let back = load_micrograph(&path, 0.1).unwrap();
            prop_assert_eq!(back.intensities(), raster.as_slice());
        }

        #[test]
        fn segment_is_monotone_in_threshold(
            seed in 0u64..1000,
            t1 in 0u8..=255,
            t2 in 0u8..=255,
        ) {
            let (low, high) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<u8> = (0..64).map(|_| rng.random()).collect();
            let m = Micrograph::new(8, 8, values, 1.0).unwrap();
            let mask_low = segment(&m, low);
            let mask_high = segment(&m, high);
            for (a, b) in mask_low.phases().iter().zip(mask_high.phases()) {
                // raising t never turns a pore pixel into fiber
                prop_assert!(!(*a == Phase::Pore && *b == Phase::Fiber));
            }
        }

        #[test]
        fn otsu_two_valued_lands_between_modes(
            low in 0u8..=254,
            span in 1u8..=255,
            n_low in 1usize..32,
            n_high in 1usize..32,
        ) {
            let high = low.saturating_add(span).max(low + 1);
            let mut values = vec![low; n_low];
            values.extend(vec![high; n_high]);
            values.resize(64, low);
            let m = Micrograph::new(8, 8, values, 1.0).unwrap();
            let t = otsu_threshold(&m).unwrap();
            prop_assert!(t >= low && t < high, "t = {} not in [{}, {})", t, low, high);
        }
    }
}
