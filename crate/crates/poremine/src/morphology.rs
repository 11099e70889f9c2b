//! Pore extraction and per-pore shape descriptors.
//!
//! A pore is one 8-connected cluster of pore-phase pixels of at least
//! `min_pixels` pixels (default 10, the lower end of the "contiguous 10-12
//! or more black pixels" rule). Descriptors are the nine classics: area,
//! perimeter, major/minor axis, angle, circularity, aspect ratio,
//! roundness, and solidity, reported in µm-based units.
//!
//! Conventions, chosen for reproducibility and pinned by tests:
//! - perimeter is the Moore boundary trace length with √2 diagonal steps;
//! - the equivalent ellipse comes from central second moments with a
//!   +1/12 per-axis pixel correction and axes 4·√λ;
//! - the convex hull is taken over the unit-square corners of boundary
//!   pixels, so a filled rectangle has solidity exactly 1;
//! - angle is the major-axis orientation in [0, 180) degrees from the +x
//!   axis toward +y (row) axis.

use std::f64::consts::PI;

use thiserror::Error;

use crate::imaging::{BinaryMask, Phase};

/// Default minimum cluster size for a pixel cluster to count as a pore.
pub const DEFAULT_MIN_PIXELS: usize = 10;

#[derive(Debug, Error)]
pub enum MorphologyError {
    #[error("degenerate pore: needs at least 2 pixels, has {0}")]
    DegeneratePore(usize),
    #[error("invalid scale {0}: must be positive and finite")]
    InvalidScale(f64),
}

/// One connected pore-phase pixel cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Pore {
    id: u32,
    pixels: Vec<(u32, u32)>,
    centroid: (f64, f64),
    boundary: Vec<(u32, u32)>,
    perimeter_px: f64,
}

impl Pore {
    /// 1-based id, assigned in raster order of each pore's top-left pixel.
    pub fn id(&self) -> u32 {
        self.id
    }

    /// Member pixels in raster order.
    pub fn pixels(&self) -> &[(u32, u32)] {
        &self.pixels
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.len()
    }

    /// Arithmetic mean of the member pixel coordinates.
    pub fn centroid(&self) -> (f64, f64) {
        self.centroid
    }

    /// Closed Moore boundary path; pixels may repeat where the outline
    /// doubles back through a one-pixel-wide neck.
    pub fn boundary(&self) -> &[(u32, u32)] {
        &self.boundary
    }

    /// Boundary path length in pixel units.
    pub fn perimeter_px(&self) -> f64 {
        self.perimeter_px
    }
}

/// The nine shape descriptors of one pore, in µm-based units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoreFeatures {
    /// µm²
    pub area: f64,
    /// µm
    pub perimeter: f64,
    /// Major ellipse axis, µm.
    pub major: f64,
    /// Minor ellipse axis, µm.
    pub minor: f64,
    /// Major-axis orientation, degrees in [0, 180).
    pub angle: f64,
    /// 4π·area/perimeter², capped at 1.
    pub circularity: f64,
    /// major/minor, ≥ 1.
    pub aspect_ratio: f64,
    /// 4·area/(π·major²).
    pub roundness: f64,
    /// area / convex hull area.
    pub solidity: f64,
}

impl PoreFeatures {
    /// Feature values in canonical column order (see [`FEATURE_NAMES`]).
    pub fn values(&self) -> [f64; 9] {
        [
            self.area,
            self.perimeter,
            self.major,
            self.minor,
            self.angle,
            self.circularity,
            self.aspect_ratio,
            self.roundness,
            self.solidity,
        ]
    }
}

/// Canonical feature order used in matrices and CSV output.
pub const FEATURE_NAMES: [&str; 9] = [
    "area",
    "perimeter",
    "major",
    "minor",
    "angle",
    "circularity",
    "aspect_ratio",
    "roundness",
    "solidity",
];

fn check_scale(scale: f64) -> Result<(), MorphologyError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(MorphologyError::InvalidScale(scale));
    }
    Ok(())
}

/// Extracts every 8-connected pore-phase component with at least
/// `min_pixels` pixels.
///
/// Components touching the image border are kept. Ids are 1-based and
/// assigned in raster order of each component's top-left pixel, which is
/// also the order of the returned list.
pub fn extract_pores(mask: &BinaryMask, min_pixels: usize) -> Vec<Pore> {
    let width = mask.width() as usize;
    let height = mask.height() as usize;
    let phases = mask.phases();
    let is_pore = |x: usize, y: usize| phases[y * width + x] == Phase::Pore;

    // Two-pass union-find labeling over the upper-left 8-neighborhood.
    let mut labels = vec![0u32; width * height];
    let mut parent: Vec<u32> = vec![0]; // parent[0] unused (background)

    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            let up = parent[parent[i as usize] as usize];
            parent[i as usize] = up;
            i = up;
        }
        i
    }
    fn union(parent: &mut Vec<u32>, a: u32, b: u32) {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            // root at the smaller label so first-seen labels win
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi as usize] = lo;
        }
    }

    for y in 0..height {
        for x in 0..width {
            if !is_pore(x, y) {
                continue;
            }
            let mut adjacent = [0u32; 4];
            let mut n_adjacent = 0;
            if y > 0 {
                if x > 0 && labels[(y - 1) * width + x - 1] != 0 {
                    adjacent[n_adjacent] = labels[(y - 1) * width + x - 1];
                    n_adjacent += 1;
                }
                if labels[(y - 1) * width + x] != 0 {
                    adjacent[n_adjacent] = labels[(y - 1) * width + x];
                    n_adjacent += 1;
                }
                if x + 1 < width && labels[(y - 1) * width + x + 1] != 0 {
                    adjacent[n_adjacent] = labels[(y - 1) * width + x + 1];
                    n_adjacent += 1;
                }
            }
            if x > 0 && labels[y * width + x - 1] != 0 {
                adjacent[n_adjacent] = labels[y * width + x - 1];
                n_adjacent += 1;
            }
            let label = if n_adjacent == 0 {
                let fresh = parent.len() as u32;
                parent.push(fresh);
                fresh
            } else {
                let mut lowest = adjacent[0];
                for &other in &adjacent[1..n_adjacent] {
                    union(&mut parent, lowest, other);
                    lowest = lowest.min(other);
                }
                lowest
            };
            labels[y * width + x] = label;
        }
    }

    // Collect pixels per root; first raster appearance of a root fixes the
    // component order, hence the id order.
    let mut order: Vec<u32> = Vec::new();
    let mut slot_of_root = vec![u32::MAX; parent.len()];
    let mut components: Vec<Vec<(u32, u32)>> = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let label = labels[y * width + x];
            if label == 0 {
                continue;
            }
            let root = find(&mut parent, label);
            let slot = if slot_of_root[root as usize] == u32::MAX {
                let slot = components.len() as u32;
                slot_of_root[root as usize] = slot;
                order.push(root);
                components.push(Vec::new());
                slot
            } else {
                slot_of_root[root as usize]
            };
            components[slot as usize].push((x as u32, y as u32));
        }
    }

    let mut pores = Vec::new();
    let mut next_id = 1u32;
    for pixels in components {
        if pixels.len() < min_pixels.max(1) {
            continue;
        }
        let n = pixels.len() as f64;
        let sum_x: f64 = pixels.iter().map(|p| p.0 as f64).sum();
        let sum_y: f64 = pixels.iter().map(|p| p.1 as f64).sum();
        let (boundary, perimeter_px) = trace_boundary(&pixels);
        pores.push(Pore {
            id: next_id,
            pixels,
            centroid: (sum_x / n, sum_y / n),
            boundary,
            perimeter_px,
        });
        next_id += 1;
    }
    pores
}

// Moore neighborhood in clockwise screen order (x right, y down).
const MOORE: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Moore-neighbor boundary trace of an 8-connected pixel set.
///
/// Starts at the top-left pixel (minimum y, then minimum x) and follows
/// the outer contour until the start is re-entered with the starting move
/// (Jacob's criterion). Returns the closed path and its length with unit
/// orthogonal and √2 diagonal steps. A single pixel yields a one-entry
/// path and perimeter 4, the unit-square convention.
pub fn trace_boundary(pixels: &[(u32, u32)]) -> (Vec<(u32, u32)>, f64) {
    assert!(!pixels.is_empty(), "cannot trace an empty pixel set");
    if pixels.len() == 1 {
        return (vec![pixels[0]], 4.0);
    }
    let member: std::collections::HashSet<(u32, u32)> = pixels.iter().copied().collect();
    let start = *pixels
        .iter()
        .min_by_key(|(x, y)| (*y, *x))
        .expect("nonempty");

    let mut path = vec![start];
    let mut perimeter = 0.0;
    let mut current = start;
    // The start pixel has no neighbors above or to the left, so we enter
    // the search as if arriving from the west.
    let mut backtrack_dir = 4usize;
    let mut first_move: Option<usize> = None;

    loop {
        let mut advanced = false;
        for offset in 1..=8 {
            let dir = (backtrack_dir + offset) % 8;
            let (dx, dy) = MOORE[dir];
            let nx = current.0 as i64 + dx;
            let ny = current.1 as i64 + dy;
            if nx < 0 || ny < 0 {
                continue;
            }
            let next = (nx as u32, ny as u32);
            if !member.contains(&next) {
                continue;
            }
            match first_move {
                None => first_move = Some(dir),
                Some(first) => {
                    // Back at the start and about to repeat the first
                    // move: the contour is closed. Drop the duplicated
                    // start pixel from the tail.
                    if current == start && dir == first {
                        debug_assert_eq!(path.last(), Some(&start));
                        path.pop();
                        return (path, perimeter);
                    }
                }
            }
            perimeter += if dx != 0 && dy != 0 {
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
            path.push(next);
            backtrack_dir = (dir + 4) % 8;
            current = next;
            advanced = true;
            break;
        }
        if !advanced {
            // isolated pixel set of size > 1 cannot happen for a
            // connected component; bail defensively
            return (path, perimeter.max(4.0));
        }
    }
}

/// Pore area in µm²: pixel count times scale².
pub fn pore_area_um2(p: &Pore, scale: f64) -> Result<f64, MorphologyError> {
    check_scale(scale)?;
    Ok(p.pixel_count() as f64 * scale * scale)
}

/// Equivalent-ellipse fit from central second moments: axes in pixels,
/// angle in degrees in [0, 180).
///
/// Moments carry the +1/12 per-axis correction for the unit pixel area;
/// axes are 4·√λ for the eigenvalues λ1 ≥ λ2 of the moment matrix.
pub fn fit_ellipse(p: &Pore) -> Result<(f64, f64, f64), MorphologyError> {
    let n = p.pixel_count();
    if n < 2 {
        return Err(MorphologyError::DegeneratePore(n));
    }
    let nf = n as f64;
    let (cx, cy) = p.centroid;
    let mut sum_xx = 0.0;
    let mut sum_yy = 0.0;
    let mut sum_xy = 0.0;
    for &(x, y) in &p.pixels {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        sum_xx += dx * dx;
        sum_yy += dy * dy;
        sum_xy += dx * dy;
    }
    let mxx = sum_xx / nf + 1.0 / 12.0;
    let myy = sum_yy / nf + 1.0 / 12.0;
    let mxy = sum_xy / nf;

    let trace_half = (mxx + myy) / 2.0;
    let delta = ((mxx - myy) / 2.0).hypot(mxy);
    let lambda1 = trace_half + delta;
    let lambda2 = (trace_half - delta).max(0.0);

    let major = 4.0 * lambda1.sqrt();
    let minor = 4.0 * lambda2.sqrt();

    // Eigenvector of lambda1; for an isotropic moment matrix the angle
    // defaults to 0.
    let angle = if delta <= 1e-12 {
        0.0
    } else {
        let (vx, vy) = if mxy.abs() > 1e-12 {
            (lambda1 - myy, mxy)
        } else if mxx >= myy {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let mut deg = vy.atan2(vx).to_degrees();
        if deg < 0.0 {
            deg += 180.0;
        }
        if deg >= 180.0 {
            deg -= 180.0;
        }
        deg
    };
    Ok((major, minor, angle))
}

/// Area of the convex hull of the pore's pixel unit squares, in px².
///
/// The hull is taken over the four corners (x, y)…(x+1, y+1) of every
/// boundary pixel, via monotone chain and the shoelace formula.
pub fn convex_hull_area(p: &Pore) -> f64 {
    if p.pixel_count() == 1 {
        return 1.0;
    }
    let mut corners: Vec<(i64, i64)> = Vec::with_capacity(p.boundary.len() * 4);
    let mut seen = std::collections::HashSet::new();
    for &(x, y) in &p.boundary {
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let corner = (x as i64 + dx, y as i64 + dy);
            if seen.insert(corner) {
                corners.push(corner);
            }
        }
    }
    let hull = monotone_chain(&mut corners);
    polygon_area(&hull)
}

/// Andrew's monotone chain; returns hull vertices in counterclockwise
/// order (mathematical convention, y up).
fn monotone_chain(points: &mut Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    points.sort_unstable();
    points.dedup();
    let n = points.len();
    if n <= 2 {
        return points.clone();
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| -> i64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * n);
    for &p in points.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in points.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn polygon_area(vertices: &[(i64, i64)]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let mut twice_area = 0i64;
    for i in 0..vertices.len() {
        let (x1, y1) = vertices[i];
        let (x2, y2) = vertices[(i + 1) % vertices.len()];
        twice_area += x1 * y2 - x2 * y1;
    }
    twice_area.abs() as f64 / 2.0
}

/// Computes the nine descriptors of a pore at the given µm-per-pixel
/// scale.
pub fn compute_features(p: &Pore, scale: f64) -> Result<PoreFeatures, MorphologyError> {
    check_scale(scale)?;
    let (major_px, minor_px, angle) = fit_ellipse(p)?;

    let area = p.pixel_count() as f64 * scale * scale;
    let perimeter = p.perimeter_px * scale;
    let major = major_px * scale;
    let minor = minor_px * scale;

    let circularity = (4.0 * PI * area / (perimeter * perimeter)).min(1.0);
    let aspect_ratio = major / minor;
    let roundness = 4.0 * area / (PI * major * major);
    let solidity = p.pixel_count() as f64 / convex_hull_area(p);

    Ok(PoreFeatures {
        area,
        perimeter,
        major,
        minor,
        angle,
        circularity,
        aspect_ratio,
        roundness,
        solidity,
    })
}
