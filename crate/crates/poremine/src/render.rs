//! SVG figure generation: pore maps, correlation heatmaps, elbow
//! curves, PCA scatters, and density plots.
//!
//! Documents are built as plain SVG 1.1 strings with fixed numeric
//! formatting, so identical inputs always produce byte-identical files
//! that can be kept as golden references. No drawing toolkit is
//! involved; every op is a pure function of its inputs.

use std::fmt::Write as _;

use thiserror::Error;

use crate::filtering::{format_sig6, PoreLabel};
use crate::morphology::Pore;

/// Categorical palette; cluster i uses color i mod 8.
pub const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

/// Fill for pores that passed segmentation but are not in the clustered
/// dataset (dropped by the area cutoff).
const UNCLUSTERED_FILL: &str = "#cccccc";

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("projection row {row} has {got} coordinates, expected 2")]
    DimensionMismatch { row: usize, got: usize },
}

/// Diverging correlation color: −1 blue, 0 neutral, +1 red, linearly
/// interpolated per channel.
pub fn diverging_color(v: f64) -> String {
    const LOW: (f64, f64, f64) = (33.0, 102.0, 172.0); // -1
    const MID: (f64, f64, f64) = (247.0, 247.0, 247.0); // 0
    const HIGH: (f64, f64, f64) = (178.0, 24.0, 43.0); // +1
    let v = v.clamp(-1.0, 1.0);
    let (from, to, t) = if v < 0.0 {
        (LOW, MID, v + 1.0)
    } else {
        (MID, HIGH, v)
    };
    let channel = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        channel(from.0, to.0),
        channel(from.1, to.1),
        channel(from.2, to.2)
    )
}

/// Escapes text for use in XML content or attribute values.
fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Fixed two-decimal coordinate formatting; negative zero folds to
/// positive so output stays canonical.
fn fmt2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Linear data→canvas mapping; a zero-width domain maps to the range
/// midpoint.
#[derive(Debug, Clone, Copy)]
struct LinearMap {
    d_min: f64,
    d_max: f64,
    r_min: f64,
    r_max: f64,
}

impl LinearMap {
    fn new(d_min: f64, d_max: f64, r_min: f64, r_max: f64) -> Self {
        Self {
            d_min,
            d_max,
            r_min,
            r_max,
        }
    }

    fn map(&self, v: f64) -> f64 {
        if self.d_max == self.d_min {
            (self.r_min + self.r_max) / 2.0
        } else {
            self.r_min + (v - self.d_min) / (self.d_max - self.d_min) * (self.r_max - self.r_min)
        }
    }
}

fn svg_open(out: &mut String, width: f64, height: f64) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\">",
        w = fmt2(width),
        h = fmt2(height)
    );
}

fn svg_close(out: &mut String) {
    out.push_str("</svg>\n");
}

fn text(out: &mut String, x: f64, y: f64, size: f64, anchor: &str, extra: &str, content: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"{anchor}\"{extra}>{}</text>",
        fmt2(x),
        fmt2(y),
        fmt2(size),
        escape(content)
    );
}

fn cluster_color(cluster: usize) -> &'static str {
    PALETTE[cluster % PALETTE.len()]
}

fn label_stroke(label: PoreLabel) -> &'static str {
    match label {
        PoreLabel::Real | PoreLabel::Unlabeled => {
            " stroke=\"#777777\" stroke-width=\"0.5\""
        }
        PoreLabel::Shade => " stroke=\"#1f1f1f\" stroke-width=\"1.5\" stroke-dasharray=\"4 2\"",
        PoreLabel::Overlap => " stroke=\"#c1121f\" stroke-width=\"2\"",
    }
}

/// Annotated pore map: one polygon per pore traced from its boundary,
/// fill by cluster (gray when unclustered), stroke style by label,
/// pore id at the centroid, plus a cluster legend and a 5 µm scale bar.
///
/// `clusters` and `labels` run parallel to `pores`; `scale` is the
/// micrograph's µm per pixel.
pub fn render_pore_map(
    mask_width: u32,
    mask_height: u32,
    pores: &[Pore],
    clusters: &[Option<usize>],
    labels: &[PoreLabel],
    scale: f64,
) -> String {
    assert_eq!(pores.len(), clusters.len(), "one cluster slot per pore");
    assert_eq!(pores.len(), labels.len(), "one label per pore");
    let legend_height = 70.0;
    let (w, h) = (mask_width as f64, mask_height as f64);
    let mut out = String::new();
    svg_open(&mut out, w, h + legend_height);
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#111111\"/>",
        fmt2(w),
        fmt2(h)
    );
    for ((pore, cluster), label) in pores.iter().zip(clusters).zip(labels) {
        let fill = cluster.map_or(UNCLUSTERED_FILL, cluster_color);
        let mut points = String::new();
        for (i, &(x, y)) in pore.boundary().iter().enumerate() {
            if i > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{},{}", fmt2(x as f64 + 0.5), fmt2(y as f64 + 0.5));
        }
        let _ = writeln!(
            out,
            "<polygon points=\"{points}\" fill=\"{fill}\" fill-opacity=\"0.85\"{}/>",
            label_stroke(*label)
        );
        let (cx, cy) = pore.centroid();
        text(
            &mut out,
            cx + 0.5,
            cy + 0.5,
            8.0,
            "middle",
            " fill=\"#ffffff\"",
            &pore.id().to_string(),
        );
    }

    // legend: clusters present, in ascending index order
    let mut present: Vec<usize> = clusters.iter().flatten().copied().collect();
    present.sort_unstable();
    present.dedup();
    let mut x = 8.0;
    let legend_y = h + 18.0;
    for cluster in present {
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>",
            fmt2(x),
            fmt2(legend_y - 9.0),
            cluster_color(cluster)
        );
        text(
            &mut out,
            x + 14.0,
            legend_y,
            10.0,
            "start",
            "",
            &format!("cluster {cluster}"),
        );
        x += 80.0;
    }
    text(
        &mut out,
        8.0,
        legend_y + 18.0,
        10.0,
        "start",
        "",
        "stroke: dashed = shade, heavy red = overlap",
    );

    // 5 µm scale bar
    let bar_px = 5.0 / scale;
    let bar_y = h + legend_height - 14.0;
    let _ = writeln!(
        out,
        "<line x1=\"8.00\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#000000\" stroke-width=\"2\"/>",
        y = fmt2(bar_y),
        x2 = fmt2(8.0 + bar_px)
    );
    text(&mut out, 8.0 + bar_px / 2.0, bar_y + 12.0, 9.0, "middle", "", "5 µm");
    svg_close(&mut out);
    out
}

/// Correlation heatmap in dendrogram leaf order with a diverging color
/// scale anchored at −1/0/+1 and feature names on both axes.
pub fn render_heatmap(corr: &[Vec<f64>], order: &[usize], names: &[String]) -> String {
    assert_eq!(corr.len(), order.len(), "one order entry per feature");
    assert_eq!(corr.len(), names.len(), "one name per feature");
    let n = corr.len();
    let cell = 40.0;
    let margin_left = 90.0;
    let margin_top = 90.0;
    let grid = n as f64 * cell;
    let mut out = String::new();
    svg_open(&mut out, margin_left + grid + 20.0, margin_top + grid + 20.0);
    for (row_pos, &i) in order.iter().enumerate() {
        for (col_pos, &j) in order.iter().enumerate() {
            let x = margin_left + col_pos as f64 * cell;
            let y = margin_top + row_pos as f64 * cell;
            let _ = writeln!(
                out,
                "<rect class=\"cell\" x=\"{}\" y=\"{}\" width=\"{c}\" height=\"{c}\" \
                 fill=\"{}\" stroke=\"#ffffff\" stroke-width=\"1\"/>",
                fmt2(x),
                fmt2(y),
                diverging_color(corr[i][j]),
                c = fmt2(cell)
            );
        }
    }
    for (pos, &i) in order.iter().enumerate() {
        let center = margin_top + (pos as f64 + 0.5) * cell;
        // y axis: right-aligned row names
        text(
            &mut out,
            margin_left - 6.0,
            center + 4.0,
            11.0,
            "end",
            "",
            &names[i],
        );
        // x axis: rotated column names
        let cx = margin_left + (pos as f64 + 0.5) * cell;
        let _ = writeln!(
            out,
            "<text x=\"{x}\" y=\"{y}\" font-size=\"11.00\" text-anchor=\"start\" \
             transform=\"rotate(-60 {x} {y})\">{}</text>",
            escape(&names[i]),
            x = fmt2(cx),
            y = fmt2(margin_top - 6.0)
        );
    }
    svg_close(&mut out);
    out
}

/// Elbow plot: wss against k with the chosen k circled.
///
/// `curve[i]` is the wss at k = i+1.
pub fn render_elbow(curve: &[f64], chosen_k: usize) -> String {
    assert!(!curve.is_empty(), "empty wss curve");
    assert!(
        (1..=curve.len()).contains(&chosen_k),
        "chosen k outside curve"
    );
    let (width, height) = (420.0, 300.0);
    let (left, right, top, bottom) = (70.0, 20.0, 20.0, 50.0);
    let x_map = LinearMap::new(1.0, curve.len() as f64, left, width - right);
    let wss_max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_map = LinearMap::new(0.0, wss_max, height - bottom, top);
    let mut out = String::new();
    svg_open(&mut out, width, height);

    let mut points = String::new();
    for (i, &wss) in curve.iter().enumerate() {
        if i > 0 {
            points.push(' ');
        }
        let _ = write!(
            points,
            "{},{}",
            fmt2(x_map.map((i + 1) as f64)),
            fmt2(y_map.map(wss))
        );
    }
    let _ = writeln!(
        out,
        "<polyline points=\"{points}\" fill=\"none\" stroke=\"#4e79a7\" stroke-width=\"2\"/>"
    );
    for (i, &wss) in curve.iter().enumerate() {
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#4e79a7\"/>",
            fmt2(x_map.map((i + 1) as f64)),
            fmt2(y_map.map(wss))
        );
    }
    let _ = writeln!(
        out,
        "<circle class=\"chosen\" cx=\"{}\" cy=\"{}\" r=\"7\" fill=\"none\" \
         stroke=\"#e15759\" stroke-width=\"2\"/>",
        fmt2(x_map.map(chosen_k as f64)),
        fmt2(y_map.map(curve[chosen_k - 1]))
    );

    // axes
    let _ = writeln!(
        out,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#000000\" stroke-width=\"1\"/>",
        l = fmt2(left),
        r = fmt2(width - right),
        b = fmt2(height - bottom)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"#000000\" stroke-width=\"1\"/>",
        l = fmt2(left),
        t = fmt2(top),
        b = fmt2(height - bottom)
    );
    for k in 1..=curve.len() {
        text(
            &mut out,
            x_map.map(k as f64),
            height - bottom + 16.0,
            10.0,
            "middle",
            "",
            &k.to_string(),
        );
    }
    text(&mut out, left - 8.0, y_map.map(0.0) + 4.0, 10.0, "end", "", "0");
    text(
        &mut out,
        left - 8.0,
        y_map.map(wss_max) + 4.0,
        10.0,
        "end",
        "",
        &format_sig6(wss_max),
    );
    text(
        &mut out,
        (left + width - right) / 2.0,
        height - 12.0,
        12.0,
        "middle",
        "",
        "k",
    );
    text(
        &mut out,
        16.0,
        (top + height - bottom) / 2.0,
        12.0,
        "middle",
        " transform=\"rotate(-90 16.00 135.00)\"",
        "total within sum of squares",
    );
    svg_close(&mut out);
    out
}

/// PC1/PC2 scatter colored by cluster, axis labels carrying the
/// explained-variance percentages, one legend entry per cluster.
pub fn render_pca_scatter(
    projection: &[Vec<f64>],
    assignments: &[usize],
    pc_fractions: (f64, f64),
) -> Result<String, RenderError> {
    assert_eq!(
        projection.len(),
        assignments.len(),
        "one assignment per projected row"
    );
    for (row, p) in projection.iter().enumerate() {
        if p.len() != 2 {
            return Err(RenderError::DimensionMismatch { row, got: p.len() });
        }
    }
    let (width, height) = (440.0, 360.0);
    let (left, right, top, bottom) = (60.0, 120.0, 20.0, 50.0);
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in projection {
        x_min = x_min.min(p[0]);
        x_max = x_max.max(p[0]);
        y_min = y_min.min(p[1]);
        y_max = y_max.max(p[1]);
    }
    if projection.is_empty() {
        (x_min, x_max, y_min, y_max) = (-1.0, 1.0, -1.0, 1.0);
    }
    let x_map = LinearMap::new(x_min, x_max, left, width - right);
    let y_map = LinearMap::new(y_min, y_max, height - bottom, top);
    let mut out = String::new();
    svg_open(&mut out, width, height);
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>",
        fmt2(left),
        fmt2(top),
        fmt2(width - right - left),
        fmt2(height - bottom - top)
    );
    for (p, &cluster) in projection.iter().zip(assignments) {
        let _ = writeln!(
            out,
            "<circle class=\"pt\" cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.8\"/>",
            fmt2(x_map.map(p[0])),
            fmt2(y_map.map(p[1])),
            cluster_color(cluster)
        );
    }
    text(
        &mut out,
        (left + width - right) / 2.0,
        height - 14.0,
        12.0,
        "middle",
        "",
        &format!("PC1 ({:.1}%)", pc_fractions.0 * 100.0),
    );
    let y_mid = (top + height - bottom) / 2.0;
    let _ = writeln!(
        out,
        "<text x=\"16.00\" y=\"{y}\" font-size=\"12.00\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16.00 {y})\">{}</text>",
        escape(&format!("PC2 ({:.1}%)", pc_fractions.1 * 100.0)),
        y = fmt2(y_mid)
    );

    let mut present: Vec<usize> = assignments.to_vec();
    present.sort_unstable();
    present.dedup();
    for (slot, cluster) in present.iter().enumerate() {
        let y = top + 16.0 + slot as f64 * 18.0;
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>",
            fmt2(width - right + 16.0),
            fmt2(y - 4.0),
            cluster_color(*cluster)
        );
        text(
            &mut out,
            width - right + 26.0,
            y,
            11.0,
            "start",
            "",
            &format!("cluster {cluster}"),
        );
    }
    svg_close(&mut out);
    Ok(out)
}

/// One named density curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Overlaid density curves colored by index, with an optional vertical
/// rule (the area cutoff) and an x-axis caption.
pub fn render_densities(curves: &[DensityCurve], cutoff: Option<f64>, x_label: &str) -> String {
    let (width, height) = (460.0, 320.0);
    let (left, right, top, bottom) = (60.0, 130.0, 20.0, 50.0);
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_max = f64::NEG_INFINITY;
    for curve in curves {
        for &x in &curve.xs {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        for &y in &curve.ys {
            y_max = y_max.max(y);
        }
    }
    if curves.is_empty() {
        (x_min, x_max, y_max) = (0.0, 1.0, 1.0);
    }
    let x_map = LinearMap::new(x_min, x_max, left, width - right);
    let y_map = LinearMap::new(0.0, y_max, height - bottom, top);
    let mut out = String::new();
    svg_open(&mut out, width, height);
    let _ = writeln!(
        out,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#000000\" stroke-width=\"1\"/>",
        l = fmt2(left),
        r = fmt2(width - right),
        b = fmt2(height - bottom)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"#000000\" stroke-width=\"1\"/>",
        l = fmt2(left),
        t = fmt2(top),
        b = fmt2(height - bottom)
    );
    for (i, curve) in curves.iter().enumerate() {
        let mut points = String::new();
        for (j, (&x, &y)) in curve.xs.iter().zip(&curve.ys).enumerate() {
            if j > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{},{}", fmt2(x_map.map(x)), fmt2(y_map.map(y)));
        }
        let _ = writeln!(
            out,
            "<polyline class=\"curve\" points=\"{points}\" fill=\"none\" \
             stroke=\"{}\" stroke-width=\"2\"/>",
            cluster_color(i)
        );
        let y = top + 16.0 + i as f64 * 18.0;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{}\"/>",
            fmt2(width - right + 16.0),
            fmt2(y - 7.0),
            cluster_color(i)
        );
        text(&mut out, width - right + 34.0, y, 11.0, "start", "", &curve.label);
    }
    if let Some(x) = cutoff {
        if (x_min..=x_max).contains(&x) || curves.is_empty() {
            let cx = fmt2(x_map.map(x));
            let _ = writeln!(
                out,
                "<line class=\"cutoff\" x1=\"{cx}\" y1=\"{t}\" x2=\"{cx}\" y2=\"{b}\" \
                 stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"5 3\"/>",
                t = fmt2(top),
                b = fmt2(height - bottom)
            );
        }
    }
    text(
        &mut out,
        left,
        height - bottom + 16.0,
        10.0,
        "middle",
        "",
        &format_sig6(x_min),
    );
    text(
        &mut out,
        width - right,
        height - bottom + 16.0,
        10.0,
        "middle",
        "",
        &format_sig6(x_max),
    );
    text(
        &mut out,
        (left + width - right) / 2.0,
        height - 14.0,
        12.0,
        "middle",
        "",
        x_label,
    );
    let y_mid = (top + height - bottom) / 2.0;
    let _ = writeln!(
        out,
        "<text x=\"16.00\" y=\"{y}\" font-size=\"12.00\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16.00 {y})\">density</text>",
        y = fmt2(y_mid)
    );
    svg_close(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{BinaryMask, Phase};
    use crate::morphology::extract_pores;

    /// Minimal XML well-formedness check: balanced quoted tags, no raw
    /// `<`/`&` in text, single root after the declaration.
    fn assert_well_formed(svg: &str) {
        let body = svg
            .strip_prefix("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n")
            .expect("XML declaration");
        let mut stack: Vec<String> = Vec::new();
        let mut roots = 0;
        let mut rest = body;
        while let Some(open) = rest.find('<') {
            let head = &rest[..open];
            assert!(
                !head.contains('&')
                    || head.matches('&').count()
                        == ["&amp;", "&lt;", "&gt;", "&quot;", "&apos;", "&#"]
                            .iter()
                            .map(|e| head.matches(e).count())
                            .sum::<usize>(),
                "raw & in text: {head:?}"
            );
            let close = rest[open..].find('>').expect("unterminated tag") + open;
            let tag = &rest[open + 1..close];
            assert!(!tag.contains('<'), "nested < in tag {tag:?}");
            assert_eq!(
                tag.matches('"').count() % 2,
                0,
                "unbalanced quotes in {tag:?}"
            );
            if let Some(name) = tag.strip_prefix('/') {
                let expected = stack.pop().unwrap_or_else(|| panic!("stray </{name}>"));
                assert_eq!(expected, name.trim(), "mismatched close tag");
            } else if !tag.ends_with('/') {
                let name: String = tag
                    .chars()
                    .take_while(|c| !c.is_whitespace())
                    .collect();
                if stack.is_empty() {
                    roots += 1;
                }
                stack.push(name);
            }
            rest = &rest[close + 1..];
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
        assert_eq!(roots, 1, "expected exactly one root element");
        assert!(rest.trim().is_empty(), "content after root: {rest:?}");
    }

    fn square_pore_mask(n: usize) -> BinaryMask {
        // n disjoint 4×4 squares along the diagonal of a grid
        let side = (n as u32) * 8 + 8;
        let mut mask = BinaryMask::filled(side, side, Phase::Fiber);
        for i in 0..n as u32 {
            for dy in 0..4 {
                for dx in 0..4 {
                    mask.set(4 + i * 8 + dx, 4 + i * 8 + dy, Phase::Pore);
                }
            }
        }
        mask
    }

    #[test]
    fn pore_map_has_one_polygon_per_pore() {
        let mask = square_pore_mask(1);
        let pores = extract_pores(&mask, 10);
        assert_eq!(pores.len(), 1);
        let svg = render_pore_map(
            mask.width(),
            mask.height(),
            &pores,
            &[Some(0)],
            &[PoreLabel::Unlabeled],
            0.0447,
        );
        assert_well_formed(&svg);
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains(">1</text>"), "pore id label missing");
        assert!(svg.contains("cluster 0"));
        assert!(svg.contains("5 µm"));
    }

    #[test]
    fn pore_map_without_pores_is_legend_only() {
        let svg = render_pore_map(64, 64, &[], &[], &[], 0.0447);
        assert_well_formed(&svg);
        assert_eq!(svg.matches("<polygon").count(), 0);
        assert!(svg.contains("5 µm"));
    }

    #[test]
    fn pore_map_polygon_count_scales() {
        let mask = square_pore_mask(20);
        let pores = extract_pores(&mask, 10);
        assert_eq!(pores.len(), 20);
        let clusters: Vec<Option<usize>> = (0..20).map(|i| Some(i % 3)).collect();
        let labels = vec![PoreLabel::Unlabeled; 20];
        let svg = render_pore_map(mask.width(), mask.height(), &pores, &clusters, &labels, 0.05);
        assert_well_formed(&svg);
        assert_eq!(svg.matches("<polygon").count(), 20);
    }

    #[test]
    fn pore_map_stroke_encodes_labels() {
        let mask = square_pore_mask(3);
        let pores = extract_pores(&mask, 10);
        let svg = render_pore_map(
            mask.width(),
            mask.height(),
            &pores,
            &[Some(0), None, Some(1)],
            &[PoreLabel::Shade, PoreLabel::Overlap, PoreLabel::Real],
            0.05,
        );
        assert_well_formed(&svg);
        assert_eq!(svg.matches("stroke-dasharray=\"4 2\"").count(), 1);
        assert_eq!(svg.matches("stroke=\"#c1121f\"").count(), 1);
        assert_eq!(svg.matches(UNCLUSTERED_FILL).count(), 1);
    }

    #[test]
    fn heatmap_identity_two_by_two() {
        let corr = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let names = vec!["area".to_string(), "solidity".to_string()];
        let svg = render_heatmap(&corr, &[0, 1], &names);
        assert_well_formed(&svg);
        assert_eq!(svg.matches("class=\"cell\"").count(), 4);
        assert_eq!(svg.matches(&diverging_color(1.0)).count(), 2);
        assert_eq!(svg.matches(&diverging_color(0.0)).count(), 2);
        // names appear on both axes
        assert_eq!(svg.matches(">area</text>").count(), 2);
    }

    #[test]
    fn heatmap_nine_features_has_81_cells() {
        let n = 9;
        let corr: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.1 }).collect())
            .collect();
        let names: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
        let order: Vec<usize> = (0..n).collect();
        let svg = render_heatmap(&corr, &order, &names);
        assert_well_formed(&svg);
        assert_eq!(svg.matches("class=\"cell\"").count(), 81);
    }

    #[test]
    fn diverging_scale_hits_anchor_colors() {
        assert_eq!(diverging_color(0.0), "#f7f7f7");
        assert_eq!(diverging_color(1.0), "#b2182b");
        assert_eq!(diverging_color(-1.0), "#2166ac");
        assert_eq!(diverging_color(5.0), "#b2182b"); // clamped
    }

    #[test]
    fn elbow_marks_chosen_k_on_the_curve() {
        let curve = [100.0, 70.0, 30.0, 25.0, 23.0, 21.0, 20.0, 19.5, 19.0, 18.8];
        let svg = render_elbow(&curve, 3);
        assert_well_formed(&svg);
        let points_attr = svg
            .split("points=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .expect("polyline points");
        let vertices: Vec<&str> = points_attr.split(' ').collect();
        assert_eq!(vertices.len(), 10);
        // chosen marker sits exactly on vertex index 2 (k = 3)
        let marker = svg
            .split("class=\"chosen\" cx=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .expect("chosen marker");
        assert_eq!(marker, vertices[2].split(',').next().unwrap());
    }

    #[test]
    fn monotone_curve_renders_monotone_polyline() {
        let curve = [50.0, 30.0, 20.0, 15.0, 12.0];
        let svg = render_elbow(&curve, 2);
        assert_well_formed(&svg);
        let points_attr = svg
            .split("points=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .unwrap();
        let ys: Vec<f64> = points_attr
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        // canvas y grows downward, so falling wss means rising y
        for pair in ys.windows(2) {
            assert!(pair[1] > pair[0]);
        }
    }

    #[test]
    fn pca_scatter_counts_and_labels() {
        let projection = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 0.5],
            vec![-1.0, 2.0],
        ];
        let svg = render_pca_scatter(&projection, &[0, 0, 1, 2], (0.613, 0.215)).unwrap();
        assert_well_formed(&svg);
        assert_eq!(svg.matches("class=\"pt\"").count(), 4);
        assert!(svg.contains("PC1 (61.3%)"));
        assert!(svg.contains("PC2 (21.5%)"));
        assert_eq!(svg.matches("cluster ").count(), 3);
    }

    #[test]
    fn pca_scatter_rejects_non_planar_projection() {
        let projection = vec![vec![0.0, 0.0], vec![1.0, 1.0, 1.0]];
        assert!(matches!(
            render_pca_scatter(&projection, &[0, 1], (0.5, 0.5)),
            Err(RenderError::DimensionMismatch { row: 1, got: 3 })
        ));
    }

    #[test]
    fn densities_draw_cutoff_rule_at_its_coordinate() {
        let curves = vec![
            DensityCurve {
                label: "cluster 0".into(),
                xs: vec![0.0, 0.5, 1.0, 1.5, 2.0],
                ys: vec![0.0, 0.8, 0.3, 0.1, 0.0],
            },
            DensityCurve {
                label: "cluster 1".into(),
                xs: vec![0.0, 0.5, 1.0, 1.5, 2.0],
                ys: vec![0.1, 0.2, 0.6, 0.2, 0.0],
            },
        ];
        let svg = render_densities(&curves, Some(0.4), "pore area (µm²)");
        assert_well_formed(&svg);
        assert_eq!(svg.matches("class=\"curve\"").count(), 2);
        let rule_x: f64 = svg
            .split("class=\"cutoff\" x1=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .expect("cutoff rule")
            .parse()
            .unwrap();
        // x domain [0, 2] maps to [60, 330]; 0.4 lands at 114
        assert!((rule_x - 114.0).abs() < 0.01, "rule at {rule_x}");
    }

    #[test]
    fn one_cluster_yields_one_curve() {
        let curves = vec![DensityCurve {
            label: "all".into(),
            xs: vec![0.0, 1.0],
            ys: vec![0.5, 0.5],
        }];
        let svg = render_densities(&curves, None, "x");
        assert_well_formed(&svg);
        assert_eq!(svg.matches("class=\"curve\"").count(), 1);
        assert_eq!(svg.matches("class=\"cutoff\"").count(), 0);
    }

    #[test]
    fn rendering_is_deterministic() {
        let curve = [100.0, 50.0, 25.0, 20.0];
        assert_eq!(render_elbow(&curve, 3), render_elbow(&curve, 3));
        let corr = vec![vec![1.0, -0.4], vec![-0.4, 1.0]];
        let names = vec!["a".to_string(), "b".to_string()];
        assert_eq!(
            render_heatmap(&corr, &[0, 1], &names),
            render_heatmap(&corr, &[0, 1], &names)
        );
    }

    #[test]
    fn escaping_protects_markup_characters() {
        let curves = vec![DensityCurve {
            label: "area < 2 & \"odd\"".into(),
            xs: vec![0.0, 1.0],
            ys: vec![0.5, 0.5],
        }];
        let svg = render_densities(&curves, None, "x");
        assert_well_formed(&svg);
        assert!(svg.contains("area &lt; 2 &amp; &quot;odd&quot;"));
    }
}
