//! SVG heatmap rendering with a fixed 256-step color ramp.

use std::fmt::Write as _;

use latentrw::heatmap::HeatmapGrid;

/// Anchor colors of the ramp (dark blue through green to yellow). The full
/// 256-entry table is linear interpolation between these, so renders do not
/// depend on any external colormap implementation.
const RAMP_ANCHORS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [72, 40, 120],
    [62, 74, 137],
    [49, 104, 142],
    [38, 130, 142],
    [31, 158, 137],
    [53, 183, 121],
    [109, 205, 89],
    [253, 231, 37],
];

/// The 256-step ramp as RGB triples.
pub fn color_table() -> Vec<[u8; 3]> {
    let mut table = Vec::with_capacity(256);
    let segments = RAMP_ANCHORS.len() - 1;
    for i in 0..256 {
        let t = i as f64 / 255.0 * segments as f64;
        let seg = (t.floor() as usize).min(segments - 1);
        let frac = t - seg as f64;
        let a = RAMP_ANCHORS[seg];
        let b = RAMP_ANCHORS[seg + 1];
        let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * frac).round() as u8;
        table.push([mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])]);
    }
    table
}

/// Renders the grid as an SVG color map. Values are normalized to the
/// grid's own min/max; a constant grid renders with the lowest color.
pub fn render_heatmap(grid: &HeatmapGrid, title: &str) -> String {
    let table = color_table();
    let r = grid.resolution;
    let cell = 8usize;
    let margin = 20usize;
    let size = r * cell + 2 * margin;
    let lo = grid.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = grid.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    );
    let _ = writeln!(
        svg,
        "  <title>{title} (range {lo:.4} to {hi:.4}, axes {:.1} to {:.1})</title>",
        grid.lo, grid.hi
    );
    let _ = writeln!(
        svg,
        "  <rect width=\"{size}\" height=\"{size}\" fill=\"#ffffff\"/>"
    );
    for row in 0..r {
        for col in 0..r {
            let v = grid.value(row, col);
            let idx = (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as usize;
            let [cr, cg, cb] = table[idx];
            // Row 0 is the lowest z2 coordinate; SVG y grows downward.
            let x = margin + col * cell;
            let y = margin + (r - 1 - row) * cell;
            let _ = writeln!(
                svg,
                "  <rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"#{cr:02x}{cg:02x}{cb:02x}\"/>"
            );
        }
    }
    let _ = writeln!(
        svg,
        "  <rect x=\"{margin}\" y=\"{margin}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>",
        r * cell,
        r * cell
    );
    svg.push_str("</svg>\n");
    svg
}
