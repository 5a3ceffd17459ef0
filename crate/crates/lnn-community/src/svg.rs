//! Self-contained SVG figures: role heatmaps and layered network diagrams.
//! All styling is inline and every coordinate is derived deterministically
//! from the inputs.

use crate::network::NetworkParams;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Sequential white -> blue for nonnegative data, diverging red/blue when the
/// matrix has negative entries; `v` is pre-scaled to [-1, 1].
fn cell_color(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        let u = t;
        (
            (255.0 + (31.0 - 255.0) * u) as u8,
            (255.0 + (119.0 - 255.0) * u) as u8,
            (255.0 + (180.0 - 255.0) * u) as u8,
        )
    } else {
        let u = -t;
        (
            (255.0 + (214.0 - 255.0) * u) as u8,
            (255.0 + (39.0 - 255.0) * u) as u8,
            (255.0 + (40.0 - 255.0) * u) as u8,
        )
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heatmap of a matrix with per-figure max normalization; rows are labeled on
/// the left, columns (thinned when dense) along the top.
pub fn heatmap_svg(
    title: &str,
    row_labels: &[String],
    col_labels: &[String],
    rows: &[Vec<f64>],
) -> String {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    let cell_w = (960 / n_cols.max(1)).clamp(3, 26);
    let cell_h = (480 / n_rows.max(1)).clamp(10, 26);
    let left = 90;
    let top = 52;
    let width = left + n_cols * cell_w + 20;
    let height = top + n_rows * cell_h + 16;

    let max_abs = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{left}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#000\">{}</text>\n",
        esc(title)
    ));
    let col_step = (n_cols / 24).max(1);
    for (c, label) in col_labels.iter().enumerate() {
        if c % col_step != 0 {
            continue;
        }
        let x = left + c * cell_w + cell_w / 2;
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#333\" text-anchor=\"middle\">{}</text>\n",
            top - 6,
            esc(label)
        ));
    }
    for (r, row) in rows.iter().enumerate() {
        let y = top + r * cell_h;
        if let Some(label) = row_labels.get(r) {
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#333\" text-anchor=\"end\">{}</text>\n",
                left - 6,
                y + cell_h / 2 + 3,
                esc(label)
            ));
        }
        for (c, &v) in row.iter().enumerate() {
            let x = left + c * cell_w;
            out.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell_w}\" height=\"{cell_h}\" fill=\"{}\" stroke=\"#ddd\" stroke-width=\"0.5\"><title>{}</title></rect>\n",
                cell_color(v / scale),
                format_args!("{}, {}: {v:.6}", row_labels.get(r).map(String::as_str).unwrap_or(""), col_labels.get(c).map(String::as_str).unwrap_or(""))
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Layered network diagram, output layer on top. Positive weights are solid
/// strokes, negative weights dashed; stroke width scales with magnitude.
/// Weights below `min_weight` in magnitude are not drawn. When community
/// assignments are given, unit fill colors encode them.
pub fn network_svg(
    params: &NetworkParams,
    assignments: Option<&[Vec<usize>]>,
    min_weight: f64,
) -> String {
    let depth = params.topology().depth();
    let max_units = params.topology().sizes().iter().copied().max().unwrap_or(1);
    let unit_gap = (1100 / max_units.max(1)).clamp(8, 40);
    let layer_gap = 110;
    let margin = 40;
    let width = margin * 2 + (max_units - 1) * unit_gap;
    let height = margin * 2 + (depth - 1) * layer_gap;

    let unit_x = |layer: usize, u: usize| -> usize {
        let n = params.topology().size(layer);
        let span = (n - 1) * unit_gap;
        margin + (width - 2 * margin - span) / 2 + u * unit_gap
    };
    // Output layer on top.
    let layer_y = |layer: usize| -> usize { margin + (depth - layer) * layer_gap + 6 };

    let mut max_w = 0.0f64;
    for d in 1..depth {
        for &w in params.weights_from(d).data() {
            max_w = max_w.max(w.abs());
        }
    }
    let w_scale = if max_w > 0.0 { max_w } else { 1.0 };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    for d in 1..depth {
        let w = params.weights_from(d);
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                let v = w.get(i, j);
                if v.abs() < min_weight || v == 0.0 {
                    continue;
                }
                let dash = if v > 0.0 { "" } else { " stroke-dasharray=\"4,3\"" };
                let sw = 0.3 + 1.7 * v.abs() / w_scale;
                out.push_str(&format!(
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#555\" stroke-width=\"{sw:.2}\" stroke-opacity=\"0.55\"{dash}/>\n",
                    unit_x(d, i),
                    layer_y(d),
                    unit_x(d + 1, j),
                    layer_y(d + 1),
                ));
            }
        }
    }
    for d in 1..=depth {
        for u in 0..params.topology().size(d) {
            let fill = match assignments {
                Some(labels) => PALETTE[labels[d - 1][u] % PALETTE.len()],
                None => "#999999",
            };
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{fill}\" stroke=\"#222\" stroke-width=\"0.7\"/>\n",
                unit_x(d, u),
                layer_y(d),
            ));
        }
        out.push_str(&format!(
            "<text x=\"8\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">L{d}</text>\n",
            layer_y(d) + 4
        ));
    }
    out.push_str("</svg>\n");
    out
}
