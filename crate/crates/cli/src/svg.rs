//! Standalone SVG plots: residual curves and affinity heatmaps.

use std::fmt::Write as _;

use nrsfm_core::admm::ResidualRecord;
use nrsfm_core::Matrix;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Floor for log-scale plotting of residuals that are exactly zero.
const LOG_FLOOR: f64 = 1e-16;

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

/// Log-scale residual curves, one polyline per constraint.
pub fn residual_plot(history: &[ResidualRecord], epsilon: f64) -> String {
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT);
    let plot_w = WIDTH - 2.0 * MARGIN - 110.0;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let logs: Vec<[f64; 8]> = history
        .iter()
        .map(|r| r.residuals().map(|v| v.max(LOG_FLOOR).log10()))
        .collect();
    let eps_log = epsilon.max(LOG_FLOOR).log10();
    let mut lo = eps_log;
    let mut hi = eps_log;
    for row in &logs {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
    let n = history.len().max(2) as f64 - 1.0;
    let x = |i: usize| MARGIN + plot_w * i as f64 / n;
    let y = |v: f64| MARGIN + plot_h * (hi - v) / (hi - lo);

    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let mut decade = lo;
    while decade <= hi {
        let yy = y(decade);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            MARGIN + plot_w,
            MARGIN - 6.0,
            yy + 4.0
        );
        decade += 1.0;
    }
    let ey = y(eps_log);
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{ey:.2}" x2="{:.2}" y2="{ey:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
        MARGIN + plot_w
    );
    for (k, name) in ResidualRecord::RESIDUAL_NAMES.iter().enumerate() {
        let points: Vec<String> = logs
            .iter()
            .enumerate()
            .map(|(i, row)| format!("{:.2},{:.2}", x(i), y(row[k])))
            .collect();
        let color = COLORS[k];
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 16.0 * k as f64 + 8.0;
        let lx = MARGIN + plot_w + 14.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{name}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration (1..{})</text>"#,
        MARGIN + plot_w / 2.0,
        HEIGHT - MARGIN / 2.0,
        history.len()
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">residual (log scale); dashed: epsilon</text>"#,
        MARGIN + plot_w / 2.0,
        MARGIN / 2.0
    );
    out.push_str("</svg>\n");
    out
}

/// Grayscale heatmap of a nonnegative matrix, rows and columns reordered by
/// `order` (e.g. sorted by label).
pub fn heatmap(a: &Matrix, order: &[usize]) -> String {
    let n = order.len();
    let side = 480.0;
    let cell = side / n.max(1) as f64;
    let mut out = String::new();
    header(&mut out, side + 2.0 * 20.0, side + 2.0 * 20.0);
    let max = order
        .iter()
        .flat_map(|&i| order.iter().map(move |&j| a[(i, j)]))
        .fold(0.0, f64::max);
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            let v = if max > 0.0 { a[(i, j)] / max } else { 0.0 };
            if v <= 0.0 {
                continue;
            }
            let shade = (255.0 * (1.0 - v.sqrt())).round() as u8;
            let _ = writeln!(
                out,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="rgb({shade},{shade},{shade})"/>"#,
                20.0 + c as f64 * cell,
                20.0 + r as f64 * cell,
                cell,
                cell
            );
        }
    }
    let _ = writeln!(out, r#"<rect x="20" y="20" width="{side}" height="{side}" fill="none" stroke="black"/>"#);
    out.push_str("</svg>\n");
    out
}

/// Indices sorted by label, stable within a label.
pub fn label_order(labels: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    order
}
