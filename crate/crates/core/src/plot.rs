//! Minimal SVG line and scatter charts.

use std::fmt::Write as _;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const PAD: f64 = 44.0;

pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers instead of a line.
    pub markers: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Same scale on both axes.
    pub equal_axes: bool,
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let mut b = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in panel.series.iter().flat_map(|s| s.points.iter()) {
        b.0 = b.0.min(*x);
        b.1 = b.1.max(*x);
        b.2 = b.2.min(*y);
        b.3 = b.3.max(*y);
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let widen = |lo: f64, hi: f64| {
        let span = hi - lo;
        let pad = if span > 1e-12 {
            0.05 * span
        } else {
            0.5 * lo.abs().max(1e-3)
        };
        (lo - pad, hi + pad)
    };
    let (x0, x1) = widen(b.0, b.1);
    let (y0, y1) = widen(b.2, b.3);
    if panel.equal_axes {
        let (wx, wy) = (x1 - x0, y1 - y0);
        let aspect = (PANEL_W - 2.0 * PAD) / (PANEL_H - 2.0 * PAD);
        if wx / wy > aspect {
            let extra = (wx / aspect - wy) / 2.0;
            return (x0, x1, y0 - extra, y1 + extra);
        }
        let extra = (wy * aspect - wx) / 2.0;
        return (x0 - extra, x1 + extra, y0, y1);
    }
    (x0, x1, y0, y1)
}

fn draw_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let (x0, x1, y0, y1) = bounds(panel);
    let w = PANEL_W - 2.0 * PAD;
    let h = PANEL_H - 2.0 * PAD;
    let sx = |x: f64| ox + PAD + (x - x0) / (x1 - x0) * w;
    let sy = |y: f64| oy + PAD + (y1 - y) / (y1 - y0) * h;
    let _ = writeln!(
        out,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"white\" stroke=\"#444\"/>",
        ox + PAD,
        oy + PAD
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        ox + PANEL_W / 2.0,
        oy + PAD - 14.0,
        panel.title
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
        ox + PANEL_W / 2.0,
        oy + PANEL_H - 6.0,
        panel.x_label
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 {:.1} {:.1})\">{}</text>",
        ox + 12.0,
        oy + PANEL_H / 2.0,
        ox + 12.0,
        oy + PANEL_H / 2.0,
        panel.y_label
    );
    for (v, anchor, x, y) in [
        (x0, "start", sx(x0), oy + PAD + h + 14.0),
        (x1, "end", sx(x1), oy + PAD + h + 14.0),
    ] {
        let _ = writeln!(out, "<text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"9\" text-anchor=\"{anchor}\">{v:.3}</text>");
    }
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1) + 8.0)] {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"9\" text-anchor=\"end\">{v:.3}</text>",
            ox + PAD - 3.0
        );
    }
    for s in &panel.series {
        if s.markers {
            for &(x, y) in &s.points {
                let _ = writeln!(
                    out,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/>",
                    sx(x),
                    sy(y),
                    s.color
                );
            }
        } else if !s.points.is_empty() {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
                pts.join(" "),
                s.color
            );
        }
    }
}

/// Panels laid out in a grid with `columns` columns.
pub fn render(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let (w, h) = (PANEL_W * columns as f64, PANEL_H * rows as f64);
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n");
    let _ = writeln!(
        out,
        "<rect width=\"{w:.0}\" height=\"{h:.0}\" fill=\"#fafafa\"/>"
    );
    for (i, p) in panels.iter().enumerate() {
        draw_panel(
            &mut out,
            p,
            (i % columns) as f64 * PANEL_W,
            (i / columns) as f64 * PANEL_H,
        );
    }
    out.push_str("</svg>\n");
    out
}
