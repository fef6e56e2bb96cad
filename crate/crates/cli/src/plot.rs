//! Minimal deterministic SVG plots. Every plot written by the workbench has
//! a CSV twin with the same numbers; nothing reads the SVG back.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f",
];

pub struct Series<'a> {
    pub name: String,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    /// Draw markers only.
    pub points: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 0.0 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn frame(out: &mut String, title: &str, xl: &str, yl: &str, x: (f64, f64), y: (f64, f64)) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let px = LEFT + f * pw;
        let py = TOP + ph - f * ph;
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{:.4}</text>"#,
            TOP + ph + 18.0,
            x.0 + f * (x.1 - x.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.4}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            y.0 + f * (y.1 - y.0)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 14.0, escape(xl));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(yl)
    );
}

pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let x = bounds(series.iter().flat_map(|s| s.xs.iter().copied()));
    let y = bounds(series.iter().flat_map(|s| s.ys.iter().copied()).chain(std::iter::once(0.0)));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let sx = |v: f64| LEFT + (v - x.0) / (x.1 - x.0) * pw;
    let sy = |v: f64| TOP + ph - (v - y.0) / (y.1 - y.0) * ph;
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, x, y);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if s.points {
            for (&a, &b) in s.xs.iter().zip(s.ys) {
                if a.is_finite() && b.is_finite() {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(a), sy(b));
                }
            }
        } else {
            let pts: Vec<String> = s
                .xs
                .iter()
                .zip(s.ys)
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(&a, &b)| format!("{:.2},{:.2}", sx(a), sy(b)))
                .collect();
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
            LEFT + 10.0,
            TOP + 16.0 + 14.0 * k as f64,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Grey-scale image of `z[row][col]`; rows along y, columns along x.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], z: &[Vec<f64>]) -> String {
    let x = bounds(xs.iter().copied());
    let y = bounds(ys.iter().copied());
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let zmax = z.iter().flatten().copied().fold(0.0, f64::max);
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, x, y);
    let cw = pw / xs.len().max(1) as f64;
    let ch = ph / ys.len().max(1) as f64;
    for (i, row) in z.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let level = if zmax > 0.0 { (v / zmax).clamp(0.0, 1.0).sqrt() } else { 0.0 };
            let g = (255.0 * (1.0 - level)).round() as u8;
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#{g:02x}{g:02x}{g:02x}"/>"##,
                LEFT + j as f64 * cw,
                TOP + ph - (i + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
