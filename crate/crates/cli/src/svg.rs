//! Minimal SVG plots: a histogram against a density, and side-by-side
//! covariance heatmaps.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

pub(crate) struct Plot {
    pub name: String,
    pub svg: String,
}

fn open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    out.push('\n');
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Density-scaled histogram of `values` with `density` drawn on top.
pub(crate) fn histogram(name: &str, title: &str, values: &[f64], density: impl Fn(f64) -> f64) -> Plot {
    const BINS: usize = 40;
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut out = String::new();
    open(&mut out, WIDTH, HEIGHT, title);
    if sorted.len() >= 2 {
        // Clip to the central 99.8% so a few outliers do not flatten the plot.
        let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
        let (mut lo, mut hi) = (q(0.001), q(0.999));
        if hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / BINS as f64;
        let mut counts = [0usize; BINS];
        for &v in &sorted {
            if v >= lo && v <= hi {
                counts[(((v - lo) / width) as usize).min(BINS - 1)] += 1;
            }
        }
        let n = sorted.len() as f64;
        let heights: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * width)).collect();
        let curve: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / 200.0;
                (x, density(x))
            })
            .collect();
        let ymax = heights
            .iter()
            .copied()
            .chain(curve.iter().map(|p| p.1))
            .fold(0.0f64, f64::max)
            .max(1e-12)
            * 1.05;
        let px = |x: f64| MARGIN + (x - lo) / (hi - lo) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - y / ymax * (HEIGHT - 2.0 * MARGIN);
        for (i, h) in heights.iter().enumerate() {
            let x0 = px(lo + i as f64 * width);
            let x1 = px(lo + (i + 1) as f64 * width);
            let _ = writeln!(
                out,
                r##"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>"##,
                py(*h),
                x1 - x0,
                py(0.0) - py(*h)
            );
        }
        let points: Vec<String> = curve
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#de2d26" stroke-width="2"/>"##,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
            py(0.0),
            WIDTH - MARGIN
        );
        for i in 0..=4 {
            let x = lo + (hi - lo) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.3}</text>"#,
                px(x),
                py(0.0) + 16.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">n = {}</text>"#,
            WIDTH - MARGIN,
            MARGIN,
            sorted.len()
        );
    }
    out.push_str("</svg>\n");
    Plot {
        name: name.into(),
        svg: out,
    }
}

fn diverging(v: f64, scale: f64) -> String {
    let s = (v / scale).clamp(-1.0, 1.0);
    let (r, g, b) = if s >= 0.0 {
        (255.0, 255.0 * (1.0 - s), 255.0 * (1.0 - s))
    } else {
        (255.0 * (1.0 + s), 255.0 * (1.0 + s), 255.0)
    };
    format!("rgb({},{},{})", r as u8, g as u8, b as u8)
}

/// Two heatmaps side by side, sharing one colour scale.
pub(crate) fn heatmaps(name: &str, title: &str, labels: &[String], panels: [(&str, &[f64]); 2]) -> Plot {
    let d = labels.len();
    let cell = (200.0 / d.max(1) as f64).clamp(24.0, 64.0);
    let panel = cell * d as f64;
    let width = 3.0 * MARGIN + 2.0 * panel + MARGIN;
    let height = panel + 2.0 * MARGIN + 20.0;
    let scale = panels
        .iter()
        .flat_map(|(_, m)| m.iter())
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1e-12);
    let mut out = String::new();
    open(&mut out, width, height, title);
    for (p, (caption, m)) in panels.iter().enumerate() {
        let x0 = 2.0 * MARGIN + p as f64 * (panel + MARGIN);
        let y0 = MARGIN + 10.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x0 + panel / 2.0,
            y0 - 8.0,
            escape(caption)
        );
        for i in 0..d {
            for j in 0..d {
                let v = m[i * d + j];
                let (x, y) = (x0 + j as f64 * cell, y0 + i as f64 * cell);
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}" stroke="gray" stroke-width="0.5"/>"#,
                    diverging(v, scale)
                );
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{v:.3}</text>"#,
                    x + cell / 2.0,
                    y + cell / 2.0 + 4.0
                );
            }
        }
        if p == 0 {
            for (i, l) in labels.iter().enumerate() {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                    x0 - 4.0,
                    y0 + (i as f64 + 0.5) * cell + 4.0,
                    escape(l)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    Plot {
        name: name.into(),
        svg: out,
    }
}
