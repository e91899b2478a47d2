//! Minimal SVG polyline charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::simkit::Sample;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
/// Polylines are thinned to about this many points.
const MAX_POINTS: usize = 2000;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return None;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.1 };
        y0 -= pad;
        y1 += pad;
    }
    Some((x0, x1, y0, y1))
}

pub fn line_chart(title: &str, y_label: &str, series: &[Series]) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let (px0, px1, py0, py1) = (MARGIN, WIDTH - 16.0, HEIGHT - 36.0, 32.0);
    let _ = writeln!(
        svg,
        r##"<rect x="{px0}" y="{py1}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        px1 - px0,
        py0 - py1
    );
    let Some((x0, x1, y0, y1)) = bounds(series) else {
        svg.push_str("</svg>\n");
        return svg;
    };
    let sx = |x: f64| px0 + (x - x0) / (x1 - x0) * (px1 - px0);
    let sy = |y: f64| py0 - (y - y0) / (y1 - y0) * (py0 - py1);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.3}</text>"#, sx(xv), py0 + 16.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.3e}</text>"#, px0 - 4.0, sy(yv) + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">t (s)</text>"#, WIDTH / 2.0, HEIGHT - 4.0);
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let stride = s.points.len() / MAX_POINTS + 1;
        let mut path = String::new();
        for &(x, y) in s.points.iter().step_by(stride).filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#, path.trim_end());
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            px0 + 8.0 + 110.0 * i as f64,
            py1 + 14.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

type Extractor = fn(&Sample) -> f64;

/// The standard chart set of a run, written into `dir`.
pub fn write_charts(samples: &[Sample], dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let charts: [(&str, &str, &str, Vec<(&str, Extractor)>); 6] = [
        (
            "direct_current.svg",
            "Direct currents",
            "i_d (A)",
            vec![("i_d1", |s| s.dq[0].d), ("i_d2", |s| s.dq[1].d)],
        ),
        (
            "homopolar_current.svg",
            "Homopolar currents",
            "i_h (A)",
            vec![("i_h1", |s| s.dq[0].h), ("i_h2", |s| s.dq[1].h)],
        ),
        (
            "phase_currents1.svg",
            "Phase currents, turbine 1",
            "A",
            vec![
                ("i_a1", |s| s.state.i_a1),
                ("i_b1", |s| s.state.i_b1),
                ("i_c1", |s| s.state.i_c1),
            ],
        ),
        (
            "phase_sum.svg",
            "Sum of phase currents",
            "A",
            vec![
                ("turbine 1", |s| s.state.currents(0).sum()),
                ("turbine 2", |s| s.state.currents(1).sum()),
            ],
        ),
        (
            "rotor_speed.svg",
            "Rotor speeds",
            "rad/s",
            vec![("omega1", |s| s.state.omega1), ("omega2", |s| s.state.omega2)],
        ),
        (
            "yaw.svg",
            "Yaw angle and wind direction",
            "rad",
            vec![("psi", |s| s.state.psi), ("alpha", |s| s.wind.direction)],
        ),
    ];
    let mut written = Vec::new();
    for (file, title, y_label, lines) in charts {
        let series: Vec<Series> = lines
            .iter()
            .map(|(label, f)| Series {
                label,
                points: samples.iter().map(|s| (s.t, f(s))).collect(),
            })
            .collect();
        let path = dir.join(file);
        std::fs::write(&path, line_chart(title, y_label, &series))?;
        written.push(path);
    }
    Ok(written)
}
