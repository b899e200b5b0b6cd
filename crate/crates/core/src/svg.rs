//! Minimal self-contained SVG line plots.
//!
//! Every plot has `viewBox="0 0 800 600"`. Each series is one
//! `<polyline class="series" data-label="…">` with one point per finite
//! data point; a confidence band is a `<polygon class="band" data-label="…">`
//! drawn underneath its series. Axes are `<line class="axis">`, tick labels
//! `<text class="tick">`.

use std::fmt::Write;

use crate::harness::{ConvergenceResult, EquivalentRow};
use crate::solvers::Path;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 6] = ["#1b9e9e", "#e07b1a", "#5a4fcf", "#c2185b", "#2e7d32", "#6d4c41"];

#[derive(Debug, Clone, Default)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// (x, low, high) per point.
    pub band: Option<Vec<(f64, f64, f64)>>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, band: None, dashed: false }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl LinePlot {
    fn finite_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let log_x = self.log_x;
        self.series
            .iter()
            .flat_map(|s| {
                s.points.iter().copied().chain(
                    s.band.iter().flatten().flat_map(|&(x, lo, hi)| [(x, lo), (x, hi)]),
                )
            })
            .filter(move |(x, y)| x.is_finite() && y.is_finite() && (!log_x || *x > 0.0))
    }

    pub fn to_svg(&self) -> String {
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in self.finite_points() {
            x0 = x0.min(tx(x));
            x1 = x1.max(tx(x));
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let px = |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
        let py = |y: f64| HEIGHT - BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);
        let ok = |x: f64, y: f64| x.is_finite() && y.is_finite() && (!self.log_x || x > 0.0);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600" width="800" height="600">"#);
        let _ = writeln!(s, r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#);
        let _ = writeln!(s, r#"<text class="title" x="400" y="30" text-anchor="middle" font-size="18">{}</text>"#, escape(&self.title));
        let (bx, by) = (HEIGHT - BOTTOM, WIDTH - RIGHT);
        let _ = writeln!(s, r#"<line class="axis" x1="{LEFT}" y1="{bx}" x2="{by}" y2="{bx}" stroke="black"/>"#);
        let _ = writeln!(s, r#"<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bx}" stroke="black"/>"#);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let xv = if self.log_x { 10f64.powf(xv) } else { xv };
            let yv = y0 + f * (y1 - y0);
            let _ = writeln!(
                s,
                r#"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
                px(xv),
                bx + 20.0,
                fmt_tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="end" font-size="12">{}</text>"#,
                LEFT - 8.0,
                py(yv) + 4.0,
                fmt_tick(yv)
            );
        }
        let _ = writeln!(s, r#"<text class="label" x="400" y="{}" text-anchor="middle" font-size="14">{}</text>"#, HEIGHT - 20.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text class="label" x="20" y="300" text-anchor="middle" font-size="14" transform="rotate(-90 20 300)">{}</text>"#,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let label = escape(&series.label);
            if let Some(band) = &series.band {
                let pts: Vec<_> = band.iter().filter(|&&(x, lo, hi)| ok(x, lo) && ok(x, hi)).collect();
                if !pts.is_empty() {
                    let mut poly = String::new();
                    for &&(x, _, hi) in &pts {
                        let _ = write!(poly, "{:.2},{:.2} ", px(x), py(hi));
                    }
                    for &&(x, lo, _) in pts.iter().rev() {
                        let _ = write!(poly, "{:.2},{:.2} ", px(x), py(lo));
                    }
                    let _ = writeln!(
                        s,
                        r#"<polygon class="band" data-label="{label}" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                        poly.trim_end()
                    );
                }
            }
            let pts: Vec<String> =
                series.points.iter().filter(|&&(x, y)| ok(x, y)).map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline class="series" data-label="{label}" points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                pts.join(" ")
            );
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text class="legend" x="{:.1}" y="{ly:.1}" font-size="12" fill="{color}">{label}</text>"#,
                WIDTH - RIGHT - 200.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Mean rmse against steps per (dynamics, schedule), with CI bands.
pub fn convergence_plot(result: &ConvergenceResult) -> LinePlot {
    let series = result
        .cells
        .iter()
        .map(|c| {
            let aggs: Vec<_> = result.aggregates.iter().filter(|a| a.dynamics == c.dynamics && a.schedule == c.schedule).collect();
            Series {
                label: format!("{}/{}", c.dynamics, c.schedule),
                points: aggs.iter().map(|a| (a.steps as f64, a.mean)).collect(),
                band: Some(aggs.iter().map(|a| (a.steps as f64, a.ci_low, a.ci_high)).collect()),
                dashed: c.dynamics == crate::harness::Dynamics::SdeOptimal,
            }
        })
        .collect();
    LinePlot {
        title: format!("rmse to reference ({}, reference = {})", result.scheme, result.reference.label()),
        x_label: "solver steps".into(),
        y_label: "mean rmse".into(),
        log_x: true,
        series,
    }
}

/// Equivalent linear-schedule steps against lazy-schedule steps per
/// dynamics. Censored estimates are left out of the polylines.
pub fn equivalent_steps_plot(rows: &[EquivalentRow]) -> LinePlot {
    let mut dynamics: Vec<_> = rows.iter().map(|r| r.dynamics).collect();
    dynamics.dedup();
    let mut series: Vec<Series> = dynamics
        .iter()
        .map(|&d| {
            let rs: Vec<_> = rows.iter().filter(|r| r.dynamics == d).collect();
            Series {
                label: d.label().to_string(),
                points: rs.iter().map(|r| (r.lazy_steps as f64, r.estimate.as_f64())).collect(),
                band: Some(rs.iter().map(|r| (r.lazy_steps as f64, r.ci_low, r.ci_high)).collect()),
                dashed: false,
            }
        })
        .collect();
    let mut steps: Vec<f64> = rows.iter().map(|r| r.lazy_steps as f64).collect();
    steps.sort_by(f64::total_cmp);
    steps.dedup();
    series.push(Series { label: "identity".into(), points: steps.iter().map(|&n| (n, n)).collect(), band: None, dashed: true });
    LinePlot {
        title: "equivalent linear-schedule steps".into(),
        x_label: "lazy-schedule steps".into(),
        y_label: "linear-schedule steps".into(),
        log_x: true,
        series,
    }
}

/// Every coordinate of every path against t.
pub fn path_plot(paths: &[(&str, &Path)]) -> LinePlot {
    let mut series = Vec::new();
    for (name, p) in paths {
        for i in 0..p.dim {
            series.push(Series::new(
                format!("{name} x_{i}"),
                p.times.iter().zip(p.states()).map(|(&t, x)| (t, x[i])).collect(),
            ));
        }
    }
    LinePlot { title: "sample paths".into(), x_label: "t".into(), y_label: "x".into(), log_x: false, series }
}
