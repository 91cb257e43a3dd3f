//! A small SVG plotter for the scenario CSVs.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// S_N and S_T against frame number, with the crossing marked.
    Similarity,
    /// Contrast against storage time, data points plus model line.
    Contrast,
    /// Contrast against spatial frequency, one line per storage time.
    Mtf,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "similarity" => Ok(PlotKind::Similarity),
            "contrast" => Ok(PlotKind::Contrast),
            "mtf" => Ok(PlotKind::Mtf),
            other => Err(Error::InvalidInput(format!(
                "unknown plot kind `{other}` (similarity, contrast, mtf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical guide lines with a label.
    pub markers: Vec<(f64, String)>,
}

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

/// Tick step of 1, 2 or 5 times a power of ten giving about `n` ticks.
fn nice_step(span: f64, n: f64) -> f64 {
    let raw = span / n;
    let mag = 10f64.powf(raw.log10().floor());
    let m = raw / mag;
    mag * if m < 1.5 {
        1.0
    } else if m < 3.5 {
        2.0
    } else if m < 7.5 {
        5.0
    } else {
        10.0
    }
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return Some((lo - pad, hi + pad));
    }
    let step = nice_step(hi - lo, 5.0);
    Some(((lo / step).floor() * step, (hi / step).ceil() * step))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Figure {
    /// Renders to an SVG document. Fails when there is nothing to draw.
    pub fn to_svg(&self) -> Result<String> {
        let all = || self.series.iter().flat_map(|s| s.points.iter().copied());
        let (x0, x1) = range(all().map(|p| p.0)).ok_or_else(|| Error::NoData("no data to plot".into()))?;
        let (y0, y1) = range(all().map(|p| p.1)).ok_or_else(|| Error::NoData("no data to plot".into()))?;
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for (lo, hi, horizontal) in [(x0, x1, true), (y0, y1, false)] {
            let step = nice_step(hi - lo, 5.0);
            let mut k = (lo / step).ceil() as i64;
            while (k as f64) * step <= hi + 1e-9 * step {
                let v = k as f64 * step;
                let label = format!("{}", (v / step).round() * step);
                let label = if label.len() > 8 { format!("{v:.3e}") } else { label };
                if horizontal {
                    let x = sx(v);
                    let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
                    let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 18.0);
                } else {
                    let y = sy(v);
                    let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
                    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0);
                }
                k += 1;
            }
        }
        if y0 < 0.0 && y1 > 0.0 {
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#999" stroke-dasharray="4 3"/>"##, sy(0.0), LEFT + pw);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (x, label) in &self.markers {
            let x = sx(*x);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="2 2"/>"##, TOP + ph);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, x + 3.0, TOP + 12.0, escape(label));
        }
        for (i, ser) in self.series.iter().enumerate() {
            let pts: Vec<String> = ser
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            match ser.style {
                Style::Line => {
                    let _ = writeln!(s, r#"<polyline fill="none" stroke="{}" stroke-width="1.6" points="{}"/>"#, ser.color, pts.join(" "));
                }
                Style::Points => {
                    for p in &pts {
                        let (x, y) = p.split_once(',').expect("formatted pair");
                        let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.8" fill="{}"/>"#, ser.color);
                    }
                }
            }
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            match ser.style {
                Style::Line => {
                    let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#, lx + 18.0, ser.color);
                }
                Style::Points => {
                    let _ = writeln!(s, r#"<circle cx="{}" cy="{ly}" r="3" fill="{}"/>"#, lx + 9.0, ser.color);
                }
            }
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&ser.label));
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Builds the figure for a CSV of the given kind.
pub fn figure_from_csv(csv: &Path, kind: PlotKind) -> Result<Figure> {
    match kind {
        PlotKind::Similarity => {
            let rows = io::read_similarity_csv(csv)?;
            let pick = |f: fn(&crate::metrics::SimilarityRow) -> f64| {
                rows.iter().map(|r| ((r.frame_index + 1) as f64, f(r))).collect()
            };
            let series = crate::metrics::SimilaritySeries { rows: rows.clone() };
            let markers = series
                .crossing_frame()
                .map(|i| vec![((rows[i].frame_index + 1) as f64, "crossing".to_string())])
                .unwrap_or_default();
            Ok(Figure {
                title: "Similarity of retrieved frames".into(),
                x_label: "frame".into(),
                y_label: "similarity".into(),
                series: vec![
                    Series { label: "S_N".into(), color: PALETTE[0], style: Style::Line, points: pick(|r| r.s_n) },
                    Series { label: "S_T".into(), color: PALETTE[1], style: Style::Line, points: pick(|r| r.s_t) },
                ],
                markers,
            })
        }
        PlotKind::Contrast => {
            let curves = io::read_contrast_csv(csv)?;
            let mut series = Vec::new();
            for (i, c) in curves.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let label = format!("a = {:.0} um", c.a * 1e6);
                series.push(Series {
                    label: label.clone(),
                    color,
                    style: Style::Points,
                    points: c.points.iter().map(|p| (p.t_storage * 1e6, p.c)).collect(),
                });
                let model: Vec<(f64, f64)> = c
                    .points
                    .iter()
                    .filter_map(|p| p.c_pred.map(|m| (p.t_storage * 1e6, m)))
                    .collect();
                if !model.is_empty() {
                    series.push(Series { label: format!("{label} model"), color, style: Style::Line, points: model });
                }
            }
            Ok(Figure {
                title: "Contrast against storage time".into(),
                x_label: "storage time (us)".into(),
                y_label: "contrast C".into(),
                series,
                markers: Vec::new(),
            })
        }
        PlotKind::Mtf => {
            let rows = io::read_mtf_csv(csv)?;
            let mut times: Vec<f64> = Vec::new();
            for r in &rows {
                if !times.contains(&r.t) {
                    times.push(r.t);
                }
            }
            let series = times
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let mut points: Vec<(f64, f64)> =
                        rows.iter().filter(|r| r.t == t).map(|r| (r.frequency * 1e-3, r.c)).collect();
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series {
                        label: format!("t = {:.2} us", t * 1e6),
                        color: PALETTE[i % PALETTE.len()],
                        style: Style::Line,
                        points,
                    }
                })
                .collect();
            Ok(Figure {
                title: "Modulation transfer function".into(),
                x_label: "spatial frequency (lp/mm)".into(),
                y_label: "contrast C".into(),
                series,
                markers: Vec::new(),
            })
        }
    }
}

/// Reads `csv` as `kind` and writes the SVG to `out`.
pub fn plot_csv(csv: &Path, kind: PlotKind, out: &Path) -> Result<()> {
    let svg = figure_from_csv(csv, kind)?.to_svg()?;
    std::fs::write(out, svg)?;
    Ok(())
}
