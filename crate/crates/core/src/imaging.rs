//! Input patterns and time-gated frame formation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion;
use crate::error::{invalid, Result};
use crate::frames::{Frame, FrameSet, SubWindow};
use crate::gem1d::{EchoTrace, GradientSchedule};
use crate::image::{GridSpec, ImageField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Lines run along y; intensity varies with x.
    Vertical,
    /// Lines run along x; intensity varies with y.
    Horizontal,
}

/// A group of equal bright lines of width `a` separated by dark gaps of
/// width `a`, centred on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarChart {
    /// Line width and gap width (m); the spatial frequency is 1/(2a).
    pub a: f64,
    pub n_lines: usize,
    pub orientation: Orientation,
    /// Length of the lines (m).
    pub extent: f64,
}

impl BarChart {
    /// Three lines of width `a`, `5a` long.
    pub fn three_bar(a: f64, orientation: Orientation) -> Self {
        BarChart {
            a,
            n_lines: 3,
            orientation,
            extent: 5.0 * a,
        }
    }

    /// Line pairs per metre.
    pub fn spatial_frequency(&self) -> f64 {
        1.0 / (2.0 * self.a)
    }

    /// Line centres relative to the chart centre (m).
    pub fn line_centres(&self) -> Vec<f64> {
        let mid = (self.n_lines as f64 - 1.0) / 2.0;
        (0..self.n_lines)
            .map(|k| (k as f64 - mid) * 2.0 * self.a)
            .collect()
    }

    /// Where contrast is sampled, relative to the chart centre: `(dark, bright)`.
    ///
    /// The dark sample sits on the innermost gap at or left of the centre,
    /// the bright one on the next line outward, a distance `a` away. With an
    /// odd line count this is the gap beside the middle line and the
    /// neighbouring outer line, which is the pair that inverts under strong
    /// blur.
    pub fn sample_offsets(&self) -> (f64, f64) {
        let dark = if self.n_lines % 2 == 0 { 0.0 } else { -self.a };
        (dark, dark - self.a)
    }

    /// Pattern width across the lines (m).
    pub fn span(&self) -> f64 {
        (2 * self.n_lines - 1) as f64 * self.a
    }

    fn validate(&self, pitch: f64) -> Result<()> {
        if self.n_lines < 2 {
            return Err(invalid("a bar chart needs at least two lines"));
        }
        if !(self.a >= 4.0 * pitch * (1.0 - 1e-12)) {
            return Err(invalid(format!(
                "line width {:.3e} m is under-resolved: need a >= 4 pitch ({:.3e} m)",
                self.a,
                4.0 * pitch
            )));
        }
        if !(self.extent > 0.0) {
            return Err(invalid("chart extent must be positive"));
        }
        Ok(())
    }
}

/// Placement of a chart on a grid, in continuous pixel coordinates
/// (pixel `i` covers `[i, i+1)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartLayout {
    pub chart: BarChart,
    pub pitch: f64,
    pub centre_x: f64,
    pub centre_y: f64,
}

impl ChartLayout {
    /// Rows (vertical chart) or columns (horizontal chart) covered by the lines.
    pub fn extent_range(&self, len: usize) -> std::ops::Range<usize> {
        let c = match self.chart.orientation {
            Orientation::Vertical => self.centre_y,
            Orientation::Horizontal => self.centre_x,
        };
        let half = 0.5 * self.chart.extent / self.pitch;
        let lo = (c - half).floor().max(0.0) as usize;
        let hi = ((c + half).ceil() as usize).min(len);
        lo..hi
    }

    /// Across-line pixel coordinates of the `(dark, bright)` samples.
    pub fn sample_positions(&self) -> (f64, f64) {
        let c = match self.chart.orientation {
            Orientation::Vertical => self.centre_x,
            Orientation::Horizontal => self.centre_y,
        };
        let (d, b) = self.chart.sample_offsets();
        (c + d / self.pitch, c + b / self.pitch)
    }
}

/// Membership of a pixel centre in an interval of half-width `half` about
/// `centre` (pixel units). Ties go to the lower edge: `[c − half, c + half)`.
fn inside(centre_of_pixel: f64, centre: f64, half: f64) -> bool {
    let d = centre_of_pixel - centre;
    let eps = 1e-9;
    d >= -half - eps && d < half - eps
}

/// Rasterises `chart` centred on `grid`. Each pixel is 1 inside a line and 0
/// outside, judged at the pixel centre.
pub fn make_barchart(chart: &BarChart, grid: &GridSpec) -> Result<(ImageField, ChartLayout)> {
    chart.validate(grid.pitch)?;
    let (across, along) = match chart.orientation {
        Orientation::Vertical => (grid.width, grid.height),
        Orientation::Horizontal => (grid.height, grid.width),
    };
    if chart.span() / grid.pitch > across as f64 || chart.extent / grid.pitch > along as f64 {
        return Err(invalid("bar chart does not fit on the grid"));
    }
    let layout = ChartLayout {
        chart: *chart,
        pitch: grid.pitch,
        centre_x: grid.width as f64 / 2.0,
        centre_y: grid.height as f64 / 2.0,
    };
    let half_line = 0.5 * chart.a / grid.pitch;
    let half_extent = 0.5 * chart.extent / grid.pitch;
    let centres: Vec<f64> = chart.line_centres().iter().map(|c| c / grid.pitch).collect();
    let (cx, cy) = (layout.centre_x, layout.centre_y);
    let img = ImageField::from_fn(grid.width, grid.height, grid.pitch, |x, y| {
        let (u, v, cu, cv) = match chart.orientation {
            Orientation::Vertical => (x as f64 + 0.5, y as f64 + 0.5, cx, cy),
            Orientation::Horizontal => (y as f64 + 0.5, x as f64 + 0.5, cy, cx),
        };
        let on_line = centres.iter().any(|&c| inside(u, cu + c, half_line));
        if on_line && inside(v, cv, half_extent) {
            1.0
        } else {
            0.0
        }
    })?;
    Ok((img, layout))
}

/// Grid for `chart`: pitch at most `max_pitch`, shrunk so the line width is
/// an odd number of pixels, on an odd square canvas holding the pattern plus
/// a diffusion margin for `t_max`. Line centres then sit on pixel centres and
/// line edges on pixel boundaries.
pub fn chart_grid(chart: &BarChart, max_pitch: f64, diffusion: f64, t_max: f64) -> Result<GridSpec> {
    let mut n = (chart.a / max_pitch * (1.0 - 1e-12)).ceil().max(5.0) as usize;
    n += 1 - n % 2;
    let pitch = chart.a / n as f64;
    let margin = diffusion::padding_for(diffusion, t_max, pitch)?;
    let pattern = (chart.span().max(chart.extent) / pitch).ceil() as usize;
    let mut size = pattern + 2 * margin + 8;
    size += 1 - size % 2;
    GridSpec::new(size, size, pitch)
}

/// Letter geometry. Box aspect 1:1.2 and stroke 15 % of the height unless
/// set otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LetterMask {
    pub height: f64,
    pub width: f64,
    pub stroke_width: f64,
}

impl LetterMask {
    pub fn with_height(height: f64) -> Self {
        LetterMask {
            height,
            width: height / 1.2,
            stroke_width: 0.15 * height,
        }
    }
}

/// Draws `glyph` centred on `grid`.
///
/// Box coordinates run from the top-left corner, `u` right and `v` down, in
/// pixels; `s` is the stroke width.
/// * `T`: the bar `v < s` across the full width, plus the stem `|u − w/2| < s/2`.
/// * `N`: stems `u < s` and `u > w − s`, plus the diagonal of thickness `s`
///   (measured perpendicular) from `(s/2, 0)` to `(w − s/2, h)`.
pub fn make_letter(glyph: char, mask: &LetterMask, grid: &GridSpec) -> Result<ImageField> {
    let (w, h, s) = (mask.width, mask.height, mask.stroke_width);
    if !(s >= 3.0 * grid.pitch * (1.0 - 1e-12)) {
        return Err(invalid(format!(
            "stroke width {s:.3e} m is under-resolved: need >= 3 pitch"
        )));
    }
    if w / grid.pitch > grid.width as f64 || h / grid.pitch > grid.height as f64 {
        return Err(invalid("letter does not fit on the grid"));
    }
    // Work in pixel units and shrink every shape by a hair so that pixel
    // centres exactly on an edge are treated alike on both sides.
    let eps = 1e-9;
    let (w, h, s) = (w / grid.pitch, h / grid.pitch, s / grid.pitch);
    let draw: Box<dyn Fn(f64, f64) -> bool> = match glyph.to_ascii_uppercase() {
        'T' => Box::new(move |u, v| v < s - eps || (u - 0.5 * w).abs() < 0.5 * s - eps),
        'N' => {
            let (x0, x1) = (0.5 * s, w - 0.5 * s);
            let (dx, dy) = (x1 - x0, h);
            let len = (dx * dx + dy * dy).sqrt();
            Box::new(move |u, v| {
                let dist = ((u - x0) * dy - v * dx).abs() / len;
                u < s - eps || u > w - s + eps || dist < 0.5 * s - eps
            })
        }
        other => return Err(invalid(format!("unsupported glyph `{other}` (only N and T)"))),
    };
    let x_off = 0.5 * (grid.width as f64 - w);
    let y_off = 0.5 * (grid.height as f64 - h);
    ImageField::from_fn(grid.width, grid.height, grid.pitch, |x, y| {
        let u = x as f64 + 0.5 - x_off;
        let v = y as f64 + 0.5 - y_off;
        if u > eps && u < w - eps && v > eps && v < h - eps && draw(u, v) {
            1.0
        } else {
            0.0
        }
    })
}

/// Temporal envelope `|E(t)|²` of one retrieved component.
pub trait Envelope: Sync {
    /// ∫|E|² dt over `[t0, t1]`.
    fn energy(&self, t0: f64, t1: f64) -> f64;
    /// Times covered by the envelope.
    fn span(&self) -> (f64, f64);
}

impl Envelope for EchoTrace {
    fn energy(&self, t0: f64, t1: f64) -> f64 {
        self.integrate(t0, t1)
    }

    fn span(&self) -> (f64, f64) {
        match (self.t_grid.first(), self.t_grid.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        }
    }
}

/// Constant intensity over a span.
#[derive(Debug, Clone, Copy)]
pub struct ConstantEnvelope {
    pub intensity: f64,
    pub start: f64,
    pub end: f64,
}

impl Envelope for ConstantEnvelope {
    fn energy(&self, t0: f64, t1: f64) -> f64 {
        let (a, b) = (t0.max(self.start), t1.min(self.end));
        if b > a {
            self.intensity * (b - a)
        } else {
            0.0
        }
    }

    fn span(&self) -> (f64, f64) {
        (self.start, self.end)
    }
}

/// Transverse intensity of one component at output time `t`.
pub trait ImageSource: Sync {
    fn image_at(&self, t: f64) -> Result<ImageField>;
}

/// An image that does not change.
pub struct StaticImage(pub ImageField);

impl ImageSource for StaticImage {
    fn image_at(&self, _t: f64) -> Result<ImageField> {
        Ok(self.0.clone())
    }
}

/// A stored image blurred for the storage time of the slice that rephases
/// at each output instant.
pub struct DiffusingImage {
    pub image: ImageField,
    pub diffusion: f64,
    pub schedule: GradientSchedule,
    pub longitudinal_loss: Option<f64>,
    pub method: diffusion::Method,
    /// Treat the grid as a camera field of view: blur on a padded canvas and
    /// keep only the original window, so light spreading out is lost rather
    /// than rejected.
    pub crop_to_view: bool,
}

impl DiffusingImage {
    pub fn new(image: ImageField, diffusion: f64, schedule: GradientSchedule) -> Self {
        DiffusingImage {
            image,
            diffusion,
            schedule,
            longitudinal_loss: None,
            method: diffusion::Method::CellAverage,
            crop_to_view: false,
        }
    }

    pub fn storage_time(&self, t: f64) -> f64 {
        self.schedule.storage_time_at_output(t)
    }
}

impl ImageSource for DiffusingImage {
    fn image_at(&self, t: f64) -> Result<ImageField> {
        let storage = self.storage_time(t);
        let blurred = if self.crop_to_view {
            let m = diffusion::padding_for(self.diffusion, storage, self.image.pitch())?;
            diffusion::propagate_with(&self.image.padded(m), self.diffusion, storage, self.method)?
                .cropped(m, m, self.image.width(), self.image.height())?
        } else {
            diffusion::propagate_with(&self.image, self.diffusion, storage, self.method)?
        };
        Ok(match self.longitudinal_loss {
            Some(tau) => blurred.scaled((-storage / tau).exp()),
            None => blurred,
        })
    }
}

/// One incoherent contribution to the retrieved light: the instantaneous
/// camera-plane intensity is `|E(t)|² × image(t)`.
pub struct Component<'a> {
    pub envelope: &'a dyn Envelope,
    pub image: &'a dyn ImageSource,
}

/// Camera gating: `count` contiguous windows of `width` starting at `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGate {
    pub t0: f64,
    pub width: f64,
    pub count: usize,
    /// Target sub-window length for the time quadrature (s).
    pub sub_step: f64,
}

impl FrameGate {
    /// 28 frames of 100 ns starting 100 ns after the flip.
    pub fn movie() -> Self {
        FrameGate {
            t0: 100e-9,
            width: 100e-9,
            count: 28,
            sub_step: 25e-9,
        }
    }

    fn sub_count(&self) -> usize {
        ((self.width / self.sub_step).round() as usize).max(1)
    }
}

/// Integrates the retrieved intensity over each gate window. Each window is
/// split into equal sub-windows; in each, every component contributes its
/// envelope energy times its image at the sub-window midpoint.
pub fn gate_frames(components: &[Component<'_>], gate: &FrameGate) -> Result<FrameSet> {
    if !(gate.width > 0.0) || gate.count == 0 || !(gate.sub_step > 0.0) {
        return Err(invalid("frame gate needs positive width, count and sub-step"));
    }
    if components.is_empty() {
        return Err(invalid("no retrieved components to gate"));
    }
    let end = gate.t0 + gate.width * gate.count as f64;
    for (k, c) in components.iter().enumerate() {
        let (a, b) = c.envelope.span();
        if gate.t0 < a - 1e-15 || end > b + 1e-15 {
            return Err(invalid(format!(
                "frames [{:.3e}, {end:.3e}] s fall outside component {k}'s span [{a:.3e}, {b:.3e}] s",
                gate.t0
            )));
        }
    }
    let n_sub = gate.sub_count();
    let h = gate.width / n_sub as f64;
    let frames = (0..gate.count)
        .into_par_iter()
        .map(|f| -> Result<Frame> {
            let t_start = gate.t0 + f as f64 * gate.width;
            let mut image: Option<ImageField> = None;
            let mut sub_windows = Vec::with_capacity(n_sub);
            for s in 0..n_sub {
                let a = t_start + s as f64 * h;
                let t_mid = a + 0.5 * h;
                let mut weights = Vec::with_capacity(components.len());
                for c in components {
                    let w = c.envelope.energy(a, a + h);
                    let img = c.image.image_at(t_mid)?;
                    match image.as_mut() {
                        Some(acc) => acc.add_scaled(&img, w)?,
                        None => image = Some(img.scaled(w)),
                    }
                    weights.push(w);
                }
                sub_windows.push(SubWindow { t: t_mid, weights });
            }
            Ok(Frame {
                t_start,
                duration: gate.width,
                image: image.expect("at least one component"),
                sub_windows,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSet::new(frames)
}
