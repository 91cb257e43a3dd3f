//! Observables: similarity, contrast, MTF and the diffusion-only contrast model.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{invalid, Error, Result};
use crate::frames::{Frame, FrameSet};
use crate::image::ImageField;
use crate::imaging::{make_barchart, chart_grid, BarChart, ChartLayout, Orientation};
use crate::diffusion;

/// Normalised cross-correlation of `frame` against `reference`.
///
/// A frame with no power scores 0; a reference with no power is an error.
pub fn similarity(frame: &ImageField, reference: &ImageField) -> Result<f64> {
    if !frame.same_shape(reference) {
        return Err(Error::ShapeMismatch("similarity operands differ in shape".into()));
    }
    let (mut cross, mut ff, mut rr) = (0.0, 0.0, 0.0);
    for (f, r) in frame.values().iter().zip(reference.values()) {
        cross += f * r;
        ff += f * f;
        rr += r * r;
    }
    if rr == 0.0 {
        return Err(invalid("reference image has zero power"));
    }
    if ff == 0.0 {
        return Ok(0.0);
    }
    Ok(cross / (ff * rr).sqrt())
}

/// `|S_N − S_T|`.
pub fn distinguishability(s_n: f64, s_t: f64) -> f64 {
    (s_n - s_t).abs()
}

/// Similarity of one frame against one reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub s: f64,
    pub reference_id: String,
    pub frame_index: usize,
}

/// How the across-line profile is read at a sample position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Linear interpolation between the two nearest pixel centres.
    #[default]
    Column,
    /// Mean of the interpolated values at the position and ±1 pixel.
    ThreeColumn,
}

fn interpolate(f: impl Fn(isize) -> f64, pos: f64) -> f64 {
    let u = pos - 0.5;
    let i = u.floor();
    let w = u - i;
    let i = i as isize;
    if w == 0.0 {
        f(i)
    } else {
        (1.0 - w) * f(i) + w * f(i + 1)
    }
}

fn sample(f: impl Fn(isize) -> f64, pos: f64, sampling: Sampling) -> f64 {
    match sampling {
        Sampling::Column => interpolate(&f, pos),
        Sampling::ThreeColumn => {
            (interpolate(&f, pos - 1.0) + interpolate(&f, pos) + interpolate(&f, pos + 1.0)) / 3.0
        }
    }
}

fn contrast_of(bright: f64, dark: f64) -> Result<f64> {
    let sum = bright + dark;
    if !(sum.abs() > 0.0) || !sum.is_finite() {
        return Err(Error::UndefinedContrast);
    }
    Ok((bright - dark) / sum)
}

/// Bar-chart contrast `(I(a) − I(0)) / (I(a) + I(0))`, with `I` the profile
/// across the lines integrated over the line extent and read at the dark
/// and bright centre lines of `layout`.
pub fn contrast(frame: &ImageField, layout: &ChartLayout, sampling: Sampling) -> Result<f64> {
    if (frame.pitch() - layout.pitch).abs() > 1e-12 * layout.pitch {
        return Err(Error::ShapeMismatch("frame pitch differs from the chart layout".into()));
    }
    let profile = match layout.chart.orientation {
        Orientation::Vertical => frame.column_profile(layout.extent_range(frame.height())),
        Orientation::Horizontal => frame.row_profile(layout.extent_range(frame.width())),
    };
    let n = profile.len() as isize;
    let at = |i: isize| profile[i.clamp(0, n - 1) as usize];
    let (dark, bright) = layout.sample_positions();
    contrast_of(sample(at, bright, sampling), sample(at, dark, sampling))
}

/// Across-line profile of the ideal (continuous) chart after diffusing for
/// `t`, at offset `x` (m) from the chart centre. Lines have unit height.
pub fn ideal_profile(chart: &BarChart, diffusion: f64, t: f64, x: f64) -> f64 {
    let half = 0.5 * chart.a;
    let sigma = (2.0 * diffusion * t).sqrt();
    chart
        .line_centres()
        .iter()
        .map(|&c| {
            let d = x - c;
            if sigma == 0.0 {
                if d.abs() < half {
                    1.0
                } else {
                    0.0
                }
            } else {
                let s = std::f64::consts::SQRT_2 * sigma;
                0.5 * (erf((d + half) / s) - erf((d - half) / s))
            }
        })
        .sum()
}

fn check_diffusion(diffusion: f64, t: f64) -> Result<()> {
    if !(diffusion >= 0.0 && diffusion.is_finite()) {
        return Err(invalid("diffusion coefficient must be non-negative"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("storage time must be non-negative"));
    }
    Ok(())
}

/// Contrast of the ideal finite chart after diffusing for `t`, scaled by `c0`.
pub fn predicted_contrast(chart: &BarChart, diffusion: f64, t: f64, c0: f64) -> Result<f64> {
    check_diffusion(diffusion, t)?;
    let (dark, bright) = chart.sample_offsets();
    let c = contrast_of(
        ideal_profile(chart, diffusion, t, bright),
        ideal_profile(chart, diffusion, t, dark),
    )?;
    Ok(c0 * c)
}

/// Contrast of an infinite square-wave chart of line width `a`:
/// `(4/π) Σ (−1)^m/(2m+1) exp(−D t ((2m+1)π/a)²)`, scaled by `c0`.
pub fn periodic_contrast(a: f64, diffusion: f64, t: f64, c0: f64) -> Result<f64> {
    check_diffusion(diffusion, t)?;
    if !(a > 0.0) {
        return Err(invalid("line width must be positive"));
    }
    if diffusion * t == 0.0 {
        return Ok(c0);
    }
    let base = diffusion * t * (std::f64::consts::PI / a).powi(2);
    let mut sum = 0.0;
    for m in 0.. {
        let k = (2 * m + 1) as f64;
        let term = (-base * k * k).exp() / k;
        if term < 1e-12 {
            break;
        }
        sum += if m % 2 == 0 { term } else { -term };
    }
    Ok(c0 * 4.0 / std::f64::consts::PI * sum)
}

/// The zero-free-parameter contrast model for a chart on a pixel grid: the
/// ideal chart is blurred analytically, read at pixel centres and sampled
/// exactly as [`contrast`] samples a frame. When an exposure mixes storage
/// times, each is weighted by how much of the line length stays inside the
/// integration rows.
#[derive(Debug, Clone, Copy)]
pub struct ContrastModel {
    pub layout: ChartLayout,
    pub diffusion: f64,
    pub c0: f64,
    pub sampling: Sampling,
}

impl ContrastModel {
    /// Fraction of a line's length still inside the integration rows after
    /// diffusing for `t`, summed over those rows at pixel centres.
    fn along_factor(&self, t: f64) -> f64 {
        let l = &self.layout;
        let centre = match l.chart.orientation {
            Orientation::Vertical => l.centre_y,
            Orientation::Horizontal => l.centre_x,
        };
        let half = 0.5 * l.chart.extent;
        let sigma = (2.0 * self.diffusion * t).sqrt();
        l.extent_range(usize::MAX)
            .map(|j| {
                let y = (j as f64 + 0.5 - centre) * l.pitch;
                if sigma == 0.0 {
                    f64::from(u8::from(y.abs() < half))
                } else {
                    let s = std::f64::consts::SQRT_2 * sigma;
                    0.5 * (erf((y + half) / s) - erf((y - half) / s))
                }
            })
            .sum()
    }

    fn profile_at(&self, weighted: &[(f64, f64)], pos: f64) -> f64 {
        let centre = match self.layout.chart.orientation {
            Orientation::Vertical => self.layout.centre_x,
            Orientation::Horizontal => self.layout.centre_y,
        };
        let scaled: Vec<(f64, f64)> = weighted
            .iter()
            .map(|&(t, w)| (t, w * self.along_factor(t)))
            .collect();
        let at = |i: isize| {
            let x = (i as f64 + 0.5 - centre) * self.layout.pitch;
            scaled
                .iter()
                .map(|&(t, w)| w * ideal_profile(&self.layout.chart, self.diffusion, t, x))
                .sum::<f64>()
        };
        sample(at, pos, self.sampling)
    }

    /// Model contrast of an exposure mixing storage times `t` with weights `w`.
    pub fn contrast(&self, weighted: &[(f64, f64)]) -> Result<f64> {
        for &(t, w) in weighted {
            check_diffusion(self.diffusion, t)?;
            if !(w >= 0.0) {
                return Err(invalid("exposure weights must be non-negative"));
            }
        }
        let (dark, bright) = self.layout.sample_positions();
        let c = contrast_of(self.profile_at(weighted, bright), self.profile_at(weighted, dark))?;
        Ok(self.c0 * c)
    }

    pub fn contrast_at(&self, t: f64) -> Result<f64> {
        self.contrast(&[(t, 1.0)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastPoint {
    /// Storage time the point is attributed to (s).
    pub t_storage: f64,
    pub c: f64,
    /// Model prediction, when one has been computed.
    pub c_pred: Option<f64>,
}

/// Contrast against storage time for one chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastCurve {
    pub a: f64,
    pub c0: f64,
    pub points: Vec<ContrastPoint>,
}

impl ContrastCurve {
    /// RMS of `c − c_pred` over points with a prediction.
    pub fn fit_residual(&self) -> Result<f64> {
        let diffs: Vec<f64> = self
            .points
            .iter()
            .filter_map(|p| p.c_pred.map(|m| p.c - m))
            .collect();
        if diffs.is_empty() {
            return Err(Error::NoData("no overlapping contrast points".into()));
        }
        Ok((diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt())
    }

    /// Linear interpolation of `c` at storage time `t`, `None` outside the curve.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let pts = &self.points;
        let first = pts.first()?;
        let last = pts.last()?;
        if t < first.t_storage || t > last.t_storage {
            return None;
        }
        let j = pts.partition_point(|p| p.t_storage < t);
        if j == 0 {
            return Some(first.c);
        }
        let (p0, p1) = (pts[j - 1], pts[j]);
        let w = (t - p0.t_storage) / (p1.t_storage - p0.t_storage);
        Some(p0.c + w * (p1.c - p0.c))
    }

    /// RMS difference to `other` over this curve's points lying inside
    /// `other`'s storage-time range.
    pub fn rms_difference(&self, other: &ContrastCurve) -> Result<f64> {
        let diffs: Vec<f64> = self
            .points
            .iter()
            .filter_map(|p| other.interpolate(p.t_storage).map(|c| p.c - c))
            .collect();
        if diffs.is_empty() {
            return Err(Error::NoData("no overlapping contrast points".into()));
        }
        Ok((diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt())
    }
}

/// Storage time and weight of each sub-window of `frame` for component `k`,
/// given a map from output time to storage time.
pub fn exposure(frame: &Frame, k: usize, storage_time: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    frame
        .sub_windows
        .iter()
        .map(|s| (storage_time(s.t), s.weights[k]))
        .collect()
}

/// Weight-averaged storage time of an exposure; the plain mean when all
/// weights vanish.
pub fn mean_storage_time(exposure: &[(f64, f64)]) -> f64 {
    let total: f64 = exposure.iter().map(|e| e.1).sum();
    if total > 0.0 {
        exposure.iter().map(|e| e.0 * e.1).sum::<f64>() / total
    } else {
        exposure.iter().map(|e| e.0).sum::<f64>() / exposure.len().max(1) as f64
    }
}

/// Contrast of every frame, attributed to the frame's mean storage time, with
/// the model evaluated over the same exposure.
pub fn frame_contrast_curve(
    frames: &FrameSet,
    k: usize,
    model: &ContrastModel,
    storage_time: impl Fn(f64) -> f64 + Sync,
) -> Result<ContrastCurve> {
    let points = frames
        .frames()
        .par_iter()
        .map(|f| -> Result<ContrastPoint> {
            let exp = exposure(f, k, &storage_time);
            Ok(ContrastPoint {
                t_storage: mean_storage_time(&exp),
                c: contrast(&f.image, &model.layout, model.sampling)?,
                c_pred: Some(model.contrast(&exp)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContrastCurve {
        a: model.layout.chart.a,
        c0: model.c0,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtfRow {
    /// Line pairs per metre.
    pub frequency: f64,
    pub t: f64,
    pub c: f64,
}

/// Contrast of each chart after diffusing for each time, computed on a
/// pixel grid no coarser than `max_pitch`. Rows are ordered by time, then
/// by increasing frequency.
pub fn mtf(
    charts: &[BarChart],
    diffusion: f64,
    times: &[f64],
    max_pitch: f64,
    sampling: Sampling,
    method: diffusion::Method,
) -> Result<Vec<MtfRow>> {
    if charts.len() < 2 || times.is_empty() {
        return Err(invalid("an MTF needs at least two charts and one time"));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let mut sorted = charts.to_vec();
    sorted.sort_by(|a, b| b.a.total_cmp(&a.a));
    let per_chart = sorted
        .par_iter()
        .map(|chart| -> Result<Vec<MtfRow>> {
            let grid = chart_grid(chart, max_pitch, diffusion, t_max)?;
            let (img, layout) = make_barchart(chart, &grid)?;
            times
                .iter()
                .map(|&t| {
                    let out = diffusion::propagate_with(&img, diffusion, t, method)?;
                    Ok(MtfRow {
                        frequency: chart.spatial_frequency(),
                        t,
                        c: contrast(&out, &layout, sampling)?,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(charts.len() * times.len());
    for ti in 0..times.len() {
        for chart_rows in &per_chart {
            rows.push(chart_rows[ti]);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub frame_index: usize,
    /// Frame midpoint, seconds after the flip.
    pub t: f64,
    pub s_n: f64,
    pub s_t: f64,
    pub d: f64,
}

/// Per-frame similarity to the N and T references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySeries {
    pub rows: Vec<SimilarityRow>,
}

impl SimilaritySeries {
    /// Results as [`SimilarityResult`]s, N first then T, frame by frame.
    pub fn results(&self) -> Vec<SimilarityResult> {
        self.rows
            .iter()
            .flat_map(|r| {
                [("N", r.s_n), ("T", r.s_t)].map(|(id, s)| SimilarityResult {
                    s,
                    reference_id: id.to_string(),
                    frame_index: r.frame_index,
                })
            })
            .collect()
    }

    /// Maximal runs of frames with `D < threshold`.
    pub fn low_contrast_runs(&self, threshold: f64) -> Vec<Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, r) in self.rows.iter().enumerate() {
            match (r.d < threshold, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.rows.len());
        }
        runs
    }

    /// First frame at which `S_N` reaches `S_T` after starting below it.
    pub fn crossing_frame(&self) -> Option<usize> {
        let first = self.rows.first()?;
        if first.s_n >= first.s_t {
            return None;
        }
        self.rows.iter().position(|r| r.s_n >= r.s_t)
    }

    /// The crossing region: the single low-`D` run, provided it holds the
    /// sign change and has frames above `threshold` on both sides.
    pub fn crossing_region(&self, threshold: f64) -> Option<Range<usize>> {
        let runs = self.low_contrast_runs(threshold);
        let cross = self.crossing_frame()?;
        match runs.as_slice() {
            [run] if run.start > 0 && run.end < self.rows.len() => {
                // The sign change sits inside the run or right at its end.
                (run.start <= cross && cross <= run.end).then(|| run.clone())
            }
            _ => None,
        }
    }
}

/// Similarity of every frame to the two references.
pub fn similarity_decay(
    frames: &FrameSet,
    reference_n: &ImageField,
    reference_t: &ImageField,
) -> Result<SimilaritySeries> {
    let rows = frames
        .frames()
        .par_iter()
        .enumerate()
        .map(|(i, f)| -> Result<SimilarityRow> {
            let s_n = similarity(&f.image, reference_n)?;
            let s_t = similarity(&f.image, reference_t)?;
            Ok(SimilarityRow {
                frame_index: i,
                t: f.t_mid(),
                s_n,
                s_t,
                d: distinguishability(s_n, s_t),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimilaritySeries { rows })
}

#[cfg(test)]
mod tests;
