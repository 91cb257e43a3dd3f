//! End-to-end runs: the two-letter movie, flip-delay independence and the
//! MTF study.

use std::ops::Range;

use rayon::prelude::*;

use crate::config::{Coupling, MemoryConfig};
use crate::error::{invalid, Result};
use crate::frames::FrameSet;
use crate::gem1d::{self, EchoTrace, GradientSchedule};
use crate::image::{GridSpec, ImageField};
use crate::imaging::{
    chart_grid, gate_frames, make_barchart, make_letter, BarChart, Component, DiffusingImage,
    FrameGate, Orientation,
};
use crate::manifest::SimConfig;
use crate::metrics::{
    self, contrast, frame_contrast_curve, similarity, similarity_decay, ContrastCurve,
    ContrastModel, MtfRow, SimilaritySeries,
};
use crate::pulse::{Pulse, PulseSequence};

pub const SCENARIOS: [&str; 3] = ["two_image_movie", "delay_independence", "mtf_study"];

/// Output of one memory run for one pulse.
#[derive(Debug, Clone)]
pub struct Echo {
    pub trace: EchoTrace,
    pub coupling: f64,
    /// Peak of the retrieved light after the flip.
    pub peak_time: Option<f64>,
}

/// Runs each pulse of `seq` through the memory on its own, with the coupling
/// calibrated on the whole sequence. The memory is linear, so the echoes add.
pub fn per_pulse_echoes(cfg: &SimConfig, memory: &MemoryConfig, seq: &PulseSequence) -> Result<Vec<Echo>> {
    let mut settings = cfg.solver.clone();
    settings.record_every = 0;
    let dt = settings.resolve_dt(memory, Some(seq))?;
    let g = gem1d::resolve_coupling(memory, seq, &settings, dt)?;
    let fixed = MemoryConfig { coupling: Coupling::Fixed(g), ..memory.clone() };
    (0..seq.len())
        .into_par_iter()
        .map(|k| {
            let run = gem1d::evolve(&fixed, &seq.single(k), &settings)?;
            let peak_time = run.trace.peak_time(memory.flip_time, settings.t_end);
            Ok(Echo { trace: run.trace, coupling: g, peak_time })
        })
        .collect()
}

fn diffusing(cfg: &SimConfig, memory: &MemoryConfig, image: ImageField, crop: bool) -> DiffusingImage {
    DiffusingImage {
        longitudinal_loss: memory.longitudinal_loss_time,
        method: cfg.imaging.method,
        crop_to_view: crop,
        ..DiffusingImage::new(image, memory.diffusion, GradientSchedule::new(memory))
    }
}

fn last_output_time(gate: &FrameGate) -> f64 {
    gate.t0 + gate.width * gate.count as f64
}

#[derive(Debug, Clone)]
pub struct MovieResult {
    pub frames: FrameSet,
    pub similarity: SimilaritySeries,
    pub reference_n: ImageField,
    pub reference_t: ImageField,
    /// Echo of the N pulse, then of the T pulse (when present).
    pub echoes: Vec<Echo>,
    /// Similarity of the two masks to each other.
    pub mask_similarity: f64,
    /// The crossing region at the configured threshold, if one exists.
    pub crossing: Option<Range<usize>>,
}

impl MovieResult {
    /// Peak times `(T, N)` of the two echoes.
    pub fn echo_order(&self) -> Option<(f64, f64)> {
        match self.echoes.as_slice() {
            [n, t] => Some((t.peak_time?, n.peak_time?)),
            _ => None,
        }
    }
}

/// Stores N then T and films the retrieval.
pub fn run_two_image_movie(cfg: &SimConfig) -> Result<MovieResult> {
    cfg.validate()?;
    let memory = cfg.memory_config()?;
    let mv = &cfg.movie;
    let grid = GridSpec::new(cfg.imaging.grid, cfg.imaging.grid, cfg.imaging.pitch)?;
    let mask = cfg.letter_mask();
    let n_img = make_letter('N', &mask, &grid)?;
    let t_img = make_letter('T', &mask, &grid)?;

    let pulse = |peak, image| Pulse { peak_time: peak, width_1e2: mv.pulse_width, amplitude: 1.0, image };
    let mut pulses = vec![pulse(mv.n_peak, n_img.clone())];
    if !mv.n_only {
        pulses.push(pulse(mv.t_peak, t_img.clone()));
    }
    let seq = PulseSequence::new(pulses, memory.flip_time)?;
    let echoes = per_pulse_echoes(cfg, &memory, &seq)?;

    let sources: Vec<DiffusingImage> = seq
        .pulses()
        .iter()
        .map(|p| diffusing(cfg, &memory, p.image.clone(), true))
        .collect();
    let components: Vec<Component<'_>> = echoes
        .iter()
        .zip(&sources)
        .map(|(e, s)| Component { envelope: &e.trace, image: s })
        .collect();
    let gate = cfg.gate(memory.flip_time + mv.frame_start, mv.frame_width, mv.frame_count);
    let frames = gate_frames(&components, &gate)?;
    let series = similarity_decay(&frames, &n_img, &t_img)?;
    let crossing = series.crossing_region(mv.threshold);
    Ok(MovieResult {
        frames,
        similarity: series,
        mask_similarity: similarity(&t_img, &n_img)?,
        reference_n: n_img,
        reference_t: t_img,
        echoes,
        crossing,
    })
}

/// Contrast curve of one chart retrieved from one pulse.
#[derive(Debug, Clone)]
pub struct ChartRun {
    pub chart: BarChart,
    /// Time from pulse maximum to flip.
    pub delay: f64,
    pub curve: ContrastCurve,
    pub echo: Echo,
}

/// Films the retrieval of `chart` stored `delay` before the flip, and reads
/// the contrast of each frame next to the model over the same exposure.
fn chart_run(
    cfg: &SimConfig,
    memory: &MemoryConfig,
    chart: BarChart,
    echo: &Echo,
    delay: f64,
    gate: &FrameGate,
) -> Result<ChartRun> {
    let schedule = GradientSchedule::new(memory);
    let t_max = schedule.storage_time_at_output(last_output_time(gate));
    let grid = chart_grid(&chart, cfg.imaging.pitch, memory.diffusion, t_max)?;
    let (img, layout) = make_barchart(&chart, &grid)?;
    let c0 = contrast(&img, &layout, cfg.imaging.sampling)?;
    let source = diffusing(cfg, memory, img, false);
    let frames = gate_frames(&[Component { envelope: &echo.trace, image: &source }], gate)?;
    let model = ContrastModel { layout, diffusion: memory.diffusion, c0, sampling: cfg.imaging.sampling };
    let curve = frame_contrast_curve(&frames, 0, &model, |t| schedule.storage_time_at_output(t))?;
    Ok(ChartRun { chart, delay, curve, echo: echo.clone() })
}

/// The echo of a single pulse stored `delay` before the flip. The memory
/// dynamics do not depend on the transverse image, so one run serves every
/// chart with the same timing.
fn single_echo(cfg: &SimConfig, memory: &MemoryConfig, delay: f64, width: f64) -> Result<Echo> {
    let blank = ImageField::zeros(1, 1, cfg.imaging.pitch)?;
    let seq = cfg.pulse(memory.flip_time - delay, width, blank)?;
    Ok(per_pulse_echoes(cfg, memory, &seq)?.remove(0))
}

#[derive(Debug, Clone)]
pub struct DelayResult {
    /// One vertical-chart run per delay, in config order.
    pub runs: Vec<ChartRun>,
    /// The middle delay repeated with horizontal lines.
    pub horizontal: ChartRun,
    /// Largest pairwise RMS difference between the delay curves.
    pub max_delay_rms: f64,
    /// RMS difference between horizontal and vertical curves.
    pub orientation_rms: f64,
}

/// Same chart stored at several flip delays; contrast against storage time.
pub fn run_delay_independence(cfg: &SimConfig) -> Result<DelayResult> {
    cfg.validate()?;
    let memory = cfg.memory_config()?;
    let d = &cfg.delays;
    let gate = cfg.gate(memory.flip_time + d.frame_start, d.frame_width, d.frame_count);
    let echoes = d
        .delays
        .par_iter()
        .map(|&delay| single_echo(cfg, &memory, delay, d.pulse_width))
        .collect::<Result<Vec<_>>>()?;
    let vertical = cfg.chart(d.line_width, Orientation::Vertical);
    let runs = d
        .delays
        .par_iter()
        .zip(&echoes)
        .map(|(&delay, echo)| chart_run(cfg, &memory, vertical, echo, delay, &gate))
        .collect::<Result<Vec<_>>>()?;
    let mid = d.delays.len() / 2;
    let horizontal = chart_run(
        cfg,
        &memory,
        cfg.chart(d.line_width, Orientation::Horizontal),
        &echoes[mid],
        d.delays[mid],
        &gate,
    )?;
    let mut max_delay_rms: f64 = 0.0;
    for i in 0..runs.len() {
        for j in 0..runs.len() {
            if i != j {
                max_delay_rms = max_delay_rms.max(runs[i].curve.rms_difference(&runs[j].curve)?);
            }
        }
    }
    let orientation_rms = horizontal.curve.rms_difference(&runs[mid].curve)?;
    Ok(DelayResult { runs, horizontal, max_delay_rms, orientation_rms })
}

#[derive(Debug, Clone)]
pub struct MtfStudy {
    /// One run per line width, in config order.
    pub runs: Vec<ChartRun>,
    /// RMS of simulated minus model contrast, per run.
    pub residuals: Vec<f64>,
    pub table: Vec<MtfRow>,
}

/// Contrast decay of several charts against the no-free-parameter model,
/// plus the MTF at fixed storage times.
pub fn run_mtf_study(cfg: &SimConfig) -> Result<MtfStudy> {
    cfg.validate()?;
    let memory = cfg.memory_config()?;
    let f = &cfg.mtf;
    if f.line_widths.len() < 2 {
        return Err(invalid("the MTF study needs at least two line widths"));
    }
    let gate = cfg.gate(memory.flip_time + f.frame_start, f.frame_width, f.frame_count);
    let delay = memory.flip_time - f.pulse_peak;
    let echo = single_echo(cfg, &memory, delay, f.pulse_width)?;
    let runs = f
        .line_widths
        .par_iter()
        .map(|&a| chart_run(cfg, &memory, cfg.chart(a, Orientation::Vertical), &echo, delay, &gate))
        .collect::<Result<Vec<_>>>()?;
    let residuals = runs.iter().map(|r| r.curve.fit_residual()).collect::<Result<Vec<_>>>()?;
    let charts: Vec<BarChart> = f.line_widths.iter().map(|&a| cfg.chart(a, Orientation::Vertical)).collect();
    let table = metrics::mtf(
        &charts,
        memory.diffusion,
        &f.times,
        cfg.imaging.pitch,
        cfg.imaging.sampling,
        cfg.imaging.method,
    )?;
    Ok(MtfStudy { runs, residuals, table })
}
