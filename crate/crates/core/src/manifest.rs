//! Scenario configuration files.
//!
//! A config is a TOML document of flat `key = value` pairs grouped in
//! sections. Dimensioned values are strings with a unit (`"1.1 us"`,
//! `"105 cm^2/s"`); bare numbers are read as SI. Every key has a default, so
//! a file only needs the keys it changes. `--set section.key=value`
//! overrides are applied on top of the file.

use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use crate::config::{zeeman_slope, Coupling, FlipShape, MemoryConfig};
use crate::diffusion::Method;
use crate::error::{Error, Result};
use crate::gem1d::{SolverSettings, MAX_PHASE_STEP};
use crate::imaging::{BarChart, FrameGate, LetterMask, Orientation};
use crate::metrics::Sampling;
use crate::pulse::{Pulse, PulseSequence};
use crate::units::{Dimension, Quantity};

/// The shipped defaults, as a file.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct MemorySection {
    pub cell_length: f64,
    /// Magnetic field gradient while writing (T/m).
    pub field_gradient: f64,
    pub g_factor: f64,
    /// Write slope over read slope.
    pub expansion_ratio: f64,
    pub flip_time: f64,
    pub flip_duration: f64,
    pub flip_shape: FlipShape,
    /// Single-pass absorption the coupling is calibrated to.
    pub absorption: f64,
    /// Fixed coupling (rad/s/√m); overrides `absorption` when set.
    pub coupling: Option<f64>,
    pub optical_depth: f64,
    pub diffusion: f64,
    pub decoherence_rate: f64,
    pub longitudinal_loss_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingSection {
    /// Largest pixel pitch; chart grids refine it (m).
    pub pitch: f64,
    /// Movie canvas side (pixels).
    pub grid: usize,
    pub letter_height: f64,
    pub sampling: Sampling,
    pub method: Method,
    /// Quadrature step inside each frame (s).
    pub sub_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovieSection {
    /// Peak time of the N pulse (stored first).
    pub n_peak: f64,
    /// Peak time of the T pulse.
    pub t_peak: f64,
    pub pulse_width: f64,
    /// Drop the T pulse (control run).
    pub n_only: bool,
    pub frame_start: f64,
    pub frame_width: f64,
    pub frame_count: usize,
    /// Threshold on |S_N − S_T| for telling the letters apart.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySection {
    pub line_width: f64,
    /// Time from pulse maximum to the flip, one run each.
    pub delays: Vec<f64>,
    pub pulse_width: f64,
    pub frame_start: f64,
    pub frame_width: f64,
    pub frame_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtfSection {
    pub line_widths: Vec<f64>,
    pub pulse_peak: f64,
    pub pulse_width: f64,
    pub frame_start: f64,
    pub frame_width: f64,
    pub frame_count: usize,
    /// Storage times for the MTF table.
    pub times: Vec<f64>,
}

/// Everything a scenario run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub memory: MemorySection,
    pub solver: SolverSettings,
    pub imaging: ImagingSection,
    pub movie: MovieSection,
    pub delays: DelaySection,
    pub mtf: MtfSection,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            memory: MemorySection {
                cell_length: 0.05,
                field_gradient: crate::config::DEFAULT_FIELD_GRADIENT,
                g_factor: crate::config::DEFAULT_G_FACTOR,
                expansion_ratio: 1.4,
                flip_time: 0.0,
                flip_duration: 1e-6,
                flip_shape: FlipShape::Ramp,
                absorption: 0.30,
                coupling: None,
                optical_depth: 200.0,
                diffusion: 105e-4,
                decoherence_rate: 0.0,
                longitudinal_loss_time: None,
            },
            solver: SolverSettings::default(),
            imaging: ImagingSection {
                pitch: 15e-6,
                grid: 256,
                letter_height: 2.4e-3,
                sampling: Sampling::Column,
                method: Method::CellAverage,
                sub_step: 25e-9,
            },
            movie: MovieSection {
                n_peak: -2.0e-6,
                t_peak: -1.0e-6,
                pulse_width: 1.1e-6,
                n_only: false,
                frame_start: 100e-9,
                frame_width: 100e-9,
                frame_count: 28,
                threshold: 0.15,
            },
            delays: DelaySection {
                line_width: 375e-6,
                delays: vec![0.8e-6, 1.1e-6, 1.4e-6],
                pulse_width: 1.1e-6,
                frame_start: 100e-9,
                frame_width: 100e-9,
                frame_count: 21,
            },
            mtf: MtfSection {
                line_widths: vec![375e-6, 330e-6, 280e-6, 240e-6],
                pulse_peak: -1.1e-6,
                pulse_width: 1.1e-6,
                frame_start: 100e-9,
                frame_width: 100e-9,
                frame_count: 21,
                times: vec![0.5e-6, 1.5e-6, 2.5e-6, 3.5e-6],
            },
        }
    }
}

fn quantity(v: &Value, dim: Dimension) -> std::result::Result<f64, String> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        Value::String(s) => s
            .parse::<Quantity>()
            .and_then(|q| q.si(dim))
            .map_err(|e| e.to_string()),
        other => Err(format!("expected a number or a quantity string, got {}", other.type_str())),
    }
}

fn optional_quantity(v: &Value, dim: Dimension) -> std::result::Result<Option<f64>, String> {
    match v {
        Value::String(s) if s.trim() == "none" => Ok(None),
        _ => quantity(v, dim).map(Some),
    }
}

fn quantities(v: &Value, dim: Dimension) -> std::result::Result<Vec<f64>, String> {
    match v {
        Value::Array(items) => items.iter().map(|x| quantity(x, dim)).collect(),
        other => Err(format!("expected a list, got {}", other.type_str())),
    }
}

fn count(v: &Value) -> std::result::Result<usize, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(format!("expected a non-negative integer, got {other}")),
    }
}

fn boolean(v: &Value) -> std::result::Result<bool, String> {
    v.as_bool().ok_or_else(|| format!("expected true or false, got {v}"))
}

fn word<'a>(v: &'a Value, allowed: &[&str]) -> std::result::Result<&'a str, String> {
    match v.as_str() {
        Some(s) if allowed.contains(&s) => Ok(s),
        _ => Err(format!("expected one of {allowed:?}, got {v}")),
    }
}

fn fmt_si(v: f64, unit: &str) -> Value {
    Value::String(format!("{v:e} {unit}"))
}

fn fmt_list(vs: &[f64], unit: &str) -> Value {
    Value::Array(vs.iter().map(|&v| fmt_si(v, unit)).collect())
}

const L: Dimension = Dimension::LENGTH;
const T: Dimension = Dimension::TIME;

impl SimConfig {
    /// Parses a config document on top of the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(vec![format!("parse error: {}", e.message())]))?;
        let mut cfg = SimConfig::default();
        cfg.apply_table(&table)?;
        Ok(cfg)
    }

    /// Reads `path` (or the defaults when `None`) and applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => DEFAULT_CONFIG.to_string(),
        };
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(vec![format!("parse error: {}", e.message())]))?;
        let mut errors = Vec::new();
        for o in overrides {
            if let Err(e) = apply_override(&mut table, o) {
                errors.push(e);
            }
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        let mut cfg = SimConfig::default();
        cfg.apply_table(&table)?;
        Ok(cfg)
    }

    fn apply_table(&mut self, table: &Table) -> Result<()> {
        let mut errors = Vec::new();
        for (section, body) in table {
            let Some(body) = body.as_table() else {
                errors.push(format!("{section}: top-level keys must sit inside a section"));
                continue;
            };
            for (key, value) in body {
                if let Err(e) = self.set(section, key, value) {
                    errors.push(format!("{section}.{key}: {e}"));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Sets one key.
    pub fn set(&mut self, section: &str, key: &str, v: &Value) -> std::result::Result<(), String> {
        let m = &mut self.memory;
        let s = &mut self.solver;
        let i = &mut self.imaging;
        let mv = &mut self.movie;
        let d = &mut self.delays;
        let f = &mut self.mtf;
        match (section, key) {
            ("memory", "cell_length") => m.cell_length = quantity(v, L)?,
            ("memory", "field_gradient") => m.field_gradient = quantity(v, Dimension::FIELD_GRADIENT)?,
            ("memory", "g_factor") => m.g_factor = quantity(v, Dimension::NONE)?,
            ("memory", "expansion_ratio") => m.expansion_ratio = quantity(v, Dimension::NONE)?,
            ("memory", "flip_time") => m.flip_time = quantity(v, T)?,
            ("memory", "flip_duration") => m.flip_duration = quantity(v, T)?,
            ("memory", "flip_shape") => {
                m.flip_shape = match word(v, &["ramp", "step"])? {
                    "ramp" => FlipShape::Ramp,
                    _ => FlipShape::Step,
                }
            }
            ("memory", "absorption") => m.absorption = quantity(v, Dimension::NONE)?,
            ("memory", "coupling") => m.coupling = optional_quantity(v, Dimension::NONE)?,
            ("memory", "optical_depth") => m.optical_depth = quantity(v, Dimension::NONE)?,
            ("memory", "diffusion") => m.diffusion = quantity(v, Dimension::DIFFUSIVITY)?,
            ("memory", "decoherence_rate") => m.decoherence_rate = quantity(v, Dimension::RATE)?,
            ("memory", "longitudinal_loss_time") => m.longitudinal_loss_time = optional_quantity(v, T)?,
            ("solver", "z_cells") => s.z_cells = count(v)?,
            ("solver", "dt") => {
                s.dt = match v.as_str() {
                    Some("auto") => None,
                    _ => Some(quantity(v, T)?),
                }
            }
            ("solver", "t_start") => s.t_start = quantity(v, T)?,
            ("solver", "t_end") => s.t_end = quantity(v, T)?,
            ("solver", "record_every") => s.record_every = count(v)?,
            ("imaging", "pitch") => i.pitch = quantity(v, L)?,
            ("imaging", "grid") => i.grid = count(v)?,
            ("imaging", "letter_height") => i.letter_height = quantity(v, L)?,
            ("imaging", "sampling") => {
                i.sampling = match word(v, &["column", "three_column"])? {
                    "column" => Sampling::Column,
                    _ => Sampling::ThreeColumn,
                }
            }
            ("imaging", "method") => {
                i.method = match word(v, &["separable", "spectral", "cell_average"])? {
                    "separable" => Method::Separable,
                    "spectral" => Method::Spectral,
                    _ => Method::CellAverage,
                }
            }
            ("imaging", "sub_step") => i.sub_step = quantity(v, T)?,
            ("movie", "n_peak") => mv.n_peak = quantity(v, T)?,
            ("movie", "t_peak") => mv.t_peak = quantity(v, T)?,
            ("movie", "pulse_width") => mv.pulse_width = quantity(v, T)?,
            ("movie", "n_only") => mv.n_only = boolean(v)?,
            ("movie", "frame_start") => mv.frame_start = quantity(v, T)?,
            ("movie", "frame_width") => mv.frame_width = quantity(v, T)?,
            ("movie", "frame_count") => mv.frame_count = count(v)?,
            ("movie", "threshold") => mv.threshold = quantity(v, Dimension::NONE)?,
            ("delays", "line_width") => d.line_width = quantity(v, L)?,
            ("delays", "delays") => d.delays = quantities(v, T)?,
            ("delays", "pulse_width") => d.pulse_width = quantity(v, T)?,
            ("delays", "frame_start") => d.frame_start = quantity(v, T)?,
            ("delays", "frame_width") => d.frame_width = quantity(v, T)?,
            ("delays", "frame_count") => d.frame_count = count(v)?,
            ("mtf", "line_widths") => f.line_widths = quantities(v, L)?,
            ("mtf", "pulse_peak") => f.pulse_peak = quantity(v, T)?,
            ("mtf", "pulse_width") => f.pulse_width = quantity(v, T)?,
            ("mtf", "frame_start") => f.frame_start = quantity(v, T)?,
            ("mtf", "frame_width") => f.frame_width = quantity(v, T)?,
            ("mtf", "frame_count") => f.frame_count = count(v)?,
            ("mtf", "times") => f.times = quantities(v, T)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// The resolved config as a TOML document that parses back to `self`.
    pub fn to_toml_string(&self) -> String {
        let (m, s, i, mv, d, f) = (&self.memory, &self.solver, &self.imaging, &self.movie, &self.delays, &self.mtf);
        let num = Value::Float;
        let int = |n: usize| Value::Integer(n as i64);
        let opt = |o: Option<f64>, unit: &str| match o {
            Some(v) => fmt_si(v, unit),
            None => Value::String("none".into()),
        };
        let sections: Vec<(&str, Vec<(&str, Value)>)> = vec![
            ("memory", vec![
                ("cell_length", fmt_si(m.cell_length, "m")),
                ("field_gradient", fmt_si(m.field_gradient, "T/m")),
                ("g_factor", num(m.g_factor)),
                ("expansion_ratio", num(m.expansion_ratio)),
                ("flip_time", fmt_si(m.flip_time, "s")),
                ("flip_duration", fmt_si(m.flip_duration, "s")),
                ("flip_shape", Value::String(match m.flip_shape { FlipShape::Ramp => "ramp", FlipShape::Step => "step" }.into())),
                ("absorption", num(m.absorption)),
                ("coupling", opt(m.coupling, "1")),
                ("optical_depth", num(m.optical_depth)),
                ("diffusion", fmt_si(m.diffusion, "m^2/s")),
                ("decoherence_rate", fmt_si(m.decoherence_rate, "1/s")),
                ("longitudinal_loss_time", opt(m.longitudinal_loss_time, "s")),
            ]),
            ("solver", vec![
                ("z_cells", int(s.z_cells)),
                ("dt", s.dt.map_or(Value::String("auto".into()), |v| fmt_si(v, "s"))),
                ("t_start", fmt_si(s.t_start, "s")),
                ("t_end", fmt_si(s.t_end, "s")),
                ("record_every", int(s.record_every)),
            ]),
            ("imaging", vec![
                ("pitch", fmt_si(i.pitch, "m")),
                ("grid", int(i.grid)),
                ("letter_height", fmt_si(i.letter_height, "m")),
                ("sampling", Value::String(match i.sampling { Sampling::Column => "column", Sampling::ThreeColumn => "three_column" }.into())),
                ("method", Value::String(match i.method { Method::Separable => "separable", Method::Spectral => "spectral", Method::CellAverage => "cell_average" }.into())),
                ("sub_step", fmt_si(i.sub_step, "s")),
            ]),
            ("movie", vec![
                ("n_peak", fmt_si(mv.n_peak, "s")),
                ("t_peak", fmt_si(mv.t_peak, "s")),
                ("pulse_width", fmt_si(mv.pulse_width, "s")),
                ("n_only", Value::Boolean(mv.n_only)),
                ("frame_start", fmt_si(mv.frame_start, "s")),
                ("frame_width", fmt_si(mv.frame_width, "s")),
                ("frame_count", int(mv.frame_count)),
                ("threshold", num(mv.threshold)),
            ]),
            ("delays", vec![
                ("line_width", fmt_si(d.line_width, "m")),
                ("delays", fmt_list(&d.delays, "s")),
                ("pulse_width", fmt_si(d.pulse_width, "s")),
                ("frame_start", fmt_si(d.frame_start, "s")),
                ("frame_width", fmt_si(d.frame_width, "s")),
                ("frame_count", int(d.frame_count)),
            ]),
            ("mtf", vec![
                ("line_widths", fmt_list(&f.line_widths, "m")),
                ("pulse_peak", fmt_si(f.pulse_peak, "s")),
                ("pulse_width", fmt_si(f.pulse_width, "s")),
                ("frame_start", fmt_si(f.frame_start, "s")),
                ("frame_width", fmt_si(f.frame_width, "s")),
                ("frame_count", int(f.frame_count)),
                ("times", fmt_list(&f.times, "s")),
            ]),
        ];
        let mut out = String::new();
        for (name, entries) in sections {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in entries {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        }
        out
    }

    /// The memory model this config describes.
    pub fn memory_config(&self) -> Result<MemoryConfig> {
        let m = &self.memory;
        let slope = zeeman_slope(m.g_factor, m.field_gradient);
        let cfg = MemoryConfig {
            cell_length: m.cell_length,
            gradient_write: slope,
            gradient_read: -slope,
            flip_time: m.flip_time,
            flip_duration: m.flip_duration,
            flip_shape: m.flip_shape,
            coupling: match m.coupling {
                Some(g) => Coupling::Fixed(g),
                None => Coupling::Absorption(m.absorption),
            },
            optical_depth: m.optical_depth,
            diffusion: m.diffusion,
            decoherence_rate: m.decoherence_rate,
            longitudinal_loss_time: m.longitudinal_loss_time,
        };
        cfg.with_expansion_ratio(m.expansion_ratio)
    }

    pub fn letter_mask(&self) -> LetterMask {
        LetterMask::with_height(self.imaging.letter_height)
    }

    /// Every check `validate` reports, in a fixed order.
    pub fn rules(&self) -> Vec<Rule> {
        let mut rules = Vec::new();
        let mut push = |name: &str, detail: String, ok: bool| {
            rules.push(Rule { name: name.to_string(), passed: ok, detail })
        };

        let memory = self.memory_config();
        let violations = match &memory {
            Ok(m) => m.violations(),
            Err(e) => vec![e.to_string()],
        };
        push(
            "memory.ranges",
            if violations.is_empty() { "all memory parameters in range".into() } else { violations.join("; ") },
            violations.is_empty(),
        );

        match &memory {
            Ok(m) if violations.is_empty() => {
                let slope = crate::gem1d::GradientSchedule::new(m).max_slope();
                let bound = MAX_PHASE_STEP / (slope * m.cell_length);
                match self.solver.dt {
                    Some(dt) => push(
                        "solver.dt.phase_step",
                        format!(
                            "dt·max|η|·L = {:.4} rad (must be < {MAX_PHASE_STEP}); bound dt < {bound:.4e} s, got {dt:.4e} s",
                            dt * slope * m.cell_length
                        ),
                        dt > 0.0 && dt < bound,
                    ),
                    None => push(
                        "solver.dt.phase_step",
                        format!("auto: dt = {:.4e} s (bound {bound:.4e} s)", 0.9 * bound),
                        true,
                    ),
                }
                let dt = self.solver.dt.unwrap_or(0.9 * bound);
                let shortest = [self.movie.pulse_width, self.delays.pulse_width, self.mtf.pulse_width]
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                push(
                    "solver.dt.pulse_resolution",
                    format!("dt = {dt:.4e} s must be <= shortest pulse width / 20 = {:.4e} s", shortest / 20.0),
                    dt <= shortest / 20.0,
                );
            }
            _ => push("solver.dt.phase_step", "skipped: memory parameters invalid".into(), false),
        }

        let s = &self.solver;
        push(
            "solver.span",
            format!("t_start = {:.3e} s < flip < t_end = {:.3e} s, z_cells = {}", s.t_start, s.t_end, s.z_cells),
            s.t_start < self.memory.flip_time && s.t_end > self.memory.flip_time && s.z_cells >= 8,
        );

        let pitch = self.imaging.pitch;
        let mut charts: Vec<f64> = self.mtf.line_widths.clone();
        charts.push(self.delays.line_width);
        let worst = charts.iter().cloned().fold(f64::INFINITY, f64::min);
        push(
            "imaging.chart_resolution",
            format!("narrowest line a = {worst:.4e} m needs a >= 4·pitch = {:.4e} m", 4.0 * pitch),
            pitch > 0.0 && worst >= 4.0 * pitch * (1.0 - 1e-12),
        );
        let stroke = self.letter_mask().stroke_width;
        push(
            "imaging.letter_resolution",
            format!("stroke {stroke:.4e} m needs >= 3·pitch = {:.4e} m", 3.0 * pitch),
            pitch > 0.0 && stroke >= 3.0 * pitch * (1.0 - 1e-12),
        );
        let letter_px = (self.imaging.letter_height / pitch).ceil();
        push(
            "imaging.letter_fits",
            format!("letter {letter_px} px tall on a {} px grid", self.imaging.grid),
            letter_px <= self.imaging.grid as f64,
        );

        let span_ok = |start: f64, width: f64, n: usize| {
            width > 0.0 && n > 0 && start >= self.memory.flip_time && start + width * n as f64 <= s.t_end
        };
        let mv = &self.movie;
        push(
            "movie.frames",
            format!(
                "{} frames of {:.3e} s from {:.3e} s must end by t_end = {:.3e} s",
                mv.frame_count, mv.frame_width, mv.frame_start, s.t_end
            ),
            span_ok(mv.frame_start, mv.frame_width, mv.frame_count),
        );
        push(
            "movie.pulses",
            format!("N at {:.3e} s then T at {:.3e} s, both after t_start and before the flip", mv.n_peak, mv.t_peak),
            mv.n_peak < mv.t_peak && mv.t_peak < self.memory.flip_time && mv.n_peak - mv.pulse_width >= s.t_start,
        );
        let d = &self.delays;
        push(
            "delays.frames",
            format!("{} frames of {:.3e} s from {:.3e} s", d.frame_count, d.frame_width, d.frame_start),
            span_ok(d.frame_start, d.frame_width, d.frame_count),
        );
        let longest = d.delays.iter().cloned().fold(0.0, f64::max);
        push(
            "delays.pulses",
            format!("{} delays, longest {longest:.3e} s, must be > 0 and fit after t_start", d.delays.len()),
            !d.delays.is_empty()
                && d.delays.iter().all(|&x| x > 0.0)
                && self.memory.flip_time - longest - d.pulse_width >= s.t_start,
        );
        let f = &self.mtf;
        push(
            "mtf.frames",
            format!("{} frames of {:.3e} s from {:.3e} s", f.frame_count, f.frame_width, f.frame_start),
            span_ok(f.frame_start, f.frame_width, f.frame_count),
        );
        push(
            "mtf.charts",
            format!("{} line widths, {} storage times", f.line_widths.len(), f.times.len()),
            f.line_widths.len() >= 2 && !f.times.is_empty() && f.times.iter().all(|&t| t >= 0.0),
        );
        push(
            "imaging.sub_step",
            format!("frame quadrature step {:.3e} s", self.imaging.sub_step),
            self.imaging.sub_step > 0.0,
        );
        rules
    }

    /// Fails with every broken rule.
    pub fn validate(&self) -> Result<()> {
        let failed: Vec<String> = self
            .rules()
            .into_iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{}: {}", r.name, r.detail))
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(failed))
        }
    }

    /// A single pulse carrying `image`.
    pub fn pulse(&self, peak: f64, width: f64, image: crate::ImageField) -> Result<PulseSequence> {
        PulseSequence::new(
            vec![Pulse { peak_time: peak, width_1e2: width, amplitude: 1.0, image }],
            self.memory.flip_time,
        )
    }

    pub fn chart(&self, a: f64, orientation: Orientation) -> BarChart {
        BarChart::three_bar(a, orientation)
    }

    pub fn gate(&self, start: f64, width: f64, count: usize) -> FrameGate {
        FrameGate { t0: start, width, count, sub_step: self.imaging.sub_step }
    }
}

/// One named check from `validate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Applies `section.key=value` to a parsed document. The value is read as a
/// TOML literal when it is one, otherwise as a string (so `1.1 us` works
/// without quotes).
pub fn apply_override(table: &mut Table, text: &str) -> std::result::Result<(), String> {
    let (path, raw) = text
        .split_once('=')
        .ok_or_else(|| format!("override `{text}` is not key=value"))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| format!("override key `{}` must be section.key", path.trim()))?;
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("just parsed"),
        Err(_) => Value::String(raw.to_string()),
    };
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry.as_table_mut() {
        Some(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        None => Err(format!("`{section}` is not a section")),
    }
}
