//! Longitudinal gradient-echo dynamics.
//!
//! The stored coherence `s(z, t)` and the co-moving signal field `E(z, t)`
//! obey the linear pair
//!
//! ```text
//! ∂t s = −[i η(t) (z − L/2) + γ] s + i g E
//! ∂z E = i g s
//! ```
//!
//! with `g` the effective coupling (density folded in) and `η(t)` the
//! detuning slope. With this normalisation `Σ|s|²Δz` and `∫|E|²dt` share
//! units, and a monochromatic component crossing the gradient keeps a
//! fraction `exp(−2π g²/|η|)` of its energy.
//!
//! Time stepping is Strang split: an exact phase rotation (and decay) for
//! half a step, a Crank–Nicolson coupling step over the full step, then the
//! second half rotation. The coupling step is causal along `z`, so the
//! implicit system is solved by a single forward sweep that also integrates
//! the field cell by cell. Rotation is unitary and the midpoint coupling
//! step conserves `Σ|s|²Δz + ∫|E_out|²dt − ∫|E_in|²dt` exactly, so the
//! energy budget closes to round-off.

mod schedule;
mod trace;

pub use schedule::GradientSchedule;
pub use trace::{EchoTrace, EnergyBudget, SpinWave, SpinWaveHistory};

use num_complex::Complex64;

use crate::config::{Coupling, MemoryConfig};
use crate::error::{invalid, Error, Result};
use crate::pulse::PulseSequence;

/// Largest permitted `dt · max|η| · L`.
pub const MAX_PHASE_STEP: f64 = 0.1;

/// Discretisation of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub z_cells: usize,
    /// Time step (s). `None` picks `0.9 · MAX_PHASE_STEP / (max|η| L)`.
    pub dt: Option<f64>,
    pub t_start: f64,
    pub t_end: f64,
    /// Keep every n-th spin-wave snapshot; 0 disables the history.
    pub record_every: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            z_cells: 512,
            dt: None,
            t_start: -3.5e-6,
            t_end: 4.5e-6,
            record_every: 10,
        }
    }
}

impl SolverSettings {
    /// The time step after applying the default rule and the stability check.
    pub fn resolve_dt(&self, config: &MemoryConfig, seq: Option<&PulseSequence>) -> Result<f64> {
        let slope = GradientSchedule::new(config).max_slope();
        let bound = MAX_PHASE_STEP / (slope * config.cell_length);
        let dt = self.dt.unwrap_or(0.9 * bound);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if dt >= bound {
            return Err(Error::Unstable(format!(
                "dt·|η|·L = {:.3} rad exceeds {MAX_PHASE_STEP} rad; need dt < {bound:.4e} s",
                dt * slope * config.cell_length
            )));
        }
        if let Some(seq) = seq {
            let shortest = seq
                .pulses()
                .iter()
                .map(|p| p.width_1e2)
                .fold(f64::INFINITY, f64::min);
            if dt > shortest / 20.0 {
                return Err(Error::Unstable(format!(
                    "dt = {dt:.3e} s does not resolve a {shortest:.3e} s pulse (need dt <= width/20)"
                )));
            }
        }
        Ok(dt)
    }

    fn validate(&self) -> Result<()> {
        if self.z_cells < 8 {
            return Err(invalid("need at least 8 z cells"));
        }
        if !(self.t_end > self.t_start) {
            return Err(invalid("t_end must exceed t_start"));
        }
        Ok(())
    }
}

/// Output of a full write/flip/read run.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub trace: EchoTrace,
    pub energy: EnergyBudget,
    /// State at `t_end`, with per-cell pulse tags.
    pub final_state: SpinWave,
    pub history: SpinWaveHistory,
    /// Coupling actually used (after calibration).
    pub coupling: f64,
}

/// Runs the memory on `seq`.
pub fn evolve(
    config: &MemoryConfig,
    seq: &PulseSequence,
    settings: &SolverSettings,
) -> Result<Evolution> {
    config.validate()?;
    settings.validate()?;
    let dt = settings.resolve_dt(config, Some(seq))?;
    let coupling = resolve_coupling(config, seq, settings, dt)?;
    let absorbed = write_only_absorption(config, seq, settings, dt, coupling)?;
    let schedule = GradientSchedule::new(config);
    let mut run = Integrator::new(config, schedule, coupling, settings, dt);
    run.record_every = settings.record_every;
    let raw = run.run(seq, true);
    Ok(raw.finish(config, absorbed, coupling))
}

/// Finds the coupling `g` for `config.coupling`.
pub fn resolve_coupling(
    config: &MemoryConfig,
    seq: &PulseSequence,
    settings: &SolverSettings,
    dt: f64,
) -> Result<f64> {
    match config.coupling {
        Coupling::Fixed(g) => Ok(g),
        Coupling::Absorption(target) => calibrate_coupling(config, seq, settings, dt, target),
    }
}

/// Coupling whose single-pass absorption of `seq` in the write gradient is
/// `target`. Starts from the broadband law `A = 1 − exp(−2π g²/|η|)` and
/// corrects for finite bandwidth with a few fixed-point updates.
pub fn calibrate_coupling(
    config: &MemoryConfig,
    seq: &PulseSequence,
    settings: &SolverSettings,
    dt: f64,
    target: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&target) {
        return Err(invalid(format!("absorption target must be in [0, 1), got {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let eta = config.gradient_write.abs();
    let want = -(1.0 - target).ln();
    let mut beta = want / (2.0 * std::f64::consts::PI);
    for _ in 0..12 {
        let g = (beta * eta).sqrt();
        let got = write_only_absorption(config, seq, settings, dt, g)?;
        if (got - target).abs() < 1e-6 {
            return Ok(g);
        }
        if !(got > 0.0 && got < 1.0) {
            return Err(invalid(format!("calibration diverged (absorption {got})")));
        }
        beta *= want / (-(1.0 - got).ln());
    }
    Ok((beta * eta).sqrt())
}

/// Fraction of the input energy absorbed in one pass with the gradient held
/// at its write value.
pub fn write_only_absorption(
    config: &MemoryConfig,
    seq: &PulseSequence,
    settings: &SolverSettings,
    dt: f64,
    coupling: f64,
) -> Result<f64> {
    let schedule = GradientSchedule::write_only(config);
    let mut run = Integrator::new(config, schedule, coupling, settings, dt);
    run.record_every = 0;
    let raw = run.run(seq, false);
    if raw.input_energy <= 0.0 {
        return Err(invalid("input pulses carry no energy inside the simulated span"));
    }
    Ok((1.0 - raw.output_energy / raw.input_energy).clamp(0.0, 1.0))
}

/// Largest |s| increment attributed to any pulse below this is left untagged.
const TAG_FLOOR: f64 = 1e-12;

struct Integrator {
    schedule: GradientSchedule,
    coupling: f64,
    decay: f64,
    detuning_offset: Vec<f64>,
    dz: f64,
    dt: f64,
    steps: usize,
    t_start: f64,
    flip_time: f64,
    record_every: usize,
}

struct RawRun {
    t: Vec<f64>,
    input: Vec<f64>,
    output: Vec<Complex64>,
    emitted_after_flip: f64,
    input_energy: f64,
    output_energy: f64,
    decayed: f64,
    state: Vec<Complex64>,
    tags: Vec<Option<usize>>,
    z: Vec<f64>,
    dz: f64,
    dt: f64,
    history: SpinWaveHistory,
}

impl Integrator {
    fn new(
        config: &MemoryConfig,
        schedule: GradientSchedule,
        coupling: f64,
        settings: &SolverSettings,
        dt: f64,
    ) -> Self {
        let n = settings.z_cells;
        let dz = config.cell_length / n as f64;
        let detuning_offset = (0..n)
            .map(|j| (j as f64 + 0.5) * dz - 0.5 * config.cell_length)
            .collect();
        let steps = ((settings.t_end - settings.t_start) / dt).ceil() as usize;
        Integrator {
            schedule,
            coupling,
            decay: config.decoherence_rate,
            detuning_offset,
            dz,
            dt,
            steps,
            t_start: settings.t_start,
            flip_time: config.flip_time,
            record_every: settings.record_every,
        }
    }

    /// Multiplies `s` by exp(−i (z − L/2) ∫η − γ Δt) over [t0, t1].
    fn rotate(&self, s: &mut [Complex64], t0: f64, t1: f64) -> f64 {
        let phase = self.schedule.phase_integral(t1) - self.schedule.phase_integral(t0);
        let damp = (-self.decay * (t1 - t0)).exp();
        let mut lost = 0.0;
        for (sj, &off) in s.iter_mut().zip(&self.detuning_offset) {
            let before = sj.norm_sqr();
            *sj *= Complex64::from_polar(damp, -off * phase);
            lost += before - sj.norm_sqr();
        }
        lost * self.dz
    }

    fn run(&mut self, seq: &PulseSequence, track_tags: bool) -> RawRun {
        let n = self.detuning_offset.len();
        let g = self.coupling;
        let (dt, dz) = (self.dt, self.dz);
        let mut s = vec![Complex64::new(0.0, 0.0); n];
        let mut deposits = if track_tags {
            vec![vec![0.0f64; n]; seq.len()]
        } else {
            Vec::new()
        };
        let denom = 1.0 + 0.25 * g * g * dt * dz;

        let mut t_mid = Vec::with_capacity(self.steps);
        let mut input = Vec::with_capacity(self.steps);
        let mut output = Vec::with_capacity(self.steps);
        let mut history = SpinWaveHistory::default();
        let (mut e_in_tot, mut e_out_tot, mut decayed, mut emitted) = (0.0, 0.0, 0.0, 0.0);

        let z: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * dz).collect();
        if self.record_every > 0 {
            history.push(self.t_start, s.clone());
        }

        for step in 0..self.steps {
            let t0 = self.t_start + step as f64 * dt;
            let tm = t0 + 0.5 * dt;
            let t1 = t0 + dt;

            decayed += self.rotate(&mut s, t0, tm);

            let e_in = seq.field(tm);
            let mut e = Complex64::new(e_in, 0.0);
            let half_kick = Complex64::new(0.0, 0.5 * g * dt);
            let cell_gain = Complex64::new(0.0, g * dz);
            let dominant = if track_tags && e_in != 0.0 {
                Some(seq.dominant(tm))
            } else {
                None
            };
            for j in 0..n {
                let mid = (s[j] + half_kick * e) / denom;
                let new = 2.0 * mid - s[j];
                if let Some(k) = dominant {
                    deposits[k][j] += (new - s[j]).norm();
                }
                s[j] = new;
                e += cell_gain * mid;
            }

            decayed += self.rotate(&mut s, tm, t1);

            let out_i = e.norm_sqr();
            e_in_tot += e_in * e_in * dt;
            e_out_tot += out_i * dt;
            if tm >= self.flip_time {
                emitted += (e - e_in).norm_sqr() * dt;
            }
            t_mid.push(tm);
            input.push(e_in * e_in);
            output.push(e);

            if self.record_every > 0 && (step + 1) % self.record_every == 0 {
                history.push(t1, s.clone());
            }
        }

        let tags = if track_tags {
            (0..n)
                .map(|j| {
                    let (k, best) = deposits
                        .iter()
                        .enumerate()
                        .map(|(k, d)| (k, d[j]))
                        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                    (best > TAG_FLOOR).then_some(k)
                })
                .collect()
        } else {
            vec![None; n]
        };

        RawRun {
            t: t_mid,
            input,
            output,
            emitted_after_flip: emitted,
            input_energy: e_in_tot,
            output_energy: e_out_tot,
            decayed,
            state: s,
            tags,
            z,
            dz,
            dt,
            history,
        }
    }
}

impl RawRun {
    fn finish(self, config: &MemoryConfig, absorbed: f64, coupling: f64) -> Evolution {
        let stored: f64 = self.state.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dz;
        let energy = EnergyBudget {
            input: self.input_energy,
            transmitted: self.output_energy - self.emitted_after_flip,
            retrieved: self.emitted_after_flip,
            stored,
            decayed: self.decayed,
        };
        let efficiency = if self.input_energy > 0.0 {
            (self.emitted_after_flip / self.input_energy).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let t_end = self.t.last().map(|t| t + 0.5 * self.dt).unwrap_or(0.0);
        let trace = EchoTrace {
            t_grid: self.t,
            intensity: self.output.iter().map(|e| e.norm_sqr()).collect(),
            input_intensity: self.input,
            field: self.output,
            dt: self.dt,
            flip_time: config.flip_time,
            absorbed_fraction: absorbed,
            efficiency,
        };
        Evolution {
            trace,
            energy,
            final_state: SpinWave {
                time: t_end,
                z_grid: self.z,
                s: self.state,
                slice_tags: self.tags,
            },
            history: self.history,
            coupling,
        }
    }
}

/// Upper bound on forward-retrieval efficiency for a given single-pass
/// absorption: the read-out is another pass through the same line.
pub fn efficiency_bound(absorbed_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&absorbed_fraction) {
        return Err(invalid(format!(
            "absorbed fraction must be in [0, 1], got {absorbed_fraction}"
        )));
    }
    Ok(absorbed_fraction * absorbed_fraction)
}

/// Storage time of a slice written `t_in` before the flip and read with
/// expansion ratio `ratio`: it re-emerges `ratio · t_in` after the flip.
pub fn storage_time(t_in: f64, ratio: f64) -> Result<f64> {
    if !(t_in > 0.0) || !(ratio > 0.0) {
        return Err(invalid(format!(
            "storage_time needs t_in > 0 and ratio > 0 (got {t_in}, {ratio})"
        )));
    }
    Ok(t_in * (1.0 + ratio))
}

/// Storage time of light leaving `t_out` after a step flip with ratio `ratio`.
pub fn storage_time_from_output(t_out: f64, ratio: f64) -> Result<f64> {
    if !(t_out > 0.0) || !(ratio > 0.0) {
        return Err(invalid(format!(
            "storage_time_from_output needs t_out > 0 and ratio > 0 (got {t_out}, {ratio})"
        )));
    }
    Ok(t_out * (1.0 + 1.0 / ratio))
}

/// Echo from a retrieval with read slope `−gradient_write / ratio`.
pub fn expansion_retrieval(
    config: &MemoryConfig,
    ratio: f64,
    seq: &PulseSequence,
    settings: &SolverSettings,
) -> Result<EchoTrace> {
    let config = config.clone().with_expansion_ratio(ratio)?;
    Ok(evolve(&config, seq, settings)?.trace)
}
