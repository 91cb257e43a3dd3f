//! Input pulse trains.

use crate::error::{invalid, Result};
use crate::image::ImageField;

/// One Gaussian input pulse carrying a transverse image.
#[derive(Debug, Clone)]
pub struct Pulse {
    /// Peak time relative to the gradient flip (s).
    pub peak_time: f64,
    /// Full width at 1/e² of the intensity (s).
    pub width_1e2: f64,
    /// Peak field amplitude.
    pub amplitude: f64,
    pub image: ImageField,
}

impl Pulse {
    /// Field amplitude at time `t`. The intensity `|E|²` falls to 1/e² at
    /// `peak_time ± width_1e2 / 2`.
    #[inline]
    pub fn envelope(&self, t: f64) -> f64 {
        let u = (t - self.peak_time) / self.width_1e2;
        self.amplitude * (-4.0 * u * u).exp()
    }

    /// ∫ |E|² dt over all time.
    pub fn energy(&self) -> f64 {
        self.amplitude * self.amplitude * self.width_1e2 * (std::f64::consts::PI / 8.0).sqrt()
    }

    /// Standard deviation of the intensity profile in time.
    pub fn intensity_rms_width(&self) -> f64 {
        self.width_1e2 / 4.0
    }
}

/// A time-ordered train of input pulses, all ahead of the gradient flip.
#[derive(Debug, Clone)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
}

impl PulseSequence {
    /// Validates and sorts by peak time. `flip_time` is the gradient flip
    /// instant every pulse must precede.
    pub fn new(mut pulses: Vec<Pulse>, flip_time: f64) -> Result<Self> {
        if pulses.is_empty() {
            return Err(invalid("pulse sequence is empty"));
        }
        for (i, p) in pulses.iter().enumerate() {
            if !(p.width_1e2 > 0.0) {
                return Err(invalid(format!("pulse {i}: width must be positive")));
            }
            if !(p.peak_time < flip_time) {
                return Err(invalid(format!(
                    "pulse {i}: peak at {:.3e} s is not before the flip at {flip_time:.3e} s",
                    p.peak_time
                )));
            }
            if !p.amplitude.is_finite() {
                return Err(invalid(format!("pulse {i}: amplitude must be finite")));
            }
        }
        pulses.sort_by(|a, b| a.peak_time.total_cmp(&b.peak_time));
        Ok(PulseSequence { pulses })
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Coherent sum of all envelopes at `t`.
    pub fn field(&self, t: f64) -> f64 {
        self.pulses.iter().map(|p| p.envelope(t)).sum()
    }

    /// Index of the pulse with the largest envelope at `t`.
    pub fn dominant(&self, t: f64) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, p) in self.pulses.iter().enumerate() {
            let v = p.envelope(t).abs();
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }

    /// A sequence holding only pulse `index`.
    pub fn single(&self, index: usize) -> PulseSequence {
        PulseSequence {
            pulses: vec![self.pulses[index].clone()],
        }
    }
}
