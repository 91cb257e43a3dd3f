//! Physical and numerical configuration.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Bohr magneton over ħ, in rad·s⁻¹·T⁻¹.
pub const BOHR_MAGNETON_OVER_HBAR: f64 = 9.274_010_078_3e-24 / 1.054_571_817e-34;

/// Detuning slope (rad·s⁻¹·m⁻¹) produced by a field gradient (T/m) on a
/// two-photon line with effective g-factor `g_factor`.
pub fn zeeman_slope(g_factor: f64, field_gradient: f64) -> f64 {
    g_factor * BOHR_MAGNETON_OVER_HBAR * field_gradient
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipShape {
    /// Linear ramp from the write to the read slope over `flip_duration`,
    /// centred on `flip_time`.
    Ramp,
    /// Instantaneous sign change at `flip_time`.
    Step,
}

/// How the effective light–atom coupling is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// Fixed coupling constant, in m^-1/2 s^-1/2.
    Fixed(f64),
    /// Calibrated so that a single pass through the write gradient absorbs
    /// this fraction of the input energy.
    Absorption(f64),
}

/// Physical parameters of the memory. All values SI.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryConfig {
    /// Cell length along the propagation axis (m).
    pub cell_length: f64,
    /// Detuning slope during write-in (rad·s⁻¹·m⁻¹).
    pub gradient_write: f64,
    /// Detuning slope during read-out; opposite sign to `gradient_write`.
    pub gradient_read: f64,
    /// Instant of the gradient flip (s). Defines t = 0 for frames.
    pub flip_time: f64,
    /// Ramp duration for [`FlipShape::Ramp`] (s).
    pub flip_duration: f64,
    pub flip_shape: FlipShape,
    pub coupling: Coupling,
    /// Resonant optical depth. Informational: the far-detuned Raman line is
    /// set by `coupling`.
    pub optical_depth: f64,
    /// Transverse diffusion coefficient (m²/s).
    pub diffusion: f64,
    /// Ground-state decoherence rate (1/s).
    pub decoherence_rate: f64,
    /// Optional e-folding time of the uniform loss from longitudinal diffusion (s).
    pub longitudinal_loss_time: Option<f64>,
}

/// Field gradient used in the experiment, 15 µT/cm, in T/m.
pub const DEFAULT_FIELD_GRADIENT: f64 = 15e-4;
/// Default effective g-factor of the two-photon line.
pub const DEFAULT_G_FACTOR: f64 = 2.0;

impl Default for MemoryConfig {
    fn default() -> Self {
        let slope = zeeman_slope(DEFAULT_G_FACTOR, DEFAULT_FIELD_GRADIENT);
        MemoryConfig {
            cell_length: 0.05,
            gradient_write: slope,
            gradient_read: -slope,
            flip_time: 0.0,
            flip_duration: 1e-6,
            flip_shape: FlipShape::Ramp,
            coupling: Coupling::Absorption(0.30),
            optical_depth: 200.0,
            diffusion: 105e-4,
            decoherence_rate: 0.0,
            longitudinal_loss_time: None,
        }
    }
}

impl MemoryConfig {
    /// |gradient_write| / |gradient_read|.
    pub fn expansion_ratio(&self) -> f64 {
        self.gradient_write.abs() / self.gradient_read.abs()
    }

    /// Sets the read slope to `-gradient_write / ratio`.
    pub fn with_expansion_ratio(mut self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(invalid(format!("expansion ratio must be positive, got {ratio}")));
        }
        self.gradient_read = -self.gradient_write / ratio;
        Ok(self)
    }

    /// Returns every violated constraint, empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.cell_length > 0.0) {
            v.push(format!("memory.cell_length must be > 0 (got {})", self.cell_length));
        }
        if !(self.diffusion >= 0.0) {
            v.push(format!("memory.diffusion must be >= 0 (got {})", self.diffusion));
        }
        if !(self.optical_depth >= 0.0) {
            v.push(format!("memory.optical_depth must be >= 0 (got {})", self.optical_depth));
        }
        if !(self.decoherence_rate >= 0.0) {
            v.push(format!(
                "memory.decoherence_rate must be >= 0 (got {})",
                self.decoherence_rate
            ));
        }
        if self.gradient_write == 0.0 || self.gradient_read == 0.0 {
            v.push("memory.gradient: write and read slopes must be non-zero".into());
        } else if self.gradient_write.signum() == self.gradient_read.signum() {
            v.push("memory.gradient: write and read slopes must have opposite signs".into());
        }
        if self.flip_shape == FlipShape::Ramp && !(self.flip_duration > 0.0) {
            v.push("memory.flip_duration must be > 0 for a ramped flip".into());
        }
        match self.coupling {
            Coupling::Fixed(g) if !(g >= 0.0 && g.is_finite()) => {
                v.push(format!("memory.coupling must be >= 0 (got {g})"))
            }
            Coupling::Absorption(a) if !(a >= 0.0 && a < 1.0) => {
                v.push(format!("memory.absorption must be in [0, 1) (got {a})"))
            }
            _ => {}
        }
        if let Some(t) = self.longitudinal_loss_time {
            if !(t > 0.0) {
                v.push(format!("memory.longitudinal_loss_time must be > 0 (got {t})"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(crate::error::Error::Config(v))
        }
    }
}
