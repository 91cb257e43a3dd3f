use crate::config::{FlipShape, MemoryConfig};

/// Time dependence of the detuning slope η(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSchedule {
    write: f64,
    read: f64,
    flip_time: f64,
    /// Zero for a step flip.
    ramp: f64,
}

impl GradientSchedule {
    pub fn new(config: &MemoryConfig) -> Self {
        let ramp = match config.flip_shape {
            FlipShape::Ramp => config.flip_duration,
            FlipShape::Step => 0.0,
        };
        GradientSchedule {
            write: config.gradient_write,
            read: config.gradient_read,
            flip_time: config.flip_time,
            ramp,
        }
    }

    /// A schedule that never flips.
    pub fn write_only(config: &MemoryConfig) -> Self {
        GradientSchedule {
            write: config.gradient_write,
            read: config.gradient_write,
            flip_time: config.flip_time,
            ramp: 0.0,
        }
    }

    fn ramp_start(&self) -> f64 {
        self.flip_time - 0.5 * self.ramp
    }

    fn ramp_end(&self) -> f64 {
        self.flip_time + 0.5 * self.ramp
    }

    pub fn max_slope(&self) -> f64 {
        self.write.abs().max(self.read.abs())
    }

    pub fn slope(&self, t: f64) -> f64 {
        if t < self.ramp_start() {
            self.write
        } else if t >= self.ramp_end() {
            self.read
        } else {
            self.write + (self.read - self.write) * (t - self.ramp_start()) / self.ramp
        }
    }

    /// Φ(t) = ∫_{flip_time}^{t} η(t') dt', exact for the piecewise-linear slope.
    pub fn phase_integral(&self, t: f64) -> f64 {
        self.primitive(t) - self.primitive(self.flip_time)
    }

    fn primitive(&self, t: f64) -> f64 {
        let (a, b) = (self.ramp_start(), self.ramp_end());
        if t < a {
            return self.write * (t - a);
        }
        if self.ramp == 0.0 {
            return self.read * (t - a);
        }
        let u = t.min(b) - a;
        let in_ramp = self.write * u + 0.5 * (self.read - self.write) * u * u / self.ramp;
        if t <= b {
            in_ramp
        } else {
            in_ramp + self.read * (t - b)
        }
    }

    /// Instant at which η changes sign (the maximum of |Φ|).
    pub fn turning_time(&self) -> f64 {
        if self.ramp == 0.0 || self.write.signum() == self.read.signum() {
            return self.flip_time;
        }
        self.ramp_start() + self.ramp * self.write / (self.write - self.read)
    }

    /// Input time whose spectral slice rephases at `t_out`, i.e. the solution
    /// of Φ(t_in) = Φ(t_out) on the write side. `None` before the turning point.
    pub fn rephasing_input_time(&self, t_out: f64) -> Option<f64> {
        let turn = self.turning_time();
        if t_out <= turn || self.write.signum() == self.read.signum() {
            return None;
        }
        let target = self.phase_integral(t_out);
        let sign = self.write.signum();
        // Φ is monotone (increasing for sign > 0) on (-inf, turn].
        let mut lo = turn - 1e-9;
        let mut step = (t_out - turn).max(1e-9);
        while sign * (self.phase_integral(lo) - target) > 0.0 {
            lo = turn - step;
            step *= 2.0;
        }
        let mut hi = turn;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sign * (self.phase_integral(mid) - target) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Time the slice retrieved at `t_out` spent in the medium.
    pub fn storage_time_at_output(&self, t_out: f64) -> f64 {
        match self.rephasing_input_time(t_out) {
            Some(t_in) => t_out - t_in,
            None => 0.0,
        }
    }
}
