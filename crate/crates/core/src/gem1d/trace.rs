use num_complex::Complex64;

/// Output intensity of one run.
#[derive(Debug, Clone)]
pub struct EchoTrace {
    /// Step midpoints (s).
    pub t_grid: Vec<f64>,
    /// `|E_out|²` at each step midpoint.
    pub intensity: Vec<f64>,
    pub input_intensity: Vec<f64>,
    /// Complex output field.
    pub field: Vec<Complex64>,
    pub dt: f64,
    pub flip_time: f64,
    /// Single-pass absorption of the input with the gradient held.
    pub absorbed_fraction: f64,
    /// Energy re-emitted after the flip over input energy.
    pub efficiency: f64,
}

impl EchoTrace {
    fn window(&self, from: f64, to: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t_grid
            .iter()
            .copied()
            .zip(self.intensity.iter().copied())
            .filter(move |&(t, _)| t >= from && t < to)
    }

    /// Peak of the output intensity inside `[from, to)`, refined by a
    /// parabola through the three samples around the maximum.
    pub fn peak_time(&self, from: f64, to: f64) -> Option<f64> {
        let idx: Vec<usize> = (0..self.t_grid.len())
            .filter(|&i| self.t_grid[i] >= from && self.t_grid[i] < to)
            .collect();
        let &imax = idx
            .iter()
            .max_by(|&&a, &&b| self.intensity[a].total_cmp(&self.intensity[b]))?;
        if imax == 0 || imax + 1 >= self.t_grid.len() {
            return Some(self.t_grid[imax]);
        }
        let (a, b, c) = (
            self.intensity[imax - 1],
            self.intensity[imax],
            self.intensity[imax + 1],
        );
        let curv = a - 2.0 * b + c;
        let shift = if curv < 0.0 { 0.5 * (a - c) / curv } else { 0.0 };
        Some(self.t_grid[imax] + shift * self.dt)
    }

    /// Intensity-weighted mean time inside `[from, to)`.
    pub fn centroid(&self, from: f64, to: f64) -> Option<f64> {
        let (m0, m1) = self
            .window(from, to)
            .fold((0.0, 0.0), |(a, b), (t, i)| (a + i, b + i * t));
        (m0 > 0.0).then(|| m1 / m0)
    }

    /// Full width at 1/e² of a Gaussian with the same second moment as the
    /// intensity inside `[from, to)` (four RMS widths).
    pub fn width_1e2(&self, from: f64, to: f64) -> Option<f64> {
        let c = self.centroid(from, to)?;
        let (m0, m2) = self
            .window(from, to)
            .fold((0.0, 0.0), |(a, b), (t, i)| (a + i, b + i * (t - c) * (t - c)));
        (m0 > 0.0).then(|| 4.0 * (m2 / m0).sqrt())
    }

    /// ∫ intensity dt over `[from, to)`.
    pub fn energy(&self, from: f64, to: f64) -> f64 {
        self.window(from, to).map(|(_, i)| i).sum::<f64>() * self.dt
    }

    /// Intensity at `t`, linearly interpolated; zero outside the grid.
    pub fn intensity_at(&self, t: f64) -> f64 {
        let n = self.t_grid.len();
        if n == 0 || t < self.t_grid[0] || t > self.t_grid[n - 1] {
            return 0.0;
        }
        let u = (t - self.t_grid[0]) / self.dt;
        let i = (u.floor() as usize).min(n - 1);
        if i + 1 >= n {
            return self.intensity[n - 1];
        }
        let f = u - i as f64;
        self.intensity[i] * (1.0 - f) + self.intensity[i + 1] * f
    }

    /// Exact integral of the piecewise-linear intensity over `[t0, t1]`.
    pub fn integrate(&self, t0: f64, t1: f64) -> f64 {
        let n = self.t_grid.len();
        if n < 2 || t1 <= t0 {
            return 0.0;
        }
        let lo = t0.max(self.t_grid[0]);
        let hi = t1.min(self.t_grid[n - 1]);
        if hi <= lo {
            return 0.0;
        }
        let first = ((lo - self.t_grid[0]) / self.dt).floor() as usize;
        let mut acc = 0.0;
        let mut a = lo;
        let mut k = first.min(n - 2);
        while a < hi && k + 1 < n {
            let b = self.t_grid[k + 1].min(hi);
            if b > a {
                acc += 0.5 * (self.intensity_at(a) + self.intensity_at(b)) * (b - a);
            }
            a = b;
            k += 1;
        }
        acc
    }
}

/// Energy bookkeeping of a run, all in `∫|E|²dt` units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    pub input: f64,
    /// Output energy not attributed to re-emission after the flip.
    pub transmitted: f64,
    /// Re-emitted energy after the flip, `∫|E_out − E_in|²dt`.
    pub retrieved: f64,
    /// Coherence left in the cell at the end.
    pub stored: f64,
    pub decayed: f64,
}

impl EnergyBudget {
    /// |input − (transmitted + retrieved + stored + decayed)| / input.
    pub fn relative_residual(&self) -> f64 {
        let out = self.transmitted + self.retrieved + self.stored + self.decayed;
        if self.input == 0.0 {
            return out.abs();
        }
        (self.input - out).abs() / self.input
    }
}

/// Coherence along the cell at one instant.
#[derive(Debug, Clone)]
pub struct SpinWave {
    pub time: f64,
    /// Cell-centre positions in `[0, L]`.
    pub z_grid: Vec<f64>,
    pub s: Vec<Complex64>,
    /// Pulse that deposited most of the coherence in each cell.
    pub slice_tags: Vec<Option<usize>>,
}

impl SpinWave {
    pub fn norm_sqr(&self) -> f64 {
        let dz = if self.z_grid.len() > 1 {
            self.z_grid[1] - self.z_grid[0]
        } else {
            0.0
        };
        self.s.iter().map(|v| v.norm_sqr()).sum::<f64>() * dz
    }

    /// Distinct pulse indices present in the tags, in ascending order.
    pub fn tagged_pulses(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.slice_tags.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Recorded snapshots `(time, s)`.
#[derive(Debug, Clone, Default)]
pub struct SpinWaveHistory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
}

impl SpinWaveHistory {
    pub fn push(&mut self, t: f64, s: Vec<Complex64>) {
        self.times.push(t);
        self.states.push(s);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Snapshot closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<(f64, &[Complex64])> {
        let i = (0..self.times.len())
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))?;
        Some((self.times[i], &self.states[i]))
    }
}
