//! Transverse diffusion of the stored coherence.
//!
//! The heat equation `∂ρ/∂t = D∇²ρ` in the plane has the Gaussian Green's
//! function with variance `2Dt` per axis. [`propagate`] applies it as two
//! separable 1D convolutions with a sampled, renormalised kernel; the FFT
//! path multiplies by `exp(−Dtk²)` instead. Binary masks are better read as
//! piecewise constant over each pixel, and [`Method::CellAverage`] treats
//! them that way: its taps integrate the Gaussian over a pixel, which makes
//! the result exact at pixel centres for such images. [`fd_oracle`] time-steps the PDE
//! with the 5-point Laplacian and exists to check the other two.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use rustfft::FftPlanner;
use statrs::function::erf::erf;

use crate::error::{invalid, Error, Result};
use crate::image::ImageField;

/// Kernel support in units of sigma.
pub const SUPPORT_SIGMAS: f64 = 6.0;
/// Largest fraction of the image power allowed to leave the grid.
pub const LEAK_LIMIT: f64 = 1e-4;

/// Heat kernel for diffusion coefficient `diffusion` acting for `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionKernel {
    pub diffusion: f64,
    pub time: f64,
    /// √(2Dt), per axis.
    pub sigma: f64,
    pub support_radius: f64,
}

impl DiffusionKernel {
    pub fn new(diffusion: f64, time: f64) -> Result<Self> {
        if !(diffusion >= 0.0 && diffusion.is_finite()) {
            return Err(invalid(format!("diffusion coefficient must be >= 0, got {diffusion}")));
        }
        if !(time >= 0.0 && time.is_finite()) {
            return Err(invalid(format!("diffusion time must be >= 0, got {time}")));
        }
        let sigma = (2.0 * diffusion * time).sqrt();
        Ok(DiffusionKernel {
            diffusion,
            time,
            sigma,
            support_radius: SUPPORT_SIGMAS * sigma,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.sigma == 0.0
    }

    /// Half-width of the sampled kernel in pixels.
    pub fn radius_px(&self, pitch: f64) -> usize {
        (self.support_radius / pitch).ceil() as usize
    }

    /// Gaussian sampled at pixel offsets `-r..=r`, normalised to unit sum.
    pub fn taps(&self, pitch: f64) -> Vec<f64> {
        if self.is_identity() {
            return vec![1.0];
        }
        let r = self.radius_px(pitch) as isize;
        let s = self.sigma / pitch;
        let mut taps: Vec<f64> = (-r..=r)
            .map(|k| (-(k as f64).powi(2) / (2.0 * s * s)).exp())
            .collect();
        let norm: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|v| *v /= norm);
        taps
    }

    /// Gaussian integrated over each pixel at offsets `-r..=r`.
    pub fn cell_taps(&self, pitch: f64) -> Vec<f64> {
        if self.is_identity() {
            return vec![1.0];
        }
        let r = self.radius_px(pitch) as isize;
        let scale = std::f64::consts::SQRT_2 * self.sigma / pitch;
        let cdf = |u: f64| 0.5 * erf(u / scale);
        let mut taps: Vec<f64> = (-r..=r)
            .map(|k| cdf(k as f64 + 0.5) - cdf(k as f64 - 0.5))
            .collect();
        let norm: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|v| *v /= norm);
        taps
    }
}

/// Zero margin (pixels) that keeps a propagated image on its grid.
pub fn padding_for(diffusion: f64, time: f64, pitch: f64) -> Result<usize> {
    Ok(DiffusionKernel::new(diffusion, time)?.radius_px(pitch))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Two 1D passes with the sampled kernel.
    #[default]
    Separable,
    /// Multiplication by `exp(−Dtk²)` on a zero-padded FFT grid.
    Spectral,
    /// Two 1D passes with pixel-integrated taps, for piecewise-constant images.
    CellAverage,
}

/// Free-space diffusion of `img` for time `t`, returned on the same grid.
/// Fails with [`Error::PowerLeak`] when more than [`LEAK_LIMIT`] of the
/// power would spread past the edges.
pub fn propagate(img: &ImageField, diffusion: f64, t: f64) -> Result<ImageField> {
    propagate_with(img, diffusion, t, Method::Separable)
}

pub fn propagate_with(
    img: &ImageField,
    diffusion: f64,
    t: f64,
    method: Method,
) -> Result<ImageField> {
    let out = propagate_unchecked(img, diffusion, t, method)?;
    let before = img.sum();
    if before > 0.0 {
        let leak = 1.0 - out.sum() / before;
        if leak > LEAK_LIMIT {
            return Err(Error::PowerLeak {
                fraction: leak,
                limit: LEAK_LIMIT,
            });
        }
    }
    Ok(out)
}

/// Like [`propagate_with`] without the leak check.
pub fn propagate_unchecked(
    img: &ImageField,
    diffusion: f64,
    t: f64,
    method: Method,
) -> Result<ImageField> {
    let kernel = DiffusionKernel::new(diffusion, t)?;
    if kernel.is_identity() {
        return Ok(img.clone());
    }
    match method {
        Method::Separable => Ok(separable(img, &kernel.taps(img.pitch()))),
        Method::Spectral => spectral(img, &kernel),
        Method::CellAverage => Ok(separable(img, &kernel.cell_taps(img.pitch()))),
    }
}

/// Pads by the kernel support, then propagates; nothing leaves the grid.
pub fn propagate_padded(img: &ImageField, diffusion: f64, t: f64) -> Result<ImageField> {
    let margin = padding_for(diffusion, t, img.pitch())?;
    propagate(&img.padded(margin), diffusion, t)
}

fn convolve_line(src: &[f64], dst: &mut [f64], taps: &[f64]) {
    if src.iter().all(|&v| v == 0.0) {
        dst.fill(0.0);
        return;
    }
    let r = taps.len() / 2;
    let n = src.len();
    for (i, d) in dst.iter_mut().enumerate() {
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(n - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            acc += src[j] * taps[j + r - i];
        }
        *d = acc;
    }
}

fn separable(img: &ImageField, taps: &[f64]) -> ImageField {
    let (w, h) = (img.width(), img.height());
    let mut rows = vec![0.0; w * h];
    rows.par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, out)| convolve_line(img.row(y), out, taps));

    // columns: work on the transpose so each line is contiguous
    let mut cols_in = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            cols_in[x * h + y] = rows[y * w + x];
        }
    }
    let mut cols_out = vec![0.0; w * h];
    cols_out
        .par_chunks_mut(h)
        .zip(cols_in.par_chunks(h))
        .for_each(|(out, src)| convolve_line(src, out, taps));

    let mut values = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            values[y * w + x] = cols_out[x * h + y];
        }
    }
    ImageField::new(w, h, img.pitch(), values).expect("same geometry")
}

fn fft_2d(data: &mut [Complex64], w: usize, h: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (fw, fh) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    data.par_chunks_mut(w).for_each(|row| fw.process(row));
    let mut col = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            col[x * h + y] = data[y * w + x];
        }
    }
    col.par_chunks_mut(h).for_each(|c| fh.process(c));
    for x in 0..w {
        for y in 0..h {
            data[y * w + x] = col[x * h + y];
        }
    }
}

/// Transfer function of the unit-sum sampled Gaussian on an `n`-point axis:
/// the continuous one summed over its aliases, then normalised at DC. Unlike
/// the bare continuous transfer function, this stays positive in real space
/// when the kernel is narrower than a pixel.
fn sampled_transfer(n: usize, pitch: f64, dt: f64) -> Vec<f64> {
    let band = 2.0 * std::f64::consts::PI / pitch;
    let aliased = |k: f64| {
        let mut sum = (-dt * k * k).exp();
        for m in 1.. {
            let a = (-dt * (k + m as f64 * band).powi(2)).exp();
            let b = (-dt * (k - m as f64 * band).powi(2)).exp();
            sum += a + b;
            if a + b < 1e-18 * sum {
                break;
            }
        }
        sum
    };
    let dc = aliased(0.0);
    (0..n)
        .map(|i| {
            let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            aliased(band * k / n as f64) / dc
        })
        .collect()
}

fn spectral(img: &ImageField, kernel: &DiffusionKernel) -> Result<ImageField> {
    let margin = kernel.radius_px(img.pitch());
    let padded = img.padded(margin);
    let (w, h) = (padded.width(), padded.height());
    let mut data: Vec<Complex64> = padded.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_2d(&mut data, w, h, false);
    let dt = kernel.diffusion * kernel.time;
    let hx = sampled_transfer(w, img.pitch(), dt);
    let hy = sampled_transfer(h, img.pitch(), dt);
    for y in 0..h {
        for x in 0..w {
            data[y * w + x] *= hx[x] * hy[y];
        }
    }
    fft_2d(&mut data, w, h, true);
    let scale = 1.0 / (w * h) as f64;
    let values = data.iter().map(|c| c.re * scale).collect();
    ImageField::new(w, h, img.pitch(), values)?.cropped(margin, margin, img.width(), img.height())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    /// Forward Euler; needs `D·dt/pitch² ≤ 1/4`.
    Explicit,
    /// Backward Euler, solved by conjugate gradients each step.
    Implicit,
}

/// Finite-difference reference solution of `∂ρ/∂t = D∇²ρ`.
///
/// The image is embedded in a zero margin wide enough that the Dirichlet
/// wall does not matter, stepped with the 5-point Laplacian, and cropped
/// back. `dt` is shortened so an integer number of steps lands on `t`.
pub fn fd_oracle(
    img: &ImageField,
    diffusion: f64,
    t: f64,
    dt: f64,
    scheme: FdScheme,
) -> Result<ImageField> {
    let kernel = DiffusionKernel::new(diffusion, t)?;
    if kernel.is_identity() {
        return Ok(img.clone());
    }
    if !(dt > 0.0) {
        return Err(invalid(format!("fd time step must be positive, got {dt}")));
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let pitch = img.pitch();
    let number = diffusion * dt / (pitch * pitch);
    if scheme == FdScheme::Explicit && number > 0.25 {
        return Err(Error::Unstable(format!(
            "explicit diffusion step has D·dt/pitch² = {number:.4} > 0.25"
        )));
    }
    let margin = kernel.radius_px(pitch) + 2;
    let padded = img.padded(margin);
    let (w, h) = (padded.width(), padded.height());
    let mut u = padded.into_values();
    let mut next = vec![0.0; w * h];
    match scheme {
        FdScheme::Explicit => {
            for _ in 0..steps {
                apply_laplacian(&u, &mut next, w, h);
                next.par_iter_mut().zip(u.par_iter()).for_each(|(n, &v)| *n = v + number * *n);
                std::mem::swap(&mut u, &mut next);
            }
        }
        FdScheme::Implicit => {
            for _ in 0..steps {
                solve_backward_euler(&u, &mut next, w, h, number)?;
                std::mem::swap(&mut u, &mut next);
            }
        }
    }
    ImageField::new(w, h, pitch, u)?.cropped(margin, margin, img.width(), img.height())
}

/// `out = Δu` (5-point, unit spacing, zero outside).
fn apply_laplacian(u: &[f64], out: &mut [f64], w: usize, h: usize) {
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let c = u[y * w + x];
            let l = if x > 0 { u[y * w + x - 1] } else { 0.0 };
            let r = if x + 1 < w { u[y * w + x + 1] } else { 0.0 };
            let d = if y > 0 { u[(y - 1) * w + x] } else { 0.0 };
            let t = if y + 1 < h { u[(y + 1) * w + x] } else { 0.0 };
            row[x] = l + r + d + t - 4.0 * c;
        }
    });
}

/// Solves `(I − r Δ) x = b` by conjugate gradients.
fn solve_backward_euler(b: &[f64], x: &mut [f64], w: usize, h: usize, r: f64) -> Result<()> {
    let n = b.len();
    let apply = |v: &[f64], out: &mut [f64]| {
        apply_laplacian(v, out, w, h);
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = vi - r * *o;
        }
    };
    x.copy_from_slice(b);
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut res: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = res.clone();
    let mut ap = vec![0.0; n];
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut rr: f64 = res.iter().map(|v| v * v).sum();
    for _ in 0..10 * n {
        if rr.sqrt() <= 1e-13 * b_norm {
            return Ok(());
        }
        apply(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            res[i] -= alpha * ap[i];
        }
        let rr_new: f64 = res.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = res[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::Unstable("conjugate gradients did not converge".into()))
}

/// A stored transverse image and how long it stayed in the memory.
#[derive(Debug, Clone)]
pub struct StoredSlice {
    pub image: ImageField,
    pub storage_time: Option<f64>,
}

/// Blurs each slice for its own storage time and, when `longitudinal_loss`
/// is set, scales it by `exp(−t / longitudinal_loss)`.
pub fn apply_to_storage(
    slices: &[StoredSlice],
    diffusion: f64,
    longitudinal_loss: Option<f64>,
) -> Result<Vec<ImageField>> {
    slices
        .iter()
        .enumerate()
        .map(|(i, slice)| {
            let t = slice
                .storage_time
                .ok_or_else(|| invalid(format!("slice {i} has no storage time")))?;
            let blurred = propagate(&slice.image, diffusion, t)?;
            Ok(match longitudinal_loss {
                Some(tau) => blurred.scaled((-t / tau).exp()),
                None => blurred,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(n: usize, pitch: f64) -> ImageField {
        let mut img = ImageField::zeros(n, n, pitch).unwrap();
        img.set(n / 2, n / 2, 1.0);
        img
    }

    #[test]
    fn zero_time_or_zero_diffusion_is_identity() {
        let img = ImageField::from_fn(9, 7, 1e-5, |x, y| (x * y) as f64).unwrap();
        assert_eq!(propagate(&img, 1e-2, 0.0).unwrap(), img);
        assert_eq!(propagate(&img, 0.0, 1e-6).unwrap(), img);
        assert_eq!(fd_oracle(&img, 0.0, 5e-6, 1e-9, FdScheme::Explicit).unwrap(), img);
    }

    #[test]
    fn negative_inputs_rejected() {
        let img = impulse(5, 1e-5);
        assert!(propagate(&img, -1.0, 1e-6).is_err());
        assert!(propagate(&img, 1.0, -1e-6).is_err());
    }

    #[test]
    fn kernel_has_unit_mass() {
        let k = DiffusionKernel::new(1.05e-2, 1e-6).unwrap();
        assert!((k.sigma - 144.913e-6).abs() < 1e-9);
        let sum: f64 = k.taps(10e-6).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(DiffusionKernel::new(0.0, 1.0).unwrap().taps(1.0), vec![1.0]);
    }

    #[test]
    fn impulse_second_moment_matches_sigma() {
        let (d, t, pitch) = (1.05e-2, 1e-6, 10e-6);
        let n = 201;
        let out = propagate(&impulse(n, pitch), d, t).unwrap();
        let c = (n / 2) as f64;
        let (mut m0, mut m2) = (0.0, 0.0);
        for y in 0..n {
            for x in 0..n {
                let v = out.get(x, y);
                m0 += v;
                m2 += v * ((x as f64 - c) * pitch).powi(2);
            }
        }
        let sigma = (m2 / m0).sqrt();
        assert!((sigma / 144.9e-6 - 1.0).abs() < 0.01, "sigma {sigma:e}");
    }

    #[test]
    fn leak_is_reported() {
        let img = impulse(9, 1e-5);
        assert!(matches!(
            propagate(&img, 1e-2, 1e-6),
            Err(Error::PowerLeak { .. })
        ));
        let padded = propagate_padded(&img, 1e-2, 1e-6).unwrap();
        assert!((padded.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_matches_separable() {
        let img = impulse(41, 1e-5).padded(40);
        let a = propagate_with(&img, 1e-2, 2e-7, Method::Separable).unwrap();
        let b = propagate_with(&img, 1e-2, 2e-7, Method::Spectral).unwrap();
        assert!(b.relative_l2(&a).unwrap() < 1e-6);
    }

    #[test]
    fn explicit_step_limit() {
        let img = impulse(11, 1e-5);
        let err = fd_oracle(&img, 1e-2, 1e-7, 3e-9, FdScheme::Explicit).unwrap_err();
        assert!(matches!(err, Error::Unstable(ref m) if m.contains("> 0.25")), "{err}");
        assert!(fd_oracle(&img, 1e-2, 1e-7, 3e-9, FdScheme::Implicit).is_ok());
    }

    #[test]
    fn uniform_image_stays_uniform_under_fd() {
        // interior of a wide plateau
        let img = ImageField::from_fn(30, 30, 1e-5, |_, _| 2.0).unwrap().padded(60);
        let out = fd_oracle(&img, 1e-2, 1e-8, 2e-9, FdScheme::Explicit).unwrap();
        for y in 70..80 {
            for x in 70..80 {
                assert!((out.get(x, y) - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn storage_slices_blur_with_their_own_time() {
        let base = impulse(31, 15e-6).padded(150);
        let slices = [
            StoredSlice {
                image: base.clone(),
                storage_time: Some(2.2e-6),
            },
            StoredSlice {
                image: base.clone(),
                storage_time: Some(4.4e-6),
            },
        ];
        let out = apply_to_storage(&slices, 1.05e-2, None).unwrap();
        assert!(out[1].max() < out[0].max());
        assert!((out[0].sum() - 1.0).abs() < 1e-9, "no loss when disabled");
        let lossy = apply_to_storage(&slices, 1.05e-2, Some(1e-6)).unwrap();
        assert!((lossy[0].sum() - (-2.2f64).exp()).abs() < 1e-9);
        let missing = [StoredSlice {
            image: base,
            storage_time: None,
        }];
        assert!(apply_to_storage(&missing, 1.05e-2, None).is_err());
    }
}
