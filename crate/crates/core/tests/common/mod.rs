#![allow(dead_code)]

use gemsim::ImageField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random Gaussian blobs (σ between 6 and 10 px) on an `n × n` grid under a
/// sin⁴ taper, so the pattern and its first derivatives vanish at the edges.
pub fn smooth_random(n: usize, pitch: f64, seed: u64) -> ImageField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            (
                rng.random_range(12.0..n as f64 - 12.0),
                rng.random_range(12.0..n as f64 - 12.0),
                rng.random_range(6.0..10.0),
                rng.random_range(0.2..1.0),
            )
        })
        .collect();
    let taper = |i: usize| (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin().powi(4);
    ImageField::from_fn(n, n, pitch, |x, y| {
        taper(x) * taper(y) * blobs
            .iter()
            .map(|&(cx, cy, s, a)| {
                let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                a * (-r2 / (2.0 * s * s)).exp()
            })
            .sum::<f64>()
    })
    .unwrap()
}

/// Uniform random pixels in [0, 1).
pub fn noise(w: usize, h: usize, pitch: f64, seed: u64) -> ImageField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageField::from_fn(w, h, pitch, |_, _| rng.random::<f64>()).unwrap()
}
