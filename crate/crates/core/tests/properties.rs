mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use gemsim::diffusion::{padding_for, propagate_with, Method};
use gemsim::io::{read_pgm, write_pgm};
use gemsim::metrics::similarity;
use gemsim::ImageField;

const PITCH: f64 = 15e-6;
const D: f64 = 1.05e-2;

fn methods() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::Separable), Just(Method::Spectral), Just(Method::CellAverage)]
}

/// Noise on a canvas padded for `t`.
fn padded_noise(w: usize, h: usize, seed: u64, t: f64) -> ImageField {
    common::noise(w, h, PITCH, seed).padded(padding_for(D, t, PITCH).unwrap() + 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn diffusion_conserves_mass(seed in any::<u64>(), w in 4usize..24, h in 4usize..24,
                                number in 0.1f64..20.0, method in methods()) {
        let t = number * PITCH * PITCH / D;
        let img = padded_noise(w, h, seed, t);
        let out = propagate_with(&img, D, t, method).unwrap();
        prop_assert!((out.sum() / img.sum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diffusion_obeys_the_maximum_principle(seed in any::<u64>(), number in 0.1f64..20.0,
                                             method in prop_oneof![Just(Method::Separable), Just(Method::CellAverage)]) {
        let t = number * PITCH * PITCH / D;
        let img = padded_noise(16, 16, seed, t);
        let out = propagate_with(&img, D, t, method).unwrap();
        prop_assert!(out.max() <= img.max() + 1e-12);
        prop_assert!(out.min() >= -1e-12);
    }

    #[test]
    fn diffusion_is_isotropic(seed in any::<u64>(), number in 0.1f64..20.0, method in methods()) {
        let t = number * PITCH * PITCH / D;
        let img = padded_noise(12, 20, seed, t);
        let a = propagate_with(&img.rotate90(), D, t, method).unwrap();
        let b = propagate_with(&img, D, t, method).unwrap().rotate90();
        prop_assert!(a.relative_l2(&b).unwrap() < 1e-12);
    }

    #[test]
    fn resample_keeps_power_and_inverts(seed in any::<u64>(), m in 0.2f64..5.0) {
        let img = common::noise(9, 7, PITCH, seed);
        let power = |f: &ImageField| f.sum() * f.pitch() * f.pitch();
        let r = img.resample(m).unwrap();
        prop_assert!((power(&r) / power(&img) - 1.0).abs() < 1e-12);
        prop_assert!((r.pitch() / (m * PITCH) - 1.0).abs() < 1e-15);
        let back = r.resample(1.0 / m).unwrap();
        prop_assert!(back.relative_l2(&img).unwrap() < 1e-12);
    }

    #[test]
    fn similarity_ignores_scale(seed in any::<u64>(), k in 1e-3f64..1e3) {
        let a = common::noise(8, 8, PITCH, seed);
        let b = common::noise(8, 8, PITCH, seed ^ 0x5a5a);
        let s = similarity(&a, &b).unwrap();
        prop_assert!((similarity(&a.scaled(k), &b).unwrap() - s).abs() < 1e-12);
        prop_assert!((similarity(&b, &a).unwrap() - s).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        prop_assert!((similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_round_trip_within_half_a_count(seed in any::<u64>(), w in 1usize..40, h in 1usize..40,
                                          gain in 1e-6f64..1e6) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = common::noise(w, h, PITCH, seed).scaled(gain);
        let extra = BTreeMap::from([("frame_index".to_string(), "3".to_string())]);
        write_pgm(&path, &img, &extra).unwrap();
        let (back, meta) = read_pgm(&path).unwrap();
        prop_assert_eq!((back.width(), back.height()), (w, h));
        prop_assert_eq!(back.pitch(), PITCH);
        prop_assert_eq!(meta.get("frame_index").map(String::as_str), Some("3"));
        let half_count = 0.5 * img.max() / 65535.0;
        for (a, b) in img.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= half_count * (1.0 + 1e-9));
        }
    }
}

#[test]
fn pgm_rejects_negative_images() {
    let dir = tempfile::tempdir().unwrap();
    let img = ImageField::new(2, 1, PITCH, vec![1.0, -0.5]).unwrap();
    assert!(write_pgm(&dir.path().join("neg.pgm"), &img, &BTreeMap::new()).is_err());
}

#[test]
fn truncated_pgm_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.pgm");
    write_pgm(&path, &common::noise(8, 8, PITCH, 1), &BTreeMap::new()).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    assert!(read_pgm(&path).is_err());
}
