use super::*;
use crate::diffusion::{fd_oracle, propagate, propagate_with, FdScheme, Method};
use crate::image::GridSpec;
use crate::imaging::chart_grid;

const D: f64 = 1.05e-2;

fn img(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> ImageField {
    ImageField::from_fn(w, h, 1e-5, f).unwrap()
}

#[test]
fn similarity_examples() {
    let a = img(6, 5, |x, y| ((x * 7 + y * 3) % 5) as f64);
    assert_eq!(similarity(&a, &a).unwrap(), 1.0);
    assert!((similarity(&a.scaled(3.0), &a).unwrap() - 1.0).abs() < 1e-15);
    let left = img(6, 5, |x, _| if x < 3 { 1.0 } else { 0.0 });
    let right = img(6, 5, |x, _| if x >= 3 { 2.0 } else { 0.0 });
    assert_eq!(similarity(&left, &right).unwrap(), 0.0);
    let zero = img(6, 5, |_, _| 0.0);
    assert_eq!(similarity(&zero, &a).unwrap(), 0.0);
    assert!(similarity(&a, &zero).is_err());
    assert!(similarity(&a, &img(5, 6, |_, _| 1.0)).is_err());
}

#[test]
fn distinguishability_examples() {
    assert!((distinguishability(0.51, 0.47) - 0.04).abs() < 1e-12);
    assert_eq!(distinguishability(1.0, 0.0), 1.0);
    assert_eq!(distinguishability(0.3, 0.3), 0.0);
}

fn chart_on_grid(a: f64, n_lines: usize, t_max: f64) -> (ImageField, ChartLayout) {
    let chart = BarChart { a, n_lines, orientation: Orientation::Vertical, extent: 5.0 * a };
    let grid = chart_grid(&chart, 15e-6, D, t_max).unwrap();
    make_barchart(&chart, &grid).unwrap()
}

#[test]
fn contrast_trivial_cases() {
    let (chart, layout) = chart_on_grid(375e-6, 3, 1e-6);
    assert_eq!(contrast(&chart, &layout, Sampling::Column).unwrap(), 1.0);
    assert_eq!(contrast(&chart, &layout, Sampling::ThreeColumn).unwrap(), 1.0);
    let flat = chart.grid().zeros().scaled(0.0);
    assert!(matches!(contrast(&flat, &layout, Sampling::Column), Err(Error::UndefinedContrast)));
    let uniform = ImageField::from_fn(chart.width(), chart.height(), chart.pitch(), |_, _| 2.0).unwrap();
    assert_eq!(contrast(&uniform, &layout, Sampling::Column).unwrap(), 0.0);
}

#[test]
fn contrast_after_diffusion_matches_fd_oracle() {
    let t = 2.2e-6;
    let (chart, layout) = chart_on_grid(375e-6, 3, t);
    let p = chart.pitch();
    let analytic = propagate(&chart, D, t).unwrap();
    let fd = fd_oracle(&chart, D, t, p * p / (6.0 * D), FdScheme::Explicit).unwrap();
    let ca = contrast(&analytic, &layout, Sampling::Column).unwrap();
    let cf = contrast(&fd, &layout, Sampling::Column).unwrap();
    let cm = predicted_contrast(&layout.chart, D, t, 1.0).unwrap();
    println!("a=375um t=2.2us: propagate {ca:.6} fd {cf:.6} model {cm:.6}");
    assert!((ca - cf).abs() < 1e-3);
    assert!((ca - cm).abs() < 1e-3);
}

#[test]
fn predicted_contrast_limits() {
    let chart = BarChart::three_bar(300e-6, Orientation::Vertical);
    assert_eq!(predicted_contrast(&chart, D, 0.0, 0.8).unwrap(), 0.8);
    assert_eq!(periodic_contrast(300e-6, D, 0.0, 0.8).unwrap(), 0.8);
    assert!(periodic_contrast(300e-6, D, 1e-3, 1.0).unwrap().abs() < 1e-12);
    assert!(predicted_contrast(&chart, -1.0, 1e-6, 1.0).is_err());
    // the finite chart inverts before washing out
    let ts: Vec<f64> = (0..400).map(|i| i as f64 * 0.1e-6).collect();
    let cs: Vec<f64> = ts.iter().map(|&t| predicted_contrast(&chart, D, t, 1.0).unwrap()).collect();
    let (imin, cmin) = cs.iter().cloned().enumerate().fold((0, 1.0), |m, (i, c)| if c < m.1 { (i, c) } else { m });
    println!("finite chart minimum {cmin:.4} at t = {:.2} us", ts[imin] * 1e6);
    assert!(cmin < -0.01);
    assert!(cs.last().unwrap().abs() < cmin.abs());
    assert!(cs.last().unwrap() < &0.0);
}

#[test]
fn periodic_chart_three_way_agreement() {
    // 15 lines on an odd canvas; the centre samples are far from the pattern ends.
    let pitch = 15e-6;
    let a = 21.0 * pitch;
    let chart = BarChart { a, n_lines: 15, orientation: Orientation::Vertical, extent: 5.0 * a };
    let t_max = 0.3 * a * a / D;
    let margin = crate::diffusion::padding_for(D, t_max, pitch).unwrap();
    let n = 29 * 21 + 2 * margin + 10;
    let grid = GridSpec::new(n, 5 * 21 + 2 * margin + 10, pitch).unwrap();
    let (img, layout) = make_barchart(&chart, &grid).unwrap();
    for frac in [0.01, 0.05, 0.1, 0.3] {
        let t = frac * a * a / D;
        let series = periodic_contrast(a, D, t, 1.0).unwrap();
        let analytic = contrast(&propagate(&img, D, t).unwrap(), &layout, Sampling::Column).unwrap();
        let fd_img = fd_oracle(&img, D, t, pitch * pitch / (6.0 * D), FdScheme::Explicit).unwrap();
        let fd = contrast(&fd_img, &layout, Sampling::Column).unwrap();
        println!("Dt/a² = {frac}: series {series:.6} propagate {analytic:.6} fd {fd:.6}");
        assert!((series - analytic).abs() < 1e-3);
        assert!((series - fd).abs() < 1e-3);
        assert!((analytic - fd).abs() < 1e-3);
    }
}

#[test]
fn model_matches_cell_average_propagation() {
    // Masks are piecewise constant per pixel; with pixel-integrated taps the
    // grid result equals the continuum blur at pixel centres.
    for sampling in [Sampling::Column, Sampling::ThreeColumn] {
        let (chart, layout) = chart_on_grid(240e-6, 3, 4e-6);
        let model = ContrastModel { layout, diffusion: D, c0: 1.0, sampling };
        let blur = |t| propagate_with(&chart, D, t, Method::CellAverage).unwrap();
        for t in [0.05e-6, 0.2e-6, 1e-6, 2.5e-6, 4e-6] {
            let sim = contrast(&blur(t), &layout, sampling).unwrap();
            let m = model.contrast_at(t).unwrap();
            assert!((sim - m).abs() < 1e-8, "{sampling:?} t={t}: {sim} vs {m}");
        }
        let mixed = [(1e-6, 0.3), (1.2e-6, 0.7)];
        let mut blend = blur(1e-6).scaled(0.3);
        blend.add_scaled(&blur(1.2e-6), 0.7).unwrap();
        let sim = contrast(&blend, &layout, sampling).unwrap();
        assert!((sim - model.contrast(&mixed).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn point_sampled_kernel_error_is_second_order() {
    // The sampled kernel treats pixels as point values; its deviation from
    // the continuum contrast shrinks ~4x when the pitch halves.
    let t = 0.2e-6;
    let err = |max_pitch: f64| {
        let chart = BarChart::three_bar(240e-6, Orientation::Vertical);
        let grid = chart_grid(&chart, max_pitch, D, t).unwrap();
        let (img, layout) = make_barchart(&chart, &grid).unwrap();
        let sim = contrast(&propagate(&img, D, t).unwrap(), &layout, Sampling::Column).unwrap();
        (sim - predicted_contrast(&chart, D, t, 1.0).unwrap()).abs()
    };
    let (coarse, fine) = (err(240e-6 / 17.0), err(240e-6 / 35.0));
    let ratio = coarse / fine;
    assert!(coarse < 2e-3 && (3.0..5.5).contains(&ratio), "{coarse} {fine}");
}

#[test]
fn mtf_monotone() {
    let charts: Vec<BarChart> = [375e-6, 330e-6, 280e-6, 240e-6]
        .iter()
        .map(|&a| BarChart::three_bar(a, Orientation::Vertical))
        .collect();
    let times = [0.0, 0.5e-6, 1e-6, 2e-6];
    let rows = mtf(&charts, D, &times, 15e-6, Sampling::Column, Method::Separable).unwrap();
    assert_eq!(rows.len(), 16);
    for ti in 0..4 {
        let r = &rows[ti * 4..ti * 4 + 4];
        assert!(r.windows(2).all(|w| w[0].frequency < w[1].frequency));
        if ti == 0 {
            assert!(r.iter().all(|x| x.c == 1.0));
        }
        assert!(r.windows(2).all(|w| w[1].c <= w[0].c || w[1].c < 0.0));
    }
    assert!(mtf(&charts[..1], D, &times, 15e-6, Sampling::Column, Method::Separable).is_err());
}

fn series(pairs: &[(f64, f64)]) -> SimilaritySeries {
    SimilaritySeries {
        rows: pairs
            .iter()
            .enumerate()
            .map(|(i, &(s_n, s_t))| SimilarityRow {
                frame_index: i,
                t: i as f64,
                s_n,
                s_t,
                d: distinguishability(s_n, s_t),
            })
            .collect(),
    }
}

#[test]
fn crossing_detection() {
    let s = series(&[(0.3, 0.9), (0.35, 0.8), (0.45, 0.55), (0.52, 0.48), (0.7, 0.4), (0.8, 0.3)]);
    assert_eq!(s.crossing_frame(), Some(3));
    assert_eq!(s.low_contrast_runs(0.15), vec![2..4]);
    assert_eq!(s.crossing_region(0.15), Some(2..4));
    // two separate low-D runs are not a single crossing
    let s = series(&[(0.3, 0.9), (0.5, 0.55), (0.2, 0.6), (0.5, 0.45), (0.8, 0.3)]);
    assert_eq!(s.crossing_region(0.15), None);
    // no sign change
    let s = series(&[(0.3, 0.9), (0.5, 0.55), (0.2, 0.6)]);
    assert_eq!(s.crossing_frame(), None);
    assert_eq!(s.results().len(), 6);
}

#[test]
fn curve_rms_difference() {
    let mk = |off: f64| ContrastCurve {
        a: 1.0,
        c0: 1.0,
        points: (0..5)
            .map(|i| ContrastPoint { t_storage: i as f64, c: 1.0 - 0.1 * i as f64 + off, c_pred: Some(1.0 - 0.1 * i as f64) })
            .collect(),
    };
    let (a, b) = (mk(0.0), mk(0.01));
    assert!((a.rms_difference(&b).unwrap() - 0.01).abs() < 1e-12);
    assert!((b.fit_residual().unwrap() - 0.01).abs() < 1e-12);
    assert!((a.interpolate(1.5).unwrap() - 0.85).abs() < 1e-12);
    assert_eq!(a.interpolate(5.5), None);
}
