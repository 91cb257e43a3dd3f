//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p gemsim --test acceptance` (add `--release` for realistic
//! timings; the test profile is already optimised). Scenario criteria go
//! through the real `gemsim` binary so the CLI, the writers and the readers
//! are covered too.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use gemsim::config::{Coupling, MemoryConfig};
use gemsim::diffusion::{fd_oracle, padding_for, propagate, FdScheme};
use gemsim::gem1d::{efficiency_bound, evolve, SolverSettings};
use gemsim::io::{read_mtf_csv, read_similarity_csv};
use gemsim::metrics::SimilaritySeries;
use gemsim::pulse::{Pulse, PulseSequence};
use gemsim::ImageField;

const PULSE_WIDTH: f64 = 1.1e-6;
const THRESHOLD: f64 = 0.15;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn pulse(peak: f64) -> Pulse {
    Pulse {
        peak_time: peak,
        width_1e2: PULSE_WIDTH,
        amplitude: 1.0,
        image: ImageField::zeros(1, 1, 1e-5).unwrap(),
    }
}

fn quiet() -> SolverSettings {
    SolverSettings { record_every: 0, ..SolverSettings::default() }
}

fn efficiency_bound_check() -> Outcome {
    let config = MemoryConfig { decoherence_rate: 0.0, ..MemoryConfig::default() };
    let seq = PulseSequence::new(vec![pulse(-1.1e-6)], 0.0).unwrap();
    let ev = evolve(&config, &seq, &quiet()).unwrap();
    let a = ev.trace.absorbed_fraction;
    let eff = ev.trace.efficiency;
    let bound = efficiency_bound(0.30).unwrap();
    outcome(
        (a - 0.30).abs() < 1e-4 && eff <= bound + 1e-3 && eff >= 0.07,
        format!("absorption {a:.5}, efficiency {eff:.5} in [0.07, {:.3}]", bound + 1e-3),
    )
}

fn echo_timing_check() -> Outcome {
    let seq = PulseSequence::new(vec![pulse(-1.1e-6)], 0.0).unwrap();
    let sym = evolve(&MemoryConfig::default(), &seq, &quiet()).unwrap().trace;
    let peak = sym.peak_time(0.0, 4.4e-6).unwrap();
    let sym_ok = (peak - 1.1e-6).abs() <= sym.dt;

    let expanded = MemoryConfig::default().with_expansion_ratio(1.4).unwrap();
    let trace = evolve(&expanded, &seq, &quiet()).unwrap().trace;
    let peak_r = trace.peak_time(0.0, 4.4e-6).unwrap();
    let width_r = trace.width_1e2(0.0, 4.4e-6).unwrap();
    let peak_err = (peak_r / 1.54e-6 - 1.0).abs();
    let width_err = (width_r / (1.4 * PULSE_WIDTH) - 1.0).abs();
    outcome(
        sym_ok && peak_err <= 0.05 && width_err <= 0.05,
        format!(
            "r=1: peak {:.4} us (dt {:.2e} s); r=1.4: peak {:.4} us ({:.2}% off), width {:.4} us ({:.2}% off)",
            peak * 1e6,
            sym.dt,
            peak_r * 1e6,
            100.0 * peak_err,
            width_r * 1e6,
            100.0 * width_err
        ),
    )
}

/// Both pulses go through the memory together. The medium is linear at a
/// fixed coupling, so the output field of the pair is the sum of the single
/// pulse outputs; that is checked, and the single outputs label the echoes.
fn filo_check() -> Outcome {
    let settings = SolverSettings { t_start: -4.5e-6, t_end: 6.0e-6, ..quiet() };
    let late = -1.0e-6;
    let mut worst_linearity: f64 = 0.0;
    let mut details = Vec::new();
    let mut ok = true;
    for factor in [1.0, 1.25, 1.5, 2.0, 2.5] {
        let spacing = factor * PULSE_WIDTH;
        let seq = PulseSequence::new(vec![pulse(late - spacing), pulse(late)], 0.0).unwrap();
        let both = evolve(&MemoryConfig::default(), &seq, &settings).unwrap();
        let fixed = MemoryConfig { coupling: Coupling::Fixed(both.coupling), ..MemoryConfig::default() };
        let settings = SolverSettings { dt: Some(both.trace.dt), ..settings.clone() };
        let singles: Vec<_> = (0..2)
            .map(|k| evolve(&fixed, &seq.single(k), &settings).unwrap().trace)
            .collect();
        let scale = both.trace.field.iter().map(|f| f.norm()).fold(0.0, f64::max);
        for (i, f) in both.trace.field.iter().enumerate() {
            let sum = singles[0].field[i] + singles[1].field[i];
            worst_linearity = worst_linearity.max((f - sum).norm() / scale);
        }
        let t_first_in = singles[0].peak_time(0.0, settings.t_end).unwrap();
        let t_last_in = singles[1].peak_time(0.0, settings.t_end).unwrap();
        ok &= t_last_in < t_first_in;
        details.push(format!("{:.3}us: {:.3}<{:.3}", spacing * 1e6, t_last_in * 1e6, t_first_in * 1e6));
    }
    ok &= worst_linearity < 1e-9;
    outcome(ok, format!("last-in echo first at every spacing [{}]; superposition error {worst_linearity:.1e}", details.join(", ")))
}

fn diffusion_check() -> Outcome {
    const PITCH: f64 = 15e-6;
    const D: f64 = 1.05e-2;
    let mut worst_fd: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    let mut worst_semigroup: f64 = 0.0;
    for number in [1.0, 10.0, 100.0] {
        let t = number * PITCH * PITCH / D;
        for seed in 0..2 {
            let img = common::smooth_random(64, PITCH, seed)
                .padded(padding_for(D, t, PITCH).unwrap() + 4);
            let analytic = propagate(&img, D, t).unwrap();
            let oracle = fd_oracle(&img, D, t, t / 4000.0, FdScheme::Explicit).unwrap();
            worst_fd = worst_fd.max(oracle.relative_l2(&analytic).unwrap());
            worst_mass = worst_mass.max((analytic.sum() / img.sum() - 1.0).abs());
            let halves = propagate(&propagate(&img, D, 0.5 * t).unwrap(), D, 0.5 * t).unwrap();
            worst_semigroup = worst_semigroup.max(halves.relative_l2(&analytic).unwrap());
        }
    }
    outcome(
        worst_fd < 1e-3 && worst_mass < 1e-6 && worst_semigroup < 1e-6,
        format!("max L2 vs FD {worst_fd:.2e}; mass drift {worst_mass:.1e}; semigroup {worst_semigroup:.1e}"),
    )
}

fn run_cli(scenario: &str, threads: usize, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_gemsim"))
        .args(["--threads", &threads.to_string(), "run", scenario, "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{scenario} exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr)))
    }
}

fn summary(dir: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(dir.join("summary.txt"))
        .unwrap_or_default()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn number(map: &BTreeMap<String, String>, key: &str) -> Option<f64> {
    map.get(key)?.parse().ok()
}

fn delay_check(dir: &Path) -> Outcome {
    let s = summary(dir);
    match (number(&s, "max_delay_rms"), number(&s, "orientation_rms")) {
        (Some(d), Some(o)) => outcome(
            d < 1e-2 && o < 1e-3,
            format!("max RMS between delays {d:.2e} (< 1e-2); orientation RMS {o:.2e} (< 1e-3)"),
        ),
        _ => outcome(false, "summary lacks max_delay_rms / orientation_rms"),
    }
}

fn fit_check(dir: &Path) -> Outcome {
    let s = summary(dir);
    let fits: Vec<(String, f64)> = s
        .iter()
        .filter(|(k, _)| k.starts_with("fit_rms_a_"))
        .filter_map(|(k, v)| Some((k.trim_start_matches("fit_rms_a_").to_string(), v.parse().ok()?)))
        .collect();
    let worst = fits.iter().map(|f| f.1).fold(0.0, f64::max);
    let listed: Vec<String> = fits.iter().map(|(a, r)| format!("{a}: {r:.1e}")).collect();
    outcome(fits.len() == 4 && worst < 1e-3, format!("RMS residual per line width [{}]", listed.join(", ")))
}

fn mtf_check(dir: &Path) -> Outcome {
    let rows = match read_mtf_csv(&dir.join("mtf.csv")) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut by_time: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    let mut by_freq: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        by_time.entry(r.t.to_bits()).or_default().push((r.frequency, r.c));
        by_freq.entry(r.frequency.to_bits()).or_default().push((r.t, r.c));
    }
    let non_increasing = |series: &mut Vec<(f64, f64)>, clip: bool| {
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        series.windows(2).all(|w| (clip && w[0].1 < 0.0) || w[1].1 <= w[0].1)
    };
    let in_freq = by_time.values_mut().all(|s| non_increasing(s, true));
    let in_time = by_freq.values_mut().all(|s| non_increasing(s, false));
    outcome(
        in_freq && in_time && by_time.len() >= 2 && by_freq.len() >= 2,
        format!(
            "{} times x {} frequencies; non-increasing in frequency: {in_freq}, in time: {in_time}",
            by_time.len(),
            by_freq.len()
        ),
    )
}

fn movie_check(dir: &Path) -> Outcome {
    let s = summary(dir);
    let rows = match read_similarity_csv(&dir.join("similarity.csv")) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let series = SimilaritySeries { rows };
    let rows = &series.rows;
    let (Some(t_n), Some(t_t)) = (number(&s, "echo_peak_N_s"), number(&s, "echo_peak_T_s")) else {
        return outcome(false, "summary lacks echo peaks");
    };
    let filo = t_t < t_n;
    let early_t = rows.first().is_some_and(|r| r.s_t > r.s_n);
    let late_n = rows.last().is_some_and(|r| r.s_n > r.s_t);
    let crossing = series.crossing_region(THRESHOLD);
    // frames before the crossing are the ones carried by the first echo
    let first_echo = crossing.as_ref().map_or(0, |c| c.start);
    let monotone = rows[..first_echo].windows(2).all(|w| w[1].s_t <= w[0].s_t);
    let region = crossing
        .as_ref()
        .map_or("none".to_string(), |c| format!("frames {}..{}", c.start + 1, c.end));
    outcome(
        filo && early_t && late_n && crossing.is_some() && monotone && first_echo > 1,
        format!(
            "echo peaks T {:.3} us < N {:.3} us; early frames T: {early_t}, late frames N: {late_n}; \
             S_T non-increasing over {first_echo} first-echo frames: {monotone}; crossing {region}",
            t_t * 1e6,
            t_n * 1e6
        ),
    )
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map(|d| d.filter_map(|e| Some(e.ok()?.path())).collect())
        .unwrap_or_default();
    v.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    v.sort();
    v
}

fn determinism_check(root: &Path, scenarios: &[&str], threads: usize) -> Outcome {
    let mut compared = 0;
    for sc in scenarios {
        let other = root.join(format!("{sc}-t{threads}"));
        if let Err(e) = run_cli(sc, threads, &other) {
            return outcome(false, e);
        }
        let base = csv_files(&root.join(format!("{sc}-t1")));
        let rerun = csv_files(&other);
        if base.is_empty() || base.len() != rerun.len() {
            return outcome(false, format!("{sc}: {} CSVs vs {}", base.len(), rerun.len()));
        }
        for (a, b) in base.iter().zip(&rerun) {
            if fs::read(a).ok() != fs::read(b).ok() {
                return outcome(false, format!("{} differs with --threads {threads}", b.display()));
            }
            compared += 1;
        }
    }
    outcome(true, format!("{compared} CSVs byte-identical between --threads 1 and --threads {threads}"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
}

fn report(c: &Criterion, o: &Outcome, elapsed: Duration) -> bool {
    let in_time = c.limit.is_none_or(|l| elapsed < l);
    let passed = o.passed && in_time;
    let budget = c.limit.map_or(String::new(), |l| format!(" < {} s", l.as_secs()));
    println!(
        "criterion {}: {} — {} — {} [{:.1} s{budget}{}]",
        c.id,
        if passed { "PASS" } else { "FAIL" },
        c.name,
        o.detail,
        elapsed.as_secs_f64(),
        if in_time { "" } else { ", over budget" }
    );
    passed
}

fn timed<F: FnOnce() -> Outcome>(f: F) -> (Outcome, Duration) {
    let start = Instant::now();
    let o = f();
    (o, start.elapsed())
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let mut all = true;

    let direct: [(Criterion, fn() -> Outcome); 4] = [
        (Criterion { id: 1, name: "efficiency bound", limit: secs(30) }, efficiency_bound_check),
        (Criterion { id: 2, name: "echo timing", limit: secs(30) }, echo_timing_check),
        (Criterion { id: 3, name: "first-in-last-out order", limit: secs(60) }, filo_check),
        (Criterion { id: 4, name: "diffusion oracle equivalence", limit: secs(60) }, diffusion_check),
    ];
    for (c, f) in direct {
        let (o, dt) = timed(f);
        all &= report(&c, &o, dt);
    }

    let via_cli: [(Criterion, &str, fn(&Path) -> Outcome); 4] = [
        (Criterion { id: 5, name: "delay independence", limit: secs(60) }, "delay_independence", delay_check),
        (Criterion { id: 6, name: "zero-free-parameter fit", limit: secs(60) }, "mtf_study", fit_check),
        (Criterion { id: 7, name: "MTF monotonicity", limit: secs(30) }, "mtf_study", mtf_check),
        (Criterion { id: 8, name: "two-image movie structure", limit: secs(120) }, "two_image_movie", movie_check),
    ];
    let mut ran: BTreeMap<&str, Duration> = BTreeMap::new();
    for (c, scenario, check) in via_cli {
        let dir = root.join(format!("{scenario}-t1"));
        let run_time = match ran.get(scenario) {
            Some(d) => Ok(*d),
            None => {
                let start = Instant::now();
                run_cli(scenario, 1, &dir).map(|()| {
                    let d = start.elapsed();
                    ran.insert(scenario, d);
                    d
                })
            }
        };
        let (o, dt) = match run_time {
            Ok(d) => {
                let (o, check_time) = timed(|| check(&dir));
                (o, d + check_time)
            }
            Err(e) => (outcome(false, e), Duration::ZERO),
        };
        all &= report(&c, &o, dt);
    }

    let c = Criterion { id: 9, name: "determinism across thread counts", limit: None };
    let (o, dt) = timed(|| {
        determinism_check(root, &["two_image_movie", "delay_independence", "mtf_study"], 4)
    });
    all &= report(&c, &o, dt);

    if all {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
}
