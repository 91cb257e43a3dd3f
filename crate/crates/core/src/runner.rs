//! Writes scenario results to disk and checks them against golden files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io;
use crate::manifest::SimConfig;
use crate::plot::{plot_csv, PlotKind};
use crate::scenarios::{self, ChartRun, SCENARIOS};

/// Files a run wrote plus headline numbers.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: BTreeMap<String, String>,
}

impl RunReport {
    fn add(&mut self, p: PathBuf) -> &Path {
        self.files.push(p);
        self.files.last().expect("just pushed")
    }

    fn note(&mut self, k: &str, v: impl ToString) {
        self.summary.insert(k.to_string(), v.to_string());
    }
}

/// CSVs of `scenario` that are kept as golden files.
pub fn golden_files(scenario: &str) -> &'static [&'static str] {
    match scenario {
        "two_image_movie" => &["similarity.csv"],
        "delay_independence" => &[
            "contrast_delay_0.csv",
            "contrast_delay_1.csv",
            "contrast_delay_2.csv",
            "contrast_horizontal.csv",
        ],
        "mtf_study" => &["contrast.csv", "mtf.csv"],
        _ => &[],
    }
}

pub fn check_scenario(name: &str) -> Result<()> {
    if SCENARIOS.contains(&name) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "unknown scenario `{name}` (expected one of {})",
            SCENARIOS.join(", ")
        )))
    }
}

fn meta(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn write_chart_run(report: &mut RunReport, dir: &Path, stem: &str, run: &ChartRun) -> Result<()> {
    let csv = dir.join(format!("{stem}.csv"));
    io::write_contrast_csv(&csv, &[&run.curve])?;
    let csv = report.add(csv).to_path_buf();
    let svg = dir.join(format!("{stem}.svg"));
    plot_csv(&csv, PlotKind::Contrast, &svg)?;
    report.add(svg);
    Ok(())
}

/// Runs `name` with `cfg` and writes everything into `dir`.
pub fn run_scenario(name: &str, cfg: &SimConfig, dir: &Path) -> Result<RunReport> {
    check_scenario(name)?;
    fs::create_dir_all(dir)?;
    let mut report = RunReport::default();
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, cfg.to_toml_string())?;
    report.add(cfg_path);
    report.note("scenario", name);

    match name {
        "two_image_movie" => {
            let r = scenarios::run_two_image_movie(cfg)?;
            let sim = dir.join("similarity.csv");
            io::write_similarity_csv(&sim, &r.similarity.rows)?;
            let sim = report.add(sim).to_path_buf();
            let svg = dir.join("similarity.svg");
            plot_csv(&sim, PlotKind::Similarity, &svg)?;
            report.add(svg);
            let letters = if cfg.movie.n_only { vec!["N"] } else { vec!["N", "T"] };
            for (letter, echo) in letters.iter().zip(&r.echoes) {
                let p = dir.join(format!("echo_{letter}.csv"));
                io::write_echo_csv(&p, &echo.trace)?;
                report.add(p);
                if let Some(t) = echo.peak_time {
                    report.note(&format!("echo_peak_{letter}_s"), t);
                }
            }
            let frames_dir = dir.join("frames");
            fs::create_dir_all(&frames_dir)?;
            for (i, f) in r.frames.frames().iter().enumerate() {
                let p = frames_dir.join(format!("frame_{:02}.pgm", i + 1));
                let m = meta(&[
                    ("frame_index", i.to_string()),
                    ("t_start_s", f.t_start.to_string()),
                    ("duration_s", f.duration.to_string()),
                ]);
                io::write_pgm(&p, &f.image, &m)?;
                report.add(p);
            }
            for (letter, img) in [("N", &r.reference_n), ("T", &r.reference_t)] {
                let p = dir.join(format!("reference_{letter}.pgm"));
                io::write_pgm(&p, img, &meta(&[("glyph", letter.to_string())]))?;
                report.add(p);
            }
            report.note("mask_similarity", r.mask_similarity);
            report.note("coupling", r.echoes[0].coupling);
            report.note("efficiency_N", r.echoes[0].trace.efficiency);
            match &r.crossing {
                Some(c) => report.note("crossing_frames", format!("{}..{}", c.start + 1, c.end)),
                None => report.note("crossing_frames", "none"),
            }
        }
        "delay_independence" => {
            let r = scenarios::run_delay_independence(cfg)?;
            for (i, run) in r.runs.iter().enumerate() {
                write_chart_run(&mut report, dir, &format!("contrast_delay_{i}"), run)?;
                report.note(&format!("delay_{i}_s"), run.delay);
                let p = dir.join(format!("echo_delay_{i}.csv"));
                io::write_echo_csv(&p, &run.echo.trace)?;
                report.add(p);
            }
            write_chart_run(&mut report, dir, "contrast_horizontal", &r.horizontal)?;
            report.note("max_delay_rms", r.max_delay_rms);
            report.note("orientation_rms", r.orientation_rms);
        }
        "mtf_study" => {
            let r = scenarios::run_mtf_study(cfg)?;
            let curves: Vec<_> = r.runs.iter().map(|x| &x.curve).collect();
            let csv = dir.join("contrast.csv");
            io::write_contrast_csv(&csv, &curves)?;
            let csv = report.add(csv).to_path_buf();
            let svg = dir.join("contrast.svg");
            plot_csv(&csv, PlotKind::Contrast, &svg)?;
            report.add(svg);
            let mtf = dir.join("mtf.csv");
            io::write_mtf_csv(&mtf, &r.table)?;
            let mtf = report.add(mtf).to_path_buf();
            let svg = dir.join("mtf.svg");
            plot_csv(&mtf, PlotKind::Mtf, &svg)?;
            report.add(svg);
            for (run, res) in r.runs.iter().zip(&r.residuals) {
                report.note(&format!("fit_rms_a_{:.0}um", run.chart.a * 1e6), res);
            }
        }
        _ => unreachable!("checked above"),
    }

    let summary = dir.join("summary.txt");
    let text: String = report.summary.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    fs::write(&summary, text)?;
    report.add(summary);
    Ok(report)
}

/// Copies the golden CSVs of a finished run from `run_dir` into `golden_dir`.
pub fn store_golden(name: &str, run_dir: &Path, golden_dir: &Path) -> Result<Vec<PathBuf>> {
    check_scenario(name)?;
    let dest = golden_dir.join(name);
    fs::create_dir_all(&dest)?;
    golden_files(name)
        .iter()
        .map(|f| {
            let to = dest.join(f);
            fs::copy(run_dir.join(f), &to)?;
            Ok(to)
        })
        .collect()
}

/// Largest absolute difference between two CSVs with the same header and
/// shape, cell by cell (empty cells must match).
pub fn csv_difference(a: &Path, b: &Path) -> Result<f64> {
    let read = |p: &Path| -> Result<io::Table> {
        let mut r = csv::Reader::from_path(p)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        io::read_table(p, "CSV", &header_refs)
    };
    let (ta, tb) = (read(a)?, read(b)?);
    let mismatch = |why: &str| Error::Format { kind: "golden CSV", path: b.to_path_buf(), reason: why.to_string() };
    if ta.header != tb.header {
        return Err(mismatch("header differs"));
    }
    if ta.rows.len() != tb.rows.len() {
        return Err(mismatch(&format!("{} rows vs {}", ta.rows.len(), tb.rows.len())));
    }
    let mut worst: f64 = 0.0;
    for (ra, rb) in ta.rows.iter().zip(&tb.rows) {
        for (x, y) in ra.iter().zip(rb) {
            if x.is_nan() != y.is_nan() {
                return Err(mismatch("empty cells differ"));
            }
            if !x.is_nan() {
                worst = worst.max((x - y).abs());
            }
        }
    }
    Ok(worst)
}
