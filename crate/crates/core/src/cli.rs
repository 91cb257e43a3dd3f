//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid config, schema mismatch or a failed
//! run, 2 usage errors (including an unknown scenario).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::manifest::SimConfig;
use crate::plot::{plot_csv, PlotKind};
use crate::runner;

/// Environment variable naming the default results root.
pub const OUT_ENV: &str = "GEMSIM_OUT";
/// Environment variable overriding where golden files live.
pub const GOLDEN_ENV: &str = "GEMSIM_GOLDEN_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gemsim", version, about = "Gradient echo memory image-storage simulator")]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Config file (TOML); the shipped defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override one key, e.g. `--set memory.diffusion="0 cm^2/s"`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario: two_image_movie, delay_independence or mtf_study.
    Run {
        scenario: String,

        #[command(flatten)]
        config: ConfigArgs,

        /// Results directory (default: a dated folder under $GEMSIM_OUT or ./results).
        #[arg(long)]
        out: Option<PathBuf>,

        /// Print the resolved config and exit without writing anything.
        #[arg(long)]
        dry_run: bool,

        /// Replace the scenario's golden CSVs with this run's output.
        #[arg(long)]
        regen_golden: bool,
    },
    /// Render a CSV written by `run` as an SVG plot.
    Plot {
        csv: PathBuf,

        #[arg(long, value_parser = ["similarity", "contrast", "mtf"])]
        kind: String,

        /// Output file (default: the CSV path with an .svg extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config against every rule and print a report.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

/// Default directory for a run started now.
pub fn default_out_dir(scenario: &str) -> PathBuf {
    let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("results"), PathBuf::from);
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    root.join(format!("{stamp}-{scenario}"))
}

/// Where golden files are read from and written to.
pub fn golden_dir() -> PathBuf {
    std::env::var_os(GOLDEN_ENV).map_or_else(
        || Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden"),
        PathBuf::from,
    )
}

fn report_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_FAILURE
}

fn load(args: &ConfigArgs) -> Result<SimConfig, Error> {
    SimConfig::load(args.config.as_deref(), &args.overrides)
}

/// Runs a parsed command line and returns the exit code.
pub fn execute(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match cli.command {
        Command::Run { scenario, config, out, dry_run, regen_golden } => {
            if let Err(e) = runner::check_scenario(&scenario) {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return report_error(&e),
            };
            if let Err(e) = cfg.validate() {
                return report_error(&e);
            }
            if dry_run {
                print!("{}", cfg.to_toml_string());
                return EXIT_OK;
            }
            if regen_golden && cfg != SimConfig::default() {
                eprintln!("error: golden files are generated from the default config only");
                return EXIT_FAILURE;
            }
            let dir = out.unwrap_or_else(|| default_out_dir(&scenario));
            let report = match runner::run_scenario(&scenario, &cfg, &dir) {
                Ok(r) => r,
                Err(e) => return report_error(&e),
            };
            for (k, v) in &report.summary {
                println!("{k} = {v}");
            }
            println!("wrote {} files to {}", report.files.len(), dir.display());
            if regen_golden {
                match runner::store_golden(&scenario, &dir, &golden_dir()) {
                    Ok(files) => {
                        for f in files {
                            println!("golden: {}", f.display());
                        }
                    }
                    Err(e) => return report_error(&e),
                }
            }
            EXIT_OK
        }
        Command::Plot { csv, kind, out } => {
            let kind: PlotKind = match kind.parse() {
                Ok(k) => k,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            };
            let out = out.unwrap_or_else(|| csv.with_extension("svg"));
            match plot_csv(&csv, kind, &out) {
                Ok(()) => {
                    println!("wrote {}", out.display());
                    EXIT_OK
                }
                Err(e) => report_error(&e),
            }
        }
        Command::Validate { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return report_error(&e),
            };
            let rules = cfg.rules();
            for r in &rules {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            let failed = rules.iter().filter(|r| !r.passed).count();
            println!("{} of {} checks passed", rules.len() - failed, rules.len());
            if failed == 0 {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
    }
}
