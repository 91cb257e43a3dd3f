use clap::Parser;

use gemsim::cli::{execute, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { gemsim::cli::EXIT_USAGE } else { gemsim::cli::EXIT_OK });
        }
    };
    std::process::exit(execute(cli));
}
