//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::config::{Mode, RunConfig};
use crate::error::Error;
use crate::report;
use crate::simulator::{run_monte_carlo, THREADS_ENV};

/// Exit code for configuration problems, including bad flags.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for failures while running or writing outputs.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "mm-pmbm",
    version,
    about = "Monte Carlo experiments for the multiple-model PMBM tracker",
    after_help = format!("Set {THREADS_ENV} to cap the number of worker threads.")
)]
struct Args {
    /// TOML run configuration. Defaults to the built-in three-target scenario.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Overrides `scenario.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `scenario.num_runs`.
    #[arg(long)]
    runs: Option<usize>,
    /// Overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn load(args: &Args) -> crate::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::reference(),
    };
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(seed) = args.seed {
        cfg.scenario.rng_seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.scenario.num_runs = runs;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `argv` (program name first), runs the campaign and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let cfg = match load(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if cfg.mode == Mode::ValidateConfig {
        println!("configuration ok");
        return 0;
    }
    match execute(&cfg) {
        Ok(()) => 0,
        Err(e @ (Error::Config { .. } | Error::Parse { .. })) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn execute(cfg: &RunConfig) -> crate::Result<()> {
    let cells = cfg.cells(cfg.mode);
    let campaign = run_monte_carlo(&cfg.scenario, &cfg.jms, &cfg.filter_setup()?, &cells)?;
    let written = report::write_outputs(&campaign, cfg.mode, &cfg.output, &cfg.output.dir)?;

    let mut out = std::io::stdout().lock();
    let _ = write!(out, "{}", report::aggregate_table(&campaign, cfg.mode));
    let failures: usize = campaign.cells.iter().map(|c| c.failures.len()).sum();
    if failures > 0 {
        let _ = writeln!(out, "{failures} run(s) failed; see summary.json");
    }
    let _ = writeln!(
        out,
        "{} run(s) in {:.1} s (mean {:.3} s, max {:.3} s per run)",
        cells.len() * cfg.scenario.num_runs,
        campaign.wall_clock_secs,
        campaign.mean_run_secs,
        campaign.max_run_secs
    );
    for path in written {
        let _ = writeln!(out, "wrote {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_builtin() {
        assert_eq!(run_cli(["mm-pmbm", "--mode", "validate-config"]), 0);
    }

    #[test]
    fn missing_config_file() {
        assert_eq!(run_cli(["mm-pmbm", "--config", "/nonexistent/run.toml"]), EXIT_CONFIG);
    }

    #[test]
    fn bad_flag() {
        assert_eq!(run_cli(["mm-pmbm", "--mode", "sideways"]), EXIT_CONFIG);
    }

    #[test]
    fn zero_runs_rejected() {
        assert_eq!(run_cli(["mm-pmbm", "--runs", "0"]), EXIT_CONFIG);
    }
}
