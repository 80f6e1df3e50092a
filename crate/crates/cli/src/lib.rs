//! `fdhybf` command line: `run`, `validate` and `dump-channels`.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
//! failures while running or writing results.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use fdhybf::config::{load_config, SystemConfig};
use fdhybf::harness::{dump_channels, run_experiment, trace_path, write_summary_csv, write_trace_csv};
use fdhybf::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fdhybf", version, about = "Full-duplex hybrid beamforming Monte-Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the SNR sweep and write the summary CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Worker threads; results do not depend on it.
        #[arg(long, env = "FDHYBF_THREADS", default_value_t = 1)]
        threads: usize,
        /// Also write per-iteration WSR to `<out stem>.trace.csv`.
        #[arg(long)]
        trace: bool,
    },
    /// Check a configuration file and print "ok".
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the channel matrices of one trial as text files.
    DumpChannels {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "channels")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
}

fn load(path: &Path) -> Result<SystemConfig, i32> {
    load_config(path).map_err(|e| {
        match &e {
            Error::Validation(errs) => {
                eprintln!("invalid config {}:", path.display());
                for err in errs {
                    eprintln!("  {err}");
                }
            }
            e => eprintln!("cannot load {}: {e}", path.display()),
        }
        EXIT_USAGE
    })
}

fn runtime(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_RUNTIME
}

fn write_results(config: &SystemConfig, out: &Path, threads: usize, trace: bool) -> Result<(), Error> {
    let results = run_experiment(config, threads)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_summary_csv(BufWriter::new(File::create(out)?), &results.summary, config.num_nodes())?;
    if trace {
        write_trace_csv(BufWriter::new(File::create(trace_path(out))?), &results.trace)?;
    }
    let failed = results.summary.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see the status column", results.summary.len());
    }
    Ok(())
}

fn execute(command: Command) -> i32 {
    match command {
        Command::Run {
            config,
            out,
            threads,
            trace,
        } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match write_results(&cfg, &out, threads, trace) {
                Ok(()) => EXIT_OK,
                Err(e) => runtime(e),
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(_) => {
                println!("ok");
                EXIT_OK
            }
            Err(code) => code,
        },
        Command::DumpChannels { config, out, trial } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if trial >= cfg.trials {
                eprintln!("trial {trial} out of range (config has {} trials)", cfg.trials);
                return EXIT_USAGE;
            }
            match dump_channels(&cfg, trial, &out) {
                Ok(paths) => {
                    println!("wrote {} matrices to {}", paths.len(), out.display());
                    EXIT_OK
                }
                Err(e) => runtime(e),
            }
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli.command),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
