//! The `nrdk` command-line tool.
//!
//! Every subcommand is a thin wrapper over a library function in
//! [`commands`], so the integration tests can drive the same code paths
//! in-process. Errors map to exit codes with [`exit_code`].

pub mod args;
pub mod commands;
pub mod field;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use nrdk_core::Error;

pub use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Parameter(_) | Error::Shape(_) | Error::Size(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Image { .. } | Error::Corrupt { .. } | Error::Json(_) => EXIT_IO,
        Error::Degenerate(_) | Error::Fit(_) | Error::Metric(_) | Error::NonFinite(_) => EXIT_NUMERIC,
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

fn init_threads(threads: Option<usize>) -> Result<(), Error> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Error::config("threads", "must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::config("threads", e.to_string()))
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match init_threads(cli.threads).and_then(|_| commands::run(&cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            exit_code(&e)
        }
    }
}
