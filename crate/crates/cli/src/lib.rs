//! Command-line pipeline for prevalence-estimation experiments.
//!
//! ```text
//! quantbench synth        --preset t1a-desk --seed 42 --out data
//! quantbench gen-samples  --preset t1a-desk --seed 42 --pool data/pool.csv --out data/test
//! quantbench train        --train data/train.csv --seed 42 --out data/model.txt
//! quantbench quantify     --model data/model.txt --samples data/test/samples --out subs
//! quantbench evaluate     --truth data/test/truth.csv --preset t1a-desk --out eval subs/*.csv
//! ```

pub mod commands;
pub mod config;
pub mod error;
pub mod fsio;

use std::ffi::OsString;

use clap::Parser;

pub use commands::Cli;
pub use error::{CliError, CliResult, ExitKind};

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitKind::Usage as i32 } else { 0 };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
