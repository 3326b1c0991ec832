//! Grid sweeps, critical-region tables and NRG drivers behind the `kondo-metro` binary.
//!
//! Every table is a CSV preceded by one `# kondo-metro <kind> v<N>` line. Numbers carry twelve
//! significant digits and rows come out in a fixed order, so identical inputs give identical
//! files.

pub mod compare;
pub mod config;
pub mod error;
pub mod flow;
pub mod scan;
pub mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub use config::{Backend, FileConfig, Range, Spacing, SweepConfig};
pub use error::{CliError, Result};
pub use sweep::{run_sweep, write_sweep, SweepRow};

/// Scientific notation with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Runs `write` against the file at `path`, or standard output when `path` is `None`.
pub fn with_output<F>(path: Option<&Path>, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(CliError::io(p))?;
            let mut out = BufWriter::new(file);
            write(&mut out)?;
            out.flush().map_err(CliError::io(p))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}
