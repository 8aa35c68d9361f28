//! Command-line front end: configuration, file formats, the pipeline
//! stages and the comparison report.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;

pub use config::{Overrides, RunConfig};
pub use error::{CliError, CliResult};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "EIT_THREADS";

/// Sizes the global worker pool from `EIT_THREADS` when it is set.
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let Some(raw) = value else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} = {raw:?} is not a positive integer")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}
