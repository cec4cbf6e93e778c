//! Command-line harness for the `efrk` solver: configuration files, output
//! formats and the canned experiments behind the `efrk` binary.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod io;

use std::fmt;

/// A run stopped on a non-finite state. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalAbort {
    pub t: f64,
    pub step: usize,
    pub stage: usize,
}

impl fmt::Display for NumericalAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "numerical abort: non-finite state in stage {} of step {} at t = {}",
            self.stage, self.step, self.t
        )
    }
}

impl std::error::Error for NumericalAbort {}

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_ABORT: u8 = 2;

/// Exit status for a failed command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.downcast_ref::<NumericalAbort>().is_some()) {
        EXIT_ABORT
    } else {
        EXIT_USAGE
    }
}

/// Sizes the global worker pool from `EFRK_THREADS` when set.
pub fn init_thread_pool() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("EFRK_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("EFRK_THREADS must be a positive integer, got {v:?}"))?;
        anyhow::ensure!(n > 0, "EFRK_THREADS must be a positive integer, got {v:?}");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
