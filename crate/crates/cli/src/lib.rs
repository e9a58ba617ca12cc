//! Command-line orchestration: dataset generation, validation, training,
//! rollout and evaluation. The binary in `main.rs` is a thin clap wrapper.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

/// Caps the global rayon pool from `ROAMSIM_THREADS` (unset or 0 = one thread per core).
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("ROAMSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("ROAMSIM_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        // Fails only if the pool was already built, in which case the earlier setting stands.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
