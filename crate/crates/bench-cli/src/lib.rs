//! Library backing the `bench` binary: experiment specs, drivers, CSV and
//! SVG emission. Kept as a library so the experiment machinery is
//! testable in-process.

pub mod config;
pub mod csvio;
pub mod experiments;
pub mod plot;

use thiserror::Error;

/// Usage errors exit with code 1, runtime aborts with code 2.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 1,
            BenchError::Runtime(_) => 2,
        }
    }
}

/// Worker pool for replicate dispatch; `BENCH_THREADS` caps its size.
pub fn worker_pool() -> Result<rayon::ThreadPool, BenchError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(cap) = std::env::var("BENCH_THREADS") {
        let threads: usize = cap
            .parse()
            .map_err(|_| BenchError::Usage(format!("BENCH_THREADS must be a number, got {cap}")))?;
        builder = builder.num_threads(threads.max(1));
    }
    builder
        .build()
        .map_err(|e| BenchError::Runtime(format!("worker pool: {e}")))
}

/// Column documentation written alongside every experiment's output.
pub const SCHEMA_MD: &str = include_str!("schema.md");

pub fn write_schema(out_dir: &std::path::Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| BenchError::Runtime(format!("creating {}: {e}", out_dir.display())))?;
    std::fs::write(out_dir.join("SCHEMA.md"), SCHEMA_MD)
        .map_err(|e| BenchError::Runtime(format!("writing SCHEMA.md: {e}")))
}
