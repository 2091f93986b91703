//! Command-line driver, reports and benchmark harness for `esst-core`.

use std::path::PathBuf;

use thiserror::Error;

pub mod bench;
pub mod cli;
pub mod kv;
pub mod report;
pub mod trace;

pub use bench::{bench_harness, BenchConfig, BenchTable};
pub use cli::{run_cli, RunConfig};
pub use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{source}", path.display())]
    Frontend { path: PathBuf, source: esst_core::frontend::FrontendError },
    #[error("expected-verdict file, line {line}: cannot parse `{text}`")]
    Expected { line: usize, text: String },
    #[error("writing output: {0}")]
    Stdout(std::io::Error),
}
