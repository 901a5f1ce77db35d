//! Oracle backends, file formats and the `symq` command line.
//!
//! The algorithms live in `symq-core`; this crate adds what needs `std`:
//! a cached, thread-safe [`ValueOracle`] over tables, synthetic games and
//! subprocess adapters, the JSON file formats, and the CLI commands.

pub mod cli;
pub mod external;
pub mod formats;
pub mod oracle;

pub use external::{Handshake, WireClient};
pub use oracle::{Backend, CachePolicy, ValueOracle};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] symq_core::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
