//! File formats, key files, benchmark harness and the `circmark` command line
//! tool, on top of [`circmark_core`].

pub mod bench;
pub mod io;
pub mod jpeg;
pub mod keyfile;

use std::path::PathBuf;

pub use circmark_core as core;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] circmark_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("key file, line {line}: {message}")]
    Key { line: usize, message: String },
    #[error("bench config: {0}")]
    Config(String),
    #[error("no usable images: {0}")]
    NoImages(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
