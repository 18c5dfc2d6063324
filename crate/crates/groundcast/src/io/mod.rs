//! On-disk formats: ASCII PCD point clouds and PGM occupancy images.
//!
//! Readers are strict about structure (they fail with the offending line)
//! but tolerant about content the pipeline can survive: cloud rows with
//! non-finite coordinates are dropped and counted rather than fatal.

mod pcd;
mod pgm;

pub use pcd::{read_pcd, write_pcd, PcdLoad};
pub use pgm::{read_pgm_mask, write_pgm_grid, write_pgm_mask};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl FormatError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }
}
