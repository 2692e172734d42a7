//! Library side of the `blindsharp` command-line tool.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{cmd_batch, cmd_deblur, cmd_report, cmd_score, ImageMeta};
pub use config::{Crop, RunConfig};
pub use manifest::{Manifest, ManifestEntry};

/// Process exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ERROR: u8 = 1;
    pub const REJECTED: u8 = 2;
}
