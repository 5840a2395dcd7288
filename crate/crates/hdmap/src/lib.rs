//! Map files, reports and the `hdmap` command line on top of `hdmap-core`.

pub mod cli;
pub mod error;
pub mod mapfile;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
pub use mapfile::{read_map, write_map, MapContent, MapFile};
