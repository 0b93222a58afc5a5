//! Files and command line around `acpl-core`: TOML run configurations, Γ
//! files, binary checkpoints, JSON/CSV/OBJ artifacts and the `acpl` binary.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod fsutil;
pub mod gamma_file;

pub use checkpoint::Checkpoint;
pub use config::{load_config, parse_config, RunConfig};
pub use error::{IoError, IoResult};
