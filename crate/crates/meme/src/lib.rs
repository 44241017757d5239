//! File formats, configuration and the `meme` command line around
//! [`meme_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod model_file;
pub mod occupancy;
pub mod traces;

pub use cli::run_command;
pub use error::{CliError, Result};
pub use model_file::{load_model, save_model};
pub use traces::{load_traces, save_traces, TraceFormat};
