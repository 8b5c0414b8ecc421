//! HTTP session service and `cgs` command line over the simplification
//! engine.

pub mod api;
pub mod cli;
pub mod error;
pub mod store;

pub use api::router;
pub use error::{ApiError, CliError};
pub use store::{AppState, GraphLibrary};
