//! Labeling sessions over HTTP.
//!
//! A session wraps one engine on a registered dataset. Clients fetch the
//! current candidate, post its label and read progress metrics. Every
//! creation and label is appended to a JSON-lines log before it takes
//! effect, and replaying the log on startup rebuilds the same sessions.

pub mod api;
pub mod error;
pub mod model;
pub mod session;
pub mod state;
pub mod wal;

pub use api::router;
pub use error::{ApiError, ErrorBody, ServiceError};
pub use state::AppState;
