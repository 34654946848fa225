//! Active search over feature vectors with a dot-product similarity.
//!
//! Three engines share one query loop: propose an unlabeled point, receive its
//! binary label, update.
//!
//! - [`las`]: the linearized engine. Keeps an `r x r` inverse up to date with
//!   rank-one corrections so each iteration costs `O(nr + r^2)`.
//! - [`asg`]: the dense graph reference. Builds the full `n x n` similarity
//!   graph and solves the harmonic system directly. Used as an oracle.
//! - [`wnas`]: the weighted-neighbor engine, a Nadaraya-Watson style score
//!   with `O(nr)` updates.
//!
//! Points are stored column-major: `X` is `r x n`, one column per point.

pub mod asg;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod features;
pub mod las;
pub mod params;
pub mod select;
pub mod synthetic;
pub mod wnas;

pub use dataset::Dataset;
pub use engine::{build as build_engine, ActiveSearch, EngineKind, Scores};
pub use error::{Error, Result};
pub use params::{HyperParams, LabelState};
