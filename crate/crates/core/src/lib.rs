pub mod config;
pub mod cutoff;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod localization;
pub mod morse;
pub mod pipeline;
pub mod plot;
pub mod polyhedron;
pub mod potential;
pub mod report;
pub mod skeleton;
pub mod snf;
pub mod triangulation;
pub mod tropical;
pub mod verify;

pub use error::TropskelError;
pub use pipeline::{run, Subcommand};
