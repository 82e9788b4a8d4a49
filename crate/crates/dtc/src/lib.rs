//! dtc compiles symbolic controller lookup tables into exact decision
//! trees and emits them as DOT graphs, C code, and quantizer tables.

pub mod cli;
pub mod determinize;
pub mod error;
pub mod export;
pub mod ingest;
pub mod learner;
pub mod model;
pub mod predicates;
pub mod verify;

pub use error::{Error, Result};
