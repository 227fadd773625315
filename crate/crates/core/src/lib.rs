//! Query interestingness over hierarchical multidimensional data.
//!
//! The crate evaluates aggregate cube queries over a star-schema fact table
//! and scores a query's novelty, relevance, peculiarity and surprise with
//! respect to a session context (history, beliefs, goals, expectations).

pub mod bitset;
pub mod context;
pub mod engine;
pub mod error;
pub mod exec;
pub mod harness;
pub mod mdm;
pub mod novelty;
pub mod peculiarity;
pub mod qlang;
pub mod relevance;
pub mod surprise;

pub use error::{Error, Result, SyntaxError};
pub use exec::Exec;
