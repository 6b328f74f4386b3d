//! Exact winning and round-reach probabilities for tournaments with a
//! round-robin group stage followed by a single-elimination bracket.
//!
//! Group results are enumerated exhaustively per group; the knockout stage
//! propagates joint distributions over the teams holding each bracket
//! block's two slots, so dependencies between teams from the same groups
//! are kept exactly.

pub mod bracket;
pub mod calibrate;
pub mod data_io;
pub mod error;
pub mod group_stage;
pub mod match_model;
pub mod simulator;

pub use error::{Error, Result};
