//! Verification toolkit for twisted GL(2) character sums of prime-power conductor.

pub mod cache;
pub mod characters;
pub mod charsums;
pub mod error;
pub mod forms;
pub mod modarith;
pub mod oscillatory;
pub mod pipeline;
pub mod sum;

pub use error::{Error, Result};
