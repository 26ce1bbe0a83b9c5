//! Generation expansion planning with time-series aggregation bounds.

pub mod aggregation;
pub mod benders;
pub mod error;
pub mod instance;
pub mod model;
pub mod par;
pub mod solve;
pub mod bounds;
pub mod clustering;
pub mod metrics;

pub use error::{GepError, Result};
