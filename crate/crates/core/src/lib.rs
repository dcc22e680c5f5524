//! Online learning under gradual distribution shift with a self-adaptive
//! teacher/student pair and margin-based label queries.

pub mod environments;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod learners;
pub mod losses;
pub mod metrics;

pub use error::{Error, Result};
