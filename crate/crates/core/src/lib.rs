//! Joint repair of functional dependencies and data.
//!
//! Given an instance and a set of FDs it violates, the engine relaxes FDs by
//! appending attributes to their left-hand sides and edits cells, trading one
//! against the other through a budget `τ` on the number of cell changes.

pub mod attrs;
pub mod conflict;
pub mod error;
pub mod eval;
pub mod fd;
pub mod multi;
pub mod relation;
pub mod repair;
pub mod report;
pub mod search;

pub use attrs::{AttrId, AttrSet};
pub use error::{Error, Result};
