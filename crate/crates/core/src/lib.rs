//! Almost periodic discrete multiple sets on finite windows.
//!
//! A configuration is a finite multiset of points in a cube or ball window.
//! The bijection-infimum (bottleneck) distance is computed exactly by
//! threshold matching, with a boundary collar standing in for the parts of an
//! infinite set that a window cannot see. The almost-period scanner and the
//! counting statistics are built on it, and the verification suites in
//! [`harness`] check how they fit together.

pub mod density;
pub mod error;
pub mod generators;
pub mod harness;
pub mod io;
pub mod matching;
pub mod measure;
pub mod metric;
pub mod pointset;
pub mod scanner;
pub mod spatial;

pub use error::{Error, Result};
