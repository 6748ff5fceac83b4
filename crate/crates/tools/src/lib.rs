//! File formats, verification suites and data exporters for `plcircle-core`.

pub mod format;
pub mod harness;

pub use format::{parse_rational, FormatError, MapDoc};
pub use harness::{SuiteReport, Verdict, WordSpec};
