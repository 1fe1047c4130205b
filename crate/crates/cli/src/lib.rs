//! File formats, certificates and the benchmark harness behind the `cpa`
//! command.

pub mod bench;
pub mod format;
pub mod report;
