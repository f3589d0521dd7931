//! Dataset files, run manifests, the experiment harness and the CLI built on
//! `lipreg-core`.

pub mod cli;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod report;
