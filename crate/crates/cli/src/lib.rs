//! Library half of the `nrsfm` binary: bundle I/O, plots and commands.

pub mod bundle;
pub mod commands;
pub mod svg;
