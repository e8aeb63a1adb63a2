//! Config loading, presets and command bodies behind the `specquant` binary.

pub mod commands;
pub mod config;
pub mod presets;
