//! File formats, parallel execution and the experiment commands on top of
//! `fiberpair-core`.

pub mod commands;
pub mod config;
pub mod exec;
pub mod manifest;
pub mod output;
pub mod records;

pub use fiberpair_core as core;
