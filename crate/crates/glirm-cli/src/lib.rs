//! Library surface of the `glirm` CLI: run configuration and task
//! implementations, kept importable for integration tests.

pub mod config;
pub mod tasks;
