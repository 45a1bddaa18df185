//! Command line, benchmark harness and HTTP preview service for `nimbus`.

pub mod commands;
pub mod output;
pub mod service;
