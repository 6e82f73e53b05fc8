//! Presentation layer: command line and JSON-over-HTTP.

pub mod cli;
pub mod http;
