//! Command-line runner and HTTP service for alforge sessions.

pub mod commands;
pub mod server;
