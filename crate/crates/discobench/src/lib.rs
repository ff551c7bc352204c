//! Operator surface for the discovery benchmark: CLI, configuration, the
//! JSON-lines stdio protocol, the HTTP session service and result files.

pub mod cli;
pub mod client;
pub mod config;
pub mod http;
pub mod records;
pub mod repl;
pub mod session;
pub mod stdio;
pub mod subprocess;
pub mod verbalizer;
pub mod wire;
