//! Command-line front end for the transport barrier solvers: instance file
//! I/O, seeded generation, solve/validate/bench subcommands, CSV traces, and
//! machine-readable result reports.

pub mod app;
pub mod bench;
pub mod generate;
pub mod report;
pub mod schema;
pub mod validate;
