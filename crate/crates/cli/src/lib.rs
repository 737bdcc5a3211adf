//! Library side of the `dp` command: problem files, output formats and the
//! subcommands themselves.

pub mod commands;
pub mod json;
pub mod problem_file;
pub mod render;

pub use commands::{run, Cli, CliError, Command, ExitCode};
pub use problem_file::{InputError, ProblemFile};
