//! Command implementations behind the `histomil` binary, exposed as a
//! library so integration tests can drive the pipeline directly.

pub mod commands;
pub mod config;
pub mod svg;
pub mod synth;
pub mod tables;

use histomil::Error;

/// Documented process exit codes, one family per failure class.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Image { .. } => 3,
        Error::Parse { .. } => 4,
        Error::Argument(_) | Error::Config(_) | Error::Shape(_) | Error::Degenerate(_) => 5,
        Error::Checkpoint(_) => 5,
        Error::NonFinite { .. } => 6,
    }
}

/// Machine-parsable one-line error: `error[<code>]: <message>`.
pub fn error_line(err: &Error) -> String {
    format!("error[{}]: {err}", exit_code(err))
}
