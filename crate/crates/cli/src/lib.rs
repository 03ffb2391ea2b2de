//! File formats, benchmark campaigns and derived statistics for the decoder;
//! the `blossom` binary wraps these behind subcommands.

pub mod bench;
pub mod formats;
pub mod stats;
