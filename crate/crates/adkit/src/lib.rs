//! Host-side companion to [`adkit_core`]: sample-file formats, the timing
//! harness and the `adkit` command-line tool.

pub mod bench;
pub mod formats;
