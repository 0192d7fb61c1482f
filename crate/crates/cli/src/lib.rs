//! Library surface of the command-line laboratory: config parsing, report
//! and trace writers, reference scenarios, commands, and the acceptance
//! suite. The binary in `main.rs` is a thin clap dispatcher over this.

// Guards spelled `!(x > y)` are deliberate: the negation is true for NaN, so
// non-finite inputs land in the rejection branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod report;
pub mod scenarios;
pub mod trace;
