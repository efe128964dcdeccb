//! File formats, reports and the command-line front end for
//! [`coneguard_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use coneguard_core as core;

pub mod cli;
pub mod problem_file;
pub mod report;
pub mod trace_file;
