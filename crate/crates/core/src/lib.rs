//! Throughput model and transmission control for ground users that reach a
//! satellite either directly over CSMA/CA or through a HAP relay reserved
//! in a negotiation period.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csma;
pub mod decision;
pub mod defaults;
pub mod geometry;
pub mod optimizer;
pub mod output;
pub mod phy;
pub mod reservation;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod throughput;
