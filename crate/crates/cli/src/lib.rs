//! Config-driven runner for bulksurf verification campaigns and the
//! bubble simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;
