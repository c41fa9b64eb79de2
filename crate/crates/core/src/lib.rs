#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod continuation;
pub mod error;
pub mod lattice;
pub mod model;
pub mod oracle;
pub mod secular;
pub mod shallow;
pub mod spectrum;
