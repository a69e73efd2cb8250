//! Node-level error labeling and scoring for generated SQL.
//!
//! The crate is `no_std` (with `alloc`): parsing, labeling, featurization and
//! model training are pure computations. File formats and the command-line
//! front end live in the `sqlnode` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ast;
pub mod features;
pub mod gbdt;
pub mod label;
pub mod schema;
