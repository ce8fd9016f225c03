//! Access-control pipeline for 5G standalone cells and a deterministic
//! discrete-event engine that drives it.
//!
//! The crate is `no_std` (with `alloc`) so the decision functions can be
//! embedded anywhere; file formats and the command-line front end live in
//! the `nracc` crate.

#![no_std]

extern crate alloc;

pub mod admission;
pub mod model;
pub mod preventive;
pub mod random_access;
pub mod time;
pub mod scenario;
pub mod engine;
