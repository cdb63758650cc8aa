//! Two-ball billiard that counts collisions and reads digits of π.
#![allow(non_snake_case)]

pub mod closed_form;
pub mod core_dynamics;
pub mod field;
pub mod par;
pub mod base_repr;
pub mod cli_io;
pub mod geometry_analysis;
pub mod invariants;
