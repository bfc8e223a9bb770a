//! Cubic Dirac operator families for compact Lie groups and energy-truncated loop groups.
#![allow(clippy::needless_range_loop)]

pub mod affine;
pub mod clifford;
pub mod diracfam;
pub mod exact;
pub mod linalg;
pub mod liegroup;
pub mod loopfock;
