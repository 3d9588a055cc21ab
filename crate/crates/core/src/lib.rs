//! Maximal and minimal profiles, transport rays and transport densities for
//! two-layer sandpile equilibria on polygonal domains.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod eikonal;
pub mod error;
pub mod fixtures;
pub mod gauge;
pub mod geometry;
pub mod grid;
pub mod transport;
pub mod verify;

#[cfg(test)]
mod testkit;

pub use error::{Error, Result};
pub use gauge::{Gauge, GaugeKind, Vec2};
