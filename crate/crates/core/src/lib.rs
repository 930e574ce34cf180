//! Equilibria of one-dimensional particle chains with singular
//! nearest-neighbour repulsion in an external force field.
//!
//! `N` particles live on `[0, L]` behind completely inelastic walls. Each
//! neighbouring pair repels with a force `f(r)` that blows up as `r -> 0`,
//! and every particle feels an external force `F(x)`. The crate
//!
//! - solves for equilibrium configurations by shooting on the second
//!   particle's position ([`fixedpoint`]),
//! - integrates the damped Newtonian dynamics that relaxes onto them
//!   ([`dynamics`]),
//! - measures how the equilibrium gaps approach uniform spacing `L/(N-1)`
//!   as `N` grows, and how large the leading correction is ([`analysis`]).

pub mod analysis;
pub mod chain;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod fixedpoint;
pub mod output;
pub mod potential;

pub use chain::{distance, ChainParams, Configuration};
pub use error::{Error, Result};
pub use field::ForceField;
pub use potential::PairLaw;
