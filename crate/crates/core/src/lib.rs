//! Finite-n constructions of the multiplicative coalescent and its Lévy-type
//! scaling limits.
//!
//! Blocks of mass `x` and `y` merge at rate `x * y`. This crate builds the
//! same process in four ways from explicit randomness:
//!
//! * [`direct`]: event-driven Markov chain simulation (the reference oracle),
//! * [`bfw`]: simultaneous breadth-first walks `Z^{x,q}` driven by one family
//!   of exponential clocks for every `q` at once,
//! * [`uribe`]: Uribe's half-line diagram and the partition-valued
//!   coalescent read off from it,
//! * [`limit`]: the reflected Lévy-type processes `W^{κ,t,c}` whose excursion
//!   lengths give the eternal coalescent marginals.
//!
//! [`scaling`] connects the finite walks to the limit processes.
//!
//! The crate is `no_std` (with `alloc`). Everything that needs IO, threads or
//! statistical distributions lives in the companion `mcoal` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bfw;
pub mod clocks;
pub mod direct;
mod error;
mod fenwick;
pub mod lengths;
pub mod limit;
pub mod mass;
pub mod partition;
pub mod path;
pub mod rng;
pub mod scaling;
pub mod uribe;

pub use clocks::{draw_clocks, ClockFamily};
pub use direct::{simulate_direct, MergeEvent, PartitionTrajectory};
pub use error::{Error, Result};
pub use lengths::OrderedLengths;
pub use mass::{compensated_sum, moments, MassVector, MomentStats};
pub use partition::Partition;
pub use rng::{stream_rng, StreamRng};
