//! Resource allocation for synchronous multi-channel, multi-user small-cell
//! networks.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation:
//!
//! - [`channel`]: topology drops, indoor pathloss models and log-normal
//!   shadowing, producing a [`ChannelRealization`].
//! - [`signaling`]: the two-power-level channel-gain exchange, with a
//!   quantization table, encoder, ratio decoder and an erasure model.
//! - [`dual`]: the time-sharing relaxation solved through its Lagrange dual
//!   by projected subgradient descent, plus primal recovery.
//! - [`soa`]: greedy marginal-rate channel assignment followed by equal power
//!   (or water-filling).
//! - [`iwfa`] and [`oracle`]: the iterative water-filling baseline, SINR
//!   scoring of concurrent transmissions and an exhaustive orthogonal oracle.
//! - [`distributed`]: the slot loop where every link schedules from its own
//!   decoded view and colliding links back off at random.
//!
//! IO, timing, parallel trial execution and the command line live in the
//! `smallcell-sim` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod distributed;
pub mod dual;
mod error;
mod grid;
pub mod iwfa;
pub mod oracle;
mod problem;
pub mod signaling;
pub mod soa;
pub mod waterfill;

pub use channel::{ChannelRealization, ScenarioConfig, ScenarioId};
pub use error::{Error, Result};
pub use grid::Grid;
pub use problem::{Allocation, TsProblem};
pub use waterfill::water_fill;

