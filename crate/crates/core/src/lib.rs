//! Simulator and analysis library for the three-user Gaussian interference
//! channel with rate-limited backhaul cooperation.
//!
//! The crate covers the monomial-constellation physical layer ([`lattice`]),
//! observation detection ([`detection`]), the receiver-side and
//! transmitter-side cooperation-alignment protocols ([`rx`], [`tx`]) with
//! backhaul accounting ([`backhaul`]), tradeoff and converse-bound evaluators
//! ([`tradeoff`]) and the experiment harness ([`harness`]).

pub mod error;
pub mod backhaul;
pub mod detection;
pub mod harness;
pub mod lattice;
pub mod rng;
pub mod rx;
pub mod tradeoff;
pub mod tx;

pub use error::{Error, Result};
