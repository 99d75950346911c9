//! Undecided state dynamics with a stubborn preferred opinion.
//!
//! Agents hold Opinion 1, Opinion 2, or are undecided. A random scheduler
//! picks an ordered (initiator, responder) pair and only the initiator
//! updates. An Opinion-1 initiator meeting Opinion 2 keeps its opinion with
//! probability `p` (the stubbornness) and becomes undecided otherwise.
//!
//! The crate is `no_std` (it needs `alloc`). It contains the protocol on the
//! counting abstraction, exact one-step drift formulas for the potentials
//! used to analyse the process, an accelerated single-trial engine, an exact
//! absorbing-chain solver for small populations and the labeled monotone
//! coupling between two runs.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod coupling;
pub mod engine;
mod error;
pub mod oracle;
pub mod protocol;
pub mod step;

pub use error::{Error, Result};
pub use protocol::{transition, AgentState, Configuration, Opinion, ProtocolParams};
