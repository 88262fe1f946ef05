//! Selfish mining with two independent attackers on a proof-of-work chain.
//!
//! Three miners share the global hashrate: two selfish pools (Alice and Bob)
//! that each keep a private chain, and one aggregated honest pool (Henry).
//! The crate offers several routes to the long-run revenue of each miner:
//!
//! * [`analytic`] evaluates the published closed forms for private-chain
//!   caps of 2 and 4,
//! * [`markov`] enumerates the finite state machine for any cap and solves
//!   for its stationary distribution,
//! * [`sim`] is a block-level Monte Carlo simulator.
//!
//! [`markov`] and [`sim`] drive the same rule engine ([`engine`]), so the
//! generated chain is the exact abstraction of the simulator. On top of
//! those, [`threshold`] searches for profitable hashrates and [`transient`]
//! models revenue across difficulty-adjustment epochs.

pub mod analytic;
pub mod cli;
pub mod engine;
pub mod error;
pub mod markov;
pub mod model;
pub mod sim;
pub mod threshold;
pub mod transient;

pub use error::{Error, Result};
pub use model::{HashrateProfile, MinerId, ProtocolParams, Scenario, TieBreakParams};
