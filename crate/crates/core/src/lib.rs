//! Exact analysis and simulation of multi-channel CSMA random-access
//! networks.
//!
//! A [`MultiChannelNetwork`] gives per-channel conflict graphs and activation
//! rates. [`StateSpace`] enumerates its feasible activity states, and the
//! [`analysis`] module derives throughput, fairness, communication heights,
//! starvation indices, hitting times and mixing bounds from it.

pub mod analysis;
pub mod conflict_graph;
pub mod error;
pub mod report;
pub mod simulator;
pub mod state_space;
pub mod verify;
pub mod virtual_network;

pub use conflict_graph::{parse_network, ConflictGraph, MultiChannelNetwork, RateModel};
pub use error::{Error, Result};
pub use state_space::{ActivityState, StateSpace};
