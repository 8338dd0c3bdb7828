//! A decentralized team of agents that explore a weighted world graph,
//! share what they see over a topic-based message bus, split up goals with a
//! ring-circulating auction, and play a simplified two-team contest inside a
//! bundled simulator.
//!
//! Module map:
//!
//! - [`worldgraph`]: graph model, incremental all-pairs shortest paths and the
//!   breadth-first searches used for navigation.
//! - [`msgbus`]: publish/subscribe bus with an in-process and a TCP transport.
//! - [`auction`]: ring auction assigning `n` agents to `n` distinct goals.
//! - [`agentcore`]: beliefs, percept sharing and the per-step control loop.
//! - [`marssim`]: the match simulator, scoring and replay files.

pub mod agentcore;
pub mod auction;
mod ids;
pub mod marssim;
pub mod msgbus;
pub mod worldgraph;

pub use ids::{AgentId, IdError, TeamId};
