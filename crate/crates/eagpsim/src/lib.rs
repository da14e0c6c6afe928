//! Discrete-event simulator for energy-aware gossip routing in wireless
//! sensor networks.
//!
//! Nodes with finite batteries exchange sensor readings toward a sink over a
//! shared radio. Four routing protocols run on the same kernel, deployments
//! and traffic, so their delivery rate, redundancy, energy and coverage are
//! directly comparable:
//!
//! * `eagp`      energy-aware gossip: strong nodes forward eagerly with an
//!   energy-scaled delay, weak nodes hold packets and advertise them lazily
//!   so neighbors can pull what they missed
//! * `gossip`    plain flooding, one broadcast per novel packet
//! * `gossip_fo` fanout gossip, a few unicast copies per novel packet
//! * `mcfa`      minimum-cost forwarding along a sink-rooted hop-count field
//!
//! Everything is deterministic given a seed: virtual time, per-purpose random
//! streams, and tie-broken event ordering; worker threads never change
//! results.

pub mod config;
pub mod energy;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod output;
pub mod presets;
pub mod protocols;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod time;
pub mod topology;
