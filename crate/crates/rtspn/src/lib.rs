//! Feasibility analysis and debt-based scheduling for real-time
//! stochastic processing networks.
//!
//! Jobs arrive at frame boundaries, processing times are exponential,
//! and unfinished work expires with the frame. [`feasibility`] decides
//! whether per-task throughput requirements fit, [`policy`] supplies
//! debt-based schedulers that fulfill every feasible vector,
//! [`simulator`] measures either claim, and [`reduction`] maps the
//! supported two-resource topology onto a single resource.

pub mod cli;
pub mod feasibility;
pub mod idle;
pub mod model;
pub mod policy;
pub mod reduction;
pub mod rng;
pub mod simplex;
pub mod simulator;
pub mod stats;
