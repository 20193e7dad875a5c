//! Decentralized optimization over undirected networks with per-agent
//! adaptive stepsizes.
//!
//! * [`graph`]: topologies and Metropolis mixing matrices.
//! * [`objectives`]: local quadratic, logistic and ridge objectives.
//! * [`stepsize`]: per-agent stepsize rules.
//! * [`algorithms`]: the decentralized and centralized engines.
//! * [`theory`]: stepsize ceilings and bound checks.
//! * [`datasets`]: LIBSVM loading, standardization and partitioning.
//! * [`harness`]: experiment configs, grid search and reproduction drivers.

pub mod algorithms;
pub mod datasets;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod rng;
pub mod stepsize;
pub mod theory;
