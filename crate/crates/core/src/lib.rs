//! Energy-aware trajectory planning for a rotary-wing UAV serving ground nodes.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the propulsion
//! power model, the line-of-sight channel model, a small barrier-method convex
//! solver, the visiting-order heuristic, the fly-hover-communicate planner, the
//! path-discretized joint planner and an independent evaluator. File formats,
//! the command line and parallel sweeps live in the `uav-energy` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod comms;
pub mod error;
pub mod eval;
pub mod fhc;
pub mod geometry;
pub mod joint;
pub mod kernel;
pub mod linalg;
pub mod rotor;
pub mod scenario;
pub mod search;
pub mod trajectory;
pub mod tsp;

pub use comms::{ChannelParams, GroundNode};
pub use error::{Error, Result};
pub use geometry::Point2;
pub use rotor::{RotorParams, RotorRawParams};
pub use scenario::{Scenario, SolverSettings};
pub use trajectory::DiscretizedTrajectory;
