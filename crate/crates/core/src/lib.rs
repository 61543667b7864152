//! Forbidden-state supervisory control for safe Petri nets.
//!
//! The pipeline explores the reachability graph, splits it into authorized
//! and forbidden states, finds a small set of over-states separating the
//! two, merges the resulting constraints and realizes them as monitor
//! places, then checks the closed loop.

pub mod constraint;
pub mod dot;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod merge;
pub mod monitor;
pub mod net;
pub mod overstate;
pub mod partition;
pub mod pipeline;
pub mod placeset;

pub use constraint::Constraint;
pub use error::{Error, Result};
pub use monitor::ControlledNet;
pub use net::{Marking, PetriNet, ReachabilityGraph};
pub use partition::{ForbiddenSpec, Partition};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineReport};
pub use placeset::PlaceSet;
