//! Multi-robot, multi-actor view planning.
//!
//! Robots fly at a fixed altitude over a 2.5D height map and film actors
//! modeled as polygonal cylinders. A view is scored by rendering it, counting
//! the pixels on each actor face and dividing by the face area; the team
//! objective sums the square root of the accumulated density of every face
//! at every timestep. Robots are planned one at a time, each solving a
//! finite-horizon DAG-MDP given the robots before it.

pub mod coord;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod raster;
pub mod reward;
pub mod scenarios;
pub mod scene;

pub use error::{Error, Result};
