//! Cooperative scout-follower informative path planning.
//!
//! A scout explores an unknown 2D traversability cost field until the
//! minimum-cost path for a follower robot is provably known, or until no
//! follower path can exist. The crate contains the grid world, the follower
//! planners (A* and a sampling-based alternative), the path-aware scouting
//! planner, the comparison baselines, a procedural scene generator and a
//! batch simulator that records per-step metrics.

pub mod baselines;
pub mod cost;
pub mod environments;
pub mod error;
pub mod follower;
pub mod grid_map;
pub mod scout;
pub mod sim;

pub use cost::PathCost;
pub use error::{Error, Result};
pub use grid_map::{
    CellState, CostModel, CostView, ExploredView, GridGeometry, GridIndex, GroundTruthScene,
    OptimisticMap, PartialMap, SensorFootprint,
};
