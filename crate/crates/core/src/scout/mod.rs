//! Path-aware scouting: a receding-horizon viewpoint tree whose gains are
//! driven by the follower's optimistic path.

mod gain;
pub(crate) mod planner;
mod tree;

pub use gain::{edge_cost, information_gain, GainModel, PathTargets};
pub(crate) use gain::nearest;
pub use planner::PathAwarePlanner;
pub use tree::{Accumulated, ScoutNode, ScoutTree, TreeParams};

use crate::error::{Error, Result};
use crate::follower::FollowerPath;
use crate::grid_map::{GridIndex, PartialMap, SensorFootprint};

/// Which fill cost completes the optimistic map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplorationMode {
    /// Unknown space at the highest follower cost: the optimistic path
    /// hugs explored space and is explored quickly.
    FindFeasible,
    /// Unknown space at the lowest follower cost: the optimistic path is a
    /// lower bound on the optimum.
    FindOptimal,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    /// No follower path exists even through unknown space.
    Infeasible,
    /// The carried path is fully explored and optimal.
    Optimal(FollowerPath),
    /// The scout budget would be exceeded; best feasible path so far.
    BudgetExhausted(Option<FollowerPath>),
    /// A feasible path was found and the planner stops there.
    Feasible(FollowerPath),
    /// Nothing left to explore; best feasible path so far.
    Explored(Option<FollowerPath>),
}

impl Termination {
    /// Short label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Infeasible => "infeasible",
            Termination::Optimal(_) => "optimal",
            Termination::BudgetExhausted(_) => "budget_exhausted",
            Termination::Feasible(_) => "feasible",
            Termination::Explored(_) => "explored",
        }
    }

    pub fn path(&self) -> Option<&FollowerPath> {
        match self {
            Termination::Infeasible => None,
            Termination::Optimal(p) | Termination::Feasible(p) => Some(p),
            Termination::BudgetExhausted(p) | Termination::Explored(p) => p.as_ref(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    NextWaypoint(GridIndex),
    Terminate(Termination),
}

/// Start and goal of the follower.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mission {
    pub start: GridIndex,
    pub goal: GridIndex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoutParams {
    pub tree: TreeParams,
    /// Scout cost budget; `None` is unlimited.
    pub budget: Option<f64>,
    pub seed: u64,
}

impl ScoutParams {
    pub fn new(footprint: SensorFootprint) -> Self {
        ScoutParams {
            tree: TreeParams {
                samples_per_step: 20,
                max_edge_length: 4.0 * footprint.half_extent,
                retry_cap: 10,
                footprint,
            },
            budget: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        if let Some(b) = self.budget {
            if b.is_nan() || b < 0.0 {
                return Err(Error::Parameter(format!("budget must be >= 0, got {b}")));
            }
        }
        Ok(())
    }
}

/// A scouting strategy driven one executed segment at a time.
pub trait ExplorationPlanner {
    fn name(&self) -> &'static str;

    /// Current scout pose.
    fn pose(&self) -> GridIndex;

    /// Scout cost spent on executed segments.
    fn spent(&self) -> f64;

    /// Whether `Optimal` terminations are certified by the planner itself.
    fn certifies_optimality(&self) -> bool {
        false
    }

    /// Decides the next segment from the current map. Once a termination is
    /// returned, further calls return it again.
    fn step(&mut self, map: &PartialMap) -> Result<StepOutcome>;
}
