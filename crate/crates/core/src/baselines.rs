//! Comparison planners. Three of them reuse the viewpoint tree with a
//! different gain; the frontier planner flies to the best-scored frontier
//! cell instead.

use crate::error::{Error, Result};
use crate::follower::{is_path_explored, FollowerPath, PlannerKind};
use crate::grid_map::{CellState, GridIndex, PartialMap, ScoutCostField, SensorFootprint};
use crate::scout::planner::{Drive, TreeDriver};
use crate::scout::{
    edge_cost, nearest, ExplorationPlanner, GainModel, Mission, PathTargets, ScoutParams,
    StepOutcome, Termination,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Exploration,
    GoalAware,
    CostAware,
    FrontierCost,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::Exploration,
        BaselineKind::GoalAware,
        BaselineKind::CostAware,
        BaselineKind::FrontierCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Exploration => "exploration",
            BaselineKind::GoalAware => "goal_aware",
            BaselineKind::CostAware => "cost_aware",
            BaselineKind::FrontierCost => "frontier_cost",
        }
    }
}

/// Unknown area inside the footprint.
pub fn gain_exploration(pose: GridIndex, map: &PartialMap, footprint: &SensorFootprint) -> f64 {
    let g = map.geometry();
    let unknown = footprint.cells(g, pose).filter(|&c| map.is_unknown(c)).count();
    unknown as f64 * g.cell_area()
}

/// Unknown area of the goal path inside the footprint.
pub fn gain_goal_aware(
    pose: GridIndex,
    map: &PartialMap,
    footprint: &SensorFootprint,
    goal_path: &FollowerPath,
) -> f64 {
    PathTargets::new(goal_path, map).gain(pose, map, footprint)
}

/// Exploration gain weighted by `c_min / mean observed cost` in view.
pub fn gain_cost_aware(pose: GridIndex, map: &PartialMap, footprint: &SensorFootprint) -> f64 {
    let costs = map.costs();
    let (mut sum, mut n) = (0.0, 0usize);
    for c in footprint.cells(map.geometry(), pose) {
        if let CellState::Observed(level) = map.state(c) {
            sum += costs.cost(level as u32);
            n += 1;
        }
    }
    let weight = if n == 0 {
        1.0
    } else {
        costs.c_min() / (sum / n as f64)
    };
    gain_exploration(pose, map, footprint) * weight
}

/// Frontier cells (unknown, next to an observed traversable cell) scored by
/// `c_min / mean cost of their observed neighbors`, best first.
pub fn frontier_cost_goals(map: &PartialMap) -> Vec<(GridIndex, f64)> {
    let g = map.geometry();
    let costs = map.costs();
    let mut out = Vec::new();
    for cell in g.cells() {
        if !map.is_unknown(cell) {
            continue;
        }
        let (mut sum, mut n) = (0.0, 0usize);
        for nb in g.neighbors(cell) {
            if let CellState::Observed(level) = map.state(nb) {
                sum += costs.cost(level as u32);
                n += 1;
            }
        }
        if n > 0 {
            out.push((cell, costs.c_min() / (sum / n as f64)));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

struct ExplorationGain;

impl GainModel for ExplorationGain {
    fn gain(&self, pose: GridIndex, map: &PartialMap, footprint: &SensorFootprint) -> f64 {
        gain_exploration(pose, map, footprint)
    }

    fn fallback_target(&self, map: &PartialMap, from: GridIndex) -> Option<GridIndex> {
        nearest(map.geometry().cells().filter(|&c| map.is_unknown(c)), from)
    }
}

struct CostAwareGain;

impl GainModel for CostAwareGain {
    fn gain(&self, pose: GridIndex, map: &PartialMap, footprint: &SensorFootprint) -> f64 {
        gain_cost_aware(pose, map, footprint)
    }

    fn fallback_target(&self, map: &PartialMap, from: GridIndex) -> Option<GridIndex> {
        ExplorationGain.fallback_target(map, from)
    }
}

/// Tree planner with the exploration, goal-aware or cost-aware gain.
#[derive(Clone, Debug)]
pub struct TreeBaseline {
    kind: BaselineKind,
    driver: TreeDriver,
    mission: Mission,
    follower: PlannerKind,
    /// Goal-aware only: keep exploring once the goal path is connected.
    continue_after_connection: bool,
    connected: bool,
    finished: Option<Termination>,
}

impl TreeBaseline {
    pub fn new(
        kind: BaselineKind,
        mission: Mission,
        follower: PlannerKind,
        field: ScoutCostField,
        params: ScoutParams,
    ) -> Result<Self> {
        if kind == BaselineKind::FrontierCost {
            return Err(Error::Parameter(
                "the frontier planner is not tree based".into(),
            ));
        }
        follower.validate()?;
        field.geometry().check(mission.goal)?;
        Ok(TreeBaseline {
            kind,
            driver: TreeDriver::new(mission.start, field, params)?,
            mission,
            follower,
            continue_after_connection: false,
            connected: false,
            finished: None,
        })
    }

    /// After the goal path is explored, keep going with the exploration gain
    /// instead of stopping.
    pub fn continue_after_connection(mut self, yes: bool) -> Self {
        self.continue_after_connection = yes;
        self
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    fn finish(&mut self, t: Termination) -> StepOutcome {
        self.finished = Some(t.clone());
        StepOutcome::Terminate(t)
    }

    fn feasible(&self, map: &PartialMap) -> Result<Option<FollowerPath>> {
        self.follower
            .plan_feasible(map, self.mission.start, self.mission.goal)
    }

    fn drive(&mut self, map: &PartialMap, model: &dyn GainModel) -> Result<StepOutcome> {
        match self.driver.drive(map, model)? {
            Drive::Moved(pose) => Ok(StepOutcome::NextWaypoint(pose)),
            Drive::OverBudget => {
                let best = self.feasible(map)?;
                Ok(self.finish(Termination::BudgetExhausted(best)))
            }
            Drive::Exhausted => {
                let best = self.feasible(map)?;
                Ok(self.finish(Termination::Explored(best)))
            }
        }
    }
}

impl ExplorationPlanner for TreeBaseline {
    fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn pose(&self) -> GridIndex {
        self.driver.tree.root_pose()
    }

    fn spent(&self) -> f64 {
        self.driver.spent
    }

    fn step(&mut self, map: &PartialMap) -> Result<StepOutcome> {
        if let Some(t) = &self.finished {
            return Ok(StepOutcome::Terminate(t.clone()));
        }
        if self.kind == BaselineKind::GoalAware && !self.connected {
            let max_level = map.costs().max_level as u32;
            let path = self.follower.plan_optimistic_level(
                map,
                max_level,
                self.mission.start,
                self.mission.goal,
            )?;
            let Some(path) = path else {
                return Ok(self.finish(Termination::Infeasible));
            };
            if !is_path_explored(&path, map) {
                let targets = PathTargets::new(&path, map);
                return self.drive(map, &targets);
            }
            if !self.continue_after_connection {
                return Ok(self.finish(Termination::Feasible(path)));
            }
            self.connected = true;
        }
        if map.explored_count() == map.geometry().cell_count() {
            let best = self.feasible(map)?;
            return Ok(self.finish(Termination::Explored(best)));
        }
        match self.kind {
            BaselineKind::CostAware => self.drive(map, &CostAwareGain),
            _ => self.drive(map, &ExplorationGain),
        }
    }
}

/// Flies toward the frontier cell with the best score per unit of travel
/// cost, at most `max_edge_length` per step.
#[derive(Clone, Debug)]
pub struct FrontierCostPlanner {
    pose: GridIndex,
    field: ScoutCostField,
    mission: Mission,
    follower: PlannerKind,
    max_edge_cells: f64,
    budget: Option<f64>,
    spent: f64,
    finished: Option<Termination>,
}

impl FrontierCostPlanner {
    pub fn new(
        mission: Mission,
        follower: PlannerKind,
        field: ScoutCostField,
        params: ScoutParams,
    ) -> Result<Self> {
        params.validate()?;
        follower.validate()?;
        field.geometry().check(mission.start)?;
        field.geometry().check(mission.goal)?;
        let max_edge_cells = (params.tree.max_edge_length / field.geometry().resolution).max(1.0);
        Ok(FrontierCostPlanner {
            pose: mission.start,
            field,
            mission,
            follower,
            max_edge_cells,
            budget: params.budget,
            spent: 0.0,
            finished: None,
        })
    }

    fn finish(&mut self, t: Termination) -> StepOutcome {
        self.finished = Some(t.clone());
        StepOutcome::Terminate(t)
    }

    /// Frontier maximizing score over straight-line travel cost.
    pub fn select_target(&self, map: &PartialMap) -> Result<Option<GridIndex>> {
        let mut best: Option<(f64, GridIndex)> = None;
        for (cell, score) in frontier_cost_goals(map) {
            let utility = score / edge_cost(self.pose, cell, &self.field)?;
            if best.is_none_or(|(u, _)| utility > u) {
                best = Some((utility, cell));
            }
        }
        Ok(best.map(|(_, c)| c))
    }
}

impl ExplorationPlanner for FrontierCostPlanner {
    fn name(&self) -> &'static str {
        BaselineKind::FrontierCost.name()
    }

    fn pose(&self) -> GridIndex {
        self.pose
    }

    fn spent(&self) -> f64 {
        self.spent
    }

    fn step(&mut self, map: &PartialMap) -> Result<StepOutcome> {
        if let Some(t) = &self.finished {
            return Ok(StepOutcome::Terminate(t.clone()));
        }
        let Some(target) = self.select_target(map)? else {
            let best = self
                .follower
                .plan_feasible(map, self.mission.start, self.mission.goal)?;
            return Ok(self.finish(Termination::Explored(best)));
        };
        let d = self.pose.distance(target);
        let next = if d <= self.max_edge_cells {
            target
        } else {
            let t = self.max_edge_cells / d;
            let lerp = |a: usize, b: usize| (a as f64 + (b as f64 - a as f64) * t).round() as usize;
            GridIndex::new(lerp(self.pose.col, target.col), lerp(self.pose.row, target.row))
        };
        let cost = edge_cost(self.pose, next, &self.field)?;
        if let Some(budget) = self.budget {
            if self.spent + cost > budget {
                let best = self
                    .follower
                    .plan_feasible(map, self.mission.start, self.mission.goal)?;
                return Ok(self.finish(Termination::BudgetExhausted(best)));
            }
        }
        self.spent += cost;
        self.pose = next;
        Ok(StepOutcome::NextWaypoint(next))
    }
}

/// Builds any planner by name. `continue_after_connection` only affects
/// the goal-aware baseline.
pub fn build_baseline(
    kind: BaselineKind,
    mission: Mission,
    follower: PlannerKind,
    field: ScoutCostField,
    params: ScoutParams,
    continue_after_connection: bool,
) -> Result<Box<dyn ExplorationPlanner + Send>> {
    Ok(match kind {
        BaselineKind::FrontierCost => {
            Box::new(FrontierCostPlanner::new(mission, follower, field, params)?)
        }
        _ => Box::new(
            TreeBaseline::new(kind, mission, follower, field, params)?
                .continue_after_connection(continue_after_connection),
        ),
    })
}
