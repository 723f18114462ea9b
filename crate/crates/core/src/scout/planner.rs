use super::gain::{edge_cost, GainModel, PathTargets};
use super::tree::ScoutTree;
use super::{ExplorationMode, ExplorationPlanner, Mission, ScoutParams, StepOutcome, Termination};
use crate::error::{Error, Result};
use crate::follower::{is_path_explored, FollowerPath, PlannerKind};
use crate::grid_map::{GridIndex, PartialMap, ScoutCostField};

pub(crate) enum Drive {
    Moved(GridIndex),
    OverBudget,
    /// The gain model has nothing left to observe.
    Exhausted,
}

/// Viewpoint tree plus scout bookkeeping shared by all tree planners.
#[derive(Clone, Debug)]
pub(crate) struct TreeDriver {
    pub tree: ScoutTree,
    pub field: ScoutCostField,
    pub params: ScoutParams,
    pub spent: f64,
}

impl TreeDriver {
    pub fn new(start: GridIndex, field: ScoutCostField, params: ScoutParams) -> Result<Self> {
        params.validate()?;
        field.geometry().check(start)?;
        Ok(TreeDriver {
            tree: ScoutTree::new(start, params.seed),
            field,
            params,
            spent: 0.0,
        })
    }

    pub fn drive(&mut self, map: &PartialMap, model: &dyn GainModel) -> Result<Drive> {
        let Some(node) = self
            .tree
            .select_segment(map, model, &self.field, &self.params.tree)
        else {
            return Ok(Drive::Exhausted);
        };
        let pose = self.tree.nodes()[node].pose;
        let cost = edge_cost(self.tree.root_pose(), pose, &self.field)?;
        if let Some(budget) = self.params.budget {
            if self.spent + cost > budget {
                return Ok(Drive::OverBudget);
            }
        }
        self.tree.advance_to(node, &self.field)?;
        self.spent += cost;
        Ok(Drive::Moved(pose))
    }
}

/// Scout planner that explores only what the follower's optimistic path
/// needs: first until a feasible path is proven, then until the lower
/// bound is proven tight.
#[derive(Clone, Debug)]
pub struct PathAwarePlanner {
    driver: TreeDriver,
    mission: Mission,
    follower: PlannerKind,
    mode: ExplorationMode,
    mode_switches: usize,
    finished: Option<Termination>,
}

impl PathAwarePlanner {
    pub fn new(
        mission: Mission,
        follower: PlannerKind,
        field: ScoutCostField,
        params: ScoutParams,
    ) -> Result<Self> {
        follower.validate()?;
        field.geometry().check(mission.goal)?;
        Ok(PathAwarePlanner {
            driver: TreeDriver::new(mission.start, field, params)?,
            mission,
            follower,
            mode: ExplorationMode::FindFeasible,
            mode_switches: 0,
            finished: None,
        })
    }

    pub fn mode(&self) -> ExplorationMode {
        self.mode
    }

    pub fn mode_switches(&self) -> usize {
        self.mode_switches
    }

    pub fn tree(&self) -> &ScoutTree {
        &self.driver.tree
    }

    fn fill_level(&self, map: &PartialMap) -> u32 {
        let costs = map.costs();
        match self.mode {
            ExplorationMode::FindFeasible => costs.max_level as u32,
            ExplorationMode::FindOptimal => costs.min_level as u32,
        }
    }

    fn optimistic_path(&self, map: &PartialMap) -> Result<Option<FollowerPath>> {
        self.follower.plan_optimistic_level(
            map,
            self.fill_level(map),
            self.mission.start,
            self.mission.goal,
        )
    }

    fn finish(&mut self, t: Termination) -> StepOutcome {
        self.finished = Some(t.clone());
        StepOutcome::Terminate(t)
    }
}

impl ExplorationPlanner for PathAwarePlanner {
    fn name(&self) -> &'static str {
        "path_aware"
    }

    fn pose(&self) -> GridIndex {
        self.driver.tree.root_pose()
    }

    fn spent(&self) -> f64 {
        self.driver.spent
    }

    fn certifies_optimality(&self) -> bool {
        true
    }

    fn step(&mut self, map: &PartialMap) -> Result<StepOutcome> {
        if let Some(t) = &self.finished {
            return Ok(StepOutcome::Terminate(t.clone()));
        }
        loop {
            let Some(path) = self.optimistic_path(map)? else {
                return Ok(self.finish(Termination::Infeasible));
            };
            if is_path_explored(&path, map) {
                match self.mode {
                    ExplorationMode::FindFeasible => {
                        self.mode = ExplorationMode::FindOptimal;
                        self.mode_switches += 1;
                        continue;
                    }
                    ExplorationMode::FindOptimal => {
                        return Ok(self.finish(Termination::Optimal(path)));
                    }
                }
            }
            let targets = PathTargets::new(&path, map);
            return match self.driver.drive(map, &targets)? {
                Drive::Moved(pose) => Ok(StepOutcome::NextWaypoint(pose)),
                Drive::OverBudget => {
                    let best = self
                        .follower
                        .plan_feasible(map, self.mission.start, self.mission.goal)?;
                    Ok(self.finish(Termination::BudgetExhausted(best)))
                }
                Drive::Exhausted => Err(Error::Contract(format!(
                    "optimistic path has {} unresolved cells but no viewpoint reaches them",
                    targets.cells().len()
                ))),
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::follower::dijkstra;
    use crate::grid_map::{CostView, GroundTruthScene, SensorFootprint};

    fn g(col: usize, row: usize) -> GridIndex {
        GridIndex::new(col, row)
    }

    fn params(seed: u64) -> ScoutParams {
        let mut p = ScoutParams::new(SensorFootprint::new(2.0).unwrap());
        p.seed = seed;
        p
    }

    fn run(scene: &GroundTruthScene, seed: u64) -> (Termination, PathAwarePlanner, PartialMap) {
        let fp = SensorFootprint::new(2.0).unwrap();
        let mission = Mission {
            start: scene.start(),
            goal: scene.goal(),
        };
        let mut planner =
            PathAwarePlanner::new(mission, PlannerKind::GridAStar, scene.scout_field(), params(seed))
                .unwrap();
        let mut map = PartialMap::new(scene);
        map.observe(scene, scene.start(), &fp).unwrap();
        for _ in 0..10_000 {
            match planner.step(&map).unwrap() {
                StepOutcome::NextWaypoint(p) => {
                    map.observe(scene, p, &fp).unwrap();
                }
                StepOutcome::Terminate(t) => return (t, planner, map),
            }
        }
        panic!("planner did not terminate");
    }

    #[test]
    fn observed_scene_cascades_to_optimal_without_motion() {
        let scene = GroundTruthScene::uniform(12, 8, 0.5, 1.0, g(1, 1), g(10, 6)).unwrap();
        let mut map = PartialMap::new(&scene);
        map.observe(&scene, g(6, 4), &SensorFootprint::new(10.0).unwrap())
            .unwrap();
        let mission = Mission {
            start: scene.start(),
            goal: scene.goal(),
        };
        let mut planner =
            PathAwarePlanner::new(mission, PlannerKind::GridAStar, scene.scout_field(), params(0))
                .unwrap();
        let out = planner.step(&map).unwrap();
        let StepOutcome::Terminate(Termination::Optimal(path)) = out else {
            panic!("unexpected {out:?}");
        };
        assert_eq!(planner.mode_switches(), 1);
        assert_eq!(planner.spent(), 0.0);
        assert_eq!(planner.pose(), g(1, 1));
        let (_, exact) = dijkstra(&scene, g(1, 1), g(10, 6)).unwrap();
        assert_eq!(path.cost, exact);
        // repeated calls keep returning the same termination
        assert_eq!(planner.step(&map).unwrap(), StepOutcome::Terminate(Termination::Optimal(path)));
    }

    #[test]
    fn closed_box_is_infeasible() {
        let mut scene = GroundTruthScene::uniform(24, 16, 0.5, 1.0, g(2, 2), g(18, 10)).unwrap();
        for c in 15..=21 {
            scene.set_obstacle(g(c, 7)).unwrap();
            scene.set_obstacle(g(c, 13)).unwrap();
        }
        for r in 7..=13 {
            scene.set_obstacle(g(15, r)).unwrap();
            scene.set_obstacle(g(21, r)).unwrap();
        }
        let (t, _, _) = run(&scene, 3);
        assert_eq!(t, Termination::Infeasible);
        assert!(dijkstra(&scene, scene.start(), scene.goal()).is_none());
    }

    #[test]
    fn random_scene_reaches_dijkstra_optimum() {
        let mut costs = vec![1.0; 64 * 48];
        let mut state = 12345u64;
        for c in costs.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = (state >> 33) % 100;
            *c = if r < 15 {
                f64::INFINITY
            } else if r < 50 {
                2.0
            } else if r < 75 {
                4.0
            } else {
                1.0
            };
        }
        costs[64 + 1] = 1.0;
        costs[46 * 64 + 62] = 1.0;
        let scene =
            GroundTruthScene::from_costs(64, 48, 0.5, &costs, 1.0, 4.0, g(1, 1), g(62, 46)).unwrap();
        let oracle = dijkstra(&scene, scene.start(), scene.goal());
        for seed in [1, 2] {
            let (t, planner, map) = run(&scene, seed);
            match (&t, &oracle) {
                (Termination::Optimal(p), Some((_, exact))) => {
                    assert_eq!(p.cost, *exact);
                    assert!(map.coverage() < 1.0);
                    assert!(planner.spent() > 0.0);
                }
                (Termination::Infeasible, None) => {}
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(scene.cost_unit() > 0.0);
    }

    #[test]
    fn budget_stops_the_scout() {
        let scene = GroundTruthScene::uniform(64, 48, 0.5, 1.0, g(1, 1), g(62, 46)).unwrap();
        let fp = SensorFootprint::new(2.0).unwrap();
        let mission = Mission {
            start: scene.start(),
            goal: scene.goal(),
        };
        let mut p = params(5);
        p.budget = Some(5.0);
        let mut planner =
            PathAwarePlanner::new(mission, PlannerKind::GridAStar, scene.scout_field(), p).unwrap();
        let mut map = PartialMap::new(&scene);
        map.observe(&scene, scene.start(), &fp).unwrap();
        loop {
            match planner.step(&map).unwrap() {
                StepOutcome::NextWaypoint(pose) => {
                    map.observe(&scene, pose, &fp).unwrap();
                }
                StepOutcome::Terminate(t) => {
                    assert!(matches!(t, Termination::BudgetExhausted(None)), "{t:?}");
                    break;
                }
            }
        }
        assert!(planner.spent() <= 5.0);
    }
}
