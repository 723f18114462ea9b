//! Batch simulation: the scout flies the segments a planner asks for, the
//! map is revealed along the way and per-segment metrics are recorded.

mod campaign;
mod config;

pub use campaign::{
    campaign, run_records, summarize, write_campaign, write_run, CampaignOutput, SummaryRow, TABLE_METRICS,
};
pub use config::{parse_key_values, RunConfig, SceneLayout, SceneSource};

use crate::baselines::{build_baseline, BaselineKind};
use crate::cost::PathCost;
use crate::error::{Error, Result};
use crate::follower::{dijkstra, FollowerPath, PlannerKind, Provenance, SamplingParams};
use crate::grid_map::{CostModel, CostView, GroundTruthScene, PartialMap, SensorFootprint};
use crate::scout::{
    ExplorationPlanner, Mission, PathAwarePlanner, ScoutParams, StepOutcome, TreeParams,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotParams {
    /// Scout speed, m/s.
    pub v_max: f64,
    pub flying_height: f64,
    /// Full field of view of the downward camera, degrees.
    pub fov_deg: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        RobotParams {
            v_max: 10.0,
            flying_height: 2.0,
            fov_deg: 90.0,
        }
    }
}

impl RobotParams {
    pub fn half_extent(&self) -> f64 {
        self.flying_height * (self.fov_deg.to_radians() / 2.0).tan()
    }

    pub fn footprint(&self) -> Result<SensorFootprint> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::Parameter(format!("v_max must be positive, got {}", self.v_max)));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::Parameter(format!(
                "field of view must be in (0, 180) degrees, got {}",
                self.fov_deg
            )));
        }
        SensorFootprint::new(self.half_extent())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlannerChoice {
    PathAware,
    Baseline(BaselineKind),
}

impl PlannerChoice {
    pub const ALL: [PlannerChoice; 5] = [
        PlannerChoice::PathAware,
        PlannerChoice::Baseline(BaselineKind::CostAware),
        PlannerChoice::Baseline(BaselineKind::FrontierCost),
        PlannerChoice::Baseline(BaselineKind::GoalAware),
        PlannerChoice::Baseline(BaselineKind::Exploration),
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerChoice::PathAware => "path_aware",
            PlannerChoice::Baseline(k) => k.name(),
        }
    }

    pub fn parse(raw: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == raw)
            .ok_or_else(|| Error::Config(format!("unknown planner '{raw}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FollowerChoice {
    AStar,
    Sampling,
}

impl FollowerChoice {
    pub fn name(self) -> &'static str {
        match self {
            FollowerChoice::AStar => "astar",
            FollowerChoice::Sampling => "sampling",
        }
    }

    pub fn parse(raw: &str) -> Result<Self> {
        match raw {
            "astar" => Ok(FollowerChoice::AStar),
            "sampling" => Ok(FollowerChoice::Sampling),
            _ => Err(Error::Config(format!("unknown follower planner '{raw}'"))),
        }
    }
}

/// Everything about a run except the scene and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub planner: PlannerChoice,
    pub follower: FollowerChoice,
    pub robot: RobotParams,
    pub samples_per_step: usize,
    /// Defaults to four footprint half extents.
    pub max_edge_length: Option<f64>,
    pub retry_cap: usize,
    pub budget: Option<f64>,
    /// Replace the scene's declared cost bounds used for map completion.
    pub fill_min: Option<f64>,
    pub fill_max: Option<f64>,
    pub sampling_iterations: usize,
    pub sampling_radius: f64,
    /// Hard cap on executed segments.
    pub max_steps: usize,
    /// Stop planners that cannot certify optimality once their feasible
    /// path matches the ground-truth optimum.
    pub oracle_stop: bool,
    /// Goal-aware keeps exploring after its goal path is connected.
    pub goal_aware_continue: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            planner: PlannerChoice::PathAware,
            follower: FollowerChoice::AStar,
            robot: RobotParams::default(),
            samples_per_step: 20,
            max_edge_length: None,
            retry_cap: 10,
            budget: None,
            fill_min: None,
            fill_max: None,
            sampling_iterations: 3000,
            sampling_radius: 5.0,
            max_steps: 5000,
            oracle_stop: true,
            goal_aware_continue: true,
        }
    }
}

impl RunSettings {
    pub fn scout_params(&self, seed: u64) -> Result<ScoutParams> {
        let footprint = self.robot.footprint()?;
        let params = ScoutParams {
            tree: TreeParams {
                samples_per_step: self.samples_per_step,
                max_edge_length: self
                    .max_edge_length
                    .unwrap_or(4.0 * footprint.half_extent),
                retry_cap: self.retry_cap,
                footprint,
            },
            budget: self.budget,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn follower_kind(&self, seed: u64) -> Result<PlannerKind> {
        let kind = match self.follower {
            FollowerChoice::AStar => PlannerKind::GridAStar,
            FollowerChoice::Sampling => PlannerKind::SamplingStar(SamplingParams::new(
                self.sampling_iterations,
                self.sampling_radius,
                seed,
            )),
        };
        kind.validate()?;
        Ok(kind)
    }

    /// Cost bounds the planners complete the map with.
    pub fn map_costs(&self, scene: &GroundTruthScene) -> Result<CostModel> {
        let base = scene.costs();
        let min_level = match self.fill_min {
            None => base.min_level,
            Some(c) => {
                let level = base.level_for(c)?;
                if level > base.min_level as u32 {
                    return Err(Error::Config(format!(
                        "fill_min {c} exceeds the scene's lowest cost {}",
                        base.c_min()
                    )));
                }
                level as u16
            }
        };
        let max_level = match self.fill_max {
            None => base.max_level,
            Some(c) => base.level_for(c)?.min(CostModel::MAX_TRAVERSABLE_LEVEL as u32) as u16,
        };
        CostModel::new(base.scale, min_level, max_level)
            .map_err(|e| Error::Config(format!("fill bounds: {e}")))
    }

    pub fn build_planner(
        &self,
        scene: &GroundTruthScene,
        seed: u64,
    ) -> Result<Box<dyn ExplorationPlanner + Send>> {
        let mission = Mission {
            start: scene.start(),
            goal: scene.goal(),
        };
        let follower = self.follower_kind(seed)?;
        let params = self.scout_params(seed)?;
        Ok(match self.planner {
            PlannerChoice::PathAware => Box::new(PathAwarePlanner::new(
                mission,
                follower,
                scene.scout_field(),
                params,
            )?),
            PlannerChoice::Baseline(kind) => build_baseline(
                kind,
                mission,
                follower,
                scene.scout_field(),
                params,
                self.goal_aware_continue,
            )?,
        })
    }
}

/// One metrics row, recorded at start and after every executed segment.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub step: usize,
    pub time_s: f64,
    pub scout_cost: f64,
    /// Explored fraction of all cells.
    pub coverage: f64,
    /// Explored fraction of follower-traversable cells.
    pub free_coverage: f64,
    /// Best path through explored space.
    pub feasible: Option<PathCost>,
    pub feasible_cost: Option<f64>,
    /// Lower bound from the map completed with the lowest cost.
    pub optimistic: Option<PathCost>,
    pub optimistic_bound: Option<f64>,
    pub terminated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub planner: &'static str,
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    /// Termination label, or `oracle_optimal` / `step_limit` when the
    /// harness stopped the run.
    pub outcome: String,
    /// Path the run ended with.
    pub final_path: Option<FollowerPath>,
    pub oracle: Option<PathCost>,
    pub oracle_cost: Option<f64>,
    pub tau_1: Option<f64>,
    pub tau_star: Option<f64>,
    pub tau_inf: f64,
}

impl MetricsRecord {
    pub fn last(&self) -> &MetricsRow {
        self.rows.last().expect("records hold at least the initial row")
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.final_path.as_ref().map(|p| p.total_cost)
    }

    /// Coverage of the row at time `t` (the last row at or before it).
    pub fn row_at(&self, t: f64) -> &MetricsRow {
        let i = self.rows.partition_point(|r| r.time_s <= t);
        &self.rows[i.saturating_sub(1)]
    }
}

/// Ground-truth optimum by exhaustive Dijkstra, `None` if no path exists.
pub fn oracle_optimum(scene: &GroundTruthScene) -> Option<FollowerPath> {
    dijkstra(scene, scene.start(), scene.goal()).map(|(cells, cost)| FollowerPath {
        cells,
        cost,
        total_cost: cost.to_real(scene.cost_unit()),
        provenance: Provenance::GroundTruth,
    })
}

fn row(
    step: usize,
    time_s: f64,
    planner: &dyn ExplorationPlanner,
    map: &PartialMap,
    scene: &GroundTruthScene,
) -> Result<MetricsRow> {
    let (start, goal) = (scene.start(), scene.goal());
    let unit = scene.cost_unit();
    let feasible = PlannerKind::GridAStar
        .plan_feasible(map, start, goal)?
        .map(|p| p.cost);
    let optimistic = PlannerKind::GridAStar
        .plan_optimistic_level(map, map.costs().min_level as u32, start, goal)?
        .map(|p| p.cost);
    Ok(MetricsRow {
        step,
        time_s,
        scout_cost: planner.spent(),
        coverage: map.coverage(),
        free_coverage: map.free_coverage(scene),
        feasible,
        feasible_cost: feasible.map(|c| c.to_real(unit)),
        optimistic,
        optimistic_bound: optimistic.map(|c| c.to_real(unit)),
        terminated: false,
    })
}

/// Runs one planner on one scene until it terminates or the harness stops it.
pub fn simulate(scene: &GroundTruthScene, settings: &RunSettings, seed: u64) -> Result<MetricsRecord> {
    simulate_with_map(scene, settings, seed).map(|(record, _)| record)
}

/// Like [`simulate`], also returning the final partial map.
pub fn simulate_with_map(
    scene: &GroundTruthScene,
    settings: &RunSettings,
    seed: u64,
) -> Result<(MetricsRecord, PartialMap)> {
    let footprint = settings.robot.footprint()?;
    let mut planner = settings.build_planner(scene, seed)?;
    let oracle = oracle_optimum(scene).map(|p| p.cost);
    let g = *scene.geometry();
    let mut map = PartialMap::with_geometry(g, settings.map_costs(scene)?);
    map.observe(scene, scene.start(), &footprint)?;

    let mut pose = scene.start();
    let mut time = 0.0;
    let mut rows = vec![row(0, time, planner.as_ref(), &map, scene)?];
    let stop_at_oracle = settings.oracle_stop && !planner.certifies_optimality();
    let (outcome, final_path) = loop {
        let last = rows.last().expect("non-empty");
        if stop_at_oracle && last.feasible.is_some() && last.feasible == oracle {
            let path = PlannerKind::GridAStar.plan_feasible(&map, scene.start(), scene.goal())?;
            break ("oracle_optimal".to_string(), path);
        }
        if rows.len() > settings.max_steps {
            let path = PlannerKind::GridAStar.plan_feasible(&map, scene.start(), scene.goal())?;
            break ("step_limit".to_string(), path);
        }
        match planner.step(&map)? {
            StepOutcome::Terminate(t) => break (t.label().to_string(), t.path().cloned()),
            StepOutcome::NextWaypoint(next) => {
                if next == pose {
                    return Err(Error::Contract(format!(
                        "{} returned the current pose ({next}) as waypoint",
                        planner.name()
                    )));
                }
                let (ax, ay) = g.center(pose);
                let (bx, by) = g.center(next);
                let length = (bx - ax).hypot(by - ay);
                let pieces = (length / (g.resolution / 2.0) - 1e-9).ceil().max(1.0) as usize;
                for i in 1..=pieces {
                    let t = i as f64 / pieces as f64;
                    map.observe_at(scene, ax + (bx - ax) * t, ay + (by - ay) * t, &footprint);
                }
                time += length / settings.robot.v_max;
                pose = next;
                rows.push(row(rows.len(), time, planner.as_ref(), &map, scene)?);
            }
        }
    };
    rows.last_mut().expect("non-empty").terminated = true;

    let tau_1 = rows.iter().find(|r| r.feasible.is_some()).map(|r| r.time_s);
    let tau_star = oracle.and_then(|o| {
        rows.iter()
            .find(|r| r.feasible == Some(o))
            .map(|r| r.time_s)
    });
    let record = MetricsRecord {
        planner: planner.name(),
        seed,
        rows,
        outcome,
        final_path,
        oracle,
        oracle_cost: oracle.map(|c| c.to_real(scene.cost_unit())),
        tau_1,
        tau_star,
        tau_inf: time,
    };
    Ok((record, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{generate, make_closed_box, SceneSpec};
    use crate::grid_map::GridIndex;

    #[test]
    fn default_footprint_is_two_meters() {
        let r = RobotParams::default();
        assert!((r.half_extent() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn whole_map_in_first_view() {
        let scene = GroundTruthScene::uniform(8, 8, 0.5, 1.0, GridIndex::new(3, 3), GridIndex::new(5, 4))
            .unwrap();
        let record = simulate(&scene, &RunSettings::default(), 0).unwrap();
        assert_eq!(record.outcome, "optimal");
        assert_eq!(record.rows.len(), 1);
        assert_eq!(record.tau_1, Some(0.0));
        assert_eq!(record.tau_star, Some(0.0));
        assert_eq!(record.tau_inf, 0.0);
        assert!(record.rows[0].terminated);
    }

    #[test]
    fn closed_box_has_no_tau() {
        let scene = make_closed_box(&SceneSpec::default()).unwrap();
        let record = simulate(&scene, &RunSettings::default(), 1).unwrap();
        assert_eq!(record.outcome, "infeasible");
        assert_eq!(record.tau_1, None);
        assert_eq!(record.tau_star, None);
        assert!(record.tau_inf > 0.0);
        assert!(oracle_optimum(&scene).is_none());
    }

    #[test]
    fn path_aware_run_is_optimal_and_monotone() {
        let scene = generate(&SceneSpec {
            seed: 4,
            ..SceneSpec::default()
        })
        .unwrap();
        let record = simulate(&scene, &RunSettings::default(), 9).unwrap();
        assert_eq!(record.outcome, "optimal");
        assert_eq!(record.final_path.as_ref().unwrap().cost, record.oracle.unwrap());
        for w in record.rows.windows(2) {
            if let (Some(a), Some(b)) = (w[0].optimistic, w[1].optimistic) {
                assert!(a <= b);
            }
            if let (Some(a), Some(b)) = (w[0].feasible, w[1].feasible) {
                assert!(b <= a);
            }
            assert!(w[0].time_s <= w[1].time_s);
        }
        let last = record.last();
        assert_eq!(last.feasible, last.optimistic);
        let (t1, ts) = (record.tau_1.unwrap(), record.tau_star.unwrap());
        assert!(t1 <= ts && ts <= record.tau_inf);
    }

    #[test]
    fn oracle_stop_halts_baselines() {
        let scene = generate(&SceneSpec {
            seed: 5,
            ..SceneSpec::default()
        })
        .unwrap();
        let mut settings = RunSettings {
            planner: PlannerChoice::Baseline(BaselineKind::Exploration),
            ..RunSettings::default()
        };
        let record = simulate(&scene, &settings, 2).unwrap();
        assert_eq!(record.outcome, "oracle_optimal");
        assert_eq!(record.tau_star, Some(record.tau_inf));

        settings.oracle_stop = false;
        let full = simulate(&scene, &settings, 2).unwrap();
        assert_eq!(full.outcome, "explored");
        assert_eq!(full.last().coverage, 1.0);
        assert_eq!(full.tau_star, record.tau_star);
        assert!(full.tau_inf > record.tau_inf);
    }

    #[test]
    fn uniform_oracle_is_axial_distance() {
        let scene = GroundTruthScene::uniform(20, 5, 1.0, 1.0, GridIndex::new(2, 2), GridIndex::new(15, 2))
            .unwrap();
        assert_eq!(oracle_optimum(&scene).unwrap().total_cost, 13.0);
    }

    #[test]
    fn fill_overrides_are_checked() {
        let scene = generate(&SceneSpec::default()).unwrap();
        let settings = RunSettings {
            fill_min: Some(2.0),
            ..RunSettings::default()
        };
        assert!(matches!(settings.map_costs(&scene), Err(Error::Config(_))));
        let settings = RunSettings {
            fill_min: Some(0.5),
            fill_max: Some(10.0),
            ..RunSettings::default()
        };
        let costs = settings.map_costs(&scene).unwrap();
        assert_eq!(costs.c_min(), 0.5);
        assert_eq!(costs.c_max(), 10.0);
    }
}
