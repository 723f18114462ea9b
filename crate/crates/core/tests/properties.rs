use proptest::prelude::*;

use scoutplan::baselines::BaselineKind;
use scoutplan::environments::{generate, SceneSpec};
use scoutplan::follower::{is_path_explored, plan_feasible, PlannerKind};
use scoutplan::scout::{
    information_gain, ExplorationMode, ExplorationPlanner, Mission, PathAwarePlanner, ScoutParams,
    StepOutcome, Termination,
};
use scoutplan::sim::{simulate, PlannerChoice, RunSettings};
use scoutplan::{CellState, CostView, GridIndex, GroundTruthScene, PartialMap, SensorFootprint};

/// Cost as `axial + diagonal * sqrt(2)` in level sums, compared exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Exact {
    axial: i128,
    diagonal: i128,
}

impl Exact {
    fn less(self, other: Exact) -> bool {
        // self < other  <=>  a < d * sqrt(2)
        let a = self.axial - other.axial;
        let d = other.diagonal - self.diagonal;
        match (a < 0, d < 0) {
            (true, false) => true,
            (false, true) => false,
            (false, false) => a * a < 2 * d * d,
            (true, true) => a * a > 2 * d * d,
        }
    }
}

/// Bellman-Ford over the 8-connected grid with the corner rule: a diagonal
/// step is blocked only when both cells beside it are impassable.
fn bellman_ford(
    w: usize,
    h: usize,
    level: impl Fn(usize, usize) -> Option<u32>,
    start: (usize, usize),
    goal: (usize, usize),
) -> Option<Exact> {
    level(start.0, start.1)?;
    level(goal.0, goal.1)?;
    let mut dist: Vec<Option<Exact>> = vec![None; w * h];
    dist[start.1 * w + start.0] = Some(Exact {
        axial: 0,
        diagonal: 0,
    });
    loop {
        let mut changed = false;
        for r in 0..h {
            for c in 0..w {
                let (Some(d), Some(la)) = (dist[r * w + c], level(c, r)) else {
                    continue;
                };
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                        if nc < 0 || nr < 0 || nc >= w as i64 || nr >= h as i64 {
                            continue;
                        }
                        let (nc, nr) = (nc as usize, nr as usize);
                        let Some(lb) = level(nc, nr) else { continue };
                        let diagonal = dr != 0 && dc != 0;
                        if diagonal && level(nc, r).is_none() && level(c, nr).is_none() {
                            continue;
                        }
                        let sum = (la + lb) as i128;
                        let cand = if diagonal {
                            Exact {
                                axial: d.axial,
                                diagonal: d.diagonal + sum,
                            }
                        } else {
                            Exact {
                                axial: d.axial + sum,
                                diagonal: d.diagonal,
                            }
                        };
                        let slot = &mut dist[nr * w + nc];
                        if slot.is_none_or(|old| cand.less(old)) {
                            *slot = Some(cand);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return dist[goal.1 * w + goal.0];
        }
    }
}

fn oracle(scene: &GroundTruthScene) -> Option<Exact> {
    let g = *scene.geometry();
    bellman_ford(
        g.width,
        g.height,
        |c, r| scene.follower_level(GridIndex::new(c, r)).map(u32::from),
        (scene.start().col, scene.start().row),
        (scene.goal().col, scene.goal().row),
    )
}

fn exact(cost: scoutplan::PathCost) -> Exact {
    Exact {
        axial: cost.axial as i128,
        diagonal: cost.diagonal as i128,
    }
}

prop_compose! {
    fn small_scene(max_side: usize)(
        w in 2..=max_side,
        h in 2..=max_side,
        density in 0.0..0.4f64,
        hi in 1.0..8.0f64,
        seed in any::<u64>(),
    ) -> GroundTruthScene {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut costs: Vec<f64> = (0..w * h)
            .map(|_| if rng.gen_bool(density) { f64::INFINITY } else { rng.gen_range(1.0..=hi) })
            .collect();
        let start = GridIndex::new(rng.gen_range(0..w), rng.gen_range(0..h));
        let goal = GridIndex::new(rng.gen_range(0..w), rng.gen_range(0..h));
        costs[start.row * w + start.col] = 1.0;
        costs[goal.row * w + goal.col] = hi;
        GroundTruthScene::from_costs(w, h, 0.5, &costs, 1.0, hi, start, goal).unwrap()
    }
}

/// A partial map built from a few random observations.
fn observed(scene: &GroundTruthScene, poses: &[(usize, usize, f64)]) -> PartialMap {
    let g = *scene.geometry();
    let mut map = PartialMap::new(scene);
    for &(c, r, half) in poses {
        let pose = GridIndex::new(c % g.width, r % g.height);
        map.observe(scene, pose, &SensorFootprint::new(half).unwrap())
            .unwrap();
    }
    map
}

fn poses() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0usize..64, 0usize..64, 0.25..2.0f64), 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn feasible_on_full_map_matches_bellman_ford(scene in small_scene(16)) {
        let g = *scene.geometry();
        let mut map = PartialMap::new(&scene);
        let all = SensorFootprint::new(g.width.max(g.height) as f64).unwrap();
        map.observe(&scene, scene.start(), &all).unwrap();
        let planned = plan_feasible(&map, scene.start(), scene.goal()).unwrap();
        prop_assert_eq!(planned.map(|p| exact(p.cost)), oracle(&scene));
    }

    #[test]
    fn bounds_bracket_the_optimum(scene in small_scene(16), poses in poses()) {
        let map = observed(&scene, &poses);
        let truth = oracle(&scene);
        let costs = map.costs();
        let lower = PlannerKind::GridAStar
            .plan_optimistic_level(&map, costs.min_level as u32, scene.start(), scene.goal())
            .unwrap();
        let upper = plan_feasible(&map, scene.start(), scene.goal()).unwrap();
        if let Some(t) = truth {
            let l = lower.as_ref().expect("a real path implies an optimistic one");
            prop_assert!(!t.less(exact(l.cost)));
            if is_path_explored(l, &map) {
                prop_assert_eq!(exact(l.cost), t);
            }
        }
        if let Some(u) = &upper {
            let t = truth.expect("an explored path is a real path");
            prop_assert!(!exact(u.cost).less(t));
        }
        if lower.is_none() {
            prop_assert!(truth.is_none());
        }
    }

    #[test]
    fn observation_is_monotone_and_exact(scene in small_scene(16), poses in poses()) {
        let g = *scene.geometry();
        let mut map = PartialMap::new(&scene);
        let mut before: Vec<CellState> = g.cells().map(|c| map.state(c)).collect();
        for (c, r, half) in poses {
            let pose = GridIndex::new(c % g.width, r % g.height);
            let coverage = map.coverage();
            map.observe(&scene, pose, &SensorFootprint::new(half).unwrap()).unwrap();
            prop_assert!(map.coverage() >= coverage);
            for (i, cell) in g.cells().enumerate() {
                let now = map.state(cell);
                if before[i].is_explored() {
                    prop_assert_eq!(now, before[i]);
                }
                match now {
                    CellState::Observed(l) => prop_assert_eq!(Some(l), scene.follower_level(cell)),
                    CellState::Obstacle => prop_assert!(scene.is_obstacle(cell)),
                    CellState::Unknown => {}
                }
                before[i] = now;
            }
        }
    }

    #[test]
    fn completion_keeps_explored_cells(scene in small_scene(12), poses in poses(), fill in 1.0..8.0f64) {
        let map = observed(&scene, &poses);
        let c = fill.min(map.costs().c_max());
        let view = map.complete(c).unwrap();
        for cell in scene.geometry().cells() {
            match map.state(cell) {
                CellState::Observed(l) => prop_assert_eq!(view.level(cell), Some(l as u32)),
                CellState::Obstacle => prop_assert_eq!(view.level(cell), None),
                CellState::Unknown => prop_assert_eq!(view.level(cell), Some(view.fill_level())),
            }
        }
    }

    #[test]
    fn gain_is_zero_iff_no_unknown_path_cell_in_view(
        scene in small_scene(14),
        poses in poses(),
        c in 0usize..14,
        r in 0usize..14,
        half in 0.25..2.0f64,
    ) {
        let map = observed(&scene, &poses);
        let Some(path) = PlannerKind::GridAStar
            .plan_optimistic_level(&map, map.costs().min_level as u32, scene.start(), scene.goal())
            .unwrap()
        else {
            return Ok(());
        };
        let g = *scene.geometry();
        let pose = GridIndex::new(c % g.width, r % g.height);
        let footprint = SensorFootprint::new(half).unwrap();
        let gain = information_gain(pose, &map, &path, &footprint);
        let visible: Vec<GridIndex> = footprint.cells(&g, pose).collect();
        // Path cells, plus both corners of a diagonal step that has no
        // observed traversable corner yet.
        let mut needed: Vec<GridIndex> = path.cells.clone();
        for pair in path.cells.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.col != b.col && a.row != b.row {
                let corners = [GridIndex::new(a.col, b.row), GridIndex::new(b.col, a.row)];
                if !corners.iter().any(|&k| matches!(map.state(k), CellState::Observed(_))) {
                    needed.extend(corners);
                }
            }
        }
        let hidden = needed
            .iter()
            .filter(|cell| map.is_unknown(**cell) && visible.contains(cell))
            .count();
        prop_assert_eq!(gain == 0.0, hidden == 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // Terminates within cells x samples steps; Optimal and Infeasible are
    // both sound; the mode switch happens at most once and only after a
    // feasible path exists.
    #[test]
    fn path_aware_outcomes_are_sound(scene in small_scene(24), seed in any::<u64>()) {
        let footprint = SensorFootprint::new(1.0).unwrap();
        let mut params = ScoutParams::new(footprint);
        params.seed = seed;
        let mission = Mission { start: scene.start(), goal: scene.goal() };
        let mut planner =
            PathAwarePlanner::new(mission, PlannerKind::GridAStar, scene.scout_field(), params).unwrap();
        let mut map = PartialMap::new(&scene);
        map.observe(&scene, scene.start(), &footprint).unwrap();
        let ceiling = scene.geometry().cell_count() * params.tree.samples_per_step;
        let mut outcome = None;
        for _ in 0..ceiling {
            let mode = planner.mode();
            match planner.step(&map).unwrap() {
                StepOutcome::NextWaypoint(p) => {
                    map.observe(&scene, p, &footprint).unwrap();
                }
                StepOutcome::Terminate(t) => {
                    outcome = Some(t);
                    break;
                }
            }
            if mode == ExplorationMode::FindFeasible && planner.mode() == ExplorationMode::FindOptimal {
                prop_assert!(plan_feasible(&map, scene.start(), scene.goal()).unwrap().is_some());
            }
        }
        prop_assert!(planner.mode_switches() <= 1);
        match outcome.expect("planner terminates") {
            Termination::Optimal(p) => prop_assert_eq!(Some(exact(p.cost)), oracle(&scene)),
            Termination::Infeasible => prop_assert_eq!(oracle(&scene), None),
            other => prop_assert!(false, "unexpected outcome {}", other.label()),
        }
    }

    #[test]
    fn recorded_bounds_are_monotone(seed in 0u64..1000, planner in 0usize..5, gradient in 1.0..8.0f64) {
        let scene = generate(&SceneSpec {
            width: 24,
            height: 20,
            gradient,
            seed,
            ..SceneSpec::default()
        })
        .unwrap();
        let settings = RunSettings {
            planner: PlannerChoice::ALL[planner],
            ..RunSettings::default()
        };
        let record = simulate(&scene, &settings, seed).unwrap();
        for w in record.rows.windows(2) {
            if let (Some(a), Some(b)) = (w[0].optimistic, w[1].optimistic) {
                prop_assert!(!exact(b).less(exact(a)));
            }
            if let Some(a) = w[0].feasible {
                let b = w[1].feasible.expect("feasible paths are never lost");
                prop_assert!(!exact(a).less(exact(b)));
            }
            prop_assert!(w[1].coverage >= w[0].coverage);
            prop_assert!(w[1].time_s >= w[0].time_s);
        }
        if let (Some(t1), Some(ts)) = (record.tau_1, record.tau_star) {
            prop_assert!(t1 <= ts && ts <= record.tau_inf);
        }
        if record.outcome == "optimal" {
            prop_assert_eq!(record.final_path.as_ref().map(|p| exact(p.cost)), oracle(&scene));
            prop_assert_eq!(record.last().feasible, record.last().optimistic);
        }
    }

    #[test]
    fn generated_obstacle_fraction_is_close(seed in any::<u64>(), fraction in 0.0..0.3f64) {
        let spec = SceneSpec { obstacle_fraction: fraction, seed, ..SceneSpec::default() };
        let scene = generate(&spec).unwrap();
        scene.validate().unwrap();
        prop_assert!((scene.obstacle_fraction() - fraction).abs() <= 0.02);
    }
}

#[test]
fn exploration_baseline_covers_everything() {
    let scene = generate(&SceneSpec {
        width: 30,
        height: 24,
        obstacle_fraction: 0.2,
        seed: 3,
        ..SceneSpec::default()
    })
    .unwrap();
    let settings = RunSettings {
        planner: PlannerChoice::Baseline(BaselineKind::Exploration),
        oracle_stop: false,
        ..RunSettings::default()
    };
    let record = simulate(&scene, &settings, 1).unwrap();
    assert_eq!(record.outcome, "explored");
    assert_eq!(record.last().coverage, 1.0);
}

#[test]
fn exact_comparison_oracle() {
    let e = |axial, diagonal| Exact { axial, diagonal };
    assert!(e(14, 0).less(e(0, 10))); // 14 < 14.14
    assert!(e(0, 10).less(e(15, 0)));
    assert!(e(0, 0).less(e(0, 1)));
    assert!(!e(3, 2).less(e(3, 2)));
    assert!(e(10, 3).less(e(3, 8))); // 14.24 < 14.31
}
