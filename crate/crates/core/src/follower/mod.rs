//! Follower path planning on partial, optimistic and ground-truth maps.
//!
//! Paths are 8-connected cell sequences. A diagonal step is allowed unless
//! both cells it squeezes between are impassable in the view being planned
//! on. Costs integrate the cell cost field trapezoidally along the steps
//! (see [`crate::cost`]).

mod astar;
mod dijkstra;
mod sampling;

pub use astar::astar;
pub use dijkstra::dijkstra;
pub use sampling::{plan_sampling_star, SamplingParams};

use std::io::Write;

use crate::cost::PathCost;
use crate::error::{Error, Result};
use crate::grid_map::{CellState, CostView, GridIndex, PartialMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    /// Planned inside explored, traversable space.
    Feasible,
    /// Planned on the partial map completed with `fill_cost`.
    Optimistic { fill_cost: f64 },
    /// Planned on the full ground truth.
    GroundTruth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FollowerPath {
    pub cells: Vec<GridIndex>,
    /// Exact accumulated cost.
    pub cost: PathCost,
    /// `cost` as a real number.
    pub total_cost: f64,
    pub provenance: Provenance,
}

impl FollowerPath {
    fn from_plan(cells: Vec<GridIndex>, cost: PathCost, unit: f64, provenance: Provenance) -> Self {
        FollowerPath {
            cells,
            cost,
            total_cost: cost.to_real(unit),
            provenance,
        }
    }

    pub fn start(&self) -> GridIndex {
        self.cells[0]
    }

    pub fn goal(&self) -> GridIndex {
        *self.cells.last().expect("paths are never empty")
    }

    /// One `col,row` pair per line, with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["col", "row"])?;
        for c in &self.cells {
            w.write_record([c.col.to_string(), c.row.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Follower planner selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlannerKind {
    GridAStar,
    SamplingStar(SamplingParams),
}

impl PlannerKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            PlannerKind::GridAStar => Ok(()),
            PlannerKind::SamplingStar(p) => p.validate(),
        }
    }

    /// Raw plan on any cost view: cell sequence and exact cost.
    pub fn plan<V: CostView>(
        &self,
        view: &V,
        start: GridIndex,
        goal: GridIndex,
    ) -> Option<(Vec<GridIndex>, PathCost)> {
        match self {
            PlannerKind::GridAStar => astar(view, start, goal),
            PlannerKind::SamplingStar(p) => plan_sampling_star(view, start, goal, p),
        }
    }

    pub fn plan_feasible(
        &self,
        map: &PartialMap,
        start: GridIndex,
        goal: GridIndex,
    ) -> Result<Option<FollowerPath>> {
        map.geometry().check(start)?;
        map.geometry().check(goal)?;
        let view = map.explored_view();
        Ok(self
            .plan(&view, start, goal)
            .map(|(cells, cost)| {
                FollowerPath::from_plan(cells, cost, view.cost_unit(), Provenance::Feasible)
            }))
    }

    pub fn plan_optimistic(
        &self,
        map: &PartialMap,
        fill_cost: f64,
        start: GridIndex,
        goal: GridIndex,
    ) -> Result<Option<FollowerPath>> {
        let level = map.costs().level_for(fill_cost)?;
        self.plan_optimistic_level(map, level, start, goal)
    }

    /// Optimistic plan with the fill expressed as a cost level.
    pub fn plan_optimistic_level(
        &self,
        map: &PartialMap,
        fill_level: u32,
        start: GridIndex,
        goal: GridIndex,
    ) -> Result<Option<FollowerPath>> {
        map.geometry().check(start)?;
        map.geometry().check(goal)?;
        let view = map.complete_with_level(fill_level);
        let provenance = Provenance::Optimistic {
            fill_cost: view.fill_cost(),
        };
        Ok(self
            .plan(&view, start, goal)
            .map(|(cells, cost)| FollowerPath::from_plan(cells, cost, view.cost_unit(), provenance)))
    }

    pub fn plan_ground_truth<V: CostView>(
        &self,
        view: &V,
        start: GridIndex,
        goal: GridIndex,
    ) -> Option<FollowerPath> {
        self.plan(view, start, goal).map(|(cells, cost)| {
            FollowerPath::from_plan(cells, cost, view.cost_unit(), Provenance::GroundTruth)
        })
    }
}

/// Minimum-cost path inside explored, traversable space (A*).
pub fn plan_feasible(
    map: &PartialMap,
    start: GridIndex,
    goal: GridIndex,
) -> Result<Option<FollowerPath>> {
    PlannerKind::GridAStar.plan_feasible(map, start, goal)
}

/// Minimum-cost path on the map completed with `fill_cost` (A*).
pub fn plan_optimistic(
    map: &PartialMap,
    fill_cost: f64,
    start: GridIndex,
    goal: GridIndex,
) -> Result<Option<FollowerPath>> {
    PlannerKind::GridAStar.plan_optimistic(map, fill_cost, start, goal)
}

/// Whether a single move is legal in `view`.
pub fn step_allowed<V: CostView + ?Sized>(view: &V, a: GridIndex, b: GridIndex) -> bool {
    a.is_neighbor(b) && view.passable(a) && view.passable(b) && !cuts_corner(view, a, b)
}

fn cuts_corner<V: CostView + ?Sized>(view: &V, a: GridIndex, b: GridIndex) -> bool {
    a.is_diagonal_to(b)
        && !view.passable(GridIndex::new(b.col, a.row))
        && !view.passable(GridIndex::new(a.col, b.row))
}

/// Exact cost of a cell sequence in `view`.
pub fn path_cost_exact<V: CostView + ?Sized>(cells: &[GridIndex], view: &V) -> Result<PathCost> {
    let geometry = view.geometry();
    let first = *cells
        .first()
        .ok_or_else(|| Error::Contract("a path needs at least one cell".into()))?;
    geometry.check(first)?;
    let mut prev_level = view.level(first).ok_or(Error::Infeasible {
        col: first.col,
        row: first.row,
    })?;
    let mut total = PathCost::ZERO;
    for pair in cells.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        geometry.check(b)?;
        if !a.is_neighbor(b) {
            return Err(Error::Contract(format!(
                "cells ({a}) and ({b}) are not 8-connected neighbors"
            )));
        }
        let level = view.level(b).ok_or(Error::Infeasible {
            col: b.col,
            row: b.row,
        })?;
        if cuts_corner(view, a, b) {
            return Err(Error::Infeasible {
                col: b.col,
                row: b.row,
            });
        }
        total = total + PathCost::step(prev_level, level, a.is_diagonal_to(b));
        prev_level = level;
    }
    Ok(total)
}

/// Accumulated follower cost of a cell sequence: the sum over steps of
/// `step_length * (cost(a) + cost(b)) / 2`.
pub fn path_cost<V: CostView + ?Sized>(cells: &[GridIndex], view: &V) -> Result<f64> {
    path_cost_exact(cells, view).map(|c| c.to_real(view.cost_unit()))
}

/// True iff everything the path depends on is explored: every path cell is
/// observed, and every diagonal step has an observed traversable cell beside
/// it (so the corner rule is settled by explored space alone).
pub fn is_path_explored(path: &FollowerPath, map: &PartialMap) -> bool {
    unresolved_cells(path, map).is_empty()
}

/// Unknown cells whose observation is needed before `path` is known to be
/// traversable: unknown path cells, plus the unknown corner cells of
/// diagonal steps that do not yet have an observed traversable corner.
pub fn unresolved_cells(path: &FollowerPath, map: &PartialMap) -> Vec<GridIndex> {
    let mut out: Vec<GridIndex> = path
        .cells
        .iter()
        .copied()
        .filter(|&c| map.is_unknown(c))
        .collect();
    for pair in path.cells.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !a.is_diagonal_to(b) {
            continue;
        }
        let corners = [GridIndex::new(b.col, a.row), GridIndex::new(a.col, b.row)];
        let witnessed = corners
            .iter()
            .any(|&c| matches!(map.state(c), CellState::Observed(_)));
        if !witnessed {
            out.extend(corners.iter().copied().filter(|&c| map.is_unknown(c)));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Digital straight line between two cells (Bresenham), both ends included.
/// Consecutive cells are 8-connected.
pub fn line_cells(a: GridIndex, b: GridIndex) -> Vec<GridIndex> {
    let (mut x, mut y) = (a.col as i64, a.row as i64);
    let (x1, y1) = (b.col as i64, b.row as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push(GridIndex::new(x as usize, y as usize));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}
