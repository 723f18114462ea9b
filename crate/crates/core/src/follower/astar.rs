use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::step_allowed;
use crate::cost::PathCost;
use crate::grid_map::{CostView, GridIndex};

const NO_PARENT: u32 = u32::MAX;

/// A* over the 8-connected grid.
///
/// The heuristic is the octile distance priced at the view's minimum cost
/// level, which is consistent for trapezoidal step costs. Frontier ties are
/// broken by the smaller heuristic, then by cell order, so results are
/// reproducible.
pub fn astar<V: CostView + ?Sized>(
    view: &V,
    start: GridIndex,
    goal: GridIndex,
) -> Option<(Vec<GridIndex>, PathCost)> {
    let geometry = *view.geometry();
    if !geometry.contains(start) || !geometry.contains(goal) {
        return None;
    }
    let start_level = view.level(start)?;
    view.level(goal)?;
    let min_level = view.min_level();
    let heuristic = |c: GridIndex| {
        PathCost::octile_bound(c.col.abs_diff(goal.col), c.row.abs_diff(goal.row), min_level)
    };

    let n = geometry.cell_count();
    let mut best: Vec<Option<PathCost>> = vec![None; n];
    let mut parent = vec![NO_PARENT; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    best[geometry.index(start)] = Some(PathCost::ZERO);
    let h0 = heuristic(start);
    open.push(Reverse((h0, h0, start)));

    while let Some(Reverse((_, _, cell))) = open.pop() {
        let idx = geometry.index(cell);
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        let g = best[idx].expect("queued cells have a cost");
        if cell == goal {
            let mut cells = vec![cell];
            let mut cur = idx;
            while parent[cur] != NO_PARENT {
                cur = parent[cur] as usize;
                cells.push(geometry.cell(cur));
            }
            cells.reverse();
            return Some((cells, g));
        }
        let level = if cell == start {
            start_level
        } else {
            view.level(cell).expect("only passable cells are queued")
        };
        for next in geometry.neighbors(cell) {
            let nidx = geometry.index(next);
            if closed[nidx] || !step_allowed(view, cell, next) {
                continue;
            }
            let next_level = view.level(next).expect("step_allowed checked passability");
            let candidate = g + PathCost::step(level, next_level, cell.is_diagonal_to(next));
            if best[nidx].is_none_or(|b| candidate < b) {
                best[nidx] = Some(candidate);
                parent[nidx] = idx as u32;
                let h = heuristic(next);
                open.push(Reverse((candidate + h, h, next)));
            }
        }
    }
    None
}
