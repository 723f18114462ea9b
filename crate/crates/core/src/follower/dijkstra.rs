use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::step_allowed;
use crate::cost::PathCost;
use crate::grid_map::{CostView, GridIndex};

/// Uninformed shortest path search over the whole view. Used as the
/// ground-truth reference; it shares the move rules with [`super::astar`]
/// but no search guidance.
pub fn dijkstra<V: CostView + ?Sized>(
    view: &V,
    start: GridIndex,
    goal: GridIndex,
) -> Option<(Vec<GridIndex>, PathCost)> {
    let geometry = *view.geometry();
    if !geometry.contains(start) || !geometry.contains(goal) {
        return None;
    }
    view.level(start)?;
    view.level(goal)?;
    let n = geometry.cell_count();
    let mut dist: Vec<Option<PathCost>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[geometry.index(start)] = Some(PathCost::ZERO);
    heap.push(Reverse((PathCost::ZERO, geometry.index(start))));

    while let Some(Reverse((d, idx))) = heap.pop() {
        if done[idx] {
            continue;
        }
        done[idx] = true;
        let cell = geometry.cell(idx);
        if cell == goal {
            let mut cells = vec![cell];
            let mut cur = idx;
            while let Some(p) = parent[cur] {
                cells.push(geometry.cell(p));
                cur = p;
            }
            cells.reverse();
            return Some((cells, d));
        }
        let level = view.level(cell)?;
        for next in geometry.neighbors(cell) {
            if !step_allowed(view, cell, next) {
                continue;
            }
            let nidx = geometry.index(next);
            let nd = d + PathCost::step(level, view.level(next)?, cell.is_diagonal_to(next));
            if dist[nidx].is_none_or(|old| nd < old) {
                dist[nidx] = Some(nd);
                parent[nidx] = Some(idx);
                heap.push(Reverse((nd, nidx)));
            }
        }
    }
    None
}
