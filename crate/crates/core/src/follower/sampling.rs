//! Sampling-based asymptotically optimal follower planner (RRT*).
//!
//! Tree nodes sit on cell centers. An edge between two nodes is the digital
//! straight line connecting them; it is valid when every step of that line
//! is a legal grid move, and it costs exactly what the same cells cost as a
//! grid path. The resulting paths are therefore directly comparable with
//! the A* planner.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{line_cells, path_cost_exact};
use crate::cost::PathCost;
use crate::error::{Error, Result};
use crate::grid_map::{CostView, GridIndex};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingParams {
    pub iterations: usize,
    /// Connection and rewiring radius, meters.
    pub rewire_radius: f64,
    pub seed: u64,
    /// Probability of sampling the goal directly.
    pub goal_bias: f64,
}

impl SamplingParams {
    pub fn new(iterations: usize, rewire_radius: f64, seed: u64) -> Self {
        SamplingParams {
            iterations,
            rewire_radius,
            seed,
            goal_bias: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Parameter("sampling planner needs iterations > 0".into()));
        }
        if !(self.rewire_radius > 0.0 && self.rewire_radius.is_finite()) {
            return Err(Error::Parameter(format!(
                "rewire radius must be positive, got {}",
                self.rewire_radius
            )));
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return Err(Error::Parameter("goal bias must be in [0, 1)".into()));
        }
        Ok(())
    }
}

struct Node {
    cell: GridIndex,
    parent: Option<usize>,
    cost: PathCost,
    edge_cost: PathCost,
    children: Vec<usize>,
}

struct Tree<'v, V: CostView + ?Sized> {
    view: &'v V,
    nodes: Vec<Node>,
    by_cell: HashMap<GridIndex, usize>,
}

impl<V: CostView + ?Sized> Tree<'_, V> {
    fn edge(&self, a: GridIndex, b: GridIndex) -> Option<PathCost> {
        path_cost_exact(&line_cells(a, b), self.view).ok()
    }

    fn nearest(&self, target: GridIndex) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.cell.distance(target);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn near(&self, target: GridIndex, radius: f64) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.cell != target && n.cell.distance(target) <= radius)
            .map(|(i, _)| i)
            .collect()
    }

    fn reparent(&mut self, child: usize, parent: usize, edge_cost: PathCost) {
        if let Some(old) = self.nodes[child].parent {
            self.nodes[old].children.retain(|&c| c != child);
        }
        self.nodes[child].parent = Some(parent);
        self.nodes[child].edge_cost = edge_cost;
        self.nodes[parent].children.push(child);
        let mut stack = vec![child];
        while let Some(i) = stack.pop() {
            let p = self.nodes[i].parent.expect("reparented nodes have a parent");
            self.nodes[i].cost = self.nodes[p].cost + self.nodes[i].edge_cost;
            stack.extend(self.nodes[i].children.iter().copied());
        }
    }

    /// Best parent among `candidates` for `cell`.
    fn choose_parent(&self, cell: GridIndex, candidates: &[usize]) -> Option<(usize, PathCost)> {
        let mut best: Option<(usize, PathCost, PathCost)> = None;
        for &c in candidates {
            if let Some(e) = self.edge(self.nodes[c].cell, cell) {
                let total = self.nodes[c].cost + e;
                if best.is_none_or(|(_, t, _)| total < t) {
                    best = Some((c, total, e));
                }
            }
        }
        best.map(|(p, _, e)| (p, e))
    }

    fn rewire(&mut self, from: usize, candidates: &[usize]) {
        for &n in candidates {
            if Some(n) == self.nodes[from].parent {
                continue;
            }
            if let Some(e) = self.edge(self.nodes[from].cell, self.nodes[n].cell) {
                if self.nodes[from].cost + e < self.nodes[n].cost {
                    self.reparent(n, from, e);
                }
            }
        }
    }
}

/// RRT* between two cells. Deterministic for a fixed seed. Returns `None`
/// when no path was connected within the iteration budget.
pub fn plan_sampling_star<V: CostView + ?Sized>(
    view: &V,
    start: GridIndex,
    goal: GridIndex,
    params: &SamplingParams,
) -> Option<(Vec<GridIndex>, PathCost)> {
    let geometry = *view.geometry();
    if !geometry.contains(start) || !geometry.contains(goal) {
        return None;
    }
    view.level(start)?;
    view.level(goal)?;
    if start == goal {
        return Some((vec![start], PathCost::ZERO));
    }
    let radius = (params.rewire_radius / geometry.resolution).max(1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tree = Tree {
        view,
        nodes: vec![Node {
            cell: start,
            parent: None,
            cost: PathCost::ZERO,
            edge_cost: PathCost::ZERO,
            children: Vec::new(),
        }],
        by_cell: HashMap::from([(start, 0)]),
    };

    for _ in 0..params.iterations {
        let sample = if rng.gen::<f64>() < params.goal_bias {
            goal
        } else {
            GridIndex::new(
                rng.gen_range(0..geometry.width),
                rng.gen_range(0..geometry.height),
            )
        };
        let nearest = tree.nearest(sample);
        let from = tree.nodes[nearest].cell;
        let target = steer(from, sample, radius);
        if target == from || !view.passable(target) {
            continue;
        }
        let mut near = tree.near(target, radius);
        if !near.contains(&nearest) {
            near.push(nearest);
        }
        match tree.by_cell.get(&target).copied() {
            Some(existing) => {
                if let Some((p, e)) = tree.choose_parent(target, &near) {
                    if tree.nodes[p].cost + e < tree.nodes[existing].cost {
                        tree.reparent(existing, p, e);
                        tree.rewire(existing, &near);
                    }
                }
            }
            None => {
                let Some((p, e)) = tree.choose_parent(target, &near) else {
                    continue;
                };
                let id = tree.nodes.len();
                tree.nodes.push(Node {
                    cell: target,
                    parent: Some(p),
                    cost: tree.nodes[p].cost + e,
                    edge_cost: e,
                    children: Vec::new(),
                });
                tree.nodes[p].children.push(id);
                tree.by_cell.insert(target, id);
                tree.rewire(id, &near);
            }
        }
    }

    let goal_id = *tree.by_cell.get(&goal)?;
    let mut waypoints = vec![goal_id];
    let mut cur = goal_id;
    while let Some(p) = tree.nodes[cur].parent {
        waypoints.push(p);
        cur = p;
    }
    waypoints.reverse();
    let mut cells = vec![start];
    for pair in waypoints.windows(2) {
        let line = line_cells(tree.nodes[pair[0]].cell, tree.nodes[pair[1]].cell);
        cells.extend_from_slice(&line[1..]);
    }
    let cost = tree.nodes[goal_id].cost;
    debug_assert_eq!(path_cost_exact(&cells, view).ok(), Some(cost));
    Some((cells, cost))
}

/// Moves from `from` toward `to` by at most `radius` cells.
fn steer(from: GridIndex, to: GridIndex, radius: f64) -> GridIndex {
    let d = from.distance(to);
    if d <= radius {
        return to;
    }
    let t = radius / d;
    let col = from.col as f64 + (to.col as f64 - from.col as f64) * t;
    let row = from.row as f64 + (to.row as f64 - from.row as f64) * t;
    GridIndex::new(col.round() as usize, row.round() as usize)
}
