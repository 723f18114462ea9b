//! Receding-horizon viewpoint tree.
//!
//! The tree is rooted at the scout. Every step it is grown by uniform
//! samples, gains are refreshed against the current guidance, the branch
//! with the best accumulated-gain / accumulated-cost ratio is chosen and
//! only its first segment is flown. The tree is then re-rooted at the
//! reached node and kept for the next step.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gain::{edge_cost, GainModel};
use crate::error::{Error, Result};
use crate::grid_map::{GridIndex, PartialMap, ScoutCostField, SensorFootprint};

#[derive(Clone, Debug, PartialEq)]
pub struct ScoutNode {
    pub pose: GridIndex,
    pub parent: Option<usize>,
    pub gain: f64,
    /// Scout cost of the edge from the parent; 0 for the root.
    pub edge_cost: f64,
    /// Every cell in view is explored; the gain stays 0 from now on.
    pub closed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub samples_per_step: usize,
    /// Longest edge added by expansion, meters.
    pub max_edge_length: f64,
    /// Extra expansion rounds (and failed samples per round) tolerated
    /// before falling back to a directed sample.
    pub retry_cap: usize,
    pub footprint: SensorFootprint,
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_step == 0 {
            return Err(Error::Parameter("samples_per_step must be > 0".into()));
        }
        if !(self.max_edge_length > 0.0 && self.max_edge_length.is_finite()) {
            return Err(Error::Parameter(format!(
                "max_edge_length must be positive, got {}",
                self.max_edge_length
            )));
        }
        Ok(())
    }
}

/// Accumulated gain and cost from the root to a node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulated {
    pub gain: f64,
    pub cost: f64,
}

impl Accumulated {
    pub fn value(&self) -> f64 {
        if self.cost > 0.0 {
            self.gain / self.cost
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScoutTree {
    nodes: Vec<ScoutNode>,
    root: usize,
    by_pose: HashMap<GridIndex, usize>,
    rng: ChaCha8Rng,
    seed: u64,
}

impl ScoutTree {
    pub fn new(root_pose: GridIndex, seed: u64) -> Self {
        ScoutTree {
            nodes: vec![ScoutNode {
                pose: root_pose,
                parent: None,
                gain: 0.0,
                edge_cost: 0.0,
                closed: false,
            }],
            root: 0,
            by_pose: HashMap::from([(root_pose, 0)]),
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn nodes(&self) -> &[ScoutNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_pose(&self) -> GridIndex {
        self.nodes[self.root].pose
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a child under `parent`. Poses are unique within the tree.
    pub fn add_node(
        &mut self,
        parent: usize,
        pose: GridIndex,
        field: &ScoutCostField,
    ) -> Result<usize> {
        if self.by_pose.contains_key(&pose) {
            return Err(Error::Contract(format!("pose ({pose}) already in the tree")));
        }
        let cost = edge_cost(self.nodes[parent].pose, pose, field)?;
        let id = self.nodes.len();
        self.nodes.push(ScoutNode {
            pose,
            parent: Some(parent),
            gain: 0.0,
            edge_cost: cost,
            closed: false,
        });
        self.by_pose.insert(pose, id);
        Ok(id)
    }

    /// Overrides a node's gain (for hand-built trees).
    pub fn set_gain(&mut self, node: usize, gain: f64) {
        self.nodes[node].gain = gain;
    }

    /// Accumulated gain and cost for every node, indexed like `nodes()`.
    pub fn accumulate(&self) -> Vec<Accumulated> {
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                children[p].push(i);
            }
        }
        let mut acc = vec![Accumulated::default(); self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            for &c in &children[i] {
                acc[c] = Accumulated {
                    gain: acc[i].gain + self.nodes[c].gain,
                    cost: acc[i].cost + self.nodes[c].edge_cost,
                };
                stack.push(c);
            }
        }
        acc
    }

    /// Accumulated gain over accumulated cost from the root to `node`.
    /// The root's own gain is not counted; the root has value 0.
    pub fn subtree_value(&self, node: usize) -> Result<f64> {
        if node == self.root {
            return Ok(0.0);
        }
        let mut gain = 0.0;
        let mut cost = 0.0;
        let mut cur = node;
        while cur != self.root {
            let n = &self.nodes[cur];
            gain += n.gain;
            cost += n.edge_cost;
            cur = n
                .parent
                .ok_or_else(|| Error::Contract(format!("node {node} is not connected to the root")))?;
        }
        if cost <= 0.0 {
            return Err(Error::Contract(format!(
                "node {node} has zero accumulated cost"
            )));
        }
        Ok(gain / cost)
    }

    /// Node with the highest value, ties going to the smaller accumulated
    /// cost and then to the older node. `None` when no node has a positive
    /// value.
    pub fn best_node(&self) -> Option<usize> {
        let acc = self.accumulate();
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, a) in acc.iter().enumerate() {
            if i == self.root {
                continue;
            }
            let v = a.value();
            if v <= 0.0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, bv, bc)) => v > bv || (v == bv && a.cost < bc),
            };
            if better {
                best = Some((i, v, a.cost));
            }
        }
        best.map(|(i, _, _)| i)
    }

    /// The root's child on the branch leading to `node`.
    pub fn first_segment(&self, node: usize) -> Option<usize> {
        let mut cur = node;
        loop {
            let parent = self.nodes[cur].parent?;
            if parent == self.root {
                return Some(cur);
            }
            cur = parent;
        }
    }

    fn nearest(&self, target: GridIndex) -> usize {
        let mut best = self.root;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.pose.distance(target);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Connects a node toward `target` from its nearest tree node, cutting
    /// the edge at `max_edge_cells`. Returns `None` if the resulting pose
    /// coincides with an existing node.
    fn grow_toward(
        &mut self,
        target: GridIndex,
        max_edge_cells: f64,
        field: &ScoutCostField,
    ) -> Option<usize> {
        let near = self.nearest(target);
        let from = self.nodes[near].pose;
        let d = from.distance(target);
        let pose = if d <= max_edge_cells {
            target
        } else {
            let t = max_edge_cells / d;
            GridIndex::new(
                (from.col as f64 + (target.col as f64 - from.col as f64) * t).round() as usize,
                (from.row as f64 + (target.row as f64 - from.row as f64) * t).round() as usize,
            )
        };
        if pose == from || self.by_pose.contains_key(&pose) {
            return None;
        }
        self.add_node(near, pose, field).ok()
    }

    /// Samples new viewpoints uniformly over the map and refreshes gains of
    /// every open node against `model`. Nodes with nothing unknown in view
    /// are closed.
    pub fn expand_and_update(
        &mut self,
        map: &PartialMap,
        model: &dyn GainModel,
        field: &ScoutCostField,
        params: &TreeParams,
    ) {
        let g = *map.geometry();
        let max_edge_cells = (params.max_edge_length / g.resolution).max(1.0);
        let mut added = 0;
        let mut failures = 0;
        while added < params.samples_per_step && failures <= params.retry_cap {
            let sample = GridIndex::new(
                self.rng.gen_range(0..g.width),
                self.rng.gen_range(0..g.height),
            );
            match self.grow_toward(sample, max_edge_cells, field) {
                Some(_) => added += 1,
                None => failures += 1,
            }
        }
        self.update_gains(map, model, &params.footprint);
    }

    pub fn update_gains(
        &mut self,
        map: &PartialMap,
        model: &dyn GainModel,
        footprint: &SensorFootprint,
    ) {
        for node in self.nodes.iter_mut().filter(|n| !n.closed) {
            if map.unknown_in_footprint(node.pose, footprint) {
                node.gain = model.gain(node.pose, map, footprint);
            } else {
                node.closed = true;
                node.gain = 0.0;
            }
        }
    }

    /// Grows and updates the tree, then returns the root child on the best
    /// branch. Falls back to directed growth toward the model's target when
    /// random samples produce no positive value. `None` means the model has
    /// nothing left to observe.
    pub fn select_segment(
        &mut self,
        map: &PartialMap,
        model: &dyn GainModel,
        field: &ScoutCostField,
        params: &TreeParams,
    ) -> Option<usize> {
        self.expand_and_update(map, model, field, params);
        let mut rounds = 0;
        let max_edge_cells = (params.max_edge_length / map.geometry().resolution).max(1.0);
        let directed_cap = map.geometry().width + map.geometry().height;
        let mut directed = 0;
        loop {
            if let Some(best) = self.best_node() {
                return self.first_segment(best);
            }
            if rounds < params.retry_cap {
                rounds += 1;
                self.expand_and_update(map, model, field, params);
                continue;
            }
            let target = model.fallback_target(map, self.root_pose())?;
            directed += 1;
            if directed > directed_cap {
                return None;
            }
            self.grow_toward(target, max_edge_cells, field);
            self.update_gains(map, model, &params.footprint);
        }
    }

    /// Makes `node` (a child of the root) the new root. The old root and its
    /// other children become children of the new root.
    pub fn advance_to(&mut self, node: usize, field: &ScoutCostField) -> Result<()> {
        let old = self.root;
        if self.nodes[node].parent != Some(old) {
            return Err(Error::Contract(format!(
                "node {node} is not a child of the root"
            )));
        }
        let new_pose = self.nodes[node].pose;
        for i in 0..self.nodes.len() {
            if i != node && self.nodes[i].parent == Some(old) {
                self.nodes[i].parent = Some(node);
                self.nodes[i].edge_cost = edge_cost(new_pose, self.nodes[i].pose, field)?;
            }
        }
        self.nodes[old].parent = Some(node);
        self.nodes[old].edge_cost = edge_cost(new_pose, self.nodes[old].pose, field)?;
        self.nodes[node].parent = None;
        self.nodes[node].edge_cost = 0.0;
        self.root = node;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_map::{GridGeometry, GroundTruthScene};

    fn g(col: usize, row: usize) -> GridIndex {
        GridIndex::new(col, row)
    }

    struct Unknowns;

    impl GainModel for Unknowns {
        fn gain(&self, pose: GridIndex, map: &PartialMap, fp: &SensorFootprint) -> f64 {
            fp.cells(map.geometry(), pose).filter(|&c| map.is_unknown(c)).count() as f64
        }

        fn fallback_target(&self, map: &PartialMap, _from: GridIndex) -> Option<GridIndex> {
            map.geometry().cells().find(|&c| map.is_unknown(c))
        }
    }

    fn params() -> TreeParams {
        TreeParams {
            samples_per_step: 20,
            max_edge_length: 4.0,
            retry_cap: 10,
            footprint: SensorFootprint::new(1.0).unwrap(),
        }
    }

    #[test]
    fn chain_value() {
        let field = ScoutCostField::unit(GridGeometry::new(10, 10, 1.0).unwrap());
        let mut tree = ScoutTree::new(g(0, 0), 0);
        let a = tree.add_node(0, g(2, 0), &field).unwrap();
        let b = tree.add_node(a, g(4, 0), &field).unwrap();
        tree.set_gain(a, 3.0);
        tree.set_gain(b, 1.0);
        assert_eq!(tree.subtree_value(b).unwrap(), 1.0);
        assert_eq!(tree.subtree_value(a).unwrap(), 1.5);
        assert_eq!(tree.subtree_value(0).unwrap(), 0.0);
        assert_eq!(tree.best_node(), Some(a));
        assert_eq!(tree.first_segment(b), Some(a));
    }

    #[test]
    fn zero_gains_have_zero_value() {
        let field = ScoutCostField::unit(GridGeometry::new(10, 10, 1.0).unwrap());
        let mut tree = ScoutTree::new(g(5, 5), 0);
        let a = tree.add_node(0, g(7, 5), &field).unwrap();
        tree.add_node(a, g(9, 9), &field).unwrap();
        tree.add_node(0, g(1, 1), &field).unwrap();
        for i in 0..tree.len() {
            assert_eq!(tree.subtree_value(i).unwrap(), 0.0);
        }
        assert_eq!(tree.best_node(), None);
    }

    #[test]
    fn best_node_matches_exhaustive_values() {
        let field = ScoutCostField::unit(GridGeometry::new(20, 20, 1.0).unwrap());
        let mut tree = ScoutTree::new(g(10, 10), 0);
        let gains = [0.0, 2.0, 5.0, 1.0, 7.0, 0.5, 3.0, 3.0];
        let a = tree.add_node(0, g(13, 10), &field).unwrap();
        let a1 = tree.add_node(a, g(16, 10), &field).unwrap();
        let b = tree.add_node(0, g(10, 14), &field).unwrap();
        let b1 = tree.add_node(b, g(10, 18), &field).unwrap();
        let b2 = tree.add_node(b, g(7, 17), &field).unwrap();
        let c = tree.add_node(0, g(8, 8), &field).unwrap();
        let c1 = tree.add_node(c, g(5, 5), &field).unwrap();
        for (i, gain) in [0, a, a1, b, b1, b2, c, c1].into_iter().zip(gains) {
            tree.set_gain(i, gain);
        }
        // brute force: walk every node's branch by hand
        let mut best = (0usize, 0.0f64);
        for node in 1..tree.len() {
            let mut gain = 0.0;
            let mut cost = 0.0;
            let mut cur = node;
            while let Some(p) = tree.nodes()[cur].parent {
                gain += tree.nodes()[cur].gain;
                let (pc, cc) = (tree.nodes()[p].pose, tree.nodes()[cur].pose);
                cost += pc.distance(cc);
                cur = p;
            }
            let v = gain / cost;
            assert!((tree.subtree_value(node).unwrap() - v).abs() < 1e-12);
            if v > best.1 {
                best = (node, v);
            }
        }
        assert_eq!(tree.best_node(), Some(best.0));
    }

    #[test]
    fn same_seed_same_tree() {
        let scene = GroundTruthScene::uniform(30, 20, 0.5, 1.0, g(0, 0), g(29, 19)).unwrap();
        let map = PartialMap::new(&scene);
        let field = scene.scout_field();
        let mut a = ScoutTree::new(g(3, 3), 42);
        let mut b = ScoutTree::new(g(3, 3), 42);
        a.expand_and_update(&map, &Unknowns, &field, &params());
        b.expand_and_update(&map, &Unknowns, &field, &params());
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.len(), 21);
    }

    #[test]
    fn fully_observed_map_closes_everything() {
        let scene = GroundTruthScene::uniform(30, 20, 0.5, 1.0, g(0, 0), g(29, 19)).unwrap();
        let mut map = PartialMap::new(&scene);
        map.observe(&scene, g(15, 10), &SensorFootprint::new(100.0).unwrap())
            .unwrap();
        let mut tree = ScoutTree::new(g(3, 3), 1);
        tree.expand_and_update(&map, &Unknowns, &scene.scout_field(), &params());
        assert!(tree.nodes().iter().all(|n| n.closed && n.gain == 0.0));
        assert_eq!(tree.best_node(), None);
    }

    #[test]
    fn covering_observation_closes_node() {
        let scene = GroundTruthScene::uniform(30, 20, 0.5, 1.0, g(0, 0), g(29, 19)).unwrap();
        let mut map = PartialMap::new(&scene);
        let field = scene.scout_field();
        let mut tree = ScoutTree::new(g(3, 3), 1);
        let n = tree.add_node(0, g(12, 10), &field).unwrap();
        tree.update_gains(&map, &Unknowns, &params().footprint);
        assert!(!tree.nodes()[n].closed);
        assert!(tree.nodes()[n].gain > 0.0);
        // footprint of half extent 1 m around (12,10); observe with a larger one
        map.observe(&scene, g(12, 10), &SensorFootprint::new(1.0).unwrap())
            .unwrap();
        tree.update_gains(&map, &Unknowns, &params().footprint);
        assert!(tree.nodes()[n].closed);
        assert_eq!(tree.nodes()[n].gain, 0.0);
    }

    #[test]
    fn advance_reroots_and_reparents() {
        let field = ScoutCostField::unit(GridGeometry::new(20, 20, 1.0).unwrap());
        let mut tree = ScoutTree::new(g(5, 5), 0);
        let a = tree.add_node(0, g(8, 5), &field).unwrap();
        let b = tree.add_node(0, g(5, 9), &field).unwrap();
        let a1 = tree.add_node(a, g(11, 5), &field).unwrap();
        tree.advance_to(a, &field).unwrap();
        assert_eq!(tree.root(), a);
        assert_eq!(tree.root_pose(), g(8, 5));
        assert_eq!(tree.nodes()[0].parent, Some(a));
        assert_eq!(tree.nodes()[b].parent, Some(a));
        assert_eq!(tree.nodes()[b].edge_cost, 5.0);
        assert_eq!(tree.nodes()[a1].parent, Some(a));
        assert!(tree.advance_to(a1, &field).is_ok());
        assert_eq!(tree.nodes()[b].parent, Some(a1));
        let deep = tree.add_node(b, g(5, 12), &field).unwrap();
        assert!(tree.advance_to(deep, &field).is_err());
    }
}
