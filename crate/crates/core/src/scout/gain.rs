use crate::error::{Error, Result};
use crate::follower::{unresolved_cells, FollowerPath};
use crate::grid_map::{GridIndex, PartialMap, ScoutCostField, SensorFootprint};

/// View utility used to grow and rank the scout tree.
pub trait GainModel {
    /// Gain of observing from `pose`.
    fn gain(&self, pose: GridIndex, map: &PartialMap, footprint: &SensorFootprint) -> f64;

    /// A cell worth flying toward when no tree node has any gain, or `None`
    /// when nothing is left to observe.
    fn fallback_target(&self, map: &PartialMap, from: GridIndex) -> Option<GridIndex>;
}

/// Unknown cells the follower path depends on, as a lookup mask.
#[derive(Clone, Debug)]
pub struct PathTargets {
    mask: Vec<bool>,
    cells: Vec<GridIndex>,
}

impl PathTargets {
    pub fn new(path: &FollowerPath, map: &PartialMap) -> Self {
        let cells = unresolved_cells(path, map);
        let mut mask = vec![false; map.geometry().cell_count()];
        for &c in &cells {
            mask[map.geometry().index(c)] = true;
        }
        PathTargets { mask, cells }
    }

    pub fn cells(&self) -> &[GridIndex] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

impl GainModel for PathTargets {
    fn gain(&self, pose: GridIndex, map: &PartialMap, footprint: &SensorFootprint) -> f64 {
        let g = map.geometry();
        let count = footprint
            .cells(g, pose)
            .filter(|&c| self.mask[g.index(c)] && map.is_unknown(c))
            .count();
        count as f64 * g.cell_area()
    }

    fn fallback_target(&self, map: &PartialMap, from: GridIndex) -> Option<GridIndex> {
        nearest(self.cells.iter().copied().filter(|&c| map.is_unknown(c)), from)
    }
}

pub(crate) fn nearest(cells: impl Iterator<Item = GridIndex>, from: GridIndex) -> Option<GridIndex> {
    let mut best: Option<(f64, GridIndex)> = None;
    for c in cells {
        let d = c.distance(from);
        if best.is_none_or(|(bd, bc)| d < bd || (d == bd && c < bc)) {
            best = Some((d, c));
        }
    }
    best.map(|(_, c)| c)
}

/// Area of unknown cells on the optimistic path visible from `pose`.
pub fn information_gain(
    pose: GridIndex,
    map: &PartialMap,
    optimistic_path: &FollowerPath,
    footprint: &SensorFootprint,
) -> f64 {
    PathTargets::new(optimistic_path, map).gain(pose, map, footprint)
}

/// Scout travel cost along the straight segment between two cell centers:
/// the line integral of the scout cost, sampled at the midpoints of pieces
/// no longer than half a cell.
pub fn edge_cost(a: GridIndex, b: GridIndex, field: &ScoutCostField) -> Result<f64> {
    if a == b {
        return Err(Error::Contract(format!(
            "scout edge needs distinct endpoints, got ({a}) twice"
        )));
    }
    let g = field.geometry();
    let (ax, ay) = g.center(a);
    let (bx, by) = g.center(b);
    Ok(segment_cost(ax, ay, bx, by, field))
}

pub(crate) fn segment_cost(ax: f64, ay: f64, bx: f64, by: f64, field: &ScoutCostField) -> f64 {
    let length = (bx - ax).hypot(by - ay);
    let step = field.geometry().resolution / 2.0;
    let pieces = (length / step - 1e-9).ceil().max(1.0) as usize;
    let piece = length / pieces as f64;
    (0..pieces)
        .map(|i| {
            let t = (i as f64 + 0.5) / pieces as f64;
            field.cost_at(ax + (bx - ax) * t, ay + (by - ay) * t) * piece
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::follower::plan_optimistic;
    use crate::grid_map::{GridGeometry, GroundTruthScene, ScoutCostLayer};

    fn g(col: usize, row: usize) -> GridIndex {
        GridIndex::new(col, row)
    }

    #[test]
    fn unit_scout_cost_is_length() {
        let geometry = GridGeometry::new(30, 30, 0.5).unwrap();
        let field = ScoutCostField::unit(geometry);
        assert_eq!(edge_cost(g(0, 0), g(20, 0), &field).unwrap(), 10.0);
        let diag = edge_cost(g(0, 0), g(12, 16), &field).unwrap();
        assert!((diag - 10.0).abs() < 1e-12);
        assert!(matches!(edge_cost(g(3, 3), g(3, 3), &field), Err(Error::Contract(_))));
    }

    #[test]
    fn piecewise_scout_cost() {
        // 1.6 m cells: centers of cells 0 and 5 are 8 m apart and the
        // boundary between cells 2 and 3 sits exactly halfway.
        let geometry = GridGeometry::new(6, 1, 1.6).unwrap();
        let field = ScoutCostField::new(
            geometry,
            ScoutCostLayer {
                scale: 1.0,
                levels: vec![2, 2, 2, 1, 1, 1],
            },
        );
        let c = edge_cost(g(0, 0), g(5, 0), &field).unwrap();
        assert!((c - 12.0).abs() < 1e-12, "{c}");
    }

    #[test]
    fn gain_counts_unknown_path_cells_in_view() {
        let scene = GroundTruthScene::uniform(20, 5, 0.5, 1.0, g(0, 2), g(19, 2)).unwrap();
        let mut map = PartialMap::new(&scene);
        let path = plan_optimistic(&map, 1.0, g(0, 2), g(19, 2)).unwrap().unwrap();
        assert_eq!(path.cells.len(), 20);
        // 1 m half extent covers 5 columns; 4 of them are inside the map at col 1.
        let fp = SensorFootprint::new(1.0).unwrap();
        assert_eq!(information_gain(g(1, 2), &map, &path, &fp), 1.0);
        assert_eq!(information_gain(g(10, 2), &map, &path, &SensorFootprint::new(0.5).unwrap()), 3.0 * 0.25);

        // far from the path
        let off = GroundTruthScene::uniform(20, 20, 0.5, 1.0, g(0, 0), g(19, 0)).unwrap();
        let off_map = PartialMap::new(&off);
        let off_path = plan_optimistic(&off_map, 1.0, g(0, 0), g(19, 0)).unwrap().unwrap();
        assert_eq!(information_gain(g(10, 15), &off_map, &off_path, &fp), 0.0);

        // observed path cells do not count
        map.observe(&scene, g(9, 2), &SensorFootprint::new(0.5).unwrap())
            .unwrap();
        let gain = information_gain(g(10, 2), &map, &path, &fp);
        // columns 8..=12 in view, 8..=10 observed
        assert_eq!(gain, 2.0 * 0.25);
    }
}
