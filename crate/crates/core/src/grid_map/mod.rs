//! Grid world: geometry, ground-truth scenes, the scout's partial map and
//! its optimistic completion.

pub(crate) mod io;
mod scene;

pub use io::{load_scene, save_scene, write_explored_snapshot, OBSTACLE_VALUE};
pub use scene::{GroundTruthScene, ScoutCostField, ScoutCostLayer, DEFAULT_LEVELS_PER_UNIT};

use crate::error::{Error, Result};

/// Cell coordinate. Ordering is lexicographic on `(col, row)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    pub col: usize,
    pub row: usize,
}

impl GridIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        GridIndex { col, row }
    }

    /// True for the 8 surrounding cells (not for `self`).
    pub fn is_neighbor(self, other: GridIndex) -> bool {
        let dc = self.col.abs_diff(other.col);
        let dr = self.row.abs_diff(other.row);
        dc <= 1 && dr <= 1 && (dc + dr) > 0
    }

    pub fn is_diagonal_to(self, other: GridIndex) -> bool {
        self.col != other.col && self.row != other.row
    }

    /// Distance between cell centers, in cells.
    pub fn distance(self, other: GridIndex) -> f64 {
        let dc = self.col as f64 - other.col as f64;
        let dr = self.row as f64 - other.row as f64;
        dc.hypot(dr)
    }
}

impl std::fmt::Display for GridIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.col, self.row)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    /// Meters per cell.
    pub resolution: f64,
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!(
                "map must have at least one cell, got {width}x{height}"
            )));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Parameter(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        Ok(GridGeometry {
            width,
            height,
            resolution,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, cell: GridIndex) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    pub fn check(&self, cell: GridIndex) -> Result<()> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                col: cell.col,
                row: cell.row,
                width: self.width,
                height: self.height,
            })
        }
    }

    #[inline]
    pub fn index(&self, cell: GridIndex) -> usize {
        cell.row * self.width + cell.col
    }

    #[inline]
    pub fn cell(&self, index: usize) -> GridIndex {
        GridIndex::new(index % self.width, index / self.width)
    }

    pub fn cells(&self) -> impl Iterator<Item = GridIndex> + '_ {
        (0..self.cell_count()).map(|i| self.cell(i))
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    /// Metric position of a cell center.
    pub fn center(&self, cell: GridIndex) -> (f64, f64) {
        (
            (cell.col as f64 + 0.5) * self.resolution,
            (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing a metric point, if inside the map.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<GridIndex> {
        if x < 0.0 || y < 0.0 {
            return None;
        }
        let cell = GridIndex::new(
            (x / self.resolution).floor() as usize,
            (y / self.resolution).floor() as usize,
        );
        self.contains(cell).then_some(cell)
    }

    pub fn neighbors(&self, cell: GridIndex) -> impl Iterator<Item = GridIndex> + '_ {
        const OFFSETS: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        OFFSETS.iter().filter_map(move |&(dc, dr)| {
            let col = cell.col.checked_add_signed(dc)?;
            let row = cell.row.checked_add_signed(dr)?;
            let n = GridIndex::new(col, row);
            self.contains(n).then_some(n)
        })
    }

    /// Cells whose centers lie inside the axis-aligned square of half-width
    /// `half_extent` (meters) around the metric point `(x, y)`, clipped to
    /// the map.
    pub fn square_cells(&self, x: f64, y: f64, half_extent: f64) -> SquareCells {
        const EPS: f64 = 1e-9;
        let span = |center: f64, limit: usize| -> Option<(usize, usize)> {
            let lo = ((center - half_extent) / self.resolution - 0.5 - EPS).ceil();
            let hi = ((center + half_extent) / self.resolution - 0.5 + EPS).floor();
            let lo = lo.max(0.0);
            let hi = hi.min(limit as f64 - 1.0);
            (hi >= lo).then_some((lo as usize, hi as usize))
        };
        match (span(x, self.width), span(y, self.height)) {
            (Some(cols), Some(rows)) => SquareCells {
                cols,
                rows,
                next: Some(GridIndex::new(cols.0, rows.0)),
            },
            _ => SquareCells {
                cols: (0, 0),
                rows: (0, 0),
                next: None,
            },
        }
    }
}

/// Row-major iterator over a clipped footprint rectangle.
#[derive(Clone, Debug)]
pub struct SquareCells {
    cols: (usize, usize),
    rows: (usize, usize),
    next: Option<GridIndex>,
}

impl Iterator for SquareCells {
    type Item = GridIndex;

    fn next(&mut self) -> Option<GridIndex> {
        let current = self.next?;
        self.next = if current.col < self.cols.1 {
            Some(GridIndex::new(current.col + 1, current.row))
        } else if current.row < self.rows.1 {
            Some(GridIndex::new(self.cols.0, current.row + 1))
        } else {
            None
        };
        Some(current)
    }
}

/// Square downward-looking camera footprint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorFootprint {
    /// Half-width of the observed square, meters.
    pub half_extent: f64,
}

impl SensorFootprint {
    pub fn new(half_extent: f64) -> Result<Self> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::Parameter(format!(
                "footprint half extent must be positive, got {half_extent}"
            )));
        }
        Ok(SensorFootprint { half_extent })
    }

    /// Cells observed from the center of `pose`.
    pub fn cells(&self, geometry: &GridGeometry, pose: GridIndex) -> SquareCells {
        let (x, y) = geometry.center(pose);
        geometry.square_cells(x, y, self.half_extent)
    }
}

/// Linear mapping between integer cost levels and follower costs, plus the
/// declared cost bounds of the problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    /// Cost represented by one level.
    pub scale: f64,
    pub min_level: u16,
    pub max_level: u16,
}

impl CostModel {
    /// Highest level usable for a traversable cell; the next value is the
    /// obstacle marker.
    pub const MAX_TRAVERSABLE_LEVEL: u16 = u16::MAX - 1;

    pub fn new(scale: f64, min_level: u16, max_level: u16) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter(format!(
                "cost scale must be positive, got {scale}"
            )));
        }
        if min_level == 0 || min_level > max_level || max_level > Self::MAX_TRAVERSABLE_LEVEL {
            return Err(Error::Parameter(format!(
                "cost levels must satisfy 1 <= min <= max <= {}, got {min_level}..{max_level}",
                Self::MAX_TRAVERSABLE_LEVEL
            )));
        }
        Ok(CostModel {
            scale,
            min_level,
            max_level,
        })
    }

    pub fn cost(&self, level: u32) -> f64 {
        level as f64 * self.scale
    }

    pub fn c_min(&self) -> f64 {
        self.cost(self.min_level as u32)
    }

    pub fn c_max(&self) -> f64 {
        self.cost(self.max_level as u32)
    }

    /// Nearest level for a positive cost. Fill costs that fall between
    /// levels are rounded, never below one level.
    pub fn level_for(&self, cost: f64) -> Result<u32> {
        if !(cost > 0.0 && cost.is_finite()) {
            return Err(Error::Parameter(format!(
                "cost must be positive, got {cost}"
            )));
        }
        let level = (cost / self.scale).round();
        if level > u32::MAX as f64 / 4.0 {
            return Err(Error::Parameter(format!("cost {cost} is out of range")));
        }
        Ok((level as u32).max(1))
    }
}

/// Read access to a follower cost field. `level` returns `None` for cells
/// the follower may not enter.
pub trait CostView {
    fn geometry(&self) -> &GridGeometry;
    fn level(&self, cell: GridIndex) -> Option<u32>;
    fn cost_scale(&self) -> f64;
    /// Lower bound on every traversable level in the view.
    fn min_level(&self) -> u32;

    fn passable(&self, cell: GridIndex) -> bool {
        self.level(cell).is_some()
    }

    /// Multiplier turning a [`PathCost`](crate::PathCost) into a real cost.
    fn cost_unit(&self) -> f64 {
        self.geometry().resolution * self.cost_scale() / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellState {
    Unknown,
    Observed(u16),
    Obstacle,
}

impl CellState {
    pub fn is_explored(self) -> bool {
        !matches!(self, CellState::Unknown)
    }
}

/// The scout's map: only cells it has seen, with their true costs.
#[derive(Clone, Debug)]
pub struct PartialMap {
    geometry: GridGeometry,
    costs: CostModel,
    cells: Vec<CellState>,
    explored: usize,
}

impl PartialMap {
    /// Empty map sharing the scene's geometry and declared cost bounds.
    pub fn new(scene: &GroundTruthScene) -> Self {
        Self::with_geometry(*scene.geometry(), scene.costs())
    }

    pub fn with_geometry(geometry: GridGeometry, costs: CostModel) -> Self {
        PartialMap {
            geometry,
            costs,
            cells: vec![CellState::Unknown; geometry.cell_count()],
            explored: 0,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn costs(&self) -> CostModel {
        self.costs
    }

    pub fn state(&self, cell: GridIndex) -> CellState {
        self.cells[self.geometry.index(cell)]
    }

    pub fn is_unknown(&self, cell: GridIndex) -> bool {
        self.state(cell) == CellState::Unknown
    }

    pub fn explored_count(&self) -> usize {
        self.explored
    }

    /// Marks every cell in the footprint around `pose` with its ground-truth
    /// state and returns the cells that were previously unknown.
    pub fn observe(
        &mut self,
        scene: &GroundTruthScene,
        pose: GridIndex,
        footprint: &SensorFootprint,
    ) -> Result<Vec<GridIndex>> {
        self.geometry.check(pose)?;
        let (x, y) = self.geometry.center(pose);
        Ok(self.observe_at(scene, x, y, footprint))
    }

    /// Observation from an arbitrary metric position (used while the scout
    /// sweeps along a segment).
    pub fn observe_at(
        &mut self,
        scene: &GroundTruthScene,
        x: f64,
        y: f64,
        footprint: &SensorFootprint,
    ) -> Vec<GridIndex> {
        let mut fresh = Vec::new();
        for cell in self.geometry.square_cells(x, y, footprint.half_extent) {
            let idx = self.geometry.index(cell);
            if self.cells[idx] == CellState::Unknown {
                self.cells[idx] = match scene.follower_level(cell) {
                    Some(level) => CellState::Observed(level),
                    None => CellState::Obstacle,
                };
                self.explored += 1;
                fresh.push(cell);
            }
        }
        fresh
    }

    /// Fraction of all cells that have been explored.
    pub fn coverage(&self) -> f64 {
        self.explored as f64 / self.geometry.cell_count() as f64
    }

    /// Fraction of the follower-traversable cells that have been explored.
    /// Needs the scene because unknown cells carry no classification.
    pub fn free_coverage(&self, scene: &GroundTruthScene) -> f64 {
        let total = scene.free_cell_count();
        if total == 0 {
            return 1.0;
        }
        let seen = self
            .cells
            .iter()
            .filter(|s| matches!(s, CellState::Observed(_)))
            .count();
        seen as f64 / total as f64
    }

    pub fn unknown_in_footprint(&self, pose: GridIndex, footprint: &SensorFootprint) -> bool {
        footprint
            .cells(&self.geometry, pose)
            .any(|c| self.is_unknown(c))
    }

    /// Optimistic completion: unknown space becomes traversable at cost `c`.
    pub fn complete(&self, c: f64) -> Result<OptimisticMap<'_>> {
        let fill_level = self.costs.level_for(c)?;
        Ok(OptimisticMap {
            base: self,
            fill_level,
        })
    }

    pub fn complete_with_level(&self, fill_level: u32) -> OptimisticMap<'_> {
        OptimisticMap {
            base: self,
            fill_level: fill_level.max(1),
        }
    }

    pub fn explored_view(&self) -> ExploredView<'_> {
        ExploredView(self)
    }

    pub(crate) fn cells_raw(&self) -> &[CellState] {
        &self.cells
    }
}

/// Partial map completed with a constant cost over unknown space.
#[derive(Clone, Copy, Debug)]
pub struct OptimisticMap<'a> {
    base: &'a PartialMap,
    fill_level: u32,
}

impl<'a> OptimisticMap<'a> {
    pub fn base(&self) -> &'a PartialMap {
        self.base
    }

    pub fn fill_level(&self) -> u32 {
        self.fill_level
    }

    pub fn fill_cost(&self) -> f64 {
        self.base.costs.cost(self.fill_level)
    }

    /// Real cost of a cell, `None` if impassable.
    pub fn cost(&self, cell: GridIndex) -> Option<f64> {
        self.level(cell).map(|l| self.base.costs.cost(l))
    }
}

impl CostView for OptimisticMap<'_> {
    fn geometry(&self) -> &GridGeometry {
        &self.base.geometry
    }

    fn level(&self, cell: GridIndex) -> Option<u32> {
        match self.base.state(cell) {
            CellState::Unknown => Some(self.fill_level),
            CellState::Observed(l) => Some(l as u32),
            CellState::Obstacle => None,
        }
    }

    fn cost_scale(&self) -> f64 {
        self.base.costs.scale
    }

    fn min_level(&self) -> u32 {
        self.fill_level.min(self.base.costs.min_level as u32)
    }
}

/// The feasible set: explored, follower-traversable cells only.
#[derive(Clone, Copy, Debug)]
pub struct ExploredView<'a>(pub &'a PartialMap);

impl CostView for ExploredView<'_> {
    fn geometry(&self) -> &GridGeometry {
        &self.0.geometry
    }

    fn level(&self, cell: GridIndex) -> Option<u32> {
        match self.0.state(cell) {
            CellState::Observed(l) => Some(l as u32),
            _ => None,
        }
    }

    fn cost_scale(&self) -> f64 {
        self.0.costs.scale
    }

    fn min_level(&self) -> u32 {
        self.0.costs.min_level as u32
    }
}
