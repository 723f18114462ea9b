use super::{CostModel, CostView, GridGeometry, GridIndex};
use crate::error::{Error, Result};

/// Cost levels per unit of cost used when scenes are built from real
/// values. A power of two keeps `level * scale` exact.
pub const DEFAULT_LEVELS_PER_UNIT: f64 = 1024.0;

/// Raster value marking follower obstacles.
pub(crate) const OBSTACLE_LEVEL: u16 = u16::MAX;

/// Scout travel cost per cell (`cost = level * scale`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScoutCostLayer {
    pub scale: f64,
    pub levels: Vec<u16>,
}

impl ScoutCostLayer {
    /// Constant scout cost of 1 everywhere.
    pub fn unit(cells: usize) -> Self {
        ScoutCostLayer {
            scale: 1.0,
            levels: vec![1; cells],
        }
    }

    pub fn is_unit(&self) -> bool {
        self.scale == 1.0 && self.levels.iter().all(|&l| l == 1)
    }
}

/// The scout's own travel-cost field. Scouts may fly over every cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoutCostField {
    geometry: GridGeometry,
    layer: ScoutCostLayer,
}

impl ScoutCostField {
    pub fn new(geometry: GridGeometry, layer: ScoutCostLayer) -> Self {
        ScoutCostField { geometry, layer }
    }

    pub fn unit(geometry: GridGeometry) -> Self {
        Self::new(geometry, ScoutCostLayer::unit(geometry.cell_count()))
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn cost(&self, cell: GridIndex) -> f64 {
        self.layer.levels[self.geometry.index(cell)] as f64 * self.layer.scale
    }

    /// Cost at a metric point; points on the outer border are clamped into
    /// the map.
    pub fn cost_at(&self, x: f64, y: f64) -> f64 {
        let g = &self.geometry;
        let col = ((x / g.resolution).floor().max(0.0) as usize).min(g.width - 1);
        let row = ((y / g.resolution).floor().max(0.0) as usize).min(g.height - 1);
        self.cost(GridIndex::new(col, row))
    }
}

/// Complete ground truth of a scenario. Planners never see this directly;
/// the simulator reveals it cell by cell through observations.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthScene {
    geometry: GridGeometry,
    costs: CostModel,
    follower: Vec<u16>,
    scout: ScoutCostLayer,
    start: GridIndex,
    goal: GridIndex,
}

impl GroundTruthScene {
    pub fn new(
        geometry: GridGeometry,
        costs: CostModel,
        follower: Vec<u16>,
        scout: ScoutCostLayer,
        start: GridIndex,
        goal: GridIndex,
    ) -> Result<Self> {
        let scene = GroundTruthScene {
            geometry,
            costs,
            follower,
            scout,
            start,
            goal,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Obstacle-free scene with a single follower cost.
    pub fn uniform(
        width: usize,
        height: usize,
        resolution: f64,
        cost: f64,
        start: GridIndex,
        goal: GridIndex,
    ) -> Result<Self> {
        let costs = vec![cost; width * height];
        Self::from_costs(width, height, resolution, &costs, cost, cost, start, goal)
    }

    /// Builds a scene from real follower costs (row-major, `INFINITY` marks
    /// an obstacle). Costs are quantized to `1 / 1024` and the scout cost is
    /// constant 1.
    #[allow(clippy::too_many_arguments)]
    pub fn from_costs(
        width: usize,
        height: usize,
        resolution: f64,
        costs: &[f64],
        c_min: f64,
        c_max: f64,
        start: GridIndex,
        goal: GridIndex,
    ) -> Result<Self> {
        let geometry = GridGeometry::new(width, height, resolution)?;
        if costs.len() != geometry.cell_count() {
            return Err(Error::Parameter(format!(
                "expected {} costs, got {}",
                geometry.cell_count(),
                costs.len()
            )));
        }
        let quantize = |c: f64| -> Result<u16> {
            let level = (c * DEFAULT_LEVELS_PER_UNIT).round();
            if !(1.0..=CostModel::MAX_TRAVERSABLE_LEVEL as f64).contains(&level) {
                return Err(Error::Parameter(format!(
                    "cost {c} cannot be represented at 1/{DEFAULT_LEVELS_PER_UNIT} resolution"
                )));
            }
            Ok(level as u16)
        };
        let model = CostModel::new(
            1.0 / DEFAULT_LEVELS_PER_UNIT,
            quantize(c_min)?,
            quantize(c_max)?,
        )?;
        let follower = costs
            .iter()
            .map(|&c| {
                if c.is_infinite() {
                    Ok(OBSTACLE_LEVEL)
                } else {
                    quantize(c)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            geometry,
            model,
            follower,
            ScoutCostLayer::unit(geometry.cell_count()),
            start,
            goal,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if self.follower.len() != g.cell_count() || self.scout.levels.len() != g.cell_count() {
            return Err(Error::Parameter(format!(
                "raster sizes do not match the {}x{} grid",
                g.width, g.height
            )));
        }
        for (i, &level) in self.follower.iter().enumerate() {
            if level != OBSTACLE_LEVEL
                && (level < self.costs.min_level || level > self.costs.max_level)
            {
                let cell = g.cell(i);
                return Err(Error::Parameter(format!(
                    "follower cost level {level} at cell ({cell}) is outside [{}, {}]",
                    self.costs.min_level, self.costs.max_level
                )));
            }
        }
        if !(self.scout.scale > 0.0 && self.scout.scale.is_finite()) {
            return Err(Error::Parameter("scout cost scale must be positive".into()));
        }
        if let Some(i) = self.scout.levels.iter().position(|&l| l == 0) {
            return Err(Error::Parameter(format!(
                "scout cost at cell ({}) must be positive",
                g.cell(i)
            )));
        }
        for (name, cell) in [("start", self.start), ("goal", self.goal)] {
            g.check(cell)?;
            if self.follower[g.index(cell)] == OBSTACLE_LEVEL {
                return Err(Error::Parameter(format!(
                    "{name} cell ({cell}) is an obstacle"
                )));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn costs(&self) -> CostModel {
        self.costs
    }

    pub fn start(&self) -> GridIndex {
        self.start
    }

    pub fn goal(&self) -> GridIndex {
        self.goal
    }

    pub fn follower_raster(&self) -> &[u16] {
        &self.follower
    }

    pub fn scout_layer(&self) -> &ScoutCostLayer {
        &self.scout
    }

    /// Follower cost level, `None` for obstacles.
    pub fn follower_level(&self, cell: GridIndex) -> Option<u16> {
        let level = self.follower[self.geometry.index(cell)];
        (level != OBSTACLE_LEVEL).then_some(level)
    }

    pub fn follower_cost(&self, cell: GridIndex) -> Option<f64> {
        self.follower_level(cell)
            .map(|l| self.costs.cost(l as u32))
    }

    pub fn is_obstacle(&self, cell: GridIndex) -> bool {
        self.follower_level(cell).is_none()
    }

    pub fn scout_field(&self) -> ScoutCostField {
        ScoutCostField::new(self.geometry, self.scout.clone())
    }

    pub fn scout_cost(&self, cell: GridIndex) -> f64 {
        self.scout.levels[self.geometry.index(cell)] as f64 * self.scout.scale
    }

    pub fn free_cell_count(&self) -> usize {
        self.follower.iter().filter(|&&l| l != OBSTACLE_LEVEL).count()
    }

    pub fn obstacle_fraction(&self) -> f64 {
        1.0 - self.free_cell_count() as f64 / self.geometry.cell_count() as f64
    }

    pub fn set_obstacle(&mut self, cell: GridIndex) -> Result<()> {
        self.geometry.check(cell)?;
        if cell == self.start || cell == self.goal {
            return Err(Error::Parameter(format!(
                "cannot place an obstacle on start/goal cell ({cell})"
            )));
        }
        let idx = self.geometry.index(cell);
        self.follower[idx] = OBSTACLE_LEVEL;
        Ok(())
    }

    /// Sets a traversable cell's level; must lie within the declared bounds.
    pub fn set_follower_level(&mut self, cell: GridIndex, level: u16) -> Result<()> {
        self.geometry.check(cell)?;
        if level < self.costs.min_level || level > self.costs.max_level {
            return Err(Error::Parameter(format!(
                "level {level} outside [{}, {}]",
                self.costs.min_level, self.costs.max_level
            )));
        }
        let idx = self.geometry.index(cell);
        self.follower[idx] = level;
        Ok(())
    }

    pub fn set_scout_layer(&mut self, layer: ScoutCostLayer) -> Result<()> {
        let previous = std::mem::replace(&mut self.scout, layer);
        if let Err(e) = self.validate() {
            self.scout = previous;
            return Err(e);
        }
        Ok(())
    }
}

impl CostView for GroundTruthScene {
    fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    fn level(&self, cell: GridIndex) -> Option<u32> {
        self.follower_level(cell).map(u32::from)
    }

    fn cost_scale(&self) -> f64 {
        self.costs.scale
    }

    fn min_level(&self) -> u32 {
        self.costs.min_level as u32
    }
}
