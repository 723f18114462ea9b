//! Procedural scenes: soil patches on an exponential cost ladder, blob
//! obstacles, and the open/closed box layouts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::follower::astar;
use crate::grid_map::{GridIndex, GroundTruthScene};

/// Attempts made before giving up on a connected obstacle layout.
pub const MAX_GENERATION_ATTEMPTS: u64 = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub soil_count: usize,
    pub c_min: f64,
    /// Ratio between the highest and lowest follower cost.
    pub gradient: f64,
    pub obstacle_fraction: f64,
    /// Typical size of soil and obstacle patches, meters.
    pub blob_scale: f64,
    pub seed: u64,
    /// Defaults to opposite corners, `margin` cells from the border.
    pub start: Option<GridIndex>,
    pub goal: Option<GridIndex>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 64,
            height: 48,
            resolution: 0.5,
            soil_count: 3,
            c_min: 1.0,
            gradient: 4.0,
            obstacle_fraction: 0.1,
            blob_scale: 4.0,
            seed: 0,
            start: None,
            goal: None,
        }
    }
}

const MARGIN: usize = 3;

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 * MARGIN + 2 || self.height < 2 * MARGIN + 2 {
            return Err(Error::Parameter(format!(
                "grid {}x{} is too small",
                self.width, self.height
            )));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Parameter("resolution must be positive".into()));
        }
        if self.soil_count == 0 {
            return Err(Error::Parameter("soil_count must be >= 1".into()));
        }
        if !(self.c_min > 0.0 && self.c_min.is_finite()) {
            return Err(Error::Parameter("c_min must be positive".into()));
        }
        if !(self.gradient >= 1.0 && self.gradient.is_finite()) {
            return Err(Error::Parameter(format!(
                "gradient must be >= 1, got {}",
                self.gradient
            )));
        }
        if !(0.0..1.0).contains(&self.obstacle_fraction) {
            return Err(Error::Parameter(format!(
                "obstacle_fraction must be in [0, 1), got {}",
                self.obstacle_fraction
            )));
        }
        if !(self.blob_scale > 0.0 && self.blob_scale.is_finite()) {
            return Err(Error::Parameter("blob_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn start_cell(&self) -> GridIndex {
        self.start.unwrap_or(GridIndex::new(MARGIN, MARGIN))
    }

    pub fn goal_cell(&self) -> GridIndex {
        self.goal.unwrap_or(GridIndex::new(
            self.width - 1 - MARGIN,
            self.height - 1 - MARGIN,
        ))
    }

    pub fn c_max(&self) -> f64 {
        self.c_min * self.gradient
    }

    /// Follower cost of every soil, cheapest first.
    pub fn cost_ladder(&self) -> Vec<f64> {
        if self.soil_count == 1 {
            return vec![self.c_min];
        }
        let r = self.gradient.powf(1.0 / (self.soil_count - 1) as f64);
        (0..self.soil_count)
            .map(|k| self.c_min * r.powi(k as i32))
            .collect()
    }
}

/// Smooth random field in [0, 1) with features about `scale` cells wide.
fn value_noise(width: usize, height: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = scale.max(1.0);
    let gw = (width as f64 / scale).ceil() as usize + 2;
    let gh = (height as f64 / scale).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.gen()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let x = (col as f64 + 0.5) / scale;
            let y = (row as f64 + 0.5) / scale;
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (tx, ty) = (smooth(x - x0 as f64), smooth(y - y0 as f64));
            let at = |i: usize, j: usize| lattice[j * gw + i];
            let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
            let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// Cell indices ordered by field value, ties by index.
fn ranked(field: &[f64], candidates: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = candidates.collect();
    idx.sort_by(|&a, &b| field[a].total_cmp(&field[b]).then(a.cmp(&b)));
    idx
}

fn generate_attempt(spec: &SceneSpec, attempt: u64) -> Result<GroundTruthScene> {
    let (w, h) = (spec.width, spec.height);
    let n = w * h;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(attempt);
    let scale = spec.blob_scale / spec.resolution;
    let soil_field = value_noise(w, h, scale, &mut rng);
    let obstacle_field = value_noise(w, h, scale / 2.0, &mut rng);

    let ladder = spec.cost_ladder();
    let mut costs = vec![0.0; n];
    for (rank, i) in ranked(&soil_field, 0..n).into_iter().enumerate() {
        costs[i] = ladder[rank * spec.soil_count / n];
    }

    let start = spec.start_cell();
    let goal = spec.goal_cell();
    let clear = (1.0 / spec.resolution).max(1.0);
    let keep_free = |i: usize| {
        let c = GridIndex::new(i % w, i / w);
        c.distance(start) <= clear || c.distance(goal) <= clear
    };
    let count = (spec.obstacle_fraction * n as f64).round() as usize;
    let candidates = ranked(&obstacle_field, (0..n).filter(|&i| !keep_free(i)));
    if count > candidates.len() {
        return Err(Error::Generation(format!(
            "cannot place {count} obstacles outside the start/goal clearings"
        )));
    }
    for &i in candidates.iter().rev().take(count) {
        costs[i] = f64::INFINITY;
    }
    GroundTruthScene::from_costs(
        w,
        h,
        spec.resolution,
        &costs,
        spec.c_min,
        spec.c_max(),
        start,
        goal,
    )
}

/// Generates a scene whose start and goal are connected for the follower.
/// Deterministic in `spec.seed`.
pub fn generate(spec: &SceneSpec) -> Result<GroundTruthScene> {
    spec.validate()?;
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let scene = generate_attempt(spec, attempt)?;
        if astar(&scene, scene.start(), scene.goal()).is_some() {
            return Ok(scene);
        }
    }
    Err(Error::Generation(format!(
        "no connected layout after {MAX_GENERATION_ATTEMPTS} attempts (seed {})",
        spec.seed
    )))
}

struct BoxLayout {
    start: GridIndex,
    goal: GridIndex,
    left: usize,
    right: usize,
    top: usize,
    bottom: usize,
}

// Square box of side min(w, h) / 3 centered at 70% of the width; the start
// sits on the same row a quarter of the way in.
fn box_layout(spec: &SceneSpec) -> Result<BoxLayout> {
    let (w, h) = (spec.width, spec.height);
    let half = w.min(h) / 6;
    if half < 2 {
        return Err(Error::Parameter(format!("grid {w}x{h} is too small for a box")));
    }
    let cx = w * 7 / 10;
    let cy = h / 2;
    let sx = w / 4;
    if sx + 2 >= cx - half || cx + half + 2 >= w || cy < half + 1 || cy + half + 1 >= h {
        return Err(Error::Parameter(format!("box does not fit a {w}x{h} grid")));
    }
    Ok(BoxLayout {
        start: GridIndex::new(sx, cy),
        goal: GridIndex::new(cx, cy),
        left: cx - half,
        right: cx + half,
        top: cy - half,
        bottom: cy + half,
    })
}

fn make_box(spec: &SceneSpec, open: bool) -> Result<GroundTruthScene> {
    spec.validate()?;
    let b = box_layout(spec)?;
    let mut scene = GroundTruthScene::uniform(
        spec.width,
        spec.height,
        spec.resolution,
        spec.c_min,
        b.start,
        b.goal,
    )?;
    for col in b.left..=b.right {
        scene.set_obstacle(GridIndex::new(col, b.top))?;
        scene.set_obstacle(GridIndex::new(col, b.bottom))?;
    }
    for row in b.top..=b.bottom {
        scene.set_obstacle(GridIndex::new(b.left, row))?;
        if !open {
            scene.set_obstacle(GridIndex::new(b.right, row))?;
        }
    }
    Ok(scene)
}

/// Goal inside a U-shaped wall whose opening faces away from the start.
/// Takes the grid and `c_min` from `SceneSpec`; the rest is uniform.
pub fn make_open_box(spec: &SceneSpec) -> Result<GroundTruthScene> {
    make_box(spec, true)
}

/// Goal inside a fully closed wall.
pub fn make_closed_box(spec: &SceneSpec) -> Result<GroundTruthScene> {
    make_box(spec, false)
}
