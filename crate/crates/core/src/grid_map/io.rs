//! Scene directories.
//!
//! A scene is a directory holding `scene.txt` (UTF-8 `key=value` lines) and
//! 16-bit binary PGM rasters. Follower costs are `value * cost_scale`; the
//! value [`OBSTACLE_VALUE`] marks follower obstacles. The scout-cost raster
//! is optional and defaults to a constant cost of 1.
//!
//! ```text
//! format=scoutplan-scene/1
//! width=64
//! height=48
//! resolution=0.5
//! cost_scale=0.0009765625
//! c_f_min=1
//! c_f_max=8
//! start=3,3
//! goal=60,44
//! obstacle_value=65535
//! follower_cost=follower_cost.pgm
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{GraymapHeader, PnmEncoder, SampleEncoding};
use image::ExtendedColorType;

use super::scene::OBSTACLE_LEVEL;
use super::{CellState, CostModel, GridGeometry, GridIndex, GroundTruthScene, PartialMap, ScoutCostLayer};
use crate::error::{Error, Result};

pub const OBSTACLE_VALUE: u16 = OBSTACLE_LEVEL;

const FORMAT_TAG: &str = "scoutplan-scene/1";
const HEADER_FILE: &str = "scene.txt";
const FOLLOWER_FILE: &str = "follower_cost.pgm";
const SCOUT_FILE: &str = "scout_cost.pgm";

pub fn save_scene(scene: &GroundTruthScene, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let g = scene.geometry();
    let costs = scene.costs();
    let mut header = String::new();
    let mut line = |k: &str, v: String| {
        header.push_str(k);
        header.push('=');
        header.push_str(&v);
        header.push('\n');
    };
    line("format", FORMAT_TAG.into());
    line("width", g.width.to_string());
    line("height", g.height.to_string());
    line("resolution", g.resolution.to_string());
    line("cost_scale", costs.scale.to_string());
    line("c_f_min", costs.c_min().to_string());
    line("c_f_max", costs.c_max().to_string());
    line("start", scene.start().to_string());
    line("goal", scene.goal().to_string());
    line("obstacle_value", OBSTACLE_VALUE.to_string());
    line("follower_cost", FOLLOWER_FILE.into());
    write_pgm(&dir.join(FOLLOWER_FILE), g, scene.follower_raster())?;
    let scout = scene.scout_layer();
    if !scout.is_unit() {
        line("scout_cost", SCOUT_FILE.into());
        line("scout_cost_scale", scout.scale.to_string());
        write_pgm(&dir.join(SCOUT_FILE), g, &scout.levels)?;
    }
    write_atomic(&dir.join(HEADER_FILE), header.as_bytes())
}

pub fn load_scene(dir: impl AsRef<Path>) -> Result<GroundTruthScene> {
    let dir = dir.as_ref();
    let header_path = dir.join(HEADER_FILE);
    let text = fs::read_to_string(&header_path)?;
    let header = Header::parse(&header_path, &text)?;

    let format: String = header.get("format")?;
    if format != FORMAT_TAG {
        return Err(Error::format(&header_path, format!("unsupported format '{format}'")));
    }
    let width: usize = header.get("width")?;
    let height: usize = header.get("height")?;
    let resolution: f64 = header.get("resolution")?;
    let geometry = GridGeometry::new(width, height, resolution)
        .map_err(|e| Error::format(&header_path, e.to_string()))?;
    let scale: f64 = header.get("cost_scale")?;
    let obstacle: u16 = header.get("obstacle_value")?;
    if obstacle != OBSTACLE_VALUE {
        return Err(Error::format(
            &header_path,
            format!("obstacle_value must be {OBSTACLE_VALUE}, got {obstacle}"),
        ));
    }
    let level_of = |key: &str| -> Result<u16> {
        let cost: f64 = header.get(key)?;
        let level = cost / scale;
        let rounded = level.round();
        if !(rounded >= 1.0 && rounded <= CostModel::MAX_TRAVERSABLE_LEVEL as f64)
            || (level - rounded).abs() > 1e-6 * rounded
        {
            return Err(Error::format(
                &header_path,
                format!("{key}={cost} is not a representable multiple of cost_scale={scale}"),
            ));
        }
        Ok(rounded as u16)
    };
    let costs = CostModel::new(scale, level_of("c_f_min")?, level_of("c_f_max")?)
        .map_err(|e| Error::format(&header_path, e.to_string()))?;
    let start: GridIndex = header.get_cell("start")?;
    let goal: GridIndex = header.get_cell("goal")?;

    let follower_name: String = header.get("follower_cost")?;
    let follower_path = dir.join(follower_name);
    let follower = read_pgm(&follower_path, &geometry)?;
    for (i, &v) in follower.iter().enumerate() {
        if v != OBSTACLE_VALUE && (v < costs.min_level || v > costs.max_level) {
            let cell = geometry.cell(i);
            return Err(Error::format(
                &follower_path,
                format!(
                    "value {v} at cell ({cell}) maps to cost {} outside [{}, {}]",
                    costs.cost(v as u32),
                    costs.c_min(),
                    costs.c_max()
                ),
            ));
        }
    }

    let scout = match header.optional::<String>("scout_cost")? {
        Some(name) => {
            let scout_scale: f64 = header.get("scout_cost_scale")?;
            let path = dir.join(name);
            let levels = read_pgm(&path, &geometry)?;
            ScoutCostLayer {
                scale: scout_scale,
                levels,
            }
        }
        None => ScoutCostLayer::unit(geometry.cell_count()),
    };

    GroundTruthScene::new(geometry, costs, follower, scout, start, goal)
        .map_err(|e| Error::format(&header_path, e.to_string()))
}

/// Raster of the explored space: 0 for unknown cells, the follower cost
/// value for observed cells and [`OBSTACLE_VALUE`] for observed obstacles.
pub fn write_explored_snapshot(map: &PartialMap, path: impl AsRef<Path>) -> Result<()> {
    let raster: Vec<u16> = map
        .cells_raw()
        .iter()
        .map(|s| match s {
            CellState::Unknown => 0,
            CellState::Observed(l) => *l,
            CellState::Obstacle => OBSTACLE_VALUE,
        })
        .collect();
    write_pgm(path.as_ref(), map.geometry(), &raster)
}

fn write_pgm(path: &Path, geometry: &GridGeometry, values: &[u16]) -> Result<()> {
    if values.len() != geometry.cell_count() {
        return Err(Error::Parameter("raster size mismatch".into()));
    }
    let (width, height) = (geometry.width as u32, geometry.height as u32);
    let header = GraymapHeader {
        encoding: SampleEncoding::Binary,
        width,
        height,
        maxwhite: u16::MAX as u32,
    };
    let mut bytes = Vec::new();
    PnmEncoder::new(&mut bytes)
        .with_header(header.into())
        .encode(values, width, height, ExtendedColorType::L16)?;
    write_atomic(path, &bytes)
}

fn read_pgm(path: &Path, geometry: &GridGeometry) -> Result<Vec<u16>> {
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))?;
    if img.color() != image::ColorType::L16 {
        return Err(Error::format(
            path,
            format!("expected a 16-bit grayscale raster, got {:?}", img.color()),
        ));
    }
    if img.width() as usize != geometry.width || img.height() as usize != geometry.height {
        return Err(Error::format(
            path,
            format!(
                "raster is {}x{}, header declares {}x{}",
                img.width(),
                img.height(),
                geometry.width,
                geometry.height
            ),
        ));
    }
    Ok(img.into_luma16().into_raw())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    tmp.set_file_name(name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Header<'a> {
    path: &'a Path,
    entries: BTreeMap<String, (usize, String)>,
}

impl<'a> Header<'a> {
    fn parse(path: &'a Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::format(path, format!("line {}: expected key=value, got '{line}'", n + 1))
            })?;
            if entries
                .insert(k.trim().to_string(), (n + 1, v.trim().to_string()))
                .is_some()
            {
                return Err(Error::format(path, format!("line {}: duplicate key '{}'", n + 1, k.trim())));
            }
        }
        Ok(Header { path, entries })
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                Error::format(self.path, format!("line {line}: cannot parse {key}='{v}'"))
            }),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.optional(key)?
            .ok_or_else(|| Error::format(self.path, format!("missing key '{key}'")))
    }

    fn get_cell(&self, key: &str) -> Result<GridIndex> {
        let raw: String = self.get(key)?;
        parse_cell(&raw).ok_or_else(|| {
            let line = self.entries[key].0;
            Error::format(self.path, format!("line {line}: {key} must be 'col,row', got '{raw}'"))
        })
    }
}

pub(crate) fn parse_cell(raw: &str) -> Option<GridIndex> {
    let (c, r) = raw.split_once(',')?;
    Some(GridIndex::new(c.trim().parse().ok()?, r.trim().parse().ok()?))
}
