use std::collections::BTreeMap;
use std::path::PathBuf;

use super::{FollowerChoice, PlannerChoice, RunSettings};
use crate::environments::{generate, make_closed_box, make_open_box, SceneSpec};
use crate::error::{Error, Result};
use crate::grid_map::{load_scene, GroundTruthScene};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneLayout {
    Random,
    OpenBox,
    ClosedBox,
}

impl SceneLayout {
    pub fn parse(raw: &str) -> Result<Self> {
        match raw {
            "random" => Ok(SceneLayout::Random),
            "open_box" => Ok(SceneLayout::OpenBox),
            "closed_box" => Ok(SceneLayout::ClosedBox),
            _ => Err(Error::Config(format!("unknown layout '{raw}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SceneSource {
    /// A saved scene directory.
    File(PathBuf),
    /// Generated scenes, one per scene seed for the random layout.
    Generated {
        spec: SceneSpec,
        layout: SceneLayout,
        scene_seeds: Vec<u64>,
    },
}

impl SceneSource {
    pub fn scene_count(&self) -> usize {
        match self {
            SceneSource::Generated {
                layout: SceneLayout::Random,
                scene_seeds,
                ..
            } => scene_seeds.len(),
            _ => 1,
        }
    }

    /// Named scenes in a fixed order.
    pub fn scenes(&self) -> Result<Vec<(String, GroundTruthScene)>> {
        match self {
            SceneSource::File(path) => {
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scene".into());
                Ok(vec![(name, load_scene(path)?)])
            }
            SceneSource::Generated {
                spec,
                layout,
                scene_seeds,
            } => match layout {
                SceneLayout::OpenBox => Ok(vec![("open_box".into(), make_open_box(spec)?)]),
                SceneLayout::ClosedBox => Ok(vec![("closed_box".into(), make_closed_box(spec)?)]),
                SceneLayout::Random => scene_seeds
                    .iter()
                    .map(|&seed| {
                        let s = SceneSpec {
                            seed,
                            ..spec.clone()
                        };
                        Ok((format!("random{seed}"), generate(&s)?))
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scene: SceneSource,
    pub planners: Vec<PlannerChoice>,
    /// Per-run settings; `planner` is overwritten for each entry of
    /// `planners`.
    pub settings: RunSettings,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

/// Parses UTF-8 `key=value` lines. Blank lines and `#` comments are
/// skipped; dashes in keys are read as underscores.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key=value, got '{line}'", n + 1))
        })?;
        let key = k.trim().replace('-', "_");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{key}'", n + 1)));
        }
    }
    Ok(map)
}

/// Seed lists: `1,2,3`, `0..10` (end exclusive) or a mix of both.
pub fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seed list '{raw}'"));
    let mut seeds = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    if seeds.is_empty() {
        return Err(Error::Config(format!("seed list '{raw}' is empty")));
    }
    Ok(seeds)
}

const KEYS: &[&str] = &[
    "scene",
    "layout",
    "width",
    "height",
    "resolution",
    "soils",
    "c_min",
    "gradient",
    "obstacles",
    "blob_scale",
    "scene_seeds",
    "planner",
    "follower",
    "seeds",
    "budget",
    "fill_min",
    "fill_max",
    "out",
    "samples_per_step",
    "max_edge_length",
    "retry_cap",
    "v_max",
    "flying_height",
    "fov_deg",
    "sampling_iterations",
    "sampling_radius",
    "max_steps",
    "oracle_stop",
    "goal_aware_continue",
];

struct Values<'a>(&'a BTreeMap<String, String>);

impl Values<'_> {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("cannot parse {key}='{v}'")))
            })
            .transpose()
    }
}

impl RunConfig {
    /// Builds a configuration from merged key/value pairs. Every key is
    /// optional except that a scene must be either loaded or generated.
    pub fn from_values(values: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = values.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
        let v = Values(values);

        let scene = match values.get("scene") {
            Some(path) => SceneSource::File(PathBuf::from(path)),
            None => {
                let d = SceneSpec::default();
                let spec = SceneSpec {
                    width: v.get("width")?.unwrap_or(d.width),
                    height: v.get("height")?.unwrap_or(d.height),
                    resolution: v.get("resolution")?.unwrap_or(d.resolution),
                    soil_count: v.get("soils")?.unwrap_or(d.soil_count),
                    c_min: v.get("c_min")?.unwrap_or(d.c_min),
                    gradient: v.get("gradient")?.unwrap_or(d.gradient),
                    obstacle_fraction: v.get("obstacles")?.unwrap_or(d.obstacle_fraction),
                    blob_scale: v.get("blob_scale")?.unwrap_or(d.blob_scale),
                    ..d
                };
                spec.validate()
                    .map_err(|e| Error::Config(e.to_string()))?;
                let layout = match values.get("layout") {
                    Some(l) => SceneLayout::parse(l)?,
                    None => SceneLayout::Random,
                };
                let scene_seeds = match values.get("scene_seeds") {
                    Some(s) => parse_seeds(s)?,
                    None => vec![0],
                };
                SceneSource::Generated {
                    spec,
                    layout,
                    scene_seeds,
                }
            }
        };

        let planners = match values.get("planner") {
            Some(raw) if raw == "all" => PlannerChoice::ALL.to_vec(),
            Some(raw) => raw
                .split(',')
                .map(|p| PlannerChoice::parse(p.trim()))
                .collect::<Result<Vec<_>>>()?,
            None => vec![PlannerChoice::PathAware],
        };
        if planners.is_empty() {
            return Err(Error::Config("no planner selected".into()));
        }

        let d = RunSettings::default();
        let mut robot = d.robot;
        robot.v_max = v.get("v_max")?.unwrap_or(robot.v_max);
        robot.flying_height = v.get("flying_height")?.unwrap_or(robot.flying_height);
        robot.fov_deg = v.get("fov_deg")?.unwrap_or(robot.fov_deg);
        let settings = RunSettings {
            planner: planners[0],
            follower: match values.get("follower") {
                Some(f) => FollowerChoice::parse(f)?,
                None => d.follower,
            },
            robot,
            samples_per_step: v.get("samples_per_step")?.unwrap_or(d.samples_per_step),
            max_edge_length: v.get("max_edge_length")?.or(d.max_edge_length),
            retry_cap: v.get("retry_cap")?.unwrap_or(d.retry_cap),
            budget: v.get("budget")?.or(d.budget),
            fill_min: v.get("fill_min")?,
            fill_max: v.get("fill_max")?,
            sampling_iterations: v.get("sampling_iterations")?.unwrap_or(d.sampling_iterations),
            sampling_radius: v.get("sampling_radius")?.unwrap_or(d.sampling_radius),
            max_steps: v.get("max_steps")?.unwrap_or(d.max_steps),
            oracle_stop: v.get("oracle_stop")?.unwrap_or(d.oracle_stop),
            goal_aware_continue: v.get("goal_aware_continue")?.unwrap_or(d.goal_aware_continue),
        };
        settings
            .scout_params(0)
            .and_then(|_| settings.follower_kind(0))
            .map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(lo), Some(hi)) = (settings.fill_min, settings.fill_max) {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::Config(format!("need 0 < fill_min <= fill_max, got {lo} and {hi}")));
            }
        }

        let seeds = match values.get("seeds") {
            Some(s) => parse_seeds(s)?,
            None => vec![0],
        };
        let out = PathBuf::from(values.get("out").map(String::as_str).unwrap_or("out"));
        Ok(RunConfig {
            scene,
            planners,
            settings,
            seeds,
            out,
        })
    }
}
