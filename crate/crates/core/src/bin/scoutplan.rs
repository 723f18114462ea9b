use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scoutplan::grid_map::{save_scene, write_explored_snapshot};
use scoutplan::sim::{
    campaign, oracle_optimum, parse_key_values, simulate_with_map, write_run, RunConfig,
    RunSettings,
};
use scoutplan::{Error, GroundTruthScene};

#[derive(Parser)]
#[command(name = "scoutplan", version, about = "Scout-follower path planning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scene and save it as a scene directory.
    Generate {
        /// Scene seed.
        #[arg(long)]
        seed: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a single simulation.
    Run {
        /// Run seed.
        #[arg(long)]
        seed: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every planner on every scene and seed, then write CSV summaries.
    Campaign {
        #[command(flatten)]
        common: Common,
    },
    /// Print the ground-truth optimal follower cost.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

/// Flags mirror the configuration keys; flags override the file.
#[derive(Args, Default)]
struct Common {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scene directory to load instead of generating one.
    #[arg(long)]
    scene: Option<String>,
    /// random, open_box or closed_box.
    #[arg(long)]
    layout: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    height: Option<String>,
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long)]
    soils: Option<String>,
    #[arg(long)]
    c_min: Option<String>,
    #[arg(long)]
    gradient: Option<String>,
    /// Obstacle fraction in [0, 1).
    #[arg(long)]
    obstacles: Option<String>,
    #[arg(long)]
    blob_scale: Option<String>,
    /// Scene seeds for generated scenes, e.g. `0..30`.
    #[arg(long)]
    scene_seeds: Option<String>,
    /// Comma-separated planners, or `all`.
    #[arg(long)]
    planner: Option<String>,
    /// astar or sampling.
    #[arg(long)]
    follower: Option<String>,
    /// Run seeds, e.g. `0..5` or `1,4,9`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    fill_min: Option<String>,
    #[arg(long)]
    fill_max: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    samples_per_step: Option<String>,
    #[arg(long)]
    max_edge_length: Option<String>,
    #[arg(long)]
    retry_cap: Option<String>,
    #[arg(long)]
    v_max: Option<String>,
    #[arg(long)]
    flying_height: Option<String>,
    #[arg(long)]
    fov_deg: Option<String>,
    #[arg(long)]
    sampling_iterations: Option<String>,
    #[arg(long)]
    sampling_radius: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    oracle_stop: Option<String>,
    #[arg(long)]
    goal_aware_continue: Option<String>,
}

impl Common {
    fn values(&self) -> Result<BTreeMap<String, String>, Error> {
        let mut values = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                parse_key_values(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("scene", &self.scene),
            ("layout", &self.layout),
            ("width", &self.width),
            ("height", &self.height),
            ("resolution", &self.resolution),
            ("soils", &self.soils),
            ("c_min", &self.c_min),
            ("gradient", &self.gradient),
            ("obstacles", &self.obstacles),
            ("blob_scale", &self.blob_scale),
            ("scene_seeds", &self.scene_seeds),
            ("planner", &self.planner),
            ("follower", &self.follower),
            ("seeds", &self.seeds),
            ("budget", &self.budget),
            ("fill_min", &self.fill_min),
            ("fill_max", &self.fill_max),
            ("out", &self.out),
            ("samples_per_step", &self.samples_per_step),
            ("max_edge_length", &self.max_edge_length),
            ("retry_cap", &self.retry_cap),
            ("v_max", &self.v_max),
            ("flying_height", &self.flying_height),
            ("fov_deg", &self.fov_deg),
            ("sampling_iterations", &self.sampling_iterations),
            ("sampling_radius", &self.sampling_radius),
            ("max_steps", &self.max_steps),
            ("oracle_stop", &self.oracle_stop),
            ("goal_aware_continue", &self.goal_aware_continue),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                values.insert(key.to_string(), v.clone());
            }
        }
        Ok(values)
    }
}

enum Failure {
    Config(Error),
    Scene(Error),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parameter(_) => Failure::Config(e),
            _ => Failure::Other(e),
        }
    }
}

fn scene_error(e: Error) -> Failure {
    match e {
        Error::Config(_) => Failure::Config(e),
        _ => Failure::Scene(e),
    }
}

fn config(common: &Common, extra: &[(&str, &Option<String>)]) -> Result<RunConfig, Failure> {
    let mut values = common.values()?;
    for (key, value) in extra {
        if let Some(v) = value {
            values.insert(key.to_string(), v.clone());
        }
    }
    Ok(RunConfig::from_values(&values)?)
}

fn first_scene(config: &RunConfig) -> Result<(String, GroundTruthScene), Failure> {
    config
        .scene
        .scenes()
        .map_err(scene_error)?
        .into_iter()
        .next()
        .ok_or_else(|| Failure::Config(Error::Config("no scene selected".into())))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate { seed, common } => {
            let config = config(&common, &[("scene_seeds", &seed)])?;
            let (_, scene) = first_scene(&config)?;
            save_scene(&scene, &config.out)?;
            println!(
                "wrote {} ({}x{}, obstacle fraction {:.3})",
                config.out.display(),
                scene.geometry().width,
                scene.geometry().height,
                scene.obstacle_fraction()
            );
        }
        Command::Run { seed, common } => {
            let config = config(&common, &[("seeds", &seed)])?;
            let (name, scene) = first_scene(&config)?;
            let settings = RunSettings {
                planner: config.planners[0],
                ..config.settings.clone()
            };
            let (record, map) = simulate_with_map(&scene, &settings, config.seeds[0])?;
            let path = write_run(&config.out, &name, &record)?;
            write_explored_snapshot(&map, config.out.join("explored.pgm"))?;
            let show = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "N/A".into());
            println!(
                "outcome={} tau_1={} tau_star={} tau_inf={:.2} coverage={:.3} final_cost={} oracle_cost={}",
                record.outcome,
                show(record.tau_1),
                show(record.tau_star),
                record.tau_inf,
                record.last().coverage,
                show(record.final_cost()),
                show(record.oracle_cost),
            );
            println!("rows: {}", path.display());
        }
        Command::Campaign { common } => {
            let config = config(&common, &[])?;
            config.scene.scenes().map_err(scene_error)?;
            let output = campaign(&config)?;
            let table = fs::read_to_string(config.out.join("table.csv"))
                .map_err(|e| Failure::Other(e.into()))?;
            print!("{table}");
            println!("{} runs written to {}", output.records.len(), config.out.display());
        }
        Command::Oracle { common } => {
            let config = config(&common, &[])?;
            let (_, scene) = first_scene(&config)?;
            match oracle_optimum(&scene) {
                Some(path) => println!("{}", path.total_cost),
                None => println!("no path"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Scene(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
