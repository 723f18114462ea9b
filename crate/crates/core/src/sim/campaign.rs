use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{simulate, MetricsRecord, PlannerChoice, RunConfig};
use crate::error::{Error, Result};
use crate::grid_map::io::write_atomic;

/// Metrics shown in the comparison table, in row order.
pub const TABLE_METRICS: [&str; 3] = ["tau_1", "tau_star", "tau_inf"];

const SUMMARY_METRICS: [&str; 6] = [
    "tau_1",
    "tau_star",
    "tau_inf",
    "coverage",
    "free_coverage",
    "normalized_cost",
];

const CURVE_POINTS: usize = 101;

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub planner: &'static str,
    pub metric: &'static str,
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two values.
    pub std: Option<f64>,
    pub n: usize,
}

#[derive(Clone, Debug)]
pub struct CampaignOutput {
    /// `(scene name, record)` in planner, scene, seed order.
    pub records: Vec<(String, MetricsRecord)>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every planner on every scene with every seed.
pub fn run_records(config: &RunConfig) -> Result<Vec<(String, MetricsRecord)>> {
    let scenes = config.scene.scenes()?;
    let mut jobs = Vec::new();
    for &planner in &config.planners {
        for (name, scene) in &scenes {
            for &seed in &config.seeds {
                jobs.push((planner, name, scene, seed));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(planner, name, scene, seed)| {
            let settings = super::RunSettings {
                planner,
                ..config.settings.clone()
            };
            simulate(scene, &settings, seed).map(|r| (name.clone(), r))
        })
        .collect()
}

fn metric(record: &MetricsRecord, name: &str) -> Option<f64> {
    match name {
        "tau_1" => record.tau_1,
        "tau_star" => record.tau_star,
        "tau_inf" => Some(record.tau_inf),
        "coverage" => Some(record.last().coverage),
        "free_coverage" => Some(record.last().free_coverage),
        "normalized_cost" => match (record.final_cost(), record.oracle_cost) {
            (Some(c), Some(o)) => Some(c / o),
            _ => None,
        },
        _ => None,
    }
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some(var.sqrt()))
}

/// Mean and sample standard deviation per planner and metric, skipping
/// runs where a metric is undefined.
pub fn summarize(records: &[(String, MetricsRecord)]) -> Vec<SummaryRow> {
    let mut planners: Vec<&'static str> = Vec::new();
    for (_, r) in records {
        if !planners.contains(&r.planner) {
            planners.push(r.planner);
        }
    }
    let mut out = Vec::new();
    for planner in planners {
        for m in SUMMARY_METRICS {
            let values: Vec<f64> = records
                .iter()
                .filter(|(_, r)| r.planner == planner)
                .filter_map(|(_, r)| metric(r, m))
                .collect();
            let (mean, std) = mean_std(&values);
            out.push(SummaryRow {
                planner,
                metric: m,
                mean,
                std,
                n: values.len(),
            });
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_bytes(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    w.into_inner()
        .map_err(|e| Error::Io(e.into_error()))
}

fn run_csv(record: &MetricsRecord) -> Result<Vec<u8>> {
    to_bytes(|w| {
        w.write_record([
            "step",
            "time_s",
            "scout_cost",
            "coverage",
            "free_coverage",
            "feasible_cost",
            "optimistic_bound",
            "terminated",
        ])?;
        for r in &record.rows {
            w.write_record([
                r.step.to_string(),
                r.time_s.to_string(),
                r.scout_cost.to_string(),
                r.coverage.to_string(),
                r.free_coverage.to_string(),
                opt(r.feasible_cost),
                opt(r.optimistic_bound),
                r.terminated.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn runs_csv(records: &[(String, MetricsRecord)]) -> Result<Vec<u8>> {
    to_bytes(|w| {
        w.write_record([
            "planner",
            "scene",
            "seed",
            "outcome",
            "tau_1",
            "tau_star",
            "tau_inf",
            "coverage",
            "free_coverage",
            "final_cost",
            "oracle_cost",
            "scout_cost",
            "steps",
        ])?;
        for (scene, r) in records {
            let last = r.last();
            w.write_record([
                r.planner.to_string(),
                scene.clone(),
                r.seed.to_string(),
                r.outcome.clone(),
                opt(r.tau_1),
                opt(r.tau_star),
                r.tau_inf.to_string(),
                last.coverage.to_string(),
                last.free_coverage.to_string(),
                opt(r.final_cost()),
                opt(r.oracle_cost),
                last.scout_cost.to_string(),
                last.step.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn summary_csv(summary: &[SummaryRow]) -> Result<Vec<u8>> {
    to_bytes(|w| {
        w.write_record(["planner", "metric", "mean", "std", "n"])?;
        for s in summary {
            w.write_record([
                s.planner.to_string(),
                s.metric.to_string(),
                opt(s.mean),
                opt(s.std),
                s.n.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Metric rows by planner columns, `mean ± std` or `N/A`.
fn table_csv(summary: &[SummaryRow]) -> Result<Vec<u8>> {
    let planners: Vec<&str> = PlannerChoice::ALL
        .iter()
        .map(|p| p.name())
        .filter(|name| summary.iter().any(|s| s.planner == *name))
        .collect();
    to_bytes(|w| {
        let mut header = vec!["metric"];
        header.extend(&planners);
        w.write_record(&header)?;
        for m in TABLE_METRICS {
            let mut row = vec![m.to_string()];
            for p in &planners {
                let cell = summary
                    .iter()
                    .find(|s| s.planner == *p && s.metric == m)
                    .and_then(|s| s.mean.map(|mean| (mean, s.std.unwrap_or(0.0))))
                    .map(|(mean, std)| format!("{mean:.1} ± {std:.1}"))
                    .unwrap_or_else(|| "N/A".into());
                row.push(cell);
            }
            w.write_record(&row)?;
        }
        Ok(())
    })
}

/// Normalized cost and coverage per planner on a shared time grid. Runs
/// hold their final values after they stop.
fn curves_csv(records: &[(String, MetricsRecord)]) -> Result<Vec<u8>> {
    let t_max = records
        .iter()
        .map(|(_, r)| r.tau_inf)
        .fold(0.0, f64::max);
    let mut by_planner: BTreeMap<&str, Vec<&MetricsRecord>> = BTreeMap::new();
    for (_, r) in records {
        by_planner.entry(r.planner).or_default().push(r);
    }
    to_bytes(|w| {
        w.write_record([
            "planner",
            "time_s",
            "mean_normalized_cost",
            "n_with_path",
            "mean_coverage",
        ])?;
        for p in PlannerChoice::ALL.iter().map(|p| p.name()) {
            let Some(runs) = by_planner.get(p) else {
                continue;
            };
            for i in 0..CURVE_POINTS {
                let t = t_max * i as f64 / (CURVE_POINTS - 1) as f64;
                let mut cost = Vec::new();
                let mut coverage = 0.0;
                for r in runs {
                    let row = r.row_at(t);
                    coverage += row.coverage;
                    if let (Some(c), Some(o)) = (row.feasible_cost, r.oracle_cost) {
                        cost.push(c / o);
                    }
                }
                let (mean_cost, _) = mean_std(&cost);
                w.write_record([
                    p.to_string(),
                    t.to_string(),
                    opt(mean_cost),
                    cost.len().to_string(),
                    (coverage / runs.len() as f64).to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

/// Writes the per-row metrics of one run to
/// `out/runs/run_<planner>_<scene>_<seed>.csv` and returns the path.
pub fn write_run(out: &Path, scene: &str, record: &MetricsRecord) -> Result<PathBuf> {
    let dir = out.join("runs");
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!(
        "run_{}_{}_{}.csv",
        record.planner, scene, record.seed
    ));
    write_atomic(&path, &run_csv(record)?)?;
    Ok(path)
}

/// Writes `runs/run_<planner>_<scene>_<seed>.csv`, `runs.csv`,
/// `summary.csv`, `table.csv` and `curves.csv` under `out`.
pub fn write_campaign(
    out: &Path,
    records: &[(String, MetricsRecord)],
    summary: &[SummaryRow],
) -> Result<()> {
    for (scene, r) in records {
        write_run(out, scene, r)?;
    }
    write_atomic(&out.join("runs.csv"), &runs_csv(records)?)?;
    write_atomic(&out.join("summary.csv"), &summary_csv(summary)?)?;
    write_atomic(&out.join("table.csv"), &table_csv(summary)?)?;
    write_atomic(&out.join("curves.csv"), &curves_csv(records)?)?;
    Ok(())
}

/// Runs a multi-seed campaign and writes its CSV files.
pub fn campaign(config: &RunConfig) -> Result<CampaignOutput> {
    if config.scene.scene_count() * config.seeds.len() < 2 {
        return Err(Error::Config(
            "a campaign needs at least two runs per planner".into(),
        ));
    }
    let records = run_records(config)?;
    let summary = summarize(&records);
    write_campaign(&config.out, &records, &summary)?;
    Ok(CampaignOutput { records, summary })
}
