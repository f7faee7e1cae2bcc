use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{plan, PlanResult, PlanStatus, PlannerConfig, PlanningProblem};
use crate::state_space::{ElevationStateSpace, MotionModel, SpaceParams};
use crate::surfel::ElevationVolume;

/// Everything needed to repeat a benchmark on the same volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub space: SpaceParams,
    pub model: MotionModel,
    pub per_query_timeout: f64,
    pub configs: Vec<PlannerConfig>,
    pub problems: Vec<PlanningProblem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: usize,
    pub config: usize,
    /// Seed the planner actually ran with.
    pub seed: u64,
    pub result: PlanResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub label: String,
    pub runs: usize,
    pub exact: usize,
    pub approximate: usize,
    pub failed: usize,
    /// Fraction of runs with an exact solution.
    pub success_rate: f64,
    pub approximate_rate: f64,
    /// Means over exact runs; `None` when there are none.
    pub mean_length: Option<f64>,
    pub mean_scoo: Option<f64>,
    pub mean_wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub summaries: Vec<ConfigSummary>,
    pub runs: Vec<RunRecord>,
    pub manifest: Manifest,
}

/// Per-run seed: the config seed offset by the problem index, so problems
/// do not share sample sequences.
pub fn run_seed(config: &PlannerConfig, problem: usize) -> u64 {
    config.seed.wrapping_add(problem as u64)
}

/// Runs every (problem, config) pair with `per_query_timeout`, in parallel on
/// the current rayon pool. Records are ordered by problem, then config.
pub fn run_benchmark(
    space: &ElevationStateSpace,
    problems: &[PlanningProblem],
    configs: &[PlannerConfig],
    per_query_timeout: f64,
) -> Result<BenchmarkReport> {
    if configs.is_empty() {
        return Err(Error::EmptyConfigList);
    }
    if problems.is_empty() {
        return Err(Error::EmptyProblemList);
    }
    for c in configs {
        c.validate()?;
    }
    let pairs: Vec<(usize, usize)> = (0..problems.len())
        .flat_map(|p| (0..configs.len()).map(move |c| (p, c)))
        .collect();
    let runs = pairs
        .par_iter()
        .map(|&(p, c)| {
            let problem = PlanningProblem {
                timeout: per_query_timeout,
                ..problems[p]
            };
            let seed = run_seed(&configs[c], p);
            let config = PlannerConfig { seed, ..configs[c] };
            plan(space, &problem, &config).map(|result| RunRecord {
                problem: p,
                config: c,
                seed,
                result,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summaries = configs
        .iter()
        .enumerate()
        .map(|(c, config)| summarize(config, runs.iter().filter(|r| r.config == c)))
        .collect();
    Ok(BenchmarkReport {
        summaries,
        runs,
        manifest: Manifest {
            space: *space.params(),
            model: *space.model(),
            per_query_timeout,
            configs: configs.to_vec(),
            problems: problems.to_vec(),
        },
    })
}

/// Re-runs a benchmark from its manifest.
pub fn rerun(volume: &ElevationVolume, manifest: &Manifest) -> Result<BenchmarkReport> {
    let space = ElevationStateSpace::new(volume, manifest.space, manifest.model)?;
    run_benchmark(
        &space,
        &manifest.problems,
        &manifest.configs,
        manifest.per_query_timeout,
    )
}

fn summarize<'a>(
    config: &PlannerConfig,
    runs: impl Iterator<Item = &'a RunRecord>,
) -> ConfigSummary {
    let runs: Vec<&PlanResult> = runs.map(|r| &r.result).collect();
    let count = |s: PlanStatus| runs.iter().filter(|r| r.status == s).count();
    let (exact, approximate, failed) = (
        count(PlanStatus::Exact),
        count(PlanStatus::Approximate),
        count(PlanStatus::Failed),
    );
    let n = runs.len();
    let solved: Vec<&&PlanResult> = runs
        .iter()
        .filter(|r| r.status == PlanStatus::Exact)
        .collect();
    let mean = |f: fn(&PlanResult) -> f64| {
        (!solved.is_empty()).then(|| solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64)
    };
    ConfigSummary {
        label: config.label(),
        runs: n,
        exact,
        approximate,
        failed,
        success_rate: exact as f64 / n.max(1) as f64,
        approximate_rate: approximate as f64 / n.max(1) as f64,
        mean_length: mean(|r| r.length),
        mean_scoo: mean(|r| r.scoo),
        mean_wall_time: runs.iter().map(|r| r.wall_time).sum::<f64>() / n.max(1) as f64,
    }
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per config.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
        let mut out = String::from(
            "label,runs,exact,approximate,failed,success_rate,approximate_rate,mean_length,mean_scoo,mean_wall_time\n",
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{},{},{:.6}",
                s.label,
                s.runs,
                s.exact,
                s.approximate,
                s.failed,
                s.success_rate,
                s.approximate_rate,
                opt(s.mean_length),
                opt(s.mean_scoo),
                s.mean_wall_time
            );
        }
        out
    }
}
