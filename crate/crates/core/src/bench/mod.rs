//! Synthetic terrain and the random-problem benchmark harness.

mod problems;
mod report;
mod terrain;

pub use problems::{generate_problems, verification_planner, ProblemSpec};
pub use report::{
    rerun, run_benchmark, run_seed, BenchmarkReport, ConfigSummary, Manifest, RunRecord,
};
pub use terrain::{generate_terrain, TerrainKind, TerrainSpec};
