//! Command-line front end: terrain generation, map building, planning and
//! benchmarking, driven by one flat configuration file.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use surfnav::bench::{generate_problems, generate_terrain, run_benchmark, TerrainKind};
use surfnav::cloud::{colorize_by_cost, load_cloud, save_cloud, CloudFormat};
use surfnav::planner::{plan, PlanningProblem};
use surfnav::state_space::{ElevationStateSpace, SpaceParams};
use surfnav::surfel::{build_volume, ElevationVolume};
use surfnav::{Error, Result};

pub use config::Config;

#[derive(Debug, Parser)]
#[command(
    name = "surfnav",
    version,
    about = "Surfel elevation maps and sampling-based planning"
)]
struct Cli {
    /// Configuration file (`key = value` lines); defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set planner.seed=3`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an elevation volume from a PCD or PLY cloud.
    Build {
        #[arg(long)]
        cloud: PathBuf,
        /// Volume JSON output.
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the cloud colored by traversability cost.
        #[arg(long)]
        colorized: Option<PathBuf>,
    },
    /// Plan between two poses on a built volume.
    Plan(PlanArgs),
    /// Run the random-problem benchmark.
    Bench {
        /// Prebuilt volume; otherwise the configured terrain fixture is generated.
        #[arg(long)]
        volume: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Report JSON output; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Per-configuration summary as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a synthetic terrain cloud.
    GenTerrain {
        #[arg(long)]
        kind: TerrainKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Square edge in meters; `terrain.size` when absent.
        #[arg(long)]
        size: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Color a cloud by the cost of its nearest surfel.
    Colorize {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        volume: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the effective configuration.
    DumpConfig {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    volume: PathBuf,
    /// Start pose `x,y,yaw`.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    start: [f64; 3],
    /// Height hint picking the layer on overlapping surfaces.
    #[arg(long, allow_hyphen_values = true)]
    start_z: Option<f64>,
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    goal: [f64; 3],
    #[arg(long, allow_hyphen_values = true)]
    goal_z: Option<f64>,
    /// Result JSON output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_pose(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,yaw, got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p
            .parse::<f64>()
            .map_err(|_| format!("`{p}` is not a number"))?;
        if !o.is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(out)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn effective_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        config.apply_override(o)?;
    }
    config.validate()?;
    Ok(config)
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn space<'a>(volume: &'a ElevationVolume, config: &Config) -> Result<ElevationStateSpace<'a>> {
    let params: SpaceParams = config.space_params(volume.voxel_size());
    ElevationStateSpace::new(volume, params, config.motion_model())
}

fn execute(cli: Cli) -> Result<()> {
    let config = effective_config(&cli)?;
    match cli.command {
        Command::Build {
            cloud,
            output,
            colorized,
        } => {
            let points = load_cloud(&cloud, CloudFormat::Auto)?;
            let volume = build_volume(&points, &config.map_config())?;
            volume.save(&output)?;
            if let Some(path) = colorized {
                save_cloud(
                    &colorize_by_cost(&points, &volume)?,
                    path,
                    CloudFormat::Auto,
                )?;
            }
            eprintln!(
                "{} surfels, {} traversable",
                volume.len(),
                volume.traversable().len()
            );
            Ok(())
        }
        Command::Plan(args) => {
            let volume = ElevationVolume::load(&args.volume)?;
            let sp = space(&volume, &config)?;
            let [sx, sy, syaw] = args.start;
            let [gx, gy, gyaw] = args.goal;
            let start = sp.lift(sx, sy, syaw, args.start_z)?;
            let goal = sp.lift(gx, gy, gyaw, args.goal_z)?;
            let problem = PlanningProblem::new(start, goal, config.timeout);
            let result = plan(&sp, &problem, &config.planner)?;
            eprintln!("{}: {}", config.planner.label(), result.status);
            emit(&(result.to_json()? + "\n"), args.output.as_deref())
        }
        Command::Bench {
            volume,
            jobs,
            output,
            csv,
        } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            let volume = match volume {
                Some(path) => ElevationVolume::load(path)?,
                None => {
                    let spec = config.terrain_spec(
                        config.terrain,
                        config.terrain_size,
                        config.problems.seed,
                    );
                    let cloud = generate_terrain(&spec)?;
                    pool.install(|| build_volume(&cloud, &config.map_config()))?
                }
            };
            let sp = space(&volume, &config)?;
            let report = pool.install(|| -> Result<_> {
                let problems = generate_problems(&sp, &config.problem_spec())?;
                run_benchmark(
                    &sp,
                    &problems,
                    &config.bench_configs(),
                    config.per_query_timeout,
                )
            })?;
            for s in &report.summaries {
                eprintln!(
                    "{}: success {:.2} ({} runs)",
                    s.label, s.success_rate, s.runs
                );
            }
            if let Some(path) = csv {
                std::fs::write(&path, report.to_csv()).map_err(|e| Error::io(&path, e))?;
            }
            emit(&(report.to_json()? + "\n"), output.as_deref())
        }
        Command::GenTerrain {
            kind,
            seed,
            size,
            output,
        } => {
            let spec = config.terrain_spec(kind, size.unwrap_or(config.terrain_size), seed);
            let cloud = generate_terrain(&spec)?;
            save_cloud(&cloud, &output, CloudFormat::Auto)
        }
        Command::Colorize {
            cloud,
            volume,
            output,
        } => {
            let points = load_cloud(&cloud, CloudFormat::Auto)?;
            let volume = ElevationVolume::load(&volume)?;
            save_cloud(
                &colorize_by_cost(&points, &volume)?,
                output,
                CloudFormat::Auto,
            )
        }
        Command::DumpConfig { output } => emit(&config.dump(), output.as_deref()),
    }
}
