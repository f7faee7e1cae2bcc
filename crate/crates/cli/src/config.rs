//! Flat `key = value` configuration with `#` comments.
//!
//! Every key has a default; unknown keys and unparsable values are errors.
//! [`Config::dump`] writes every key so the output reloads to the same
//! settings.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use surfnav::bench::{ProblemSpec, TerrainKind, TerrainSpec};
use surfnav::planner::{Objective, PlannerConfig, PlannerKind};
use surfnav::state_space::{MotionModel, PlanarMotion, SamplerBias, SpaceParams};
use surfnav::surfel::{CostConfig, ElevationParams, MapConfig, RansacParams, SurfelParams};
use surfnav::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionMode {
    EuclideanSe2,
    Dubins,
}

impl FromStr for MotionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean-se2" => Ok(MotionMode::EuclideanSe2),
            "dubins" => Ok(MotionMode::Dubins),
            _ => Err(Error::InvalidConfig(format!("unknown motion mode `{s}`"))),
        }
    }
}

impl Display for MotionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MotionMode::EuclideanSe2 => "euclidean-se2",
            MotionMode::Dubins => "dubins",
        })
    }
}

/// Numeric value or `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

impl FromStr for Auto {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(Auto::Auto)
        } else {
            parse::<f64>("value", s).map(Auto::Value)
        }
    }
}

impl Display for Auto {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Auto::Auto => f.write_str("auto"),
            Auto::Value(v) => write!(f, "{v}"),
        }
    }
}

fn sampler_name(b: SamplerBias) -> &'static str {
    match b {
        SamplerBias::UniformValid => "uniform-valid",
        SamplerBias::CostWeighted => "cost-weighted",
        SamplerBias::Bounds => "bounds",
    }
}

fn parse_sampler(s: &str) -> Result<SamplerBias> {
    match s {
        "uniform-valid" => Ok(SamplerBias::UniformValid),
        "cost-weighted" => Ok(SamplerBias::CostWeighted),
        "bounds" => Ok(SamplerBias::Bounds),
        _ => Err(Error::InvalidConfig(format!("unknown sampler `{s}`"))),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("`{key}`: cannot parse `{value}`")))
}

fn list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

/// Robot-specific constants feeding the cost ranges, elevation and motion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Robot {
    pub max_tilt: f64,
    pub ground_clearance: f64,
    /// Center-of-gravity height; surfels are lifted by this much.
    pub cog_height: f64,
    pub height: f64,
    pub turning_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub voxel_size: f64,
    pub ransac: RansacParams,
    pub min_neighbors: usize,
    pub stack_step: f64,
    pub map_seed: u64,
    pub cost: CostConfig,
    pub robot: Robot,
    pub z_tolerance: f64,
    pub z_step_max: f64,
    pub snap_radius: Auto,
    pub motion_step: Auto,
    pub max_slope: f64,
    pub motion: MotionMode,
    pub yaw_weight: f64,
    pub z_weight: f64,
    pub planner: PlannerConfig,
    pub timeout: f64,
    pub bench_planners: Vec<PlannerKind>,
    pub bench_samplers: Vec<SamplerBias>,
    pub bench_objectives: Vec<Objective>,
    pub problems: ProblemSpec,
    pub per_query_timeout: f64,
    pub terrain: TerrainKind,
    pub terrain_size: f64,
    pub terrain_density: f64,
}

impl Default for Config {
    fn default() -> Self {
        let cost = CostConfig::default();
        let elevation = ElevationParams::default();
        Self {
            voxel_size: 1.0,
            ransac: RansacParams::default(),
            min_neighbors: SurfelParams::default().min_neighbors,
            stack_step: elevation.step,
            map_seed: 0,
            cost,
            robot: Robot {
                max_tilt: cost.max_tilt,
                ground_clearance: cost.max_ground_clearance,
                cog_height: elevation.elevation,
                height: 1.0,
                turning_radius: 1.0,
            },
            z_tolerance: 0.3,
            z_step_max: 0.3,
            snap_radius: Auto::Auto,
            motion_step: Auto::Auto,
            max_slope: 0.4,
            motion: MotionMode::EuclideanSe2,
            yaw_weight: 0.5,
            z_weight: 1.0,
            planner: PlannerConfig::default(),
            timeout: 10.0,
            bench_planners: vec![PlannerKind::RrtStar, PlannerKind::PrmStar],
            bench_samplers: vec![SamplerBias::UniformValid, SamplerBias::CostWeighted],
            bench_objectives: vec![Objective::Length, Objective::Scoo],
            problems: ProblemSpec::default(),
            per_query_timeout: 10.0,
            terrain: TerrainKind::Hills,
            terrain_size: 60.0,
            terrain_density: 25.0,
        }
    }
}

/// `(key, comment)` in dump order.
const KEYS: &[(&str, &str)] = &[
    (
        "map.voxel_size",
        "downsampling voxel edge d_s in meters; also the surfel neighborhood radius",
    ),
    ("map.ransac_iterations", "RANSAC hypotheses per surfel"),
    ("map.ransac_threshold", "RANSAC inlier distance in meters"),
    (
        "map.min_neighbors",
        "fewest cloud points needed to fit a surfel",
    ),
    (
        "map.stack_step",
        "spacing between stacked waffle layers s_size",
    ),
    ("map.seed", "seed of the per-surfel RANSAC streams"),
    ("cost.w_tilt", "critic weights"),
    ("cost.w_roughness", ""),
    ("cost.w_height_diff", ""),
    ("cost.w_ground_clearance", ""),
    (
        "cost.max_roughness",
        "critic ranges; a surfel exceeding any range is not traversable",
    ),
    ("cost.max_height_diff", ""),
    ("cost.max_cost", "maximum cost M"),
    ("robot.max_tilt", "largest traversable tilt in radians"),
    (
        "robot.ground_clearance",
        "largest point deviation from the surfel plane in meters",
    ),
    (
        "robot.cog_height",
        "center-of-gravity height; surfels are elevated by this much",
    ),
    (
        "robot.height",
        "robot height; sets the number of waffle layers",
    ),
    (
        "robot.turning_radius",
        "minimum turning radius for dubins motion",
    ),
    (
        "space.z_tolerance",
        "allowed gap between a state and its surface in meters",
    ),
    (
        "space.z_step_max",
        "largest height change between interpolated states",
    ),
    (
        "space.snap_radius",
        "horizontal snap reach in meters, or auto for 1.5 d_s",
    ),
    (
        "space.motion_step",
        "interpolation step in meters, or auto for d_s / 2",
    ),
    (
        "space.max_slope",
        "slope in radians used to keep snaps on the current layer",
    ),
    ("space.motion", "euclidean-se2 or dubins"),
    ("space.yaw_weight", "distance weights"),
    ("space.z_weight", ""),
    ("planner.kind", "rrt-star or prm-star"),
    ("planner.objective", "length, scoo or blend:<alpha>"),
    ("planner.sampler", "cost-weighted, uniform-valid or bounds"),
    ("planner.goal_bias", "RRT* goal sampling probability"),
    (
        "planner.gamma",
        "neighborhood constant, k = ceil(gamma ln n)",
    ),
    ("planner.max_neighbors", "cap on k"),
    ("planner.range", "RRT* extension length in meters, or auto"),
    (
        "planner.batch_size",
        "PRM* samples between shortest-path searches",
    ),
    ("planner.max_iterations", "iteration budget"),
    (
        "planner.stop_on_exact",
        "return at the first exact solution",
    ),
    ("planner.timeout", "wall-clock budget in seconds"),
    (
        "planner.record_timing",
        "write measured wall time into results (breaks byte-identical output)",
    ),
    ("planner.seed", ""),
    (
        "bench.planners",
        "comma lists; every combination is benchmarked",
    ),
    ("bench.samplers", ""),
    ("bench.objectives", ""),
    ("bench.count", "number of random problems"),
    ("bench.d_min", "start-goal distance range in meters"),
    ("bench.d_max", ""),
    (
        "bench.verify_timeout",
        "solvability check budget in seconds",
    ),
    ("bench.verify_iterations", ""),
    (
        "bench.per_query_timeout",
        "budget of each benchmark run in seconds",
    ),
    ("bench.seed", ""),
    (
        "terrain.kind",
        "flat, hills, ramp, wall-gap, pier-overlap or mixed",
    ),
    ("terrain.size", "edge of the square fixture in meters"),
    ("terrain.density", "points per square meter"),
];

impl Config {
    pub fn keys() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|(k, _)| *k)
    }

    pub fn get(&self, key: &str) -> Result<String> {
        let p = &self.planner;
        Ok(match key {
            "map.voxel_size" => self.voxel_size.to_string(),
            "map.ransac_iterations" => self.ransac.iterations.to_string(),
            "map.ransac_threshold" => self.ransac.inlier_threshold.to_string(),
            "map.min_neighbors" => self.min_neighbors.to_string(),
            "map.stack_step" => self.stack_step.to_string(),
            "map.seed" => self.map_seed.to_string(),
            "cost.w_tilt" => self.cost.w_tilt.to_string(),
            "cost.w_roughness" => self.cost.w_roughness.to_string(),
            "cost.w_height_diff" => self.cost.w_height_diff.to_string(),
            "cost.w_ground_clearance" => self.cost.w_ground_clearance.to_string(),
            "cost.max_roughness" => self.cost.max_roughness.to_string(),
            "cost.max_height_diff" => self.cost.max_height_diff.to_string(),
            "cost.max_cost" => self.cost.max_cost.to_string(),
            "robot.max_tilt" => self.robot.max_tilt.to_string(),
            "robot.ground_clearance" => self.robot.ground_clearance.to_string(),
            "robot.cog_height" => self.robot.cog_height.to_string(),
            "robot.height" => self.robot.height.to_string(),
            "robot.turning_radius" => self.robot.turning_radius.to_string(),
            "space.z_tolerance" => self.z_tolerance.to_string(),
            "space.z_step_max" => self.z_step_max.to_string(),
            "space.snap_radius" => self.snap_radius.to_string(),
            "space.motion_step" => self.motion_step.to_string(),
            "space.max_slope" => self.max_slope.to_string(),
            "space.motion" => self.motion.to_string(),
            "space.yaw_weight" => self.yaw_weight.to_string(),
            "space.z_weight" => self.z_weight.to_string(),
            "planner.kind" => p.planner.to_string(),
            "planner.objective" => p.objective.to_string(),
            "planner.sampler" => sampler_name(p.sampler).to_string(),
            "planner.goal_bias" => p.goal_bias.to_string(),
            "planner.gamma" => p.gamma.to_string(),
            "planner.max_neighbors" => p.max_neighbors.to_string(),
            "planner.range" => p.range.map_or(Auto::Auto, Auto::Value).to_string(),
            "planner.batch_size" => p.batch_size.to_string(),
            "planner.max_iterations" => p.max_iterations.to_string(),
            "planner.stop_on_exact" => p.stop_on_exact.to_string(),
            "planner.timeout" => self.timeout.to_string(),
            "planner.record_timing" => p.record_timing.to_string(),
            "planner.seed" => p.seed.to_string(),
            "bench.planners" => join(&self.bench_planners, |k| k.to_string()),
            "bench.samplers" => join(&self.bench_samplers, |b| sampler_name(*b).to_string()),
            "bench.objectives" => join(&self.bench_objectives, |o| o.to_string()),
            "bench.count" => self.problems.count.to_string(),
            "bench.d_min" => self.problems.d_min.to_string(),
            "bench.d_max" => self.problems.d_max.to_string(),
            "bench.verify_timeout" => self.problems.verify_timeout.to_string(),
            "bench.verify_iterations" => self.problems.verify_iterations.to_string(),
            "bench.per_query_timeout" => self.per_query_timeout.to_string(),
            "bench.seed" => self.problems.seed.to_string(),
            "terrain.kind" => self.terrain.to_string(),
            "terrain.size" => self.terrain_size.to_string(),
            "terrain.density" => self.terrain_density.to_string(),
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let f = || parse::<f64>(key, v);
        let u = || parse::<usize>(key, v);
        let seed = || parse::<u64>(key, v);
        let b = || parse::<bool>(key, v);
        let p = &mut self.planner;
        match key {
            "map.voxel_size" => self.voxel_size = f()?,
            "map.ransac_iterations" => self.ransac.iterations = u()?,
            "map.ransac_threshold" => self.ransac.inlier_threshold = f()?,
            "map.min_neighbors" => self.min_neighbors = u()?,
            "map.stack_step" => self.stack_step = f()?,
            "map.seed" => self.map_seed = seed()?,
            "cost.w_tilt" => self.cost.w_tilt = f()?,
            "cost.w_roughness" => self.cost.w_roughness = f()?,
            "cost.w_height_diff" => self.cost.w_height_diff = f()?,
            "cost.w_ground_clearance" => self.cost.w_ground_clearance = f()?,
            "cost.max_roughness" => self.cost.max_roughness = f()?,
            "cost.max_height_diff" => self.cost.max_height_diff = f()?,
            "cost.max_cost" => self.cost.max_cost = f()?,
            "robot.max_tilt" => self.robot.max_tilt = f()?,
            "robot.ground_clearance" => self.robot.ground_clearance = f()?,
            "robot.cog_height" => self.robot.cog_height = f()?,
            "robot.height" => self.robot.height = f()?,
            "robot.turning_radius" => self.robot.turning_radius = f()?,
            "space.z_tolerance" => self.z_tolerance = f()?,
            "space.z_step_max" => self.z_step_max = f()?,
            "space.snap_radius" => self.snap_radius = v.parse()?,
            "space.motion_step" => self.motion_step = v.parse()?,
            "space.max_slope" => self.max_slope = f()?,
            "space.motion" => self.motion = v.parse()?,
            "space.yaw_weight" => self.yaw_weight = f()?,
            "space.z_weight" => self.z_weight = f()?,
            "planner.kind" => p.planner = v.parse()?,
            "planner.objective" => p.objective = v.parse()?,
            "planner.sampler" => p.sampler = parse_sampler(v)?,
            "planner.goal_bias" => p.goal_bias = f()?,
            "planner.gamma" => p.gamma = f()?,
            "planner.max_neighbors" => p.max_neighbors = u()?,
            "planner.range" => {
                p.range = match v.parse::<Auto>()? {
                    Auto::Auto => None,
                    Auto::Value(r) => Some(r),
                }
            }
            "planner.batch_size" => p.batch_size = u()?,
            "planner.max_iterations" => p.max_iterations = u()?,
            "planner.stop_on_exact" => p.stop_on_exact = b()?,
            "planner.timeout" => self.timeout = f()?,
            "planner.record_timing" => p.record_timing = b()?,
            "planner.seed" => p.seed = seed()?,
            "bench.planners" => self.bench_planners = list(v, str::parse)?,
            "bench.samplers" => self.bench_samplers = list(v, parse_sampler)?,
            "bench.objectives" => self.bench_objectives = list(v, str::parse)?,
            "bench.count" => self.problems.count = u()?,
            "bench.d_min" => self.problems.d_min = f()?,
            "bench.d_max" => self.problems.d_max = f()?,
            "bench.verify_timeout" => self.problems.verify_timeout = f()?,
            "bench.verify_iterations" => self.problems.verify_iterations = u()?,
            "bench.per_query_timeout" => self.per_query_timeout = f()?,
            "bench.seed" => self.problems.seed = seed()?,
            "terrain.kind" => self.terrain = v.parse()?,
            "terrain.size" => self.terrain_size = f()?,
            "terrain.density" => self.terrain_density = f()?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current settings.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(n + 1, format!("expected `key = value`, got `{line}`"))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::parse(n + 1, e.to_string()))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("override `{assignment}` is not key=value"))
        })?;
        self.set(key.trim(), value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Config::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    /// Every key with its current value.
    pub fn dump(&self) -> String {
        let mut out = String::from("# surfnav configuration\n");
        let mut section = "";
        for (key, comment) in KEYS {
            let s = key.split('.').next().unwrap_or("");
            if s != section {
                out.push('\n');
                section = s;
            }
            if !comment.is_empty() {
                out.push_str(&format!("# {comment}\n"));
            }
            let value = self.get(key).expect("dump covers known keys");
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    pub fn map_config(&self) -> MapConfig {
        MapConfig {
            surfels: SurfelParams {
                voxel_size: self.voxel_size,
                ransac: self.ransac,
                min_neighbors: self.min_neighbors,
            },
            cost: CostConfig {
                max_tilt: self.robot.max_tilt,
                max_ground_clearance: self.robot.ground_clearance,
                ..self.cost
            },
            elevation: ElevationParams {
                elevation: self.robot.cog_height,
                step: self.stack_step,
                stack_count: ElevationParams::stack_for_height(self.robot.height, self.stack_step),
            },
            seed: self.map_seed,
        }
    }

    /// State-space parameters for a map with voxel size `voxel_size`.
    pub fn space_params(&self, voxel_size: f64) -> SpaceParams {
        let auto = SpaceParams::for_voxel_size(voxel_size);
        SpaceParams {
            z_tolerance: self.z_tolerance,
            z_step_max: self.z_step_max,
            snap_radius: match self.snap_radius {
                Auto::Auto => auto.snap_radius,
                Auto::Value(v) => v,
            },
            motion_step: match self.motion_step {
                Auto::Auto => auto.motion_step,
                Auto::Value(v) => v,
            },
            max_slope: self.max_slope,
        }
    }

    pub fn motion_model(&self) -> MotionModel {
        MotionModel {
            planar: match self.motion {
                MotionMode::EuclideanSe2 => PlanarMotion::EuclideanSe2,
                MotionMode::Dubins => PlanarMotion::Dubins {
                    turning_radius: self.robot.turning_radius,
                },
            },
            yaw_weight: self.yaw_weight,
            z_weight: self.z_weight,
        }
    }

    /// Planner configurations compared by `bench`, in a fixed order.
    pub fn bench_configs(&self) -> Vec<PlannerConfig> {
        let mut out = Vec::new();
        for &planner in &self.bench_planners {
            for &sampler in &self.bench_samplers {
                for &objective in &self.bench_objectives {
                    out.push(PlannerConfig {
                        planner,
                        sampler,
                        objective,
                        ..self.planner
                    });
                }
            }
        }
        out
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec {
            query_timeout: self.per_query_timeout,
            ..self.problems
        }
    }

    pub fn terrain_spec(&self, kind: TerrainKind, size: f64, seed: u64) -> TerrainSpec {
        TerrainSpec {
            density: self.terrain_density,
            ..TerrainSpec::new(kind, size, seed)
        }
    }

    /// Checks every derived parameter block against its module's rules.
    pub fn validate(&self) -> Result<()> {
        let map = self.map_config();
        map.surfels.validate()?;
        map.cost.validate()?;
        map.elevation.validate()?;
        self.space_params(self.voxel_size).validate()?;
        self.motion_model().validate()?;
        self.planner.validate()?;
        for c in self.bench_configs() {
            c.validate()?;
        }
        if !(self.timeout > 0.0) || !(self.per_query_timeout > 0.0) {
            return Err(Error::InvalidConfig("timeouts must be > 0".into()));
        }
        if !(self.robot.height > 0.0) {
            return Err(Error::InvalidConfig("robot.height must be > 0".into()));
        }
        if self.bench_planners.is_empty()
            || self.bench_samplers.is_empty()
            || self.bench_objectives.is_empty()
        {
            return Err(Error::EmptyConfigList);
        }
        self.terrain_spec(self.terrain, self.terrain_size, 0)
            .validate()
    }
}
