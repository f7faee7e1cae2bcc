//! Optimizing sampling-based planners over the elevation state-space.

mod prm_star;
mod rrt_star;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state_space::{
    ElevationState, ElevationStateSpace, MotionTrace, SamplerBias, SamplerConfig,
};

pub use prm_star::prm_star;
pub use rrt_star::rrt_star;

pub const EXACT_GOAL_GAP: f64 = 0.2;
pub const APPROXIMATE_GOAL_GAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningProblem {
    pub start: ElevationState,
    pub goal: ElevationState,
    /// Wall-clock budget in seconds.
    pub timeout: f64,
    pub goal_tolerance_exact: f64,
    pub goal_tolerance_approx: f64,
}

impl PlanningProblem {
    pub fn new(start: ElevationState, goal: ElevationState, timeout: f64) -> Self {
        Self {
            start,
            goal,
            timeout,
            goal_tolerance_exact: EXACT_GOAL_GAP,
            goal_tolerance_approx: APPROXIMATE_GOAL_GAP,
        }
    }

    /// Checks tolerances and that both endpoints are valid states.
    pub fn validate(&self, space: &ElevationStateSpace) -> Result<()> {
        if !(self.goal_tolerance_exact > 0.0
            && self.goal_tolerance_exact < self.goal_tolerance_approx)
        {
            return Err(Error::InvalidConfig(format!(
                "goal tolerances must satisfy 0 < exact < approx, got {} and {}",
                self.goal_tolerance_exact, self.goal_tolerance_approx
            )));
        }
        if !(self.timeout > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "timeout must be > 0, got {}",
                self.timeout
            )));
        }
        for (which, s) in [("start", &self.start), ("goal", &self.goal)] {
            if !space.is_state_valid(s) {
                let reason = match space.snap_near(s, s.x, s.y) {
                    Err(e) => e.to_string(),
                    Ok(snap) if !space.volume().surfels()[snap.surfel].traversable => {
                        "surface under it is not traversable".to_string()
                    }
                    Ok(snap) => format!("z {} is {:.3} m off the surface", s.z, s.z - snap.z),
                };
                return Err(Error::InvalidStartOrGoal { which, reason });
            }
        }
        Ok(())
    }

    /// Solution class of a path ending at `end`.
    pub fn classify(&self, end: &ElevationState) -> PlanStatus {
        let gap = end.gap(&self.goal);
        if gap < self.goal_tolerance_exact {
            PlanStatus::Exact
        } else if gap < self.goal_tolerance_approx {
            PlanStatus::Approximate
        } else {
            PlanStatus::Failed
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanStatus {
    Exact,
    Approximate,
    Failed,
}

impl fmt::Display for PlanStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanStatus::Exact => "exact",
            PlanStatus::Approximate => "approximate",
            PlanStatus::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    RrtStar,
    PrmStar,
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlannerKind::RrtStar => "rrt-star",
            PlannerKind::PrmStar => "prm-star",
        })
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rrt-star" | "rrt*" => Ok(PlannerKind::RrtStar),
            "prm-star" | "prm*" => Ok(PlannerKind::PrmStar),
            _ => Err(Error::InvalidConfig(format!("unknown planner `{s}`"))),
        }
    }
}

/// What the planner minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    Length,
    Scoo,
    /// `alpha * length / L0 + (1 - alpha) * scoo / (L0 * M)`, where `L0` is
    /// the start-goal distance (at least one voxel) and `M` the maximum cost.
    Blend(f64),
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Length => f.write_str("length"),
            Objective::Scoo => f.write_str("scoo"),
            Objective::Blend(a) => write!(f, "blend:{a}"),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length" => Ok(Objective::Length),
            "scoo" => Ok(Objective::Scoo),
            _ => {
                let alpha = s
                    .strip_prefix("blend:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "unknown objective `{s}` (expected length, scoo or blend:<alpha>)"
                        ))
                    })?;
                Ok(Objective::Blend(alpha))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub planner: PlannerKind,
    pub objective: Objective,
    pub sampler: SamplerBias,
    /// Probability of sampling the goal directly (RRT* only).
    pub goal_bias: f64,
    /// Neighborhood constant: `k = ceil(gamma * ln n)`.
    pub gamma: f64,
    pub max_neighbors: usize,
    /// Longest RRT* extension in meters; `None` means a fifth of the map diagonal.
    pub range: Option<f64>,
    /// PRM* samples between shortest-path searches.
    pub batch_size: usize,
    pub max_iterations: usize,
    /// Return as soon as an exact solution exists.
    pub stop_on_exact: bool,
    /// Fill [`PlanResult::wall_time`]; off by default so results are reproducible byte for byte.
    pub record_timing: bool,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            planner: PlannerKind::PrmStar,
            objective: Objective::Scoo,
            sampler: SamplerBias::CostWeighted,
            goal_bias: 0.05,
            gamma: 2.0 * std::f64::consts::E,
            max_neighbors: 30,
            range: None,
            batch_size: 100,
            max_iterations: 2000,
            stop_on_exact: false,
            record_timing: false,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(0.0..1.0).contains(&self.goal_bias) {
            return bad(format!(
                "goal_bias must be in [0, 1), got {}",
                self.goal_bias
            ));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if self.max_neighbors == 0 || self.batch_size == 0 {
            return bad("max_neighbors and batch_size must be >= 1".into());
        }
        if let Some(r) = self.range {
            if !(r > 0.0) {
                return bad(format!("range must be > 0, got {r}"));
            }
        }
        if let Objective::Blend(a) = self.objective {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("blend weight must be in [0, 1], got {a}"));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}",
            self.planner,
            match self.sampler {
                SamplerBias::UniformValid => "uniform-valid",
                SamplerBias::CostWeighted => "cost-weighted",
                SamplerBias::Bounds => "bounds",
            },
            self.objective
        )
    }

    fn sampler_config(&self, space: &ElevationStateSpace) -> SamplerConfig {
        SamplerConfig {
            bias: self.sampler,
            max_cost: space.volume().cost_config().max_cost,
            seed: self.seed,
        }
    }

    fn neighbors(&self, n: usize) -> usize {
        let k = (self.gamma * (n.max(2) as f64).ln()).ceil() as usize;
        k.clamp(1, self.max_neighbors)
    }
}

/// Best objective value after a given iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub iteration: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    /// Solution densified at the motion step; consecutive states are motion-valid.
    pub path: Vec<ElevationState>,
    /// Sum of model distances along `path`.
    pub length: f64,
    /// Surface cost integrated along `path`.
    pub scoo: f64,
    /// Objective value of the returned solution.
    pub objective: f64,
    /// Distance from the last path state to the goal.
    pub goal_gap: f64,
    pub iterations: usize,
    pub wall_time: f64,
    /// Improvements of the best exact solution; values never increase.
    pub cost_history: Vec<CostRecord>,
}

impl PlanResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the planner selected by `config.planner`.
pub fn plan(
    space: &ElevationStateSpace,
    problem: &PlanningProblem,
    config: &PlannerConfig,
) -> Result<PlanResult> {
    match config.planner {
        PlannerKind::RrtStar => rrt_star(space, problem, config),
        PlannerKind::PrmStar => prm_star(space, problem, config),
    }
}

/// Edge weights under an objective.
#[derive(Debug, Clone, Copy)]
struct EdgeCost {
    objective: Objective,
    length_scale: f64,
    cost_scale: f64,
}

impl EdgeCost {
    fn new(objective: Objective, space: &ElevationStateSpace, problem: &PlanningProblem) -> Self {
        let length_scale = space
            .distance(&problem.start, &problem.goal)
            .max(space.volume().voxel_size());
        Self {
            objective,
            length_scale,
            cost_scale: length_scale * space.volume().cost_config().max_cost,
        }
    }

    fn of(&self, trace: &MotionTrace) -> f64 {
        match self.objective {
            Objective::Length => trace.length,
            Objective::Scoo => trace.scoo,
            Objective::Blend(a) => {
                a * trace.length / self.length_scale + (1.0 - a) * trace.scoo / self.cost_scale
            }
        }
    }
}

/// Shared bookkeeping for both planners.
struct Run<'s, 'v> {
    space: &'s ElevationStateSpace<'v>,
    problem: &'s PlanningProblem,
    config: &'s PlannerConfig,
    edge: EdgeCost,
    started: Instant,
    history: Vec<CostRecord>,
}

impl<'s, 'v> Run<'s, 'v> {
    fn new(
        space: &'s ElevationStateSpace<'v>,
        problem: &'s PlanningProblem,
        config: &'s PlannerConfig,
    ) -> Result<Self> {
        config.validate()?;
        problem.validate(space)?;
        Ok(Self {
            space,
            problem,
            config,
            edge: EdgeCost::new(config.objective, space, problem),
            started: Instant::now(),
            history: Vec::new(),
        })
    }

    fn out_of_budget(&self, iteration: usize) -> bool {
        iteration >= self.config.max_iterations
            || self.started.elapsed().as_secs_f64() >= self.problem.timeout
    }

    fn is_goal(&self, s: &ElevationState) -> bool {
        s.gap(&self.problem.goal) < self.problem.goal_tolerance_exact
    }

    fn record(&mut self, iteration: usize, cost: f64) {
        if self.history.last().is_none_or(|r| cost < r.cost) {
            self.history.push(CostRecord { iteration, cost });
        }
    }

    /// Validated motion with its objective cost.
    fn connect(&self, a: &ElevationState, b: &ElevationState) -> Option<(MotionTrace, f64)> {
        let trace = self.space.trace_motion(a, b.pose(), Some(b.z))?;
        let cost = self.edge.of(&trace);
        Some((trace, cost))
    }

    fn trivial(&self) -> bool {
        self.problem.start == self.problem.goal
    }

    /// Densifies `vertices` and assembles the result.
    fn finish(self, vertices: &[ElevationState], objective: f64, iterations: usize) -> PlanResult {
        let mut path = Vec::new();
        if let Some(first) = vertices.first() {
            path.push(*first);
        }
        for w in vertices.windows(2) {
            let trace = self
                .space
                .trace_motion(&w[0], w[1].pose(), Some(w[1].z))
                .expect("planner edges are validated before insertion");
            let n = trace.states.len();
            if n > 2 {
                path.extend_from_slice(&trace.states[1..n - 1]);
            }
            path.push(w[1]);
        }
        let status = match path.last() {
            Some(end) => self.problem.classify(end),
            None => PlanStatus::Failed,
        };
        let goal_gap = path
            .last()
            .map_or(f64::INFINITY, |e| e.gap(&self.problem.goal));
        let length = self.space.path_length(&path);
        let scoo = if path.is_empty() {
            0.0
        } else {
            self.space
                .scoo_cost(&path)
                .expect("planner paths contain only valid states")
        };
        PlanResult {
            status,
            path,
            length,
            scoo,
            objective,
            goal_gap,
            iterations,
            wall_time: if self.config.record_timing {
                self.started.elapsed().as_secs_f64()
            } else {
                0.0
            },
            cost_history: self.history,
        }
    }

    fn failed(self, iterations: usize) -> PlanResult {
        self.finish(&[], f64::INFINITY, iterations)
    }
}

/// `f64` ordered by `total_cmp`, for heaps.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Indices of the `k` entries of `items` nearest to `to` under the space
/// distance (from item to `to`), ties by index. `skip` is excluded.
fn k_nearest(
    space: &ElevationStateSpace,
    items: &[ElevationState],
    to: &ElevationState,
    k: usize,
    skip: Option<usize>,
) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = items
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, s)| (space.distance(s, to), i))
        .collect();
    let k = k.min(d.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    d.select_nth_unstable_by(k - 1, cmp);
    d.truncate(k);
    d.sort_by(cmp);
    d.into_iter().map(|(_, i)| i).collect()
}
