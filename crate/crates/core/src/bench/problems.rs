use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{prm_star, PlanStatus, PlannerConfig, PlannerKind, PlanningProblem};
use crate::state_space::{ElevationState, ElevationStateSpace, SamplerBias};

/// How random problems are drawn and verified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub count: usize,
    /// Start-goal Euclidean distance range in meters.
    pub d_min: f64,
    pub d_max: f64,
    /// Budget of the solvability check.
    pub verify_timeout: f64,
    pub verify_iterations: usize,
    /// Timeout stored on each generated problem.
    pub query_timeout: f64,
    pub seed: u64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            count: 50,
            d_min: 15.0,
            d_max: 40.0,
            verify_timeout: 60.0,
            verify_iterations: 4000,
            query_timeout: 10.0,
            seed: 0,
        }
    }
}

/// Planner used to confirm that a drawn problem has an exact solution.
pub fn verification_planner(spec: &ProblemSpec, attempt: u64) -> PlannerConfig {
    PlannerConfig {
        planner: PlannerKind::PrmStar,
        sampler: SamplerBias::CostWeighted,
        max_iterations: spec.verify_iterations,
        stop_on_exact: true,
        seed: spec.seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ..PlannerConfig::default()
    }
}

/// Draws `spec.count` start/goal pairs on traversable surfels whose distance
/// lies in `[d_min, d_max]`, keeping only pairs the verification planner
/// solves exactly.
pub fn generate_problems(
    space: &ElevationStateSpace,
    spec: &ProblemSpec,
) -> Result<Vec<PlanningProblem>> {
    if spec.count == 0 {
        return Ok(Vec::new());
    }
    if !(spec.d_min >= 0.0 && spec.d_min < spec.d_max) {
        return Err(Error::InvalidConfig(format!(
            "need 0 <= d_min < d_max, got {} and {}",
            spec.d_min, spec.d_max
        )));
    }
    let volume = space.volume();
    let candidates: Vec<ElevationState> = volume
        .traversable()
        .iter()
        .map(|&i| {
            let p = volume.elevated(i);
            ElevationState::new(p.x, p.y, 0.0, p.z)
        })
        .filter(|s| space.is_state_valid(s))
        .collect();
    let span = diagonal(&candidates);
    if span < spec.d_min {
        return Err(Error::UnsatisfiableSpec(format!(
            "traversable region spans {span:.1} m, less than d_min = {} m",
            spec.d_min
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    let max_attempts = 20 * spec.count + 100;
    let mut attempts = 0u64;
    while out.len() < spec.count {
        if attempts as usize >= max_attempts {
            return Err(Error::UnsatisfiableSpec(format!(
                "found {} of {} solvable problems in {max_attempts} attempts",
                out.len(),
                spec.count
            )));
        }
        attempts += 1;
        let start = candidates[rng.gen_range(0..candidates.len())];
        let in_range: Vec<&ElevationState> = candidates
            .iter()
            .filter(|g| (spec.d_min..=spec.d_max).contains(&start.gap(g)))
            .collect();
        if in_range.is_empty() {
            continue;
        }
        let goal = *in_range[rng.gen_range(0..in_range.len())];
        let yaw =
            |rng: &mut ChaCha8Rng| std::f64::consts::PI - rng.gen::<f64>() * std::f64::consts::TAU;
        let start = ElevationState::new(start.x, start.y, yaw(&mut rng), start.z);
        let goal = ElevationState::new(goal.x, goal.y, yaw(&mut rng), goal.z);

        let verify = PlanningProblem::new(start, goal, spec.verify_timeout);
        let result = prm_star(space, &verify, &verification_planner(spec, attempts))?;
        if result.status == PlanStatus::Exact {
            out.push(PlanningProblem::new(start, goal, spec.query_timeout));
        }
    }
    Ok(out)
}

fn diagonal(states: &[ElevationState]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in states {
        for (k, v) in [s.x, s.y, s.z].into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
}
