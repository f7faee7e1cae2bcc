use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::Plane;
use crate::error::{Error, Result};

/// The four per-surfel terrain features.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticValues {
    /// Larger of roll and pitch, radians.
    pub tilt: f64,
    /// Mean absolute point-to-plane distance, meters.
    pub roughness: f64,
    /// Spread of point heights, meters.
    pub height_diff: f64,
    /// Largest absolute point-to-plane distance, meters.
    pub ground_clearance: f64,
}

/// Weights and normalization ranges for cost regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub w_tilt: f64,
    pub w_roughness: f64,
    pub w_height_diff: f64,
    pub w_ground_clearance: f64,
    pub max_tilt: f64,
    pub max_roughness: f64,
    pub max_height_diff: f64,
    pub max_ground_clearance: f64,
    pub max_cost: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            w_tilt: 0.25,
            w_roughness: 0.25,
            w_height_diff: 0.25,
            w_ground_clearance: 0.25,
            max_tilt: 0.4,
            max_roughness: 0.1,
            max_height_diff: 1.0,
            max_ground_clearance: 0.3,
            max_cost: 255.0,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("w_tilt", self.w_tilt),
            ("w_roughness", self.w_roughness),
            ("w_height_diff", self.w_height_diff),
            ("w_ground_clearance", self.w_ground_clearance),
        ];
        for (name, w) in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 0, got {w}"
                )));
            }
        }
        if weights.iter().all(|(_, w)| *w == 0.0) {
            return Err(Error::AllZeroWeights);
        }
        for (name, v) in [
            ("max_tilt", self.max_tilt),
            ("max_roughness", self.max_roughness),
            ("max_height_diff", self.max_height_diff),
            ("max_ground_clearance", self.max_ground_clearance),
            ("max_cost", self.max_cost),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Evaluates tilt, roughness, height difference and ground clearance of a
/// neighborhood against its fitted plane.
pub fn compute_critics(plane: &Plane, neighbors: &[Point3<f64>]) -> Result<CriticValues> {
    if neighbors.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let [a, b, c, d] = plane.coefficients();
    let norm = (a * a + b * b + c * c).sqrt();
    let roll = a.atan2(c).abs();
    let pitch = b.atan2(c).abs();

    let mut sum = 0.0;
    let mut farthest = 0.0f64;
    let mut zmin = f64::INFINITY;
    let mut zmax = f64::NEG_INFINITY;
    for p in neighbors {
        let dist = ((a * p.x + b * p.y + c * p.z + d) / norm).abs();
        sum += dist;
        farthest = farthest.max(dist);
        zmin = zmin.min(p.z);
        zmax = zmax.max(p.z);
    }
    Ok(CriticValues {
        tilt: roll.max(pitch),
        roughness: sum / neighbors.len() as f64,
        height_diff: zmax - zmin,
        ground_clearance: farthest,
    })
}

/// Weighted, range-normalized cost in `[0, max_cost]` and the traversability flag.
///
/// A surfel is non-traversable as soon as any raw critic exceeds its range.
pub fn regress_cost(critics: &CriticValues, config: &CostConfig) -> Result<(f64, bool)> {
    config.validate()?;
    let terms = [
        (config.w_tilt, critics.tilt, config.max_tilt),
        (config.w_roughness, critics.roughness, config.max_roughness),
        (
            config.w_height_diff,
            critics.height_diff,
            config.max_height_diff,
        ),
        (
            config.w_ground_clearance,
            critics.ground_clearance,
            config.max_ground_clearance,
        ),
    ];
    let weight_sum: f64 = terms.iter().map(|t| t.0).sum();
    let weighted: f64 = terms
        .iter()
        .map(|&(w, value, max)| w * (value / max).clamp(0.0, 1.0))
        .sum();
    let traversable = terms.iter().all(|&(_, value, max)| value <= max);
    let cost = (config.max_cost * weighted / weight_sum).clamp(0.0, config.max_cost);
    Ok((cost, traversable))
}
