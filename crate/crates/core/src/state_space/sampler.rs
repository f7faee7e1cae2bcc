use std::f64::consts::PI;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ElevationState;
use crate::error::{Error, Result};
use crate::surfel::ElevationVolume;

/// Floor applied to surfel costs before inversion.
pub const MIN_SAMPLING_COST: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerBias {
    /// Every traversable surfel equally likely.
    UniformValid,
    /// Surfel `i` drawn with probability proportional to `M / max(J_i, 1)`.
    CostWeighted,
    /// Uniform over the bounding box of the elevated surfels, ignoring the
    /// surface. Samples are usually invalid; kept as a surface-agnostic baseline.
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub bias: SamplerBias,
    pub max_cost: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            bias: SamplerBias::CostWeighted,
            max_cost: 255.0,
            seed: 0,
        }
    }
}

/// Normalized inverse-cost sampling probabilities.
pub fn inverse_cost_weights(costs: &[f64], max_cost: f64) -> Vec<f64> {
    let raw: Vec<f64> = costs
        .iter()
        .map(|&j| max_cost / j.max(MIN_SAMPLING_COST))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Draws states centered on traversable surfels.
#[derive(Debug, Clone)]
pub struct SurfelSampler<'a> {
    volume: &'a ElevationVolume,
    support: &'a [usize],
    weights: Option<WeightedIndex<f64>>,
    rng: ChaCha8Rng,
}

impl<'a> SurfelSampler<'a> {
    pub fn new(volume: &'a ElevationVolume, config: &SamplerConfig) -> Result<Self> {
        if !(config.max_cost > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sampler max_cost must be > 0, got {}",
                config.max_cost
            )));
        }
        let support = volume.traversable();
        if support.is_empty() {
            return Err(Error::NoValidSamples);
        }
        let weights = match config.bias {
            SamplerBias::Bounds => {
                return Err(Error::InvalidConfig(
                    "bounds sampling does not draw surfels; use StateSampler".into(),
                ))
            }
            SamplerBias::UniformValid => None,
            SamplerBias::CostWeighted => {
                let costs: Vec<f64> = support.iter().map(|&i| volume.surfels()[i].cost).collect();
                let w = inverse_cost_weights(&costs, config.max_cost);
                Some(WeightedIndex::new(w).map_err(|e| Error::InvalidConfig(e.to_string()))?)
            }
        };
        Ok(Self {
            volume,
            support,
            weights,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    /// Index into the volume of the next drawn surfel.
    pub fn sample_surfel(&mut self) -> usize {
        let k = match &self.weights {
            Some(w) => w.sample(&mut self.rng),
            None => self.rng.gen_range(0..self.support.len()),
        };
        self.support[k]
    }

    pub fn sample(&mut self) -> ElevationState {
        let i = self.sample_surfel();
        let p = self.volume.elevated(i);
        // (-pi, pi]
        let yaw = PI - self.rng.gen::<f64>() * 2.0 * PI;
        ElevationState {
            x: p.x,
            y: p.y,
            yaw,
            z: p.z,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Planner-side sampler: surfel-based for the SVSS modes, box-uniform for
/// [`SamplerBias::Bounds`].
#[derive(Debug, Clone)]
pub enum StateSampler<'a> {
    Surfel(SurfelSampler<'a>),
    Bounds {
        lo: [f64; 3],
        hi: [f64; 3],
        rng: ChaCha8Rng,
    },
}

impl<'a> StateSampler<'a> {
    pub fn new(volume: &'a ElevationVolume, config: &SamplerConfig) -> Result<Self> {
        if config.bias != SamplerBias::Bounds {
            return Ok(StateSampler::Surfel(SurfelSampler::new(volume, config)?));
        }
        if volume.traversable().is_empty() {
            return Err(Error::NoValidSamples);
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for i in 0..volume.len() {
            let p = volume.elevated(i);
            for (k, v) in [p.x, p.y, p.z].into_iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        Ok(StateSampler::Bounds {
            lo,
            hi,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    pub fn sample(&mut self) -> ElevationState {
        match self {
            StateSampler::Surfel(s) => s.sample(),
            StateSampler::Bounds { lo, hi, rng } => {
                let mut axis = |k: usize| lo[k] + rng.gen::<f64>() * (hi[k] - lo[k]);
                let (x, y, z) = (axis(0), axis(1), axis(2));
                let yaw = PI - rng.gen::<f64>() * 2.0 * PI;
                ElevationState { x, y, yaw, z }
            }
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        match self {
            StateSampler::Surfel(s) => s.rng(),
            StateSampler::Bounds { rng, .. } => rng,
        }
    }
}

/// One draw from a fresh sampler.
pub fn sample_valid_state(
    volume: &ElevationVolume,
    config: &SamplerConfig,
) -> Result<ElevationState> {
    Ok(SurfelSampler::new(volume, config)?.sample())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_surfel_weights() {
        let w = inverse_cost_weights(&[10.0, 20.0], 255.0);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_is_floored() {
        let w = inverse_cost_weights(&[0.0, 1.0, 2.0], 255.0);
        assert!((w[0] - w[1]).abs() < 1e-12);
        assert!((w[0] - 2.0 * w[2]).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        let w = inverse_cost_weights(&[3.0, 50.0, 254.0, 0.5, 17.0], 255.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
