//! Surfel extraction, cost critics and the stacked elevation volume.

mod critics;
mod plane;
mod volume;

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::spatial::{build_index, voxel_downsample};

pub use critics::{compute_critics, regress_cost, CostConfig, CriticValues};
pub use plane::{
    fit_plane_ransac, fit_plane_ransac_with, least_squares_plane, Plane, RansacParams,
};
pub use volume::{build_volume, elevate_and_stack, ElevationParams, ElevationVolume, MapConfig};

/// A disc-shaped surface element summarizing one voxel of terrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surfel {
    pub position: Point3<f64>,
    /// Unit normal with non-negative z.
    pub normal: Vector3<f64>,
    pub radius: f64,
    pub critics: CriticValues,
    pub cost: f64,
    pub traversable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfelParams {
    pub voxel_size: f64,
    pub ransac: RansacParams,
    /// Neighborhoods with fewer points are dropped.
    pub min_neighbors: usize,
}

impl Default for SurfelParams {
    fn default() -> Self {
        Self {
            voxel_size: 1.0,
            ransac: RansacParams::default(),
            min_neighbors: 5,
        }
    }
}

impl SurfelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0) || !self.voxel_size.is_finite() {
            return Err(Error::NonPositiveVoxelSize(self.voxel_size));
        }
        if self.ransac.iterations == 0 || !(self.ransac.inlier_threshold > 0.0) {
            return Err(Error::InvalidConfig(
                "RANSAC needs iterations >= 1 and a positive inlier threshold".into(),
            ));
        }
        if self.min_neighbors < 3 {
            return Err(Error::InvalidConfig("min_neighbors must be >= 3".into()));
        }
        Ok(())
    }
}

/// Builds one surfel per occupied voxel of `cloud`.
///
/// Each surfel sits at its voxel centroid with radius `voxel_size / 2`. The
/// normal comes from a RANSAC fit over all original points within
/// `voxel_size` of the centroid; critics and cost are evaluated on the same
/// neighborhood. Surfel `i` draws from RNG stream `i` of `seed`, so the result
/// does not depend on evaluation order.
pub fn build_surfel_set(
    cloud: &PointCloud,
    params: &SurfelParams,
    cost: &CostConfig,
    seed: u64,
) -> Result<Vec<Surfel>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    params.validate()?;
    cost.validate()?;
    cloud.validate()?;
    let sampled = voxel_downsample(cloud, params.voxel_size)?;
    let index = build_index(&cloud.points);

    let surfels = sampled
        .points
        .par_iter()
        .enumerate()
        .map(|(i, center)| -> Result<Option<Surfel>> {
            let ids = index.radius_query(&[center.x, center.y, center.z], params.voxel_size)?;
            if ids.len() < params.min_neighbors {
                return Ok(None);
            }
            let neighbors: Vec<Point3<f64>> = ids.iter().map(|&k| cloud.points[k]).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let plane = match fit_plane_ransac_with(&neighbors, &params.ransac, &mut rng) {
                Ok(p) => p,
                Err(Error::DegenerateGeometry | Error::InsufficientPoints(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let critics = compute_critics(&plane, &neighbors)?;
            let (cost_value, traversable) = regress_cost(&critics, cost)?;
            Ok(Some(Surfel {
                position: *center,
                normal: plane.normal,
                radius: params.voxel_size / 2.0,
                critics,
                cost: cost_value,
                traversable,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(surfels.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_grid(extent: f64, spacing: f64) -> PointCloud {
        let n = (extent / spacing).round() as usize;
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(Point3::new(
                    (i as f64 + 0.5) * spacing,
                    (j as f64 + 0.5) * spacing,
                    0.0,
                ));
            }
        }
        PointCloud::new(pts)
    }

    #[test]
    fn flat_plane_surfels() {
        let cloud = flat_grid(10.0, 0.1);
        let surfels =
            build_surfel_set(&cloud, &SurfelParams::default(), &CostConfig::default(), 3).unwrap();
        assert_eq!(surfels.len(), 100);
        for s in &surfels {
            assert!(s.critics.tilt < 1e-6);
            assert!(s.traversable);
            assert_eq!(s.radius, 0.5);
            assert!((s.normal.norm() - 1.0).abs() < 1e-9 && s.normal.z >= 0.0);
        }
    }

    #[test]
    fn isolated_point_is_dropped() {
        let mut cloud = flat_grid(4.0, 0.1);
        cloud.points.push(Point3::new(30.0, 30.0, 0.0));
        let surfels =
            build_surfel_set(&cloud, &SurfelParams::default(), &CostConfig::default(), 3).unwrap();
        assert_eq!(surfels.len(), 16);
        assert!(surfels.iter().all(|s| s.position.x < 5.0));
    }

    #[test]
    fn empty_cloud_rejected() {
        let err = build_surfel_set(
            &PointCloud::default(),
            &SurfelParams::default(),
            &CostConfig::default(),
            0,
        );
        assert!(matches!(err, Err(Error::EmptyCloud)));
    }

    #[test]
    fn deterministic_for_seed() {
        let mut cloud = flat_grid(6.0, 0.2);
        for (i, p) in cloud.points.iter_mut().enumerate() {
            p.z = ((i * 7919) % 13) as f64 * 0.01;
        }
        let a =
            build_surfel_set(&cloud, &SurfelParams::default(), &CostConfig::default(), 9).unwrap();
        let b =
            build_surfel_set(&cloud, &SurfelParams::default(), &CostConfig::default(), 9).unwrap();
        assert_eq!(a, b);
    }
}
