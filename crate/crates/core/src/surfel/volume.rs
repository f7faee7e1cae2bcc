use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{build_surfel_set, CostConfig, Surfel, SurfelParams};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::spatial::KdTree;

/// How far surfels are lifted and how their waffles are stacked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElevationParams {
    /// Lift along the normal, usually the robot's center-of-gravity height.
    pub elevation: f64,
    /// Spacing between stacked layers.
    pub step: f64,
    pub stack_count: usize,
}

impl Default for ElevationParams {
    fn default() -> Self {
        Self {
            elevation: 0.4,
            step: 0.2,
            stack_count: 5,
        }
    }
}

impl ElevationParams {
    /// Stack count covering `robot_height` at `step` spacing.
    pub fn stack_for_height(robot_height: f64, step: f64) -> usize {
        ((robot_height / step).ceil() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.elevation > 0.0) || !self.elevation.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "elevation must be > 0, got {}",
                self.elevation
            )));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if self.stack_count == 0 {
            return Err(Error::InvalidConfig("stack_count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything needed to turn a raw cloud into an [`ElevationVolume`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MapConfig {
    pub surfels: SurfelParams,
    pub cost: CostConfig,
    pub elevation: ElevationParams,
    pub seed: u64,
}

/// Elevated surfels with their waffle stacks and snap indices.
///
/// All surfels are kept, traversable or not, so that states over
/// non-traversable patches snap to them and are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VolumeRecord", into = "VolumeRecord")]
pub struct ElevationVolume {
    surfels: Vec<Surfel>,
    elevated: Vec<Point3<f64>>,
    traversable: Vec<usize>,
    params: ElevationParams,
    voxel_size: f64,
    cost: CostConfig,
    planar_index: KdTree<2>,
    source_index: KdTree<3>,
}

#[derive(Serialize, Deserialize)]
struct VolumeRecord {
    voxel_size: f64,
    elevation: ElevationParams,
    cost: CostConfig,
    surfels: Vec<Surfel>,
}

impl From<VolumeRecord> for ElevationVolume {
    fn from(r: VolumeRecord) -> Self {
        ElevationVolume::assemble(r.surfels, r.elevation, r.voxel_size, r.cost)
    }
}

impl From<ElevationVolume> for VolumeRecord {
    fn from(v: ElevationVolume) -> Self {
        VolumeRecord {
            voxel_size: v.voxel_size,
            elevation: v.params,
            cost: v.cost,
            surfels: v.surfels,
        }
    }
}

/// Lifts every surfel by `params.elevation` along its normal and builds the
/// snap indices. Fails if no surfel is traversable.
pub fn elevate_and_stack(
    surfels: Vec<Surfel>,
    params: &ElevationParams,
    voxel_size: f64,
    cost: &CostConfig,
) -> Result<ElevationVolume> {
    params.validate()?;
    if !surfels.iter().any(|s| s.traversable) {
        return Err(Error::NoTraversableSurfels);
    }
    Ok(ElevationVolume::assemble(
        surfels, *params, voxel_size, *cost,
    ))
}

/// Cloud to volume in one step.
pub fn build_volume(cloud: &PointCloud, config: &MapConfig) -> Result<ElevationVolume> {
    let surfels = build_surfel_set(cloud, &config.surfels, &config.cost, config.seed)?;
    elevate_and_stack(
        surfels,
        &config.elevation,
        config.surfels.voxel_size,
        &config.cost,
    )
}

impl ElevationVolume {
    fn assemble(
        surfels: Vec<Surfel>,
        params: ElevationParams,
        voxel_size: f64,
        cost: CostConfig,
    ) -> Self {
        let elevated: Vec<Point3<f64>> = surfels
            .iter()
            .map(|s| s.position + s.normal * params.elevation)
            .collect();
        let traversable = surfels
            .iter()
            .enumerate()
            .filter(|(_, s)| s.traversable)
            .map(|(i, _)| i)
            .collect();
        let planar_index = KdTree::build(elevated.iter().map(|p| [p.x, p.y]).collect());
        let source_index = KdTree::build(
            surfels
                .iter()
                .map(|s| [s.position.x, s.position.y, s.position.z])
                .collect(),
        );
        Self {
            surfels,
            elevated,
            traversable,
            params,
            voxel_size,
            cost,
            planar_index,
            source_index,
        }
    }

    pub fn surfels(&self) -> &[Surfel] {
        &self.surfels
    }

    pub fn len(&self) -> usize {
        self.surfels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfels.is_empty()
    }

    /// Elevated base position of surfel `i`.
    pub fn elevated(&self, i: usize) -> Point3<f64> {
        self.elevated[i]
    }

    /// Indices of traversable surfels, ascending.
    pub fn traversable(&self) -> &[usize] {
        &self.traversable
    }

    pub fn params(&self) -> &ElevationParams {
        &self.params
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn cost_config(&self) -> &CostConfig {
        &self.cost
    }

    pub fn default_snap_radius(&self) -> f64 {
        1.5 * self.voxel_size
    }

    /// Stacked layer positions of surfel `i`, lowest first. Every layer
    /// shares the base surfel's normal, radius and cost.
    pub fn waffle(&self, i: usize) -> Vec<Point3<f64>> {
        let s = &self.surfels[i];
        (0..self.params.stack_count)
            .map(|k| s.position + s.normal * (self.params.elevation + k as f64 * self.params.step))
            .collect()
    }

    /// Height of surfel `i`'s elevated plane above `(x, y)`.
    ///
    /// Near-vertical surfels report their elevated center height.
    pub fn surface_z(&self, i: usize, x: f64, y: f64) -> f64 {
        let e = &self.elevated[i];
        let n: &Vector3<f64> = &self.surfels[i].normal;
        if n.z < 0.2 {
            return e.z;
        }
        e.z - (n.x * (x - e.x) + n.y * (y - e.y)) / n.z
    }

    /// Surfels whose elevated center projects within `radius` of `(x, y)`,
    /// with horizontal distances, nearest first.
    pub fn planar_neighbors(&self, x: f64, y: f64, radius: f64) -> Result<Vec<(usize, f64)>> {
        self.planar_index
            .radius_query_with_distances(&[x, y], radius)
    }

    /// Surfel whose unelevated position is nearest to `p` in 3D.
    pub fn nearest_surfel(&self, p: &Point3<f64>) -> Option<(usize, f64)> {
        self.source_index.nearest(&[p.x, p.y, p.z])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfel::CriticValues;

    fn surfel(position: Point3<f64>, normal: Vector3<f64>, cost: f64) -> Surfel {
        Surfel {
            position,
            normal,
            radius: 0.5,
            critics: CriticValues::default(),
            cost,
            traversable: true,
        }
    }

    #[test]
    fn axis_aligned_elevation() {
        let params = ElevationParams {
            elevation: 0.5,
            ..Default::default()
        };
        let v = elevate_and_stack(
            vec![surfel(Point3::origin(), Vector3::z(), 0.0)],
            &params,
            1.0,
            &CostConfig::default(),
        )
        .unwrap();
        assert_eq!(v.elevated(0), Point3::new(0.0, 0.0, 0.5));
    }

    #[test]
    fn oblique_elevation() {
        let params = ElevationParams {
            elevation: 1.0,
            ..Default::default()
        };
        let base = Point3::new(2.0, -1.0, 3.0);
        let v = elevate_and_stack(
            vec![surfel(base, Vector3::new(0.0, 0.6, 0.8), 10.0)],
            &params,
            1.0,
            &CostConfig::default(),
        )
        .unwrap();
        let e = v.elevated(0);
        assert!((e - Point3::new(2.0, -0.4, 3.8)).norm() < 1e-12);
    }

    #[test]
    fn waffle_layers_are_collinear_and_spaced() {
        let params = ElevationParams {
            elevation: 0.3,
            step: 0.2,
            stack_count: 4,
        };
        let n = Vector3::new(0.0, 0.6, 0.8);
        let v = elevate_and_stack(
            vec![surfel(Point3::origin(), n, 42.0)],
            &params,
            1.0,
            &CostConfig::default(),
        )
        .unwrap();
        let layers = v.waffle(0);
        assert_eq!(layers.len(), 4);
        assert_eq!(layers[0], v.elevated(0));
        for pair in layers.windows(2) {
            let d = pair[1] - pair[0];
            assert!((d.norm() - 0.2).abs() < 1e-12);
            assert!(d.normalize().cross(&n).norm() < 1e-12);
        }
    }

    #[test]
    fn needs_a_traversable_surfel() {
        let mut s = surfel(Point3::origin(), Vector3::z(), 0.0);
        s.traversable = false;
        let err = elevate_and_stack(
            vec![s],
            &ElevationParams::default(),
            1.0,
            &CostConfig::default(),
        );
        assert!(matches!(err, Err(Error::NoTraversableSurfels)));
    }

    #[test]
    fn surface_height_follows_plane() {
        let n = Vector3::new(-0.6, 0.0, 0.8);
        let v = elevate_and_stack(
            vec![surfel(Point3::origin(), n, 0.0)],
            &ElevationParams::default(),
            1.0,
            &CostConfig::default(),
        )
        .unwrap();
        let e = v.elevated(0);
        assert!((v.surface_z(0, e.x, e.y) - e.z).abs() < 1e-12);
        // rises 0.75 per meter in +x
        assert!((v.surface_z(0, e.x + 1.0, e.y) - e.z - 0.75).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let v = elevate_and_stack(
            vec![
                surfel(Point3::new(0.1, 0.2, 0.3), Vector3::new(0.0, 0.6, 0.8), 3.5),
                surfel(Point3::new(1.1, 0.2, 0.3), Vector3::z(), 0.0),
            ],
            &ElevationParams::default(),
            1.0,
            &CostConfig::default(),
        )
        .unwrap();
        let text = v.to_json().unwrap();
        let back = ElevationVolume::from_json(&text).unwrap();
        assert_eq!(back.surfels(), v.surfels());
        assert_eq!(back.elevated(0), v.elevated(0));
        assert_eq!(back.to_json().unwrap(), text);
    }
}
