//! Planning states on the elevated surfel surface.
//!
//! A state is a planar pose plus a height. The planar part moves freely or
//! along Dubins curves; the height is never planned directly but read back
//! from the surfel under the pose, which keeps the robot base on the terrain.

mod dubins;
mod sampler;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surfel::ElevationVolume;

pub use dubins::{dubins_shortest_path, dubins_word_path, DubinsPath, DubinsWord, Pose2, Steer};
pub use sampler::{
    inverse_cost_weights, sample_valid_state, SamplerBias, SamplerConfig, StateSampler,
    SurfelSampler,
};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElevationState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub z: f64,
}

impl ElevationState {
    pub fn new(x: f64, y: f64, yaw: f64, z: f64) -> Self {
        Self {
            x,
            y,
            yaw: wrap_angle(yaw),
            z,
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2 {
            x: self.x,
            y: self.y,
            yaw: self.yaw,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.yaw.is_finite() && self.z.is_finite()
    }

    /// Straight-line 3D distance between positions, ignoring yaw.
    pub fn gap(&self, other: &ElevationState) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PlanarMotion {
    EuclideanSe2,
    Dubins { turning_radius: f64 },
}

/// Planar kinematics plus the weights that fold yaw and height into distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub planar: PlanarMotion,
    pub yaw_weight: f64,
    pub z_weight: f64,
}

impl Default for MotionModel {
    fn default() -> Self {
        Self {
            planar: PlanarMotion::EuclideanSe2,
            yaw_weight: 0.5,
            z_weight: 1.0,
        }
    }
}

impl MotionModel {
    pub fn dubins(turning_radius: f64) -> Self {
        Self {
            planar: PlanarMotion::Dubins { turning_radius },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let PlanarMotion::Dubins { turning_radius } = self.planar {
            if !(turning_radius > 0.0) || !turning_radius.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "turning radius must be > 0, got {turning_radius}"
                )));
            }
        }
        if !(self.yaw_weight >= 0.0) || !(self.z_weight >= 0.0) {
            return Err(Error::InvalidConfig("motion weights must be >= 0".into()));
        }
        Ok(())
    }

    /// Distance between two states. Symmetric for Euclidean motion; Dubins
    /// distance depends on direction.
    pub fn distance(&self, a: &ElevationState, b: &ElevationState) -> f64 {
        let dz = self.z_weight * (b.z - a.z).abs();
        match self.planar {
            PlanarMotion::EuclideanSe2 => {
                (b.x - a.x).hypot(b.y - a.y)
                    + self.yaw_weight * wrap_angle(b.yaw - a.yaw).abs()
                    + dz
            }
            PlanarMotion::Dubins { turning_radius } => {
                dubins_shortest_path(a.pose(), b.pose(), turning_radius).length() + dz
            }
        }
    }

    fn geodesic(&self, a: &ElevationState, b: &ElevationState) -> Geodesic {
        match self.planar {
            PlanarMotion::EuclideanSe2 => Geodesic::Straight {
                from: a.pose(),
                dx: b.x - a.x,
                dy: b.y - a.y,
                dyaw: wrap_angle(b.yaw - a.yaw),
            },
            PlanarMotion::Dubins { turning_radius } => {
                Geodesic::Dubins(dubins_shortest_path(a.pose(), b.pose(), turning_radius))
            }
        }
    }
}

enum Geodesic {
    Straight {
        from: Pose2,
        dx: f64,
        dy: f64,
        dyaw: f64,
    },
    Dubins(DubinsPath),
}

impl Geodesic {
    fn planar_length(&self) -> f64 {
        match self {
            Geodesic::Straight { dx, dy, .. } => dx.hypot(*dy),
            Geodesic::Dubins(p) => p.length(),
        }
    }

    /// Pose at fraction `t` in `[0, 1]` of the way.
    fn at(&self, t: f64) -> Pose2 {
        match self {
            Geodesic::Straight { from, dx, dy, dyaw } => {
                Pose2::new(from.x + t * dx, from.y + t * dy, from.yaw + t * dyaw)
            }
            Geodesic::Dubins(p) => p.sample(t * p.length()),
        }
    }
}

/// Tunables of the elevation state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    /// Allowed gap between a state's z and the surface below it.
    pub z_tolerance: f64,
    /// Largest height change between consecutive interpolated states.
    pub z_step_max: f64,
    /// Horizontal search radius when snapping to surfels.
    pub snap_radius: f64,
    /// Spacing of interpolated states along a motion.
    pub motion_step: f64,
    /// Steepest slope the surface may climb between snaps, radians. Bounds
    /// the height band that counts as "the same layer" in [`ElevationStateSpace::snap_near`].
    pub max_slope: f64,
}

impl SpaceParams {
    /// Defaults tied to the map resolution.
    pub fn for_voxel_size(voxel_size: f64) -> Self {
        Self {
            z_tolerance: 0.3,
            z_step_max: 0.3,
            snap_radius: 1.5 * voxel_size,
            motion_step: voxel_size / 2.0,
            max_slope: 0.4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("z_tolerance", self.z_tolerance),
            ("z_step_max", self.z_step_max),
            ("snap_radius", self.snap_radius),
            ("motion_step", self.motion_step),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(0.0..PI / 2.0).contains(&self.max_slope) {
            return Err(Error::InvalidConfig(
                "max_slope must be in [0, pi/2)".into(),
            ));
        }
        Ok(())
    }
}

/// Result of snapping a planar position onto the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snap {
    pub surfel: usize,
    pub z: f64,
}

/// Interpolated motion with its accumulated objective terms.
#[derive(Debug, Clone)]
pub struct MotionTrace {
    pub states: Vec<ElevationState>,
    /// Sum of model distances between consecutive states.
    pub length: f64,
    /// Cost-weighted arc length, see [`ElevationStateSpace::scoo_cost`].
    pub scoo: f64,
}

/// An [`ElevationVolume`] viewed as a planning state space.
#[derive(Debug, Clone, Copy)]
pub struct ElevationStateSpace<'a> {
    volume: &'a ElevationVolume,
    params: SpaceParams,
    model: MotionModel,
}

impl<'a> ElevationStateSpace<'a> {
    pub fn new(
        volume: &'a ElevationVolume,
        params: SpaceParams,
        model: MotionModel,
    ) -> Result<Self> {
        params.validate()?;
        model.validate()?;
        if volume.is_empty() {
            return Err(Error::EmptyVolume);
        }
        Ok(Self {
            volume,
            params,
            model,
        })
    }

    /// Space with resolution-derived defaults and the default motion model.
    pub fn with_defaults(volume: &'a ElevationVolume) -> Result<Self> {
        Self::new(
            volume,
            SpaceParams::for_voxel_size(volume.voxel_size()),
            MotionModel::default(),
        )
    }

    pub fn volume(&self) -> &'a ElevationVolume {
        self.volume
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn model(&self) -> &MotionModel {
        &self.model
    }

    pub fn distance(&self, a: &ElevationState, b: &ElevationState) -> f64 {
        self.model.distance(a, b)
    }

    fn off_surface(&self, x: f64, y: f64) -> Error {
        Error::OffSurface {
            x,
            y,
            radius: self.params.snap_radius,
        }
    }

    /// Surfel nearest to `(x, y)` in the plane; equal distances prefer the lower surface.
    pub fn snap_to_surface(&self, x: f64, y: f64) -> Result<Snap> {
        if !x.is_finite() || !y.is_finite() {
            return Err(self.off_surface(x, y));
        }
        let candidates = self
            .volume
            .planar_neighbors(x, y, self.params.snap_radius)?;
        let mut best: Option<(f64, Snap)> = None;
        for (i, h) in candidates {
            let snap = Snap {
                surfel: i,
                z: self.volume.surface_z(i, x, y),
            };
            match best {
                Some((bh, b)) if h > bh || (h == bh && snap.z >= b.z) => {}
                _ => best = Some((h, snap)),
            }
        }
        best.map(|(_, s)| s).ok_or_else(|| self.off_surface(x, y))
    }

    /// Snap that stays on the surface layer of `reference`.
    ///
    /// Candidates whose surface height at `(x, y)` lies within
    /// `z_step_max + d * tan(max_slope)` of `reference.z`, where `d` is the
    /// horizontal distance travelled from the reference, form the current
    /// layer; the nearest of those wins. If no candidate qualifies the one
    /// closest in height is returned.
    pub fn snap_near(&self, reference: &ElevationState, x: f64, y: f64) -> Result<Snap> {
        if !x.is_finite() || !y.is_finite() || !reference.z.is_finite() {
            return Err(self.off_surface(x, y));
        }
        let candidates = self
            .volume
            .planar_neighbors(x, y, self.params.snap_radius)?;
        let travelled = (x - reference.x).hypot(y - reference.y);
        let band = self.params.z_step_max + travelled * self.params.max_slope.tan();

        let mut in_layer: Option<(f64, Snap)> = None;
        let mut closest: Option<(f64, f64, Snap)> = None;
        for (i, h) in candidates {
            let z = self.volume.surface_z(i, x, y);
            let snap = Snap { surfel: i, z };
            let dz = (z - reference.z).abs();
            if dz <= band {
                match in_layer {
                    Some((bh, b)) if h > bh || (h == bh && z >= b.z) => {}
                    _ => in_layer = Some((h, snap)),
                }
            }
            match closest {
                Some((bdz, bh, _)) if dz > bdz || (dz == bdz && h >= bh) => {}
                _ => closest = Some((dz, h, snap)),
            }
        }
        in_layer
            .map(|(_, s)| s)
            .or(closest.map(|(_, _, s)| s))
            .ok_or_else(|| self.off_surface(x, y))
    }

    /// A state is valid when it snaps onto a traversable surfel and sits
    /// within `z_tolerance` of that surfel's surface.
    pub fn is_state_valid(&self, state: &ElevationState) -> bool {
        self.snap_valid(state).is_some()
    }

    fn snap_valid(&self, state: &ElevationState) -> Option<Snap> {
        if !state.is_finite() {
            return None;
        }
        let snap = self.snap_near(state, state.x, state.y).ok()?;
        (self.volume.surfels()[snap.surfel].traversable
            && (state.z - snap.z).abs() <= self.params.z_tolerance)
            .then_some(snap)
    }

    /// Surface cost under a valid state.
    pub fn state_cost(&self, state: &ElevationState) -> Option<f64> {
        self.snap_valid(state)
            .map(|s| self.volume.surfels()[s.surfel].cost)
    }

    /// Snaps a planar pose onto the surface. With `z_hint`, the layer nearest
    /// that height is chosen; otherwise the nearest surfel.
    pub fn lift(&self, x: f64, y: f64, yaw: f64, z_hint: Option<f64>) -> Result<ElevationState> {
        let snap = match z_hint {
            Some(z) => self.snap_near(&ElevationState::new(x, y, yaw, z), x, y)?,
            None => self.snap_to_surface(x, y)?,
        };
        Ok(ElevationState::new(x, y, yaw, snap.z))
    }

    fn steps_for(&self, planar: f64) -> usize {
        ((planar / self.params.motion_step).ceil() as usize).max(1)
    }

    /// States spaced at most `motion_step` apart along the planar geodesic
    /// from `a` to `b`, each lifted onto the surface by chaining
    /// [`snap_near`](Self::snap_near) from its predecessor. The first state is
    /// `a`; the last has `b`'s pose. Positions that cannot be snapped carry a
    /// NaN height.
    pub fn interpolate_motion(
        &self,
        a: &ElevationState,
        b: &ElevationState,
    ) -> Vec<ElevationState> {
        if a == b {
            return vec![*a];
        }
        let geo = self.model.geodesic(a, b);
        let n = self.steps_for(geo.planar_length());
        let mut out = Vec::with_capacity(n + 1);
        out.push(*a);
        let mut reference = *a;
        for i in 1..=n {
            let pose = if i == n {
                b.pose()
            } else {
                geo.at(i as f64 / n as f64)
            };
            let z = self
                .snap_near(&reference, pose.x, pose.y)
                .map_or(f64::NAN, |s| s.z);
            let state = ElevationState {
                x: pose.x,
                y: pose.y,
                yaw: pose.yaw,
                z,
            };
            if z.is_finite() {
                reference = state;
            }
            out.push(state);
        }
        out
    }

    /// Pose reached by following the planar geodesic from `a` toward `b` for
    /// at most `max_planar` meters, and whether the motion was cut short.
    pub fn steer(&self, a: &ElevationState, b: &ElevationState, max_planar: f64) -> (Pose2, bool) {
        let geo = self.model.geodesic(a, b);
        let planar = geo.planar_length();
        if planar <= max_planar {
            (b.pose(), false)
        } else {
            (geo.at(max_planar / planar), true)
        }
    }

    /// Interpolates and validates `a -> b`, accumulating length and surface
    /// cost. `None` if any state is invalid, consecutive heights jump by more
    /// than `z_step_max`, or (when `b_z` is given) the motion ends on a
    /// different layer than `b_z`.
    pub fn trace_motion(
        &self,
        a: &ElevationState,
        b_pose: Pose2,
        b_z: Option<f64>,
    ) -> Option<MotionTrace> {
        let a_snap = self.snap_valid(a)?;
        let target = ElevationState {
            x: b_pose.x,
            y: b_pose.y,
            yaw: b_pose.yaw,
            z: b_z.unwrap_or(a.z),
        };
        let geo = self.model.geodesic(a, &target);
        let planar = geo.planar_length();
        let yaw_change = wrap_angle(b_pose.yaw - a.yaw).abs();
        if planar == 0.0 && yaw_change == 0.0 && b_z.is_none_or(|z| z == a.z) {
            return Some(MotionTrace {
                states: vec![*a],
                length: 0.0,
                scoo: 0.0,
            });
        }
        let n = self.steps_for(planar);
        let surfels = self.volume.surfels();
        let mut states = Vec::with_capacity(n + 1);
        states.push(*a);
        let mut prev = *a;
        let mut prev_cost = surfels[a_snap.surfel].cost;
        let mut length = 0.0;
        let mut scoo = 0.0;
        for i in 1..=n {
            let pose = if i == n {
                b_pose
            } else {
                geo.at(i as f64 / n as f64)
            };
            let snap = self.snap_near(&prev, pose.x, pose.y).ok()?;
            let surfel = &surfels[snap.surfel];
            if !surfel.traversable || (snap.z - prev.z).abs() > self.params.z_step_max {
                return None;
            }
            let state = ElevationState {
                x: pose.x,
                y: pose.y,
                yaw: pose.yaw,
                z: snap.z,
            };
            // the chained snap and a fresh snap can disagree near layer edges
            if !self.is_state_valid(&state) {
                return None;
            }
            length += match self.model.planar {
                PlanarMotion::EuclideanSe2 => self.model.distance(&prev, &state),
                // sub-arcs of a shortest Dubins curve are themselves shortest
                PlanarMotion::Dubins { .. } => {
                    planar / n as f64 + self.model.z_weight * (state.z - prev.z).abs()
                }
            };
            scoo += prev.gap(&state) * 0.5 * (prev_cost + surfel.cost);
            prev_cost = surfel.cost;
            prev = state;
            states.push(state);
        }
        if let Some(z) = b_z {
            if (prev.z - z).abs() > self.params.z_tolerance {
                return None;
            }
        }
        Some(MotionTrace {
            states,
            length,
            scoo,
        })
    }

    /// True iff every interpolated state is valid, no consecutive height
    /// change exceeds `z_step_max`, and the motion arrives on `b`'s layer.
    pub fn is_motion_valid(&self, a: &ElevationState, b: &ElevationState) -> bool {
        self.is_state_valid(b) && self.trace_motion(a, b.pose(), Some(b.z)).is_some()
    }

    /// Surface cost integrated over the path: each segment contributes its 3D
    /// length times the mean cost of its endpoints.
    pub fn scoo_cost(&self, path: &[ElevationState]) -> Result<f64> {
        let costs = path
            .iter()
            .enumerate()
            .map(|(i, s)| self.state_cost(s).ok_or(Error::InvalidPathState(i)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(path
            .windows(2)
            .zip(costs.windows(2))
            .fold(0.0, |acc, (s, c)| {
                acc + s[0].gap(&s[1]) * 0.5 * (c[0] + c[1])
            }))
    }

    /// Sum of model distances between consecutive states.
    pub fn path_length(&self, path: &[ElevationState]) -> f64 {
        // fold from +0.0: an empty f64 sum is -0.0
        path.windows(2)
            .fold(0.0, |acc, w| acc + self.distance(&w[0], &w[1]))
    }
}

#[cfg(test)]
mod tests;
