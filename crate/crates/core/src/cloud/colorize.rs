use super::{PointCloud, Rgb};
use crate::error::{Error, Result};
use crate::surfel::ElevationVolume;

pub const NEUTRAL_GRAY: Rgb = [128, 128, 128];

/// Green at zero cost, yellow at `max_cost / 2`, red at `max_cost` and above.
/// Non-traversable patches are always red.
pub fn cost_color(cost: f64, max_cost: f64, traversable: bool) -> Rgb {
    if !traversable || !(cost < max_cost) {
        return [255, 0, 0];
    }
    let t = (cost / max_cost).clamp(0.0, 1.0);
    let ramp = |v: f64| (255.0 * v).round() as u8;
    if t <= 0.5 {
        [ramp(2.0 * t), 255, 0]
    } else {
        [255, ramp(2.0 - 2.0 * t), 0]
    }
}

/// Recolors each point with the cost color of its nearest surfel.
///
/// Points farther than the volume's snap radius from every surfel are gray.
pub fn colorize_by_cost(cloud: &PointCloud, volume: &ElevationVolume) -> Result<PointCloud> {
    if volume.is_empty() {
        return Err(Error::EmptyVolume);
    }
    cloud.validate()?;
    let radius = volume.default_snap_radius();
    let max_cost = volume.cost_config().max_cost;
    let colors = cloud
        .points
        .iter()
        .map(|p| match volume.nearest_surfel(p) {
            Some((idx, dist)) if dist <= radius => {
                let s = &volume.surfels()[idx];
                cost_color(s.cost, max_cost, s.traversable)
            }
            _ => NEUTRAL_GRAY,
        })
        .collect();
    Ok(PointCloud {
        points: cloud.points.clone(),
        colors: Some(colors),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(cost_color(0.0, 255.0, true), [0, 255, 0]);
        assert_eq!(cost_color(127.5, 255.0, true), [255, 255, 0]);
        assert_eq!(cost_color(255.0, 255.0, true), [255, 0, 0]);
        assert_eq!(cost_color(300.0, 255.0, true), [255, 0, 0]);
        assert_eq!(cost_color(0.0, 255.0, false), [255, 0, 0]);
    }

    #[test]
    fn colormap_is_piecewise_linear() {
        // quarter cost is halfway along green -> yellow
        assert_eq!(cost_color(63.75, 255.0, true), [128, 255, 0]);
        assert_eq!(cost_color(191.25, 255.0, true), [255, 128, 0]);
    }
}
