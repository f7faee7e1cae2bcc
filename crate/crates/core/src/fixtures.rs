//! Hand-built surfel grids shared by unit tests.

use nalgebra::{Point3, Vector3};

use crate::surfel::{
    elevate_and_stack, CostConfig, CriticValues, ElevationParams, ElevationVolume, Surfel,
};

pub const ELEVATION: f64 = 0.5;

/// Square grid of surfels with unit spacing. `height` gives terrain z and
/// `cell` gives (cost, traversable) for grid coordinates.
pub fn grid(
    nx: usize,
    ny: usize,
    height: impl Fn(f64, f64) -> f64,
    slope: (f64, f64),
    cell: impl Fn(usize, usize) -> (f64, bool),
) -> Vec<Surfel> {
    let normal = Vector3::new(-slope.0, -slope.1, 1.0).normalize();
    let mut out = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let (x, y) = (i as f64, j as f64);
            let (cost, traversable) = cell(i, j);
            out.push(Surfel {
                position: Point3::new(x, y, height(x, y)),
                normal,
                radius: 0.5,
                critics: CriticValues::default(),
                cost,
                traversable,
            });
        }
    }
    out
}

pub fn volume(surfels: Vec<Surfel>) -> ElevationVolume {
    let params = ElevationParams {
        elevation: ELEVATION,
        step: 0.2,
        stack_count: 3,
    };
    elevate_and_stack(surfels, &params, 1.0, &CostConfig::default()).unwrap()
}
