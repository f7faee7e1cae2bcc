use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plane `A x + B y + C z + D = 0` with unit `(A, B, C)` and `C >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    /// Builds a normalized, upward-facing plane. `None` if the normal is zero.
    pub fn new(normal: Vector3<f64>, offset: f64) -> Option<Self> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() {
            return None;
        }
        let (mut n, mut d) = (normal / len, offset / len);
        let flip = if n.z != 0.0 {
            n.z < 0.0
        } else if n.y != 0.0 {
            n.y < 0.0
        } else {
            n.x < 0.0
        };
        if flip {
            n = -n;
            d = -d;
        }
        Some(Self {
            normal: n,
            offset: d,
        })
    }

    pub fn through(point: &Point3<f64>, normal: Vector3<f64>) -> Option<Self> {
        Self::new(normal, -normal.dot(&point.coords))
    }

    /// `(A, B, C, D)`.
    pub fn coefficients(&self) -> [f64; 4] {
        [self.normal.x, self.normal.y, self.normal.z, self.offset]
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    pub iterations: usize,
    pub inlier_threshold: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 100,
            inlier_threshold: 0.05,
        }
    }
}

/// RANSAC plane fit with least-squares refinement over the winning inliers.
pub fn fit_plane_ransac(points: &[Point3<f64>], params: &RansacParams, seed: u64) -> Result<Plane> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fit_plane_ransac_with(points, params, &mut rng)
}

pub fn fit_plane_ransac_with<R: Rng + ?Sized>(
    points: &[Point3<f64>],
    params: &RansacParams,
    rng: &mut R,
) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints(points.len()));
    }
    let mut best: Option<(usize, Plane)> = None;
    for _ in 0..params.iterations {
        let pick = index::sample(rng, points.len(), 3);
        let (a, b, c) = (
            points[pick.index(0)],
            points[pick.index(1)],
            points[pick.index(2)],
        );
        let (e1, e2) = (b - a, c - a);
        let cross = e1.cross(&e2);
        if cross.norm() <= 1e-9 * e1.norm() * e2.norm() {
            continue;
        }
        let Some(plane) = Plane::through(&a, cross) else {
            continue;
        };
        let inliers = points
            .iter()
            .filter(|p| plane.signed_distance(p).abs() <= params.inlier_threshold)
            .count();
        if best.as_ref().is_none_or(|(n, _)| inliers > *n) {
            best = Some((inliers, plane));
        }
    }

    match best {
        Some((_, plane)) => {
            let inliers: Vec<Point3<f64>> = points
                .iter()
                .filter(|p| plane.signed_distance(p).abs() <= params.inlier_threshold)
                .copied()
                .collect();
            Ok(least_squares_plane(&inliers).unwrap_or(plane))
        }
        // every random triple was collinear; fall back to the whole set
        None => least_squares_plane(points).ok_or(Error::DegenerateGeometry),
    }
}

/// Total least-squares plane: normal is the eigenvector of the scatter matrix
/// with the smallest eigenvalue. `None` when the points are (nearly) collinear.
pub fn least_squares_plane(points: &[Point3<f64>]) -> Option<Plane> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let centroid = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        scatter += d * d.transpose();
    }
    scatter /= n;
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let (smallest, middle) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    let scale = eig.eigenvalues[order[2]].max(f64::MIN_POSITIVE);
    if middle <= 1e-12 * scale || middle - smallest <= 1e-15 * scale {
        return None;
    }
    let normal = eig.eigenvectors.column(order[0]).into_owned();
    Plane::through(&Point3::from(centroid), normal)
}
