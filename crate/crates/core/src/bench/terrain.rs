use std::fmt;
use std::str::FromStr;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerrainKind {
    Flat,
    /// Sum of seeded Gaussian bumps.
    Hills,
    /// Plane rising along +x.
    Ramp,
    /// Flat ground cut by a rough raised band with one gap.
    WallGap,
    /// Flat ground partly covered by an elevated deck.
    PierOverlap,
    /// Hills with a deck over their middle.
    Mixed,
}

impl TerrainKind {
    pub const ALL: [TerrainKind; 6] = [
        TerrainKind::Flat,
        TerrainKind::Hills,
        TerrainKind::Ramp,
        TerrainKind::WallGap,
        TerrainKind::PierOverlap,
        TerrainKind::Mixed,
    ];
}

impl fmt::Display for TerrainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerrainKind::Flat => "flat",
            TerrainKind::Hills => "hills",
            TerrainKind::Ramp => "ramp",
            TerrainKind::WallGap => "wall-gap",
            TerrainKind::PierOverlap => "pier-overlap",
            TerrainKind::Mixed => "mixed",
        })
    }
}

impl FromStr for TerrainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TerrainKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown terrain kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainSpec {
    pub kind: TerrainKind,
    /// Extent along x, in meters.
    pub width: f64,
    /// Extent along y, in meters.
    pub depth: f64,
    /// Points per square meter of each surface.
    pub density: f64,
    /// Bump height for hills, band height for walls, deck height for piers.
    pub amplitude: f64,
    /// Ramp incline in radians.
    pub slope: f64,
    /// Width of the opening in the wall band.
    pub gap_width: f64,
    pub seed: u64,
}

impl TerrainSpec {
    /// Defaults for `kind` on a `size` x `size` square.
    pub fn new(kind: TerrainKind, size: f64, seed: u64) -> Self {
        let amplitude = match kind {
            TerrainKind::Flat | TerrainKind::Ramp => 0.0,
            TerrainKind::Hills | TerrainKind::Mixed => 2.2,
            TerrainKind::WallGap => 1.5,
            TerrainKind::PierOverlap => 3.0,
        };
        Self {
            kind,
            width: size,
            depth: size,
            density: 25.0,
            amplitude,
            slope: 30f64.to_radians(),
            gap_width: 2.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("depth", self.depth),
            ("density", self.density),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "terrain {name} must be > 0, got {v}"
                )));
            }
        }
        if !self.amplitude.is_finite() || self.amplitude < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "terrain amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.slope.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidConfig(format!(
                "ramp slope must be in (-pi/2, pi/2), got {}",
                self.slope
            )));
        }
        if !(self.gap_width >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gap width must be >= 0, got {}",
                self.gap_width
            )));
        }
        Ok(())
    }

    /// Footprint of the deck for pier-style terrain: `[x0, x1] x [y0, y1]`.
    pub fn deck_bounds(&self) -> [f64; 4] {
        [
            0.35 * self.width,
            0.65 * self.width,
            0.3 * self.depth,
            0.7 * self.depth,
        ]
    }

    /// Footprint of the wall band: `[x0, x1]`, and its opening `[y0, y1]`.
    pub fn wall_bounds(&self) -> ([f64; 2], [f64; 2]) {
        let (xm, ym) = (0.5 * self.width, 0.5 * self.depth);
        (
            [xm - 0.75, xm + 0.75],
            [ym - 0.5 * self.gap_width, ym + 0.5 * self.gap_width],
        )
    }
}

struct Bump {
    x: f64,
    y: f64,
    height: f64,
    sigma: f64,
}

fn bumps(spec: &TerrainSpec, rng: &mut ChaCha8Rng) -> Vec<Bump> {
    let count = ((spec.width * spec.depth / 40.0).round() as usize).max(1);
    (0..count)
        .map(|_| Bump {
            x: rng.gen::<f64>() * spec.width,
            y: rng.gen::<f64>() * spec.depth,
            height: spec.amplitude * rng.gen_range(0.4..1.0),
            sigma: rng.gen_range(1.6..3.5),
        })
        .collect()
}

fn hill_height(bumps: &[Bump], x: f64, y: f64) -> f64 {
    bumps
        .iter()
        .map(|b| {
            let d2 = (x - b.x).powi(2) + (y - b.y).powi(2);
            b.height * (-d2 / (2.0 * b.sigma * b.sigma)).exp()
        })
        .sum()
}

/// Jittered grid over `[x0, x1] x [y0, y1]` at `density`; one point per cell.
fn jittered(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    density: f64,
    rng: &mut ChaCha8Rng,
    mut out: impl FnMut(f64, f64, &mut ChaCha8Rng),
) {
    let per_m = density.sqrt();
    let nx = ((x1 - x0) * per_m).round().max(1.0) as usize;
    let ny = ((y1 - y0) * per_m).round().max(1.0) as usize;
    let (hx, hy) = ((x1 - x0) / nx as f64, (y1 - y0) / ny as f64);
    for i in 0..nx {
        for j in 0..ny {
            let x = x0 + (i as f64 + rng.gen::<f64>()) * hx;
            let y = y0 + (j as f64 + rng.gen::<f64>()) * hy;
            out(x, y, rng);
        }
    }
}

/// Deterministic synthetic cloud for `spec`.
pub fn generate_terrain(spec: &TerrainSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let hills = match spec.kind {
        TerrainKind::Hills => bumps(spec, &mut rng),
        TerrainKind::Mixed => {
            let mut b = bumps(spec, &mut rng);
            // keep the ground under the deck open
            let [x0, x1, y0, y1] = spec.deck_bounds();
            b.retain(|b| {
                !(x0 - 2.0..=x1 + 2.0).contains(&b.x) || !(y0 - 2.0..=y1 + 2.0).contains(&b.y)
            });
            b
        }
        _ => Vec::new(),
    };
    let (wall_x, wall_gap) = spec.wall_bounds();
    let tan = spec.slope.tan();

    let mut points = Vec::new();
    jittered(
        0.0,
        spec.width,
        0.0,
        spec.depth,
        spec.density,
        &mut rng,
        |x, y, rng| {
            let z = match spec.kind {
                TerrainKind::Flat | TerrainKind::PierOverlap => 0.0,
                TerrainKind::Hills | TerrainKind::Mixed => hill_height(&hills, x, y),
                TerrainKind::Ramp => tan * x,
                TerrainKind::WallGap => {
                    let in_band = (wall_x[0]..wall_x[1]).contains(&x);
                    let in_gap = (wall_gap[0]..wall_gap[1]).contains(&y);
                    if in_band && !in_gap {
                        spec.amplitude * rng.gen_range(0.5..1.0)
                    } else {
                        0.0
                    }
                }
            };
            points.push(Point3::new(x, y, z));
        },
    );
    if matches!(spec.kind, TerrainKind::PierOverlap | TerrainKind::Mixed) {
        let [x0, x1, y0, y1] = spec.deck_bounds();
        jittered(x0, x1, y0, y1, spec.density, &mut rng, |x, y, _| {
            points.push(Point3::new(x, y, spec.amplitude));
        });
    }
    Ok(PointCloud::new(points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_count_and_height() {
        let c = generate_terrain(&TerrainSpec::new(TerrainKind::Flat, 20.0, 7)).unwrap();
        assert_eq!(c.len(), 10_000);
        assert!(c.points.iter().all(|p| p.z == 0.0));
        assert!(c
            .points
            .iter()
            .all(|p| (0.0..=20.0).contains(&p.x) && (0.0..=20.0).contains(&p.y)));
    }

    #[test]
    fn same_seed_same_cloud() {
        for kind in TerrainKind::ALL {
            let spec = TerrainSpec::new(kind, 15.0, 3);
            assert_eq!(
                generate_terrain(&spec).unwrap(),
                generate_terrain(&spec).unwrap()
            );
        }
        let a = generate_terrain(&TerrainSpec::new(TerrainKind::Hills, 15.0, 3)).unwrap();
        let b = generate_terrain(&TerrainSpec::new(TerrainKind::Hills, 15.0, 4)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn ramp_is_planar() {
        let spec = TerrainSpec::new(TerrainKind::Ramp, 10.0, 1);
        let c = generate_terrain(&spec).unwrap();
        let t = spec.slope.tan();
        assert!(c.points.iter().all(|p| (p.z - t * p.x).abs() < 1e-12));
    }

    #[test]
    fn wall_band_has_one_opening() {
        let spec = TerrainSpec::new(TerrainKind::WallGap, 20.0, 2);
        let c = generate_terrain(&spec).unwrap();
        let (bx, gap) = spec.wall_bounds();
        for p in &c.points {
            let raised = p.z > 0.0;
            let expected = (bx[0]..bx[1]).contains(&p.x) && !(gap[0]..gap[1]).contains(&p.y);
            assert_eq!(raised, expected, "{p:?}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in TerrainKind::ALL {
            assert_eq!(k.to_string().parse::<TerrainKind>().unwrap(), k);
        }
    }

    #[test]
    fn invalid_spec() {
        let mut s = TerrainSpec::new(TerrainKind::Flat, 10.0, 0);
        s.density = 0.0;
        assert!(generate_terrain(&s).is_err());
    }
}
