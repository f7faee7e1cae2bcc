//! Point clouds and their ASCII PCD / PLY encodings.

mod colorize;
mod pcd;
mod ply;

use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use colorize::{colorize_by_cost, cost_color, NEUTRAL_GRAY};

pub type Rgb = [u8; 3];

/// An ordered list of 3D points, optionally with one RGB color per point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub colors: Option<Vec<Rgb>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Self {
        Self {
            points,
            colors: None,
        }
    }

    pub fn with_colors(points: Vec<Point3<f64>>, colors: Vec<Rgb>) -> Result<Self> {
        let cloud = Self {
            points,
            colors: Some(colors),
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks that every coordinate is finite and that colors, if any, match the point count.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self
            .points
            .iter()
            .position(|p| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidCloud(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        if let Some(colors) = &self.colors {
            if colors.len() != self.points.len() {
                return Err(Error::InvalidCloud(format!(
                    "{} colors for {} points",
                    colors.len(),
                    self.points.len()
                )));
            }
        }
        Ok(())
    }

    /// Component-wise minimum and maximum corners, `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = self.points.first()?;
        let mut lo = *first;
        let mut hi = *first;
        for p in &self.points[1..] {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Some((lo, hi))
    }
}

/// On-disk encodings understood by [`load_cloud`] and [`save_cloud`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PcdAscii,
    PlyAscii,
    /// Decide from the file extension, falling back to the magic line.
    Auto,
}

impl CloudFormat {
    fn resolve(self, path: &Path, text: Option<&str>) -> Result<CloudFormat> {
        if self != CloudFormat::Auto {
            return Ok(self);
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("pcd") => return Ok(CloudFormat::PcdAscii),
            Some("ply") => return Ok(CloudFormat::PlyAscii),
            _ => {}
        }
        match text {
            Some(t) if t.trim_start().starts_with("ply") => Ok(CloudFormat::PlyAscii),
            Some(t)
                if t.lines()
                    .any(|l| l.trim_start().starts_with("VERSION") || l.starts_with("# .PCD")) =>
            {
                Ok(CloudFormat::PcdAscii)
            }
            _ => Err(Error::UnsupportedFormat(format!(
                "cannot infer cloud format of {}",
                path.display()
            ))),
        }
    }
}

/// Reads a PCD or PLY ASCII file, returning the points in file order.
pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    // Binary payloads are rarely valid UTF-8; keep the header readable either way.
    let text = String::from_utf8_lossy(&bytes);
    match format.resolve(path, Some(&text))? {
        CloudFormat::PcdAscii => pcd::parse(&text),
        CloudFormat::PlyAscii => ply::parse(&text),
        CloudFormat::Auto => unreachable!(),
    }
}

/// Writes `cloud` as ASCII. `Auto` picks the format from the extension.
pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    let path = path.as_ref();
    cloud.validate()?;
    let text = match format.resolve(path, None)? {
        CloudFormat::PcdAscii => pcd::encode(cloud),
        CloudFormat::PlyAscii => ply::encode(cloud),
        CloudFormat::Auto => unreachable!(),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid number {token:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(
            line,
            format!("non-finite coordinate {token:?}"),
        ));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        let cloud = PointCloud::new(vec![Point3::new(0.0, f64::NAN, 1.0)]);
        assert!(matches!(cloud.validate(), Err(Error::InvalidCloud(_))));
        let dir = tempfile::tempdir().unwrap();
        let err = save_cloud(&cloud, dir.path().join("a.pcd"), CloudFormat::PcdAscii);
        assert!(matches!(err, Err(Error::InvalidCloud(_))));
    }

    #[test]
    fn color_count_mismatch() {
        let err = PointCloud::with_colors(vec![Point3::origin()], vec![]);
        assert!(err.is_err());
    }

    #[test]
    fn auto_format_by_extension_and_magic() {
        let dir = tempfile::tempdir().unwrap();
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0)]);
        let p = dir.path().join("x.ply");
        save_cloud(&cloud, &p, CloudFormat::Auto).unwrap();
        let renamed = dir.path().join("x.txt");
        std::fs::rename(&p, &renamed).unwrap();
        assert_eq!(load_cloud(&renamed, CloudFormat::Auto).unwrap(), cloud);
    }

    #[test]
    fn bounds_of_cloud() {
        let cloud = PointCloud::new(vec![
            Point3::new(1.0, -2.0, 3.0),
            Point3::new(-1.0, 5.0, 0.0),
        ]);
        let (lo, hi) = cloud.bounds().unwrap();
        assert_eq!(lo, Point3::new(-1.0, -2.0, 0.0));
        assert_eq!(hi, Point3::new(1.0, 5.0, 3.0));
        assert!(PointCloud::default().bounds().is_none());
    }
}
