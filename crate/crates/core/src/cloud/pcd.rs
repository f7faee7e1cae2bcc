//! ASCII PCD v0.7.

use std::fmt::Write as _;

use nalgebra::Point3;

use super::{parse_f64, PointCloud, Rgb};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    X,
    Y,
    Z,
    Packed { float: bool },
    Red,
    Green,
    Blue,
    Ignored,
}

#[derive(Debug, Default)]
struct Header {
    fields: Vec<String>,
    types: Vec<String>,
    counts: Vec<usize>,
    width: Option<usize>,
    height: Option<usize>,
    points: Option<usize>,
}

pub(super) fn parse(text: &str) -> Result<PointCloud> {
    let mut header = Header::default();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut saw_data = false;

    for (lineno, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = tokens.collect();
        match key.as_str() {
            "VERSION" | "VIEWPOINT" | "SIZE" => {}
            "FIELDS" => header.fields = rest.iter().map(|s| s.to_ascii_lowercase()).collect(),
            "TYPE" => header.types = rest.iter().map(|s| s.to_ascii_uppercase()).collect(),
            "COUNT" => {
                header.counts = rest
                    .iter()
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::parse(lineno, format!("bad COUNT entry {s:?}")))
                    })
                    .collect::<Result<_>>()?
            }
            "WIDTH" => header.width = Some(parse_count(&rest, lineno, "WIDTH")?),
            "HEIGHT" => header.height = Some(parse_count(&rest, lineno, "HEIGHT")?),
            "POINTS" => header.points = Some(parse_count(&rest, lineno, "POINTS")?),
            "DATA" => {
                match rest.first().map(|s| s.to_ascii_lowercase()).as_deref() {
                    Some("ascii") => {}
                    Some(other) => {
                        return Err(Error::UnsupportedFormat(format!("PCD DATA {other}")))
                    }
                    None => return Err(Error::parse(lineno, "DATA without encoding")),
                }
                saw_data = true;
                break;
            }
            _ => {
                return Err(Error::parse(
                    lineno,
                    format!("unknown PCD header key {key:?}"),
                ))
            }
        }
    }
    if !saw_data {
        return Err(Error::parse(0, "missing DATA line"));
    }
    if header.fields.is_empty() {
        return Err(Error::parse(0, "missing FIELDS line"));
    }
    if header.counts.is_empty() {
        header.counts = vec![1; header.fields.len()];
    }
    if header.counts.len() != header.fields.len() {
        return Err(Error::parse(0, "COUNT and FIELDS lengths differ"));
    }
    if !header.types.is_empty() && header.types.len() != header.fields.len() {
        return Err(Error::parse(0, "TYPE and FIELDS lengths differ"));
    }

    let mut columns = Vec::new();
    for (i, (name, &count)) in header.fields.iter().zip(&header.counts).enumerate() {
        let ty = header.types.get(i).map(String::as_str).unwrap_or("F");
        let col = match name.as_str() {
            "x" => Column::X,
            "y" => Column::Y,
            "z" => Column::Z,
            "rgb" | "rgba" => Column::Packed { float: ty == "F" },
            "r" | "red" => Column::Red,
            "g" | "green" => Column::Green,
            "b" | "blue" => Column::Blue,
            _ => Column::Ignored,
        };
        if count != 1 && col != Column::Ignored {
            return Err(Error::parse(0, format!("field {name} must have COUNT 1")));
        }
        columns.extend(std::iter::repeat_n(col, count));
    }
    for required in [Column::X, Column::Y, Column::Z] {
        if !columns.contains(&required) {
            return Err(Error::parse(
                0,
                format!("missing coordinate field {required:?}"),
            ));
        }
    }
    let packed = columns.iter().any(|c| matches!(c, Column::Packed { .. }));
    let split = [Column::Red, Column::Green, Column::Blue]
        .iter()
        .all(|c| columns.contains(c));
    let has_color = packed || split;

    let declared = match (header.points, header.width, header.height) {
        (Some(n), _, _) => n,
        (None, Some(w), Some(h)) => w * h,
        (None, Some(w), None) => w,
        _ => return Err(Error::parse(0, "missing POINTS or WIDTH")),
    };

    let mut points = Vec::with_capacity(declared);
    let mut colors: Vec<Rgb> = Vec::new();
    let mut last_line = 0;
    for (lineno, raw) in lines {
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if points.len() == declared {
            return Err(Error::parse(
                lineno,
                format!("more records than the declared {declared} points"),
            ));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != columns.len() {
            return Err(Error::parse(
                lineno,
                format!("expected {} values, found {}", columns.len(), tokens.len()),
            ));
        }
        let mut p = [0.0f64; 3];
        let mut rgb = [0u8; 3];
        for (col, tok) in columns.iter().zip(&tokens) {
            match col {
                Column::X => p[0] = parse_f64(tok, lineno)?,
                Column::Y => p[1] = parse_f64(tok, lineno)?,
                Column::Z => p[2] = parse_f64(tok, lineno)?,
                Column::Packed { float } => rgb = unpack_rgb(tok, *float, lineno)?,
                Column::Red => rgb[0] = parse_channel(tok, lineno)?,
                Column::Green => rgb[1] = parse_channel(tok, lineno)?,
                Column::Blue => rgb[2] = parse_channel(tok, lineno)?,
                Column::Ignored => {}
            }
        }
        points.push(Point3::from(p));
        if has_color {
            colors.push(rgb);
        }
    }
    if points.len() != declared {
        return Err(Error::parse(
            last_line,
            format!(
                "header declares {declared} points but body has {} records ({} missing)",
                points.len(),
                declared - points.len()
            ),
        ));
    }
    Ok(PointCloud {
        points,
        colors: has_color.then_some(colors),
    })
}

fn parse_count(rest: &[&str], line: usize, key: &str) -> Result<usize> {
    rest.first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(line, format!("bad {key} value")))
}

fn parse_channel(token: &str, line: usize) -> Result<u8> {
    if let Ok(v) = token.parse::<u8>() {
        return Ok(v);
    }
    // Float channels in [0, 1].
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid color channel {token:?}")))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::parse(
            line,
            format!("color channel out of range {token:?}"),
        ));
    }
    Ok((v * 255.0).round() as u8)
}

fn unpack_rgb(token: &str, float: bool, line: usize) -> Result<Rgb> {
    let bits = if float {
        token
            .parse::<f32>()
            .map(f32::to_bits)
            .map_err(|_| Error::parse(line, format!("invalid packed rgb {token:?}")))?
    } else {
        token
            .parse::<u32>()
            .map_err(|_| Error::parse(line, format!("invalid packed rgb {token:?}")))?
    };
    Ok([(bits >> 16) as u8, (bits >> 8) as u8, bits as u8])
}

pub(super) fn encode(cloud: &PointCloud) -> String {
    let n = cloud.points.len();
    let mut out = String::with_capacity(64 + n * 48);
    out.push_str("# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\n");
    if cloud.colors.is_some() {
        out.push_str("FIELDS x y z rgb\nSIZE 8 8 8 4\nTYPE F F F U\nCOUNT 1 1 1 1\n");
    } else {
        out.push_str("FIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n");
    }
    let _ = write!(
        out,
        "WIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA ascii\n"
    );
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
        if let Some(colors) = &cloud.colors {
            let [r, g, b] = colors[i];
            let packed = (u32::from(r) << 16) | (u32::from(g) << 8) | u32::from(b);
            let _ = write!(out, " {packed}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = "# .PCD v0.7 - Point Cloud Data file format
VERSION 0.7
FIELDS x y z
SIZE 4 4 4
TYPE F F F
COUNT 1 1 1
WIDTH 3
HEIGHT 1
VIEWPOINT 0 0 0 1 0 0 0
POINTS 3
DATA ascii
0 0 0
1.5 -2 3
0.25 0.5 0.75
";

    #[test]
    fn three_uncolored_points() {
        let cloud = parse(THREE).unwrap();
        assert_eq!(cloud.len(), 3);
        assert!(cloud.colors.is_none());
        assert_eq!(cloud.points[1], Point3::new(1.5, -2.0, 3.0));
        assert_eq!(cloud.points[2], Point3::new(0.25, 0.5, 0.75));
    }

    #[test]
    fn count_deficit_is_reported() {
        let text = THREE
            .replace("POINTS 3", "POINTS 5")
            .replace("WIDTH 3", "WIDTH 5");
        match parse(&text) {
            Err(Error::Parse { message, .. }) => {
                assert!(message.contains("declares 5"), "{message}");
                assert!(message.contains("2 missing"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn binary_is_unsupported() {
        let text = THREE.replace("DATA ascii", "DATA binary");
        assert!(matches!(parse(&text), Err(Error::UnsupportedFormat(_))));
        let text = THREE.replace("DATA ascii", "DATA binary_compressed");
        assert!(matches!(parse(&text), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn malformed_record_names_line() {
        let text = THREE.replace("1.5 -2 3", "1.5 -2");
        match parse(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 13),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = THREE.replace("1.5 -2 3", "1.5 abc 3");
        assert!(matches!(parse(&text), Err(Error::Parse { line: 13, .. })));
    }

    #[test]
    fn packed_float_rgb() {
        let bits = (10u32 << 16) | (20 << 8) | 30;
        let f = f32::from_bits(bits);
        let text = format!(
            "VERSION 0.7\nFIELDS x y z rgb\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\nWIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\n1 2 3 {f:e}\n"
        );
        let cloud = parse(&text).unwrap();
        assert_eq!(cloud.colors.unwrap()[0], [10, 20, 30]);
    }

    #[test]
    fn extra_fields_are_skipped() {
        let text = "VERSION 0.7\nFIELDS x y z intensity normal\nSIZE 4 4 4 4 4\nTYPE F F F F F\nCOUNT 1 1 1 1 3\nWIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\n1 2 3 0.5 0 0 1\n";
        let cloud = parse(text).unwrap();
        assert_eq!(cloud.points[0], Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn header_is_exact() {
        let cloud =
            PointCloud::with_colors(vec![Point3::new(0.1, 0.2, 0.3)], vec![[255, 0, 1]]).unwrap();
        let text = encode(&cloud);
        assert_eq!(
            text,
            "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS x y z rgb\nSIZE 8 8 8 4\nTYPE F F F U\nCOUNT 1 1 1 1\nWIDTH 1\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 1\nDATA ascii\n0.1 0.2 0.3 16711681\n"
        );
        assert_eq!(parse(&text).unwrap(), cloud);
    }

    #[test]
    fn empty_cloud_encodes() {
        let text = encode(&PointCloud::default());
        let back = parse(&text).unwrap();
        assert!(back.is_empty());
    }
}
