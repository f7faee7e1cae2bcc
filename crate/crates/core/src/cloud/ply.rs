//! ASCII PLY 1.0. Only the `vertex` element is read; other elements are skipped.

use std::fmt::Write as _;

use nalgebra::Point3;

use super::{parse_f64, PointCloud, Rgb};
use crate::error::{Error, Result};

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Property {
    name: String,
    /// List properties occupy a variable number of tokens.
    list: bool,
    float: bool,
}

pub(super) fn parse(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(1, "missing 'ply' magic")),
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut ended = false;
    for (lineno, raw) in lines.by_ref() {
        let line = raw.trim();
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => {}
            ["format", other, _] => {
                return Err(Error::UnsupportedFormat(format!("PLY format {other}")))
            }
            ["element", name, count] => elements.push(Element {
                name: (*name).to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad element count {count:?}")))?,
                properties: Vec::new(),
            }),
            ["property", "list", _, _, name] => {
                current(&mut elements, lineno)?.properties.push(Property {
                    name: (*name).to_string(),
                    list: true,
                    float: false,
                })
            }
            ["property", ty, name] => current(&mut elements, lineno)?.properties.push(Property {
                name: (*name).to_string(),
                list: false,
                float: matches!(*ty, "float" | "double" | "float32" | "float64"),
            }),
            ["end_header"] => {
                ended = true;
                break;
            }
            _ => {
                return Err(Error::parse(
                    lineno,
                    format!("unexpected header line {line:?}"),
                ))
            }
        }
    }
    if !ended {
        return Err(Error::parse(0, "missing end_header"));
    }

    let mut points = Vec::new();
    let mut colors: Vec<Rgb> = Vec::new();
    let mut has_color = false;
    let mut last_line = 0;
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty());

    for element in &elements {
        if element.name != "vertex" {
            for _ in 0..element.count {
                if body.next().is_none() {
                    return Err(Error::parse(
                        last_line,
                        format!("truncated body in element {}", element.name),
                    ));
                }
            }
            continue;
        }
        let find = |n: &str| element.properties.iter().position(|p| p.name == n);
        let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ => return Err(Error::parse(0, "vertex element lacks x/y/z")),
        };
        if element.properties.iter().any(|p| p.list) {
            return Err(Error::UnsupportedFormat(
                "list properties on vertices".into(),
            ));
        }
        let rgb_idx = match (
            find("red").or(find("r")),
            find("green").or(find("g")),
            find("blue").or(find("b")),
        ) {
            (Some(r), Some(g), Some(b)) => Some([r, g, b]),
            _ => None,
        };
        has_color = rgb_idx.is_some();
        points.reserve(element.count);

        for _ in 0..element.count {
            let Some((lineno, raw)) = body.next() else {
                return Err(Error::parse(
                    last_line,
                    format!(
                        "header declares {} vertices but body has {} ({} missing)",
                        element.count,
                        points.len(),
                        element.count - points.len()
                    ),
                ));
            };
            last_line = lineno;
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            if tokens.len() != element.properties.len() {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "expected {} values, found {}",
                        element.properties.len(),
                        tokens.len()
                    ),
                ));
            }
            points.push(Point3::new(
                parse_f64(tokens[ix], lineno)?,
                parse_f64(tokens[iy], lineno)?,
                parse_f64(tokens[iz], lineno)?,
            ));
            if let Some(idx) = rgb_idx {
                let mut rgb = [0u8; 3];
                for (c, &i) in rgb.iter_mut().zip(&idx) {
                    *c = channel(tokens[i], element.properties[i].float, lineno)?;
                }
                colors.push(rgb);
            }
        }
    }
    if let Some((lineno, _)) = body.next() {
        return Err(Error::parse(
            lineno,
            "trailing data after declared elements",
        ));
    }
    Ok(PointCloud {
        points,
        colors: has_color.then_some(colors),
    })
}

fn current(elements: &mut [Element], line: usize) -> Result<&mut Element> {
    elements
        .last_mut()
        .ok_or_else(|| Error::parse(line, "property before any element"))
}

fn channel(token: &str, float: bool, line: usize) -> Result<u8> {
    if float {
        let v: f64 = token
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid color {token:?}")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::parse(line, format!("color out of range {token:?}")));
        }
        Ok((v * 255.0).round() as u8)
    } else {
        token
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid color {token:?}")))
    }
}

pub(super) fn encode(cloud: &PointCloud) -> String {
    let n = cloud.points.len();
    let mut out = String::with_capacity(128 + n * 48);
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {n}\nproperty double x\nproperty double y\nproperty double z\n"
    );
    if cloud.colors.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
        if let Some(colors) = &cloud.colors {
            let [r, g, b] = colors[i];
            let _ = write!(out, " {r} {g} {b}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colored_vertices() {
        let text = "ply
format ascii 1.0
comment made by hand
element vertex 2
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
end_header
0 0 0 255 0 0
1 2 3 0 128 255
";
        let cloud = parse(text).unwrap();
        assert_eq!(cloud.points[1], Point3::new(1.0, 2.0, 3.0));
        assert_eq!(cloud.colors.unwrap(), vec![[255, 0, 0], [0, 128, 255]]);
    }

    #[test]
    fn faces_after_vertices_are_skipped() {
        let text = "ply
format ascii 1.0
element vertex 3
property float x
property float y
property float z
element face 1
property list uchar int vertex_indices
end_header
0 0 0
1 0 0
0 1 0
3 0 1 2
";
        let cloud = parse(text).unwrap();
        assert_eq!(cloud.len(), 3);
        assert!(cloud.colors.is_none());
    }

    #[test]
    fn binary_is_unsupported() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse(text), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn vertex_deficit() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nend_header\n0 0 0\n";
        match parse(text) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("2 missing")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_is_exact() {
        let cloud = PointCloud::new(vec![Point3::new(-1.0, 0.5, 1e-7)]);
        assert_eq!(
            encode(&cloud),
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\nend_header\n-1 0.5 0.0000001\n"
        );
    }
}
