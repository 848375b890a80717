use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    XyzText,
}

impl CloudFormat {
    /// `.ply` means PLY, anything else is treated as xyz text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::XyzText,
        }
    }
}

pub fn load_cloud<T: Real>(path: &Path, format: CloudFormat) -> Result<PointCloud<T>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let raw = match format {
        CloudFormat::XyzText => parse_xyz(&text, path)?,
        CloudFormat::PlyAscii => parse_ply(&text, path)?,
    };
    if raw.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let pts = raw.into_iter().map(|[x, y, z]| Vec3::new(T::lit(x), T::lit(y), T::lit(z))).collect();
    PointCloud::new(pts, None)
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), line, msg: msg.into() }
}

fn parse_real(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(path, line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite coordinate `{tok}`")));
    }
    Ok(v)
}

fn parse_xyz(text: &str, path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(path, no + 1, format!("expected 3 values, found {}", toks.len())));
        }
        let mut p = [0.0; 3];
        for (slot, tok) in p.iter_mut().zip(&toks) {
            *slot = parse_real(tok, path, no + 1)?;
        }
        out.push(p);
    }
    Ok(out)
}

enum Prop {
    Scalar(String),
    List,
}

struct Element {
    name: String,
    count: usize,
    props: Vec<Prop>,
}

fn parse_ply(text: &str, path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(path, 1, "missing `ply` magic")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut header_done = false;
    for (no, line) in lines.by_ref() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if toks.get(1) != Some(&"ascii") {
                    return Err(parse_err(path, no + 1, "only `format ascii 1.0` is supported"));
                }
            }
            Some("element") => {
                let (Some(name), Some(count)) = (toks.get(1), toks.get(2)) else {
                    return Err(parse_err(path, no + 1, "malformed element line"));
                };
                let count = count.parse().map_err(|_| parse_err(path, no + 1, "bad element count"))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| parse_err(path, no + 1, "property before element"))?;
                if toks.get(1) == Some(&"list") {
                    el.props.push(Prop::List);
                } else {
                    let name = toks.get(2).ok_or_else(|| parse_err(path, no + 1, "malformed property line"))?;
                    el.props.push(Prop::Scalar(name.to_string()));
                }
            }
            Some("end_header") => {
                header_done = true;
                break;
            }
            Some(other) => return Err(parse_err(path, no + 1, format!("unknown header keyword `{other}`"))),
        }
    }
    if !header_done {
        return Err(parse_err(path, 0, "missing end_header"));
    }

    let mut out = Vec::new();
    let mut data = lines.filter(|(_, l)| !l.trim().is_empty());
    for el in &elements {
        let is_vertex = el.name == "vertex";
        let axis_of = |want: &str| {
            el.props.iter().position(|p| matches!(p, Prop::Scalar(n) if n == want))
        };
        let axes = if is_vertex {
            match (axis_of("x"), axis_of("y"), axis_of("z")) {
                (Some(x), Some(y), Some(z)) => Some([x, y, z]),
                _ => return Err(parse_err(path, 0, "vertex element lacks x, y, z properties")),
            }
        } else {
            None
        };
        for _ in 0..el.count {
            let Some((no, line)) = data.next() else {
                return Err(parse_err(path, 0, format!("file ends before all `{}` rows", el.name)));
            };
            let Some(axes) = axes else { continue };
            let toks: Vec<&str> = line.split_whitespace().collect();
            // walk properties so list-valued columns are skipped correctly
            let mut vals = Vec::with_capacity(el.props.len());
            let mut t = 0;
            for prop in &el.props {
                match prop {
                    Prop::Scalar(_) => {
                        let tok = toks.get(t).ok_or_else(|| parse_err(path, no + 1, "too few values"))?;
                        vals.push(Some(*tok));
                        t += 1;
                    }
                    Prop::List => {
                        let len: usize = toks
                            .get(t)
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| parse_err(path, no + 1, "bad list length"))?;
                        vals.push(None);
                        t += 1 + len;
                    }
                }
            }
            let mut p = [0.0; 3];
            for (slot, &ax) in p.iter_mut().zip(&axes) {
                let tok = vals[ax].ok_or_else(|| parse_err(path, no + 1, "coordinate is a list"))?;
                *slot = parse_real(tok, path, no + 1)?;
            }
            out.push(p);
        }
    }
    Ok(out)
}

pub fn save_cloud<T: Real>(cloud: &PointCloud<T>, path: &Path, format: CloudFormat) -> Result<()> {
    let mut s = String::new();
    if format == CloudFormat::PlyAscii {
        let _ = write!(
            s,
            "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
            cloud.len()
        );
    }
    for p in cloud.points() {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy());
    }
    fs::write(path, s).map_err(|source| Error::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_with_comments() {
        let pts = parse_xyz("# header\n0 0 0\n1 0 0 # trailing\n\n0 1 0\n", Path::new("a.xyz")).unwrap();
        assert_eq!(pts.len(), 3);
    }

    #[test]
    fn xyz_nan_names_line() {
        let err = parse_xyz("0 0 0\n1 nan 0\n", Path::new("a.xyz")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ply_cube_with_faces() {
        let mut s = String::from(
            "ply\nformat ascii 1.0\ncomment cube\nelement vertex 8\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n",
        );
        for i in 0..8 {
            s += &format!("{} {} {} 255\n", i & 1, (i >> 1) & 1, (i >> 2) & 1);
        }
        s += "4 0 1 2 3\n";
        let pts = parse_ply(&s, Path::new("c.ply")).unwrap();
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[7], [1.0, 1.0, 1.0]);
    }

    #[test]
    fn ply_binary_rejected() {
        let s = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert!(matches!(parse_ply(s, Path::new("b.ply")), Err(Error::Parse { line: 2, .. })));
    }
}
