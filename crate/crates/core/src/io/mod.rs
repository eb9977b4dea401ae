//! Point cloud and mesh file formats: XYZ text, PLY (ascii and binary
//! little-endian) and OFF.

mod off;
mod ply;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

pub use off::{parse_off, write_off};
pub use ply::{parse_ply, write_ply, PlyData, PlyFormat};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};
use crate::metrics::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    PlyAscii,
    PlyBinaryLe,
}

impl CloudFormat {
    /// Output format implied by a file extension; `.ply` means binary.
    pub fn from_path(path: &Path) -> Result<CloudFormat> {
        match extension(path).as_deref() {
            Some("xyz") | Some("txt") | Some("pts") => Ok(CloudFormat::Xyz),
            Some("ply") => Ok(CloudFormat::PlyBinaryLe),
            _ => Err(Error::UnsupportedFormat(format!("cannot infer cloud format of {}", path.display()))),
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(CloudFormat::Xyz),
            "ply" | "ply_binary" | "ply_binary_le" | "binary" => Ok(CloudFormat::PlyBinaryLe),
            "ply_ascii" | "ascii" => Ok(CloudFormat::PlyAscii),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

/// Formats `x` with 9 significant digits, like C's `%.9g`.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{}e{}", m, exp)
    }
}

/// Parses XYZ text: one point per line, at least three whitespace-separated
/// numbers (extra columns ignored), `#` starts a comment.
pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut coords = [0.0; 3];
        let mut tok = line.split_whitespace();
        for c in coords.iter_mut() {
            let t = tok
                .next()
                .ok_or_else(|| Error::parse_line(line_no, "expected three coordinates"))?;
            *c = t
                .parse::<f64>()
                .map_err(|_| Error::parse_line(line_no, format!("invalid number '{}'", t)))?;
            if !c.is_finite() {
                return Err(Error::parse_line(line_no, "non-finite coordinate"));
            }
        }
        points.push(Point3::from_array(coords));
    }
    if points.is_empty() {
        return Err(Error::parse_line(0, "no points in XYZ data"));
    }
    PointCloud::new(points)
}

pub fn write_xyz<W: Write>(cloud: &PointCloud, mut w: W) -> Result<()> {
    for p in cloud.points() {
        writeln!(w, "{} {} {}", fmt_sig9(p.x), fmt_sig9(p.y), fmt_sig9(p.z))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cloud; PLY is detected by its magic, otherwise the extension
/// decides.
pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"ply") {
        let data = parse_ply(&bytes)?;
        if data.vertices.is_empty() {
            return Err(Error::parse_line(0, "PLY file has no vertices"));
        }
        return PointCloud::new(data.vertices);
    }
    match extension(path).as_deref() {
        Some("xyz") | Some("txt") | Some("pts") => {
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::parse_byte(e.valid_up_to() as u64, "not UTF-8"))?;
            parse_xyz(text)
        }
        _ => Err(Error::UnsupportedFormat(format!("{}", path.display()))),
    }
}

pub fn write_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFormat) -> Result<()> {
    let w = BufWriter::new(fs::File::create(path.as_ref())?);
    match format {
        CloudFormat::Xyz => write_xyz(cloud, w),
        CloudFormat::PlyAscii => write_ply(cloud, PlyFormat::Ascii, w),
        CloudFormat::PlyBinaryLe => write_ply(cloud, PlyFormat::BinaryLittleEndian, w),
    }
}

/// A loaded mesh and the number of degenerate faces that were dropped.
#[derive(Debug, Clone)]
pub struct MeshLoad {
    pub mesh: TriangleMesh,
    pub dropped_degenerate: usize,
}

/// Fan-triangulates polygons and validates indices.
pub(crate) fn triangulate(vertices: Vec<Point3>, polygons: &[Vec<i64>]) -> Result<MeshLoad> {
    let n = vertices.len() as i64;
    let mut faces = Vec::new();
    for (fi, poly) in polygons.iter().enumerate() {
        if poly.len() < 3 {
            return Err(Error::parse_line(0, format!("face {} has fewer than 3 vertices", fi)));
        }
        if let Some(&bad) = poly.iter().find(|&&i| i < 0 || i >= n) {
            return Err(Error::parse_line(
                0,
                format!("face {} references vertex {} of {}", fi, bad, n),
            ));
        }
        for k in 1..poly.len() - 1 {
            faces.push([poly[0] as usize, poly[k] as usize, poly[k + 1] as usize]);
        }
    }
    let (mesh, dropped) = TriangleMesh::new_dropping_degenerate(vertices, faces)?;
    if dropped > 0 {
        log::warn!("dropped {} degenerate faces", dropped);
    }
    Ok(MeshLoad {
        mesh,
        dropped_degenerate: dropped,
    })
}

/// Reads an OFF or PLY mesh.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<MeshLoad> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"ply") {
        let data = parse_ply(&bytes)?;
        return triangulate(data.vertices, &data.faces);
    }
    let is_off = extension(path).as_deref() == Some("off") || bytes.starts_with(b"OFF");
    if !is_off {
        return Err(Error::UnsupportedFormat(format!("{}", path.display())));
    }
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::parse_byte(e.valid_up_to() as u64, "not UTF-8"))?;
    parse_off(text)
}

pub fn write_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    write_off(mesh, BufWriter::new(fs::File::create(path.as_ref())?))
}
