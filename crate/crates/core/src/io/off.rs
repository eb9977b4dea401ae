use std::io::Write;

use super::{fmt_sig9, triangulate, MeshLoad};
use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::metrics::TriangleMesh;

/// Parses an OFF mesh. Polygons are fan-triangulated; trailing per-face color
/// values are ignored.
pub fn parse_off(text: &str) -> Result<MeshLoad> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (first_no, first) = lines.next().ok_or_else(|| Error::parse_line(1, "empty OFF file"))?;
    let rest = first
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse_line(first_no, "missing OFF magic"))?
        .trim();
    let (counts_no, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| Error::parse_line(first_no + 1, "missing OFF counts"))?
    } else {
        (first_no, rest)
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse_line(counts_no, "invalid OFF counts"))?;
    if nums.len() < 2 {
        return Err(Error::parse_line(counts_no, "OFF counts need vertex and face totals"));
    }
    let (nv, nf) = (nums[0], nums[1]);

    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::parse_line(0, format!("expected {} vertices, found {}", nv, i)))?;
        let c: Vec<f64> = line
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse_line(n, "invalid vertex coordinate"))?;
        if c.len() < 3 || c.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse_line(n, "vertex needs three finite coordinates"));
        }
        vertices.push(Point3::new(c[0], c[1], c[2]));
    }

    let mut polygons = Vec::with_capacity(nf);
    for i in 0..nf {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::parse_line(0, format!("expected {} faces, found {}", nf, i)))?;
        let mut tok = line.split_whitespace();
        let k: usize = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse_line(n, "invalid face vertex count"))?;
        let idx: Vec<i64> = tok
            .take(k)
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse_line(n, "invalid face index"))?;
        if idx.len() != k {
            return Err(Error::parse_line(n, "face has fewer indices than declared"));
        }
        if let Some(&bad) = idx.iter().find(|&&v| v < 0 || v as usize >= nv) {
            return Err(Error::parse_line(n, format!("face index {} out of range", bad)));
        }
        polygons.push(idx);
    }
    triangulate(vertices, &polygons)
}

pub fn write_off<W: Write>(mesh: &TriangleMesh, mut w: W) -> Result<()> {
    writeln!(w, "OFF\n{} {} 0", mesh.vertices().len(), mesh.faces().len())?;
    for v in mesh.vertices() {
        writeln!(w, "{} {} {}", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z))?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    w.flush()?;
    Ok(())
}
