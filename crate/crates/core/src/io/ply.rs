//! PLY reader (ascii and binary little-endian) and writer.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, Clone)]
struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    /// Byte offset of the first body byte.
    body_start: usize,
    /// Number of header lines (for ascii line numbers).
    lines: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();

    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse_line(line_no + 1, "unterminated PLY header"))?;
        let raw = &bytes[pos..pos + end];
        pos += end + 1;
        line_no += 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| Error::parse_line(line_no, "PLY header is not valid UTF-8"))?
            .trim();
        let mut tok = line.split_whitespace();
        let head = tok.next().unwrap_or("");
        if line_no == 1 {
            if head != "ply" {
                return Err(Error::parse_line(1, "missing 'ply' magic"));
            }
            continue;
        }
        match head {
            "" | "comment" | "obj_info" => {}
            "format" => {
                format = Some(match tok.next() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLittleEndian,
                    Some(other) => return Err(Error::UnsupportedFormat(format!("PLY format '{}'", other))),
                    None => return Err(Error::parse_line(line_no, "format line without a format")),
                });
            }
            "element" => {
                let name = tok
                    .next()
                    .ok_or_else(|| Error::parse_line(line_no, "element without a name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| Error::parse_line(line_no, "element without a valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            "property" => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse_line(line_no, "property before any element"))?;
                let ty = tok.next().unwrap_or("");
                let bad_type = |t: &str| Error::parse_line(line_no, format!("unknown property type '{}'", t));
                let prop = if ty == "list" {
                    let c = tok.next().unwrap_or("");
                    let i = tok.next().unwrap_or("");
                    let name = tok
                        .next()
                        .ok_or_else(|| Error::parse_line(line_no, "list property without a name"))?;
                    Property::List {
                        name: name.to_string(),
                        count: Scalar::parse(c).ok_or_else(|| bad_type(c))?,
                        item: Scalar::parse(i).ok_or_else(|| bad_type(i))?,
                    }
                } else {
                    let name = tok
                        .next()
                        .ok_or_else(|| Error::parse_line(line_no, "property without a name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty: Scalar::parse(ty).ok_or_else(|| bad_type(ty))?,
                    }
                };
                el.props.push(prop);
            }
            "end_header" => break,
            other => return Err(Error::parse_line(line_no, format!("unexpected header keyword '{}'", other))),
        }
    }

    Ok(Header {
        format: format.ok_or_else(|| Error::parse_line(line_no, "PLY header has no format line"))?,
        elements,
        body_start: pos,
        lines: line_no,
    })
}

/// Values of one element instance: scalars as `f64`, lists as vectors.
#[derive(Debug, Clone)]
enum Value {
    Scalar(f64),
    List(Vec<f64>),
}

trait BodyReader {
    fn read_instance(&mut self, el: &Element) -> Result<Vec<Value>>;
    fn finish(&mut self) -> Result<()>;
}

struct AsciiBody<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_offset: usize,
    last_line: usize,
}

impl<'a> AsciiBody<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.lines.by_ref() {
            let n = i + 1 + self.line_offset;
            self.last_line = n;
            if !line.trim().is_empty() {
                return Some((n, line));
            }
        }
        None
    }
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse_line(line, format!("invalid number '{}'", tok)))
}

impl BodyReader for AsciiBody<'_> {
    fn read_instance(&mut self, el: &Element) -> Result<Vec<Value>> {
        let (n, line) = self.next_line().ok_or_else(|| {
            Error::parse_line(self.last_line + 1, format!("unexpected end of data in element '{}'", el.name))
        })?;
        let mut tok = line.split_whitespace();
        let mut next = || tok.next().ok_or_else(|| Error::parse_line(n, "too few values on line"));
        let mut out = Vec::with_capacity(el.props.len());
        for p in &el.props {
            match p {
                Property::Scalar { .. } => out.push(Value::Scalar(parse_number(next()?, n)?)),
                Property::List { .. } => {
                    let c = parse_number(next()?, n)?;
                    if !(c >= 0.0 && c.fract() == 0.0) {
                        return Err(Error::parse_line(n, "invalid list length"));
                    }
                    let items = (0..c as usize)
                        .map(|_| parse_number(next()?, n))
                        .collect::<Result<Vec<_>>>()?;
                    out.push(Value::List(items));
                }
            }
        }
        Ok(out)
    }

    fn finish(&mut self) -> Result<()> {
        if let Some((n, _)) = self.next_line() {
            return Err(Error::parse_line(n, "more data than the header declares"));
        }
        Ok(())
    }
}

struct BinaryBody<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BinaryBody<'_> {
    fn take(&mut self, ty: Scalar) -> Result<f64> {
        let size = ty.size();
        if self.pos + size > self.bytes.len() {
            return Err(Error::parse_byte(self.pos as u64, "unexpected end of binary data"));
        }
        let v = ty.decode_le(&self.bytes[self.pos..self.pos + size]);
        self.pos += size;
        Ok(v)
    }
}

impl BodyReader for BinaryBody<'_> {
    fn read_instance(&mut self, el: &Element) -> Result<Vec<Value>> {
        let mut out = Vec::with_capacity(el.props.len());
        for p in &el.props {
            match *p {
                Property::Scalar { ty, .. } => out.push(Value::Scalar(self.take(ty)?)),
                Property::List { count, item, .. } => {
                    let at = self.pos as u64;
                    let c = self.take(count)?;
                    if !(c >= 0.0) {
                        return Err(Error::parse_byte(at, "invalid list length"));
                    }
                    let items = (0..c as usize).map(|_| self.take(item)).collect::<Result<Vec<_>>>()?;
                    out.push(Value::List(items));
                }
            }
        }
        Ok(out)
    }

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Vertex positions and raw face index lists.
#[derive(Debug, Clone, Default)]
pub struct PlyData {
    pub vertices: Vec<Point3>,
    pub faces: Vec<Vec<i64>>,
}

pub fn parse_ply(bytes: &[u8]) -> Result<PlyData> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_start..];
    let mut ascii;
    let mut binary;
    let reader: &mut dyn BodyReader = match header.format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| Error::parse_byte(header.body_start as u64, "ascii PLY body is not UTF-8"))?;
            ascii = AsciiBody {
                lines: text.lines().enumerate(),
                line_offset: header.lines,
                last_line: header.lines,
            };
            &mut ascii
        }
        PlyFormat::BinaryLittleEndian => {
            binary = BinaryBody { bytes, pos: header.body_start };
            &mut binary
        }
    };

    let mut data = PlyData::default();
    for el in &header.elements {
        let slot = |name: &str| el.props.iter().position(|p| p.name() == name);
        match el.name.as_str() {
            "vertex" => {
                let (xi, yi, zi) = match (slot("x"), slot("y"), slot("z")) {
                    (Some(x), Some(y), Some(z)) => (x, y, z),
                    _ => return Err(Error::parse_line(header.lines, "vertex element lacks x, y or z")),
                };
                data.vertices.reserve(el.count);
                for i in 0..el.count {
                    let vals = reader.read_instance(el)?;
                    let get = |k: usize| match vals[k] {
                        Value::Scalar(v) => Ok(v),
                        Value::List(_) => Err(Error::parse_line(header.lines, "coordinate declared as a list")),
                    };
                    let p = Point3::new(get(xi)?, get(yi)?, get(zi)?);
                    if !p.is_finite() {
                        return Err(Error::parse_line(
                            header.lines + i + 1,
                            format!("non-finite coordinate in vertex {}", i),
                        ));
                    }
                    data.vertices.push(p);
                }
            }
            "face" => {
                let fi = slot("vertex_indices")
                    .or_else(|| slot("vertex_index"))
                    .ok_or_else(|| Error::parse_line(header.lines, "face element lacks vertex_indices"))?;
                for _ in 0..el.count {
                    let vals = reader.read_instance(el)?;
                    match &vals[fi] {
                        Value::List(items) => data.faces.push(items.iter().map(|&v| v as i64).collect()),
                        Value::Scalar(_) => {
                            return Err(Error::parse_line(header.lines, "vertex_indices must be a list"))
                        }
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    reader.read_instance(el)?;
                }
            }
        }
    }
    reader.finish()?;
    Ok(data)
}

pub fn write_ply<W: Write>(cloud: &PointCloud, format: PlyFormat, mut w: W) -> Result<()> {
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    write!(
        w,
        "ply\nformat {} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        fmt,
        cloud.len()
    )?;
    match format {
        PlyFormat::Ascii => {
            for p in cloud.points() {
                writeln!(w, "{} {} {}", super::fmt_sig9(p.x), super::fmt_sig9(p.y), super::fmt_sig9(p.z))?;
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let mut buf = Vec::with_capacity(cloud.len() * 24);
            for p in cloud.points() {
                buf.extend_from_slice(&p.x.to_le_bytes());
                buf.extend_from_slice(&p.y.to_le_bytes());
                buf.extend_from_slice(&p.z.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_three_vertices() {
        let src = b"ply\nformat ascii 1.0\ncomment hi\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nend_header\n0 0 0 255\n1 2 3 0\n-1 0.5 2 7\n";
        let d = parse_ply(src).unwrap();
        assert_eq!(d.vertices.len(), 3);
        assert_eq!(d.vertices[2], Point3::new(-1.0, 0.5, 2.0));
    }

    #[test]
    fn ascii_short_body_is_an_error() {
        let src = b"ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 2 3\n1 1 1\n";
        let err = parse_ply(src).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{:?}", err);
    }

    #[test]
    fn binary_with_extra_properties_and_faces() {
        let mut src = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty uchar flag\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for (x, y, z) in [(1.0f32, 2.0f32, 3.0f32), (4.0, 5.0, 6.0)] {
            src.extend_from_slice(&x.to_le_bytes());
            src.push(9);
            src.extend_from_slice(&y.to_le_bytes());
            src.extend_from_slice(&z.to_le_bytes());
        }
        src.push(3);
        for i in [0i32, 1, 1] {
            src.extend_from_slice(&i.to_le_bytes());
        }
        let d = parse_ply(&src).unwrap();
        assert_eq!(d.vertices, vec![Point3::new(1., 2., 3.), Point3::new(4., 5., 6.)]);
        assert_eq!(d.faces, vec![vec![0, 1, 1]]);

        let truncated = &src[..src.len() - 3];
        assert!(matches!(
            parse_ply(truncated),
            Err(Error::Parse { location: crate::error::Location::Byte(_), .. })
        ));
    }

    #[test]
    fn rejects_big_endian_and_nan() {
        let be = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse_ply(be), Err(Error::UnsupportedFormat(_))));
        let nan = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\nnan 0 0\n";
        assert!(matches!(parse_ply(nan), Err(Error::Parse { .. })));
    }
}
