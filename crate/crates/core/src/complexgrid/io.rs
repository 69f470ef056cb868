//! Mesh and field file formats: PLY (ASCII and binary little-endian), OBJ,
//! and CSV vertex fields.

use std::io::{BufRead, BufReader, Read, Write};

use super::{GridError, Mesh};
use crate::C64;

/// Triangle mesh in ℝ³ with optional named per-vertex scalars.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub vertex_scalars: Vec<(String, Vec<f64>)>,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Self {
        Self {
            vertices,
            faces,
            vertex_scalars: Vec::new(),
        }
    }

    /// Planar mesh lifted to z = 0.
    pub fn from_planar(mesh: &Mesh) -> Self {
        Self::new(
            mesh.vertices.iter().map(|z| [z.re, z.im, 0.0]).collect(),
            mesh.triangles.clone(),
        )
    }

    /// Planar connectivity with the given 3D positions.
    pub fn from_positions(mesh: &Mesh, positions: &[[f64; 3]]) -> Self {
        Self::new(positions.to_vec(), mesh.triangles.clone())
    }

    pub fn with_scalar(mut self, name: &str, values: Vec<f64>) -> Self {
        self.vertex_scalars.push((name.to_string(), values));
        self
    }

    /// Append another mesh, reindexing its faces. Scalars present in both are kept.
    pub fn append(&mut self, other: &SurfaceMesh) {
        let off = self.vertices.len();
        let n_other = other.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        let mut kept = Vec::new();
        for (name, mut vals) in std::mem::take(&mut self.vertex_scalars) {
            if let Some((_, o)) = other.vertex_scalars.iter().find(|(n, _)| *n == name) {
                vals.extend_from_slice(o);
                kept.push((name, vals));
            } else if n_other == 0 {
                kept.push((name, vals));
            }
        }
        self.vertex_scalars = kept;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

pub fn write_ply<W: Write>(mesh: &SurfaceMesh, format: PlyFormat, mut w: W) -> Result<(), GridError> {
    for (name, vals) in &mesh.vertex_scalars {
        if vals.len() != mesh.vertices.len() {
            return Err(GridError::FieldSize {
                expected: mesh.vertices.len(),
                got: vals.len(),
            });
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(GridError::Parse(format!("bad property name {name:?}")));
        }
    }
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(w, "ply\nformat {fmt} 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertices.len())?;
    writeln!(w, "property double x\nproperty double y\nproperty double z")?;
    for (name, _) in &mesh.vertex_scalars {
        writeln!(w, "property double {name}")?;
    }
    writeln!(w, "element face {}", mesh.faces.len())?;
    writeln!(w, "property list uchar int vertex_indices\nend_header")?;
    match format {
        PlyFormat::Ascii => {
            for (i, v) in mesh.vertices.iter().enumerate() {
                let mut line = format!("{} {} {}", v[0], v[1], v[2]);
                for (_, vals) in &mesh.vertex_scalars {
                    line.push_str(&format!(" {}", vals[i]));
                }
                writeln!(w, "{line}")?;
            }
            for f in &mesh.faces {
                writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
            }
        }
        PlyFormat::BinaryLittleEndian => {
            for (i, v) in mesh.vertices.iter().enumerate() {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
                for (_, vals) in &mesh.vertex_scalars {
                    w.write_all(&vals[i].to_le_bytes())?;
                }
            }
            for f in &mesh.faces {
                w.write_all(&[3u8])?;
                for &k in f {
                    let k = i32::try_from(k).map_err(|_| GridError::Parse("index overflow".into()))?;
                    w.write_all(&k.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
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
    fn parse(s: &str) -> Result<Self, GridError> {
        Ok(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return Err(GridError::Parse(format!("unknown PLY type {s}"))),
        })
    }

    fn read_le<R: Read>(self, r: &mut R) -> Result<f64, GridError> {
        macro_rules! rd {
            ($t:ty) => {{
                let mut b = [0u8; std::mem::size_of::<$t>()];
                r.read_exact(&mut b)?;
                <$t>::from_le_bytes(b) as f64
            }};
        }
        Ok(match self {
            Scalar::I8 => rd!(i8),
            Scalar::U8 => rd!(u8),
            Scalar::I16 => rd!(i16),
            Scalar::U16 => rd!(u16),
            Scalar::I32 => rd!(i32),
            Scalar::U32 => rd!(u32),
            Scalar::F32 => rd!(f32),
            Scalar::F64 => rd!(f64),
        })
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Read a PLY file with `vertex` (x, y, z plus extra scalar properties) and
/// triangular `face` elements. Other elements are skipped.
pub fn read_ply<R: Read>(r: R) -> Result<SurfaceMesh, GridError> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    let mut next_line = |r: &mut BufReader<R>| -> Result<String, GridError> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(GridError::Parse("unexpected end of header".into()));
        }
        Ok(line.trim().to_string())
    };
    if next_line(&mut r)? != "ply" {
        return Err(GridError::Parse("missing ply magic".into()));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let l = next_line(&mut r)?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["format", f, _] => {
                format = Some(match *f {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    _ => return Err(GridError::Parse(format!("unsupported PLY format {f}"))),
                })
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| GridError::Parse(format!("bad count {count}")))?,
                props: Vec::new(),
            }),
            ["property", "list", c, t, name] => elements
                .last_mut()
                .ok_or_else(|| GridError::Parse("property before element".into()))?
                .props
                .push(Property::List(name.to_string(), Scalar::parse(c)?, Scalar::parse(t)?)),
            ["property", t, name] => elements
                .last_mut()
                .ok_or_else(|| GridError::Parse("property before element".into()))?
                .props
                .push(Property::Scalar(name.to_string(), Scalar::parse(t)?)),
            ["end_header"] => break,
            _ => return Err(GridError::Parse(format!("bad header line {l:?}"))),
        }
    }
    let format = format.ok_or_else(|| GridError::Parse("missing format line".into()))?;

    let mut out = SurfaceMesh::default();
    let mut ascii_tokens: Vec<String> = Vec::new();
    if format == PlyFormat::Ascii {
        let mut rest = String::new();
        r.read_to_string(&mut rest)?;
        ascii_tokens = rest.split_whitespace().map(str::to_string).collect();
        ascii_tokens.reverse();
    }
    let mut read_value = |ty: Scalar, r: &mut BufReader<R>| -> Result<f64, GridError> {
        match format {
            PlyFormat::Ascii => {
                let t = ascii_tokens
                    .pop()
                    .ok_or_else(|| GridError::Parse("truncated PLY body".into()))?;
                t.parse::<f64>()
                    .map_err(|_| GridError::Parse(format!("bad number {t}")))
            }
            PlyFormat::BinaryLittleEndian => ty.read_le(r),
        }
    };
    for el in &elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        if is_vertex {
            for p in &el.props {
                if let Property::Scalar(name, _) = p {
                    if !["x", "y", "z"].contains(&name.as_str()) {
                        out.vertex_scalars.push((name.clone(), Vec::with_capacity(el.count)));
                    }
                }
            }
        }
        for _ in 0..el.count {
            let mut pos = [0.0; 3];
            for p in &el.props {
                match p {
                    Property::Scalar(name, ty) => {
                        let v = read_value(*ty, &mut r)?;
                        if is_vertex {
                            match name.as_str() {
                                "x" => pos[0] = v,
                                "y" => pos[1] = v,
                                "z" => pos[2] = v,
                                _ => {
                                    if let Some((_, vals)) =
                                        out.vertex_scalars.iter_mut().find(|(n, _)| n == name)
                                    {
                                        vals.push(v);
                                    }
                                }
                            }
                        }
                    }
                    Property::List(name, cty, ty) => {
                        let n = read_value(*cty, &mut r)? as usize;
                        let mut idx = Vec::with_capacity(n);
                        for _ in 0..n {
                            idx.push(read_value(*ty, &mut r)?);
                        }
                        if is_face && (name == "vertex_indices" || name == "vertex_index") {
                            if n != 3 {
                                return Err(GridError::Parse(format!("non-triangular face with {n} vertices")));
                            }
                            out.faces.push([idx[0] as usize, idx[1] as usize, idx[2] as usize]);
                        }
                    }
                }
            }
            if is_vertex {
                out.vertices.push(pos);
            }
        }
    }
    if out.faces.iter().flatten().any(|&k| k >= out.vertices.len()) {
        return Err(GridError::Parse("face index out of range".into()));
    }
    Ok(out)
}

pub fn write_obj<W: Write>(mesh: &SurfaceMesh, mut w: W) -> Result<(), GridError> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for f in &mesh.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// Read `v` and triangular `f` records of an OBJ file; `f a/b/c` forms keep the
/// position index.
pub fn read_obj<R: Read>(r: R) -> Result<SurfaceMesh, GridError> {
    let mut out = SurfaceMesh::default();
    for line in BufReader::new(r).lines() {
        let line = line?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for x in p.iter_mut() {
                    let t = tok.next().ok_or_else(|| GridError::Parse(line.clone()))?;
                    *x = t.parse().map_err(|_| GridError::Parse(line.clone()))?;
                }
                out.vertices.push(p);
            }
            Some("f") => {
                let idx: Vec<usize> = tok
                    .map(|t| {
                        t.split('/')
                            .next()
                            .and_then(|s| s.parse::<usize>().ok())
                            .filter(|&k| k >= 1)
                            .map(|k| k - 1)
                            .ok_or_else(|| GridError::Parse(line.clone()))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(GridError::Parse(format!("non-triangular face: {line}")));
                }
                out.faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    if out.faces.iter().flatten().any(|&k| k >= out.vertices.len()) {
        return Err(GridError::Parse("face index out of range".into()));
    }
    Ok(out)
}

/// Complex vertex field as CSV with header `vertex_index,re,im`.
pub fn write_field_csv<W: Write>(field: &[C64], mut w: W) -> Result<(), GridError> {
    writeln!(w, "vertex_index,re,im")?;
    for (i, z) in field.iter().enumerate() {
        writeln!(w, "{i},{},{}", z.re, z.im)?;
    }
    Ok(())
}

pub fn read_field_csv<R: Read>(r: R) -> Result<Vec<C64>, GridError> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || GridError::Parse(format!("line {}: {line}", n + 1));
        if cols.len() != 3 {
            return Err(bad());
        }
        let i: usize = cols[0].parse().map_err(|_| bad())?;
        if i != out.len() {
            return Err(bad());
        }
        out.push(C64::new(
            cols[1].parse().map_err(|_| bad())?,
            cols[2].parse().map_err(|_| bad())?,
        ));
    }
    Ok(out)
}

/// Real vertex fields as CSV with a caller-chosen header.
pub fn write_columns_csv<W: Write>(header: &[&str], columns: &[&[f64]], mut w: W) -> Result<(), GridError> {
    writeln!(w, "vertex,{}", header.join(","))?;
    let n = columns.first().map_or(0, |c| c.len());
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        writeln!(w, "{i},{}", row.join(","))?;
    }
    Ok(())
}
