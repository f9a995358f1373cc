use std::fs;
use std::io::Write;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Ply,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ply" => Some(MeshFormat::Ply),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh, MeshError> {
    let bytes = fs::read(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        MeshFormat::Ply => read_ply(&bytes),
        MeshFormat::Obj => {
            let text = String::from_utf8_lossy(&bytes);
            read_obj(&text)
        }
    }
}

fn parse_err(line: Option<usize>, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            PlyType::I8 => b[0] as i8 as f64,
            PlyType::U8 => b[0] as f64,
            PlyType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum PlyProperty {
    Scalar {
        name: String,
        ty: PlyType,
    },
    List {
        name: String,
        count: PlyType,
        item: PlyType,
    },
}

#[derive(Debug, Clone)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

enum PlyBody {
    Ascii,
    BinaryLe,
}

/// Token source over either an ASCII or a little-endian binary body.
struct BodyReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    ascii: bool,
}

impl BodyReader<'_> {
    fn next(&mut self, ty: PlyType) -> Result<f64, MeshError> {
        if self.ascii {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(parse_err(None, "unexpected end of PLY body"));
            }
            let tok = std::str::from_utf8(&self.bytes[start..self.pos])
                .map_err(|_| parse_err(None, "non-UTF-8 token in PLY body"))?;
            tok.parse::<f64>()
                .map_err(|_| parse_err(None, format!("bad number '{tok}' in PLY body")))
        } else {
            let n = ty.size();
            if self.pos + n > self.bytes.len() {
                return Err(parse_err(None, "unexpected end of binary PLY body"));
            }
            let v = ty.read_le(&self.bytes[self.pos..self.pos + n]);
            self.pos += n;
            Ok(v)
        }
    }
}

/// Parses ASCII or binary little-endian PLY with `vertex` (x, y, z) and `face` (vertex index
/// list) elements. Other elements are skipped; unknown vertex/face properties are ignored with a
/// warning.
pub fn read_ply(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let header_end =
        find_subslice(bytes, b"end_header").ok_or_else(|| parse_err(None, "missing end_header"))?;
    let mut body_start = header_end + b"end_header".len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| parse_err(None, "PLY header is not UTF-8"))?;

    let mut lines = header.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(Some(1), "missing 'ply' magic")),
    }
    let mut body = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    for (i, raw) in lines {
        let lineno = Some(i + 1);
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                body = Some(match *fmt {
                    "ascii" => PlyBody::Ascii,
                    "binary_little_endian" => PlyBody::BinaryLe,
                    other => {
                        return Err(parse_err(
                            lineno,
                            format!("unsupported PLY format '{other}'"),
                        ))
                    }
                })
            }
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad element count '{count}'")))?,
                properties: Vec::new(),
            }),
            ["property", "list", cty, ity, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(lineno, "property before element"))?;
                let count = PlyType::parse(cty)
                    .ok_or_else(|| parse_err(lineno, format!("unknown type '{cty}'")))?;
                let item = PlyType::parse(ity)
                    .ok_or_else(|| parse_err(lineno, format!("unknown type '{ity}'")))?;
                el.properties.push(PlyProperty::List {
                    name: name.to_string(),
                    count,
                    item,
                });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(lineno, "property before element"))?;
                let ty = PlyType::parse(ty)
                    .ok_or_else(|| parse_err(lineno, format!("unknown type '{ty}'")))?;
                el.properties.push(PlyProperty::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            _ => return Err(parse_err(lineno, format!("malformed header line '{raw}'"))),
        }
    }
    let body = body.ok_or_else(|| parse_err(None, "missing format line"))?;
    let mut reader = BodyReader {
        bytes: &bytes[body_start..],
        pos: 0,
        ascii: matches!(body, PlyBody::Ascii),
    };

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut saw_vertex = false;
    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                saw_vertex = true;
                let mut slots = [None; 3];
                for (k, p) in el.properties.iter().enumerate() {
                    match p {
                        PlyProperty::Scalar { name, .. } if name == "x" => slots[0] = Some(k),
                        PlyProperty::Scalar { name, .. } if name == "y" => slots[1] = Some(k),
                        PlyProperty::Scalar { name, .. } if name == "z" => slots[2] = Some(k),
                        PlyProperty::Scalar { name, .. } | PlyProperty::List { name, .. } => {
                            warn!("ignoring PLY vertex property '{name}'")
                        }
                    }
                }
                let slots = [
                    slots[0].ok_or_else(|| parse_err(None, "vertex element lacks 'x'"))?,
                    slots[1].ok_or_else(|| parse_err(None, "vertex element lacks 'y'"))?,
                    slots[2].ok_or_else(|| parse_err(None, "vertex element lacks 'z'"))?,
                ];
                vertices.reserve(el.count);
                let mut row = vec![0.0; el.properties.len()];
                for _ in 0..el.count {
                    for (k, p) in el.properties.iter().enumerate() {
                        row[k] = read_property(&mut reader, p)?.unwrap_or(0.0);
                    }
                    vertices.push([row[slots[0]], row[slots[1]], row[slots[2]]]);
                }
            }
            "face" => {
                let idx_prop = el
                    .properties
                    .iter()
                    .position(|p| {
                        matches!(p, PlyProperty::List { name, .. }
                            if name == "vertex_indices" || name == "vertex_index")
                    })
                    .ok_or_else(|| parse_err(None, "face element lacks vertex_indices"))?;
                for (k, p) in el.properties.iter().enumerate() {
                    if k != idx_prop {
                        let name = match p {
                            PlyProperty::Scalar { name, .. } | PlyProperty::List { name, .. } => {
                                name
                            }
                        };
                        warn!("ignoring PLY face property '{name}'");
                    }
                }
                triangles.reserve(el.count);
                for f in 0..el.count {
                    for (k, p) in el.properties.iter().enumerate() {
                        if k == idx_prop {
                            let PlyProperty::List { count, item, .. } = p else {
                                unreachable!()
                            };
                            let n = reader.next(*count)?;
                            if n < 0.0 || n.fract() != 0.0 {
                                return Err(parse_err(None, format!("bad list length {n}")));
                            }
                            let n = n as usize;
                            let mut idx = Vec::with_capacity(n);
                            for _ in 0..n {
                                idx.push(reader.next(*item)?);
                            }
                            if n != 3 {
                                return Err(MeshError::NonTriangularFace { face: f, arity: n });
                            }
                            let mut tri = [0usize; 3];
                            for (slot, &v) in tri.iter_mut().zip(&idx) {
                                if v < 0.0 || v.fract() != 0.0 {
                                    return Err(MeshError::IndexOutOfRange {
                                        triangle: f,
                                        index: v as i64,
                                        vertex_count: vertices.len(),
                                    });
                                }
                                *slot = v as usize;
                            }
                            triangles.push(tri);
                        } else {
                            read_property(&mut reader, p)?;
                        }
                    }
                }
            }
            other => {
                warn!("skipping PLY element '{other}'");
                for _ in 0..el.count {
                    for p in &el.properties {
                        read_property(&mut reader, p)?;
                    }
                }
            }
        }
    }
    if !saw_vertex {
        return Err(parse_err(None, "no vertex element"));
    }
    TriMesh::new(vertices, triangles)
}

fn read_property(reader: &mut BodyReader<'_>, p: &PlyProperty) -> Result<Option<f64>, MeshError> {
    match p {
        PlyProperty::Scalar { ty, .. } => reader.next(*ty).map(Some),
        PlyProperty::List { count, item, .. } => {
            let n = reader.next(*count)?;
            if n < 0.0 {
                return Err(parse_err(None, "negative list length"));
            }
            for _ in 0..n as usize {
                reader.next(*item)?;
            }
            Ok(None)
        }
    }
}

fn find_subslice(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

/// Writes vertices as `double` and faces as `uchar`/`int` lists.
pub fn write_ply(
    mesh: &TriMesh,
    out: &mut impl Write,
    encoding: PlyEncoding,
) -> std::io::Result<()> {
    let fmt = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(out, "ply")?;
    writeln!(out, "format {fmt} 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertex_count())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    writeln!(out, "element face {}", mesh.triangle_count())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    match encoding {
        PlyEncoding::Ascii => {
            for v in mesh.vertices() {
                writeln!(out, "{} {} {}", v[0], v[1], v[2])?;
            }
            for t in mesh.triangles() {
                writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for v in mesh.vertices() {
                for c in v {
                    out.write_all(&c.to_le_bytes())?;
                }
            }
            for t in mesh.triangles() {
                out.write_all(&[3u8])?;
                for &i in t {
                    out.write_all(&(i as i32).to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// Parses `v` and `f` records; other records are ignored. Faces must be triangles; indices may
/// use the `v/vt/vn` forms and negative (relative) indexing.
pub fn read_obj(text: &str) -> Result<TriMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = Some(i + 1);
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for slot in &mut p {
                    let tok = toks
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex needs three coordinates"))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad coordinate '{tok}'")))?;
                }
                vertices.push(p);
            }
            Some("f") => {
                let idx: Vec<&str> = toks.collect();
                if idx.len() != 3 {
                    return Err(MeshError::NonTriangularFace {
                        face: triangles.len(),
                        arity: idx.len(),
                    });
                }
                let mut tri = [0usize; 3];
                for (slot, tok) in tri.iter_mut().zip(idx) {
                    let head = tok.split('/').next().unwrap_or("");
                    let raw: i64 = head
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad face index '{tok}'")))?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else {
                        vertices.len() as i64 + raw
                    };
                    if raw == 0 || resolved < 0 {
                        return Err(MeshError::IndexOutOfRange {
                            triangle: triangles.len(),
                            index: raw,
                            vertex_count: vertices.len(),
                        });
                    }
                    *slot = resolved as usize;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

/// Writes an OBJ copy, optionally with per-vertex texture coordinates.
pub fn write_obj(
    mesh: &TriMesh,
    uv: Option<&[[f64; 2]]>,
    out: &mut impl Write,
) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
    }
    if let Some(uv) = uv {
        for p in uv {
            writeln!(out, "vt {} {}", p[0], p[1])?;
        }
    }
    for t in mesh.triangles() {
        if uv.is_some() {
            writeln!(
                out,
                "f {0}/{0} {1}/{1} {2}/{2}",
                t[0] + 1,
                t[1] + 1,
                t[2] + 1
            )?;
        } else {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::topology_summary;
    use proptest::prelude::*;

    #[test]
    fn single_triangle_obj() {
        let m = read_obj("# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.triangle_count(), 1);
        assert_eq!(topology_summary(&m).boundary_loop_count, 1);
    }

    #[test]
    fn obj_slash_forms_and_quads() {
        let m = read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 -1/1\n").unwrap();
        assert_eq!(m.triangles()[0], [0, 1, 2]);
        let quad = read_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
        assert!(matches!(
            quad,
            Err(MeshError::NonTriangularFace { arity: 4, .. })
        ));
    }

    #[test]
    fn ply_index_equal_to_vertex_count_is_out_of_range() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\n\
                    property float z\nelement face 1\nproperty list uchar int vertex_indices\n\
                    end_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 3\n";
        let err = read_ply(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn ply_unknown_properties_and_elements_are_skipped() {
        let text = "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\n\
                    property float y\nproperty float z\nproperty uchar red\n\
                    element face 1\nproperty list uchar int vertex_indices\nproperty int flags\n\
                    element edge 1\nproperty int vertex1\nproperty int vertex2\n\
                    end_header\n0 0 0 255\n1 0 0 0\n0 1 0 9\n3 0 1 2 7\n0 1\n";
        let m = read_ply(text.as_bytes()).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.vertex(1), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn malformed_header_is_a_parse_error() {
        let text = "ply\nformat ascii 1.0\nelement vertex three\nend_header\n";
        assert!(matches!(
            read_ply(text.as_bytes()),
            Err(MeshError::Parse { .. })
        ));
        let short = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n\
                     property float z\nend_header\n0 0 0\n";
        assert!(matches!(
            read_ply(short.as_bytes()),
            Err(MeshError::Parse { .. })
        ));
    }

    #[test]
    fn float32_binary_vertices() {
        let mut buf = Vec::new();
        buf.extend_from_slice(
            b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\n\
              property float y\nproperty float z\nelement face 1\n\
              property list uchar uint vertex_indices\nend_header\n",
        );
        for v in [[0.0f32, 0.0, 0.0], [1.5, 0.0, 0.0], [0.0, 2.25, 0.0]] {
            for c in v {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
        buf.push(3);
        for i in [0u32, 1, 2] {
            buf.extend_from_slice(&i.to_le_bytes());
        }
        let m = read_ply(&buf).unwrap();
        assert_eq!(m.vertex(2), [0.0, 2.25, 0.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn ply_round_trip(scale in 0.1f64..100.0, offset in -50.0f64..50.0, binary in any::<bool>()) {
            let mesh = fixtures::torus(3.0, 1.0, 9, 7).transformed(
                [[scale, 0.0, 0.0], [0.0, scale, 0.0], [0.0, 0.0, scale]],
                [offset, -offset, offset / 3.0],
            );
            let enc = if binary { PlyEncoding::BinaryLittleEndian } else { PlyEncoding::Ascii };
            let mut buf = Vec::new();
            write_ply(&mesh, &mut buf, enc).unwrap();
            let back = read_ply(&buf).unwrap();
            prop_assert_eq!(back.triangles(), mesh.triangles());
            for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
                for k in 0..3 {
                    if binary {
                        prop_assert_eq!(a[k].to_bits(), b[k].to_bits());
                    } else {
                        prop_assert!((a[k] - b[k]).abs() <= 1e-12 * b[k].abs().max(1e-300));
                    }
                }
            }
        }
    }

    #[test]
    fn obj_round_trip_with_uv() {
        let mesh = fixtures::flat_grid(3, 2, 2.0, 1.0);
        let uv: Vec<[f64; 2]> = mesh.vertices().iter().map(|v| [v[0], v[1]]).collect();
        let mut buf = Vec::new();
        write_obj(&mesh, Some(&uv), &mut buf).unwrap();
        let back = read_obj(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, mesh);
    }
}
