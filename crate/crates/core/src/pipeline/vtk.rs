use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::fea::FieldSnapshot;
use crate::mesh::TriMesh;

use super::{io_error, ErrorKind, PipelineError, Stage};

/// Legacy ASCII VTK polydata with `phi` and `displacement` per point and `rho` and
/// `strain_energy_density` per cell.
pub fn export_vtk(
    path: &Path,
    mesh: &TriMesh,
    snapshot: &FieldSnapshot<f64>,
    phi: &[f64],
    strain_energy_density: &[f64],
) -> Result<(), PipelineError> {
    let (nv, nt) = (mesh.vertex_count(), mesh.triangle_count());
    for (name, len, want) in [
        ("phi", phi.len(), nv),
        ("rho", snapshot.rho.len(), nt),
        ("strain_energy_density", strain_energy_density.len(), nt),
    ] {
        if len != want {
            return Err(PipelineError::new(
                Stage::Export,
                ErrorKind::Validation,
                format!("{name} has {len} values, mesh needs {want}"),
            ));
        }
    }
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "surfmmc compliance {:e}", snapshot.compliance)?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET POLYDATA")?;
        writeln!(w, "POINTS {nv} double")?;
        for p in mesh.vertices() {
            writeln!(w, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
        }
        writeln!(w, "POLYGONS {nt} {}", 4 * nt)?;
        for t in mesh.triangles() {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "POINT_DATA {nv}")?;
        writeln!(w, "SCALARS phi double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in phi {
            writeln!(w, "{v:e}")?;
        }
        if snapshot.displacement.len() == 6 * nv {
            writeln!(w, "VECTORS displacement double")?;
            for u in snapshot.displacement.chunks_exact(6) {
                writeln!(w, "{:e} {:e} {:e}", u[0], u[1], u[2])?;
            }
        }
        writeln!(w, "CELL_DATA {nt}")?;
        for (name, values) in [
            ("rho", &snapshot.rho[..]),
            ("strain_energy_density", strain_energy_density),
        ] {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in values {
                writeln!(w, "{v:e}")?;
            }
        }
        w.flush()
    };
    write().map_err(|e| io_error(Stage::Export, path, e))
}

/// Contents of a file written by [`export_vtk`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub point_scalars: BTreeMap<String, Vec<f64>>,
    pub point_vectors: BTreeMap<String, Vec<[f64; 3]>>,
    pub cell_scalars: BTreeMap<String, Vec<f64>>,
}

/// Reads the legacy ASCII polydata subset that [`export_vtk`] produces.
pub fn read_vtk(text: &str) -> Result<VtkData, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    if !header.starts_with("# vtk DataFile") {
        return Err("missing VTK header".into());
    }
    lines.next();
    if lines.next().map(str::trim) != Some("ASCII") {
        return Err("only ASCII files are supported".into());
    }
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut next = || {
        tokens
            .next()
            .ok_or_else(|| "unexpected end of file".to_string())
    };
    fn num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
        s.parse().map_err(|_| format!("bad number {s:?}"))
    }

    let mut data = VtkData::default();
    let (mut points, mut cells) = (0usize, 0usize);
    let mut on_cells = false;
    loop {
        let key = match next() {
            Ok(k) => k,
            Err(_) => break,
        };
        match key {
            "DATASET" => {
                let kind = next()?;
                if kind != "POLYDATA" {
                    return Err(format!("unsupported dataset {kind}"));
                }
            }
            "POINTS" => {
                points = num(next()?)?;
                next()?;
                for _ in 0..points {
                    data.points
                        .push([num(next()?)?, num(next()?)?, num(next()?)?]);
                }
            }
            "POLYGONS" => {
                let n: usize = num(next()?)?;
                next()?;
                for _ in 0..n {
                    let k: usize = num(next()?)?;
                    if k != 3 {
                        return Err(format!("polygon with {k} vertices"));
                    }
                    data.triangles
                        .push([num(next()?)?, num(next()?)?, num(next()?)?]);
                }
            }
            "POINT_DATA" => {
                on_cells = false;
                points = num(next()?)?;
            }
            "CELL_DATA" => {
                on_cells = true;
                cells = num(next()?)?;
            }
            "SCALARS" => {
                let name = next()?.to_string();
                next()?;
                let mut k = next()?;
                if k != "LOOKUP_TABLE" {
                    if num::<usize>(k)? != 1 {
                        return Err("only single-component scalars are supported".into());
                    }
                    k = next()?;
                }
                if k != "LOOKUP_TABLE" {
                    return Err("missing LOOKUP_TABLE".into());
                }
                next()?;
                let n = if on_cells { cells } else { points };
                let values = (0..n)
                    .map(|_| next().and_then(num))
                    .collect::<Result<Vec<f64>, _>>()?;
                if on_cells {
                    data.cell_scalars.insert(name, values);
                } else {
                    data.point_scalars.insert(name, values);
                }
            }
            "VECTORS" => {
                let name = next()?.to_string();
                next()?;
                let values = (0..points)
                    .map(|_| Ok([num(next()?)?, num(next()?)?, num(next()?)?]))
                    .collect::<Result<Vec<[f64; 3]>, String>>()?;
                data.point_vectors.insert(name, values);
            }
            other => return Err(format!("unexpected keyword {other:?}")),
        }
    }
    Ok(data)
}
