use std::collections::hash_map::DefaultHasher;
use std::fs::{self, File};
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conformal::{
    build_chart, write_chart_obj, write_chart_triangle_csv, write_chart_vertex_csv, ConformalChart,
    ConformalError,
};
use crate::mmc::{Atlas, AtlasChart, ChartSample};

use super::config::ResolvedProblem;
use super::preprocess::PreparedPatch;
use super::{io_error, ErrorKind, PipelineError, Stage};

/// Charts on disk, tagged with the inputs they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartCache {
    pub key: String,
    pub charts: Vec<ConformalChart>,
}

impl ChartCache {
    pub const FILE_NAME: &'static str = "charts.json";

    /// Fingerprint of the mesh geometry and the patch definitions.
    pub fn key_for(problem: &ResolvedProblem) -> String {
        let mut h = DefaultHasher::new();
        for p in problem.mesh.vertices() {
            p.map(f64::to_bits).hash(&mut h);
        }
        problem.mesh.triangles().hash(&mut h);
        let patches = serde_json::to_string(problem.patches()).expect("patches serialize");
        format!("{:016x}:{patches}", h.finish())
    }

    pub fn load(dir: &Path, key: &str) -> Option<Vec<ConformalChart>> {
        let text = fs::read_to_string(dir.join(Self::FILE_NAME)).ok()?;
        let cache: ChartCache = serde_json::from_str(&text).ok()?;
        (cache.key == key).then_some(cache.charts)
    }

    pub fn store(dir: &Path, key: &str, charts: &[ConformalChart]) -> Result<(), PipelineError> {
        let path = dir.join(Self::FILE_NAME);
        let cache = ChartCache {
            key: key.to_string(),
            charts: charts.to_vec(),
        };
        let text = serde_json::to_string(&cache).expect("charts serialize");
        fs::write(&path, text).map_err(|e| io_error(Stage::Parameterize, &path, e))
    }
}

fn chart_error(id: &str, e: ConformalError) -> PipelineError {
    let kind = match e {
        ConformalError::NotDisk { .. }
        | ConformalError::UnreferencedVertices
        | ConformalError::CornerNotOnBoundary { .. }
        | ConformalError::CornersNotInOrder
        | ConformalError::InvalidAspect(_) => ErrorKind::Validation,
        _ => ErrorKind::Numerical,
    };
    PipelineError::new(Stage::Parameterize, kind, format!("patch {id}: {e}"))
}

/// Rectangle chart of every patch. Fill triangles are dropped from the chart and the patch
/// mesh once the map is built.
pub fn build_charts(patches: &mut [PreparedPatch]) -> Result<Vec<ConformalChart>, PipelineError> {
    patches
        .iter_mut()
        .map(|p| {
            let mut chart = build_chart(&p.mesh, &p.id, p.corners, p.aspect)
                .map_err(|e| chart_error(&p.id, e))?;
            strip_fill(p, &mut chart)?;
            Ok(chart)
        })
        .collect()
}

/// Drops the fill triangles of `patch` (and their entries in `chart`).
pub(crate) fn strip_fill(
    patch: &mut PreparedPatch,
    chart: &mut ConformalChart,
) -> Result<(), PipelineError> {
    if patch.fill_triangles.is_empty() {
        return Ok(());
    }
    let keep = patch.mesh.triangle_count() - patch.fill_triangles.len();
    if chart.mu_final.len() > keep {
        chart.mu_final.truncate(keep);
    }
    patch.mesh = patch
        .mesh
        .remove_triangles(&patch.fill_triangles)
        .map_err(|e| {
            PipelineError::new(Stage::Parameterize, ErrorKind::Validation, e.to_string())
        })?;
    patch.fill_triangles.clear();
    Ok(())
}

pub fn build_atlas(
    vertex_count: usize,
    patches: &[PreparedPatch],
    charts: &[ConformalChart],
) -> Result<Atlas<f64>, PipelineError> {
    let atlas_charts = patches
        .iter()
        .zip(charts)
        .map(|(p, c)| AtlasChart {
            id: p.id.clone(),
            width: c.width,
            height: c.height,
            samples: c
                .uv
                .iter()
                .zip(&p.to_global)
                .map(|(&uv, &vertex)| ChartSample { vertex, uv })
                .collect(),
        })
        .collect();
    Atlas::new(vertex_count, atlas_charts)
        .map_err(|e| PipelineError::new(Stage::Parameterize, ErrorKind::Validation, e.to_string()))
}

/// Per patch: `<id>_vertices.csv`, `<id>_triangles.csv` and `<id>.obj` under `dir`.
pub fn write_chart_artifacts(
    dir: &Path,
    patches: &[PreparedPatch],
    charts: &[ConformalChart],
) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|e| io_error(Stage::Parameterize, dir, e))?;
    for (p, c) in patches.iter().zip(charts) {
        write_one(&dir.join(format!("{}_vertices.csv", p.id)), |w| {
            write_chart_vertex_csv(c, w)
        })?;
        write_one(&dir.join(format!("{}_triangles.csv", p.id)), |w| {
            write_chart_triangle_csv(c, w)
        })?;
        write_one(&dir.join(format!("{}.obj", p.id)), |w| {
            write_chart_obj(&p.mesh, c, w)
        })?;
    }
    Ok(())
}

fn write_one(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), PipelineError> {
    let run = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        f(&mut w)?;
        w.flush()
    };
    run().map_err(|e| io_error(Stage::Parameterize, path, e))
}
