use std::collections::BTreeSet;

use crate::conformal::{order_corners, Aspect};
use crate::mesh::{cut_along_paths, fill_hole, topology_summary, SeamMap, TriMesh};

use super::config::{PatchConfig, ResolvedProblem};
use super::{ErrorKind, PipelineError, Stage};

/// A patch cut open (and hole-filled) into a topological disk.
#[derive(Debug, Clone)]
pub struct PreparedPatch {
    pub id: String,
    pub mesh: TriMesh,
    /// Input-mesh vertex of every patch vertex.
    pub to_global: Vec<usize>,
    pub seam: SeamMap,
    /// Triangles added by hole filling; they come last in `mesh`.
    pub fill_triangles: Vec<usize>,
    pub corners: [usize; 4],
    /// Input-mesh vertices of the corners.
    pub corner_globals: Vec<usize>,
    pub aspect: Aspect,
}

fn invalid(id: &str, message: impl std::fmt::Display) -> PipelineError {
    PipelineError::new(
        Stage::Preprocess,
        ErrorKind::Validation,
        format!("patch {id}: {message}"),
    )
}

pub fn preprocess(problem: &ResolvedProblem) -> Result<Vec<PreparedPatch>, PipelineError> {
    problem
        .patches()
        .iter()
        .map(|p| prepare_patch(&problem.mesh, p))
        .collect()
}

fn prepare_patch(mesh: &TriMesh, cfg: &PatchConfig) -> Result<PreparedPatch, PipelineError> {
    let id = cfg.id.as_str();
    let tris = cfg.triangles.indices(mesh.triangle_count());
    let (mut local, extracted_to_global) = mesh.extract(&tris).map_err(|e| invalid(id, e))?;
    let mut to_local = vec![usize::MAX; mesh.vertex_count()];
    for (l, &g) in extracted_to_global.iter().enumerate() {
        to_local[g] = l;
    }
    let localize = |g: usize| {
        let l = to_local[g];
        if l == usize::MAX {
            Err(invalid(id, format!("vertex {g} is not in the patch")))
        } else {
            Ok(l)
        }
    };

    let mut fill_triangles = Vec::new();
    for &g in &cfg.fill_holes {
        let v = localize(g)?;
        let loop_id = local
            .boundary_loops()
            .iter()
            .position(|l| l.contains(&v))
            .ok_or_else(|| invalid(id, format!("vertex {g} is not on a hole")))?;
        let (filled, added) = fill_hole(&local, loop_id).map_err(|e| invalid(id, e))?;
        local = filled;
        fill_triangles.extend(added);
    }

    let paths = cfg
        .cuts
        .iter()
        .map(|p| p.iter().map(|&g| localize(g)).collect())
        .collect::<Result<Vec<Vec<usize>>, _>>()?;
    let (cut, seam) = if paths.is_empty() {
        (local, SeamMap::default())
    } else {
        cut_along_paths(&local, &paths).map_err(|e| invalid(id, e))?
    };

    let topo = topology_summary(&cut);
    if !topo.is_disk() {
        return Err(invalid(
            id,
            format!(
                "after cuts and fills the patch has genus {}, {} boundary loops and {} \
                 components; it must be a topological disk (add cut paths or fill holes)",
                topo.genus, topo.boundary_loop_count, topo.connected_components
            ),
        ));
    }
    let to_global: Vec<usize> = seam
        .to_uncut(cut.vertex_count())
        .into_iter()
        .map(|v| extracted_to_global[v])
        .collect();

    let corners = match &cfg.corners {
        Some(list) => {
            let mut expanded = Vec::new();
            for &g in list {
                let v = localize(g)?;
                match seam.vertices.iter().find(|s| s.original == v) {
                    Some(s) => expanded.extend(&s.copies),
                    None => expanded.push(v),
                }
            }
            if expanded.len() != 4 {
                return Err(invalid(
                    id,
                    format!(
                        "corners expand to {} vertices after cutting, need 4",
                        expanded.len()
                    ),
                ));
            }
            order_corners(&cut, &expanded).map_err(|e| invalid(id, e))?
        }
        None => auto_corners(&cut, &seam),
    };
    let corner_globals = match &cfg.corners {
        Some(list) => list.clone(),
        None => corners.iter().map(|&c| to_global[c]).collect(),
    };
    log::info!(
        "patch {id}: {} triangles ({} fill), {} vertices after cutting, {} seam pairs",
        cut.triangle_count(),
        fill_triangles.len(),
        cut.vertex_count(),
        seam.pairs.len()
    );
    Ok(PreparedPatch {
        id: id.to_string(),
        mesh: cut,
        to_global,
        seam,
        fill_triangles,
        corners,
        corner_globals,
        aspect: cfg.aspect,
    })
}

/// Four boundary vertices at quarter arc lengths, skipping vertices that lie on a cut.
fn auto_corners(mesh: &TriMesh, seam: &SeamMap) -> [usize; 4] {
    let on_seam: BTreeSet<usize> = seam
        .vertices
        .iter()
        .flat_map(|s| s.copies.iter().copied())
        .collect();
    let lp = &topology_summary(mesh).boundary_loops[0];
    let mut arc = vec![0.0];
    for k in 0..lp.len() {
        let (a, b) = (mesh.vertex(lp[k]), mesh.vertex(lp[(k + 1) % lp.len()]));
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        arc.push(arc[k] + d);
    }
    let total = arc[lp.len()];
    let mut out = [0; 4];
    for (q, slot) in out.iter_mut().enumerate() {
        let target = total * q as f64 / 4.0;
        *slot = (0..lp.len())
            .filter(|&k| !on_seam.contains(&lp[k]))
            .min_by(|&a, &b| (arc[a] - target).abs().total_cmp(&(arc[b] - target).abs()))
            .map(|k| lp[k])
            .unwrap_or(lp[q * lp.len() / 4]);
    }
    out
}
