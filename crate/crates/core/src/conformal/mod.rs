//! Two-stage conformal parameterization of disk-like patches onto rectangles.
//!
//! A harmonic map `h` first takes the patch onto the unit disk. The Beltrami coefficient of
//! `h^-1` then drives a linear Beltrami solve for `g` from the disk onto a rectangle, so that
//! `f = g o h` is (discretely) conformal.

mod beltrami;
mod disk;
mod laplacian;
mod rect;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{CsrMatrix, LinalgError, SolverOptions, SpdSolver};
use crate::mesh::{write_obj, TriMesh};

pub use beltrami::{beltrami_coefficient, beltrami_from_triangles, BeltramiField};
pub use disk::{harmonic_disk_map, harmonic_disk_map_with};
pub use laplacian::{build_laplacian, build_planar_laplacian, SymmetricCoefficient};
pub use rect::{
    aspect_sweep, rectangle_map, Aspect, RectangleMap, AUTO_ASPECT_RANGE, AUTO_ASPECT_TOL,
};

use laplacian::{flatten_triangle, Tri2};

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("patch is not a topological disk (genus {genus}, {boundary_loops} boundary loops, {components} components)")]
    NotDisk {
        genus: i64,
        boundary_loops: usize,
        components: usize,
    },
    #[error("patch has vertices not referenced by any triangle")]
    UnreferencedVertices,
    #[error("coefficient matrix of triangle {triangle} is not positive definite")]
    NotPositiveDefinite { triangle: usize },
    #[error("triangle {triangle} is degenerate")]
    DegenerateTriangle { triangle: usize },
    #[error("Beltrami coefficient of triangle {triangle} has modulus {modulus} >= 1")]
    BeltramiTooLarge { triangle: usize, modulus: f64 },
    #[error("corner vertex {vertex} is not on the patch boundary")]
    CornerNotOnBoundary { vertex: usize },
    #[error("corner vertices are not distinct and in boundary order")]
    CornersNotInOrder,
    #[error("{stage}: {count} flipped triangles (first: {first})")]
    Flipped {
        stage: &'static str,
        count: usize,
        first: usize,
    },
    #[error("invalid aspect ratio {0}")]
    InvalidAspect(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("chart boundary vertex {vertex} is off the rectangle boundary by {distance:e}")]
    OffBoundary { vertex: usize, distance: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Solves `K x = 0` on the free entries with the given Dirichlet values.
pub(crate) fn solve_dirichlet(
    k: &CsrMatrix<f64>,
    fixed: &[Option<f64>],
    options: SolverOptions,
) -> Result<Vec<f64>, ConformalError> {
    let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
    let mut x: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    if free.is_empty() {
        return Ok(x);
    }
    let rhs: Vec<f64> = free
        .iter()
        .map(|&i| {
            -k.row_iter(i)
                .filter_map(|(j, kij)| fixed[j].map(|xj| kij * xj))
                .sum::<f64>()
        })
        .collect();
    let kff = k.principal_submatrix(&free);
    let sol = SpdSolver::new(kff, options)?.solve(&rhs)?;
    for (&i, s) in free.iter().zip(sol) {
        x[i] = s;
    }
    Ok(x)
}

/// Rectangle parameterization of one patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalChart {
    pub patch_id: String,
    pub uv: Vec<[f64; 2]>,
    pub width: f64,
    pub height: f64,
    /// Patch vertices sent to `(0,0)`, `(w,0)`, `(w,h)`, `(0,h)`.
    pub corner_vertices: [usize; 4],
    /// Per-triangle Beltrami coefficient of the surface-to-rectangle map.
    pub mu_final: Vec<Complex64>,
}

impl ConformalChart {
    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn mean_abs_mu(&self) -> f64 {
        if self.mu_final.is_empty() {
            return 0.0;
        }
        self.mu_final.iter().map(|m| m.norm()).sum::<f64>() / self.mu_final.len() as f64
    }

    pub fn max_abs_mu(&self) -> f64 {
        self.mu_final.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// Number of triangles whose signed area in the chart is not positive.
    pub fn flipped_count(&self, triangles: &[[usize; 3]]) -> usize {
        triangles
            .iter()
            .filter(|t| {
                let q: Tri2 = [self.uv[t[0]], self.uv[t[1]], self.uv[t[2]]];
                !(laplacian::signed_area2(&q) > 0.0)
            })
            .count()
    }

    /// Checks orientation, `|mu| < 1` and boundary placement against the patch.
    pub fn validate(&self, patch: &TriMesh) -> Result<(), ConformalError> {
        disk::check_orientation("chart", &self.uv, patch.triangles())?;
        if let Some((t, m)) = self
            .mu_final
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.norm() < 1.0))
        {
            return Err(ConformalError::BeltramiTooLarge {
                triangle: t,
                modulus: m.norm(),
            });
        }
        let tol = 1e-10 * self.width.max(self.height);
        for (v, &b) in patch.boundary_vertex_mask().iter().enumerate() {
            if !b {
                continue;
            }
            let [u, w] = self.uv[v];
            let d = u
                .abs()
                .min((u - self.width).abs())
                .min(w.abs())
                .min((w - self.height).abs());
            if d > tol {
                return Err(ConformalError::OffBoundary {
                    vertex: v,
                    distance: d,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChartOptions {
    pub solver: SolverOptions,
}

/// Builds the rectangle chart `f = g o h` of a disk-like patch.
pub fn build_chart(
    patch: &TriMesh,
    patch_id: &str,
    corners: [usize; 4],
    aspect: Aspect,
) -> Result<ConformalChart, ConformalError> {
    build_chart_with(patch, patch_id, corners, aspect, ChartOptions::default())
}

pub fn build_chart_with(
    patch: &TriMesh,
    patch_id: &str,
    corners: [usize; 4],
    aspect: Aspect,
    options: ChartOptions,
) -> Result<ConformalChart, ConformalError> {
    let disk_uv = harmonic_disk_map_with(patch, options.solver)?;
    let flat = isometric_flattening(patch);
    let tris = patch.triangles();
    let mu_inv = beltrami_from_triangles(
        tris.iter()
            .zip(&flat)
            .map(|(t, q)| ([disk_uv[t[0]], disk_uv[t[1]], disk_uv[t[2]]], *q)),
    )?;
    let rect = rectangle_map(&disk_uv, tris, &mu_inv, corners, aspect, options.solver)?;
    disk::check_orientation("rectangle map", &rect.uv, tris)?;
    let mu_final = tris
        .iter()
        .zip(&flat)
        .enumerate()
        .map(|(i, (t, q))| {
            beltrami::triangle_mu(q, &[rect.uv[t[0]], rect.uv[t[1]], rect.uv[t[2]]])
                .ok_or(ConformalError::DegenerateTriangle { triangle: i })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let chart = ConformalChart {
        patch_id: patch_id.to_string(),
        uv: rect.uv,
        width: rect.width,
        height: rect.height,
        corner_vertices: corners,
        mu_final,
    };
    chart.validate(patch)?;
    log::info!(
        "chart {patch_id}: {}x{} rectangle, mean |mu| {:.3e}, max |mu| {:.3e}",
        chart.width,
        chart.height,
        chart.mean_abs_mu(),
        chart.max_abs_mu()
    );
    Ok(chart)
}

/// Orders four boundary vertices along the boundary loop, starting with the first one given.
pub fn order_corners(patch: &TriMesh, vertices: &[usize]) -> Result<[usize; 4], ConformalError> {
    let boundary = rect::boundary_loop(patch.triangles());
    let mut pos = Vec::with_capacity(4);
    for &v in vertices {
        let p = boundary
            .iter()
            .position(|&b| b == v)
            .ok_or(ConformalError::CornerNotOnBoundary { vertex: v })?;
        pos.push((p, v));
    }
    if pos.len() != 4 {
        return Err(ConformalError::CornersNotInOrder);
    }
    let n = boundary.len();
    let start = pos[0].0;
    pos.sort_by_key(|&(p, _)| (p + n - start) % n);
    if pos.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(ConformalError::CornersNotInOrder);
    }
    Ok([pos[0].1, pos[1].1, pos[2].1, pos[3].1])
}

/// Each surface triangle laid out in its own plane (edge lengths and orientation preserved).
pub fn isometric_flattening(patch: &TriMesh) -> Vec<[[f64; 2]; 3]> {
    (0..patch.triangle_count())
        .map(|t| flatten_triangle(patch.triangle_points(t)))
        .collect()
}

/// Largest absolute difference, in radians, between a triangle corner angle on the surface and
/// in the chart.
pub fn angle_distortion(patch: &TriMesh, uv: &[[f64; 2]]) -> f64 {
    fn angles(q: &Tri2) -> [f64; 3] {
        let mut a = [0.0; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let e1 = [q[j][0] - q[i][0], q[j][1] - q[i][1]];
            let e2 = [q[k][0] - q[i][0], q[k][1] - q[i][1]];
            let c = e1[0] * e2[1] - e1[1] * e2[0];
            a[i] = c.atan2(e1[0] * e2[0] + e1[1] * e2[1]);
        }
        a
    }
    let mut worst: f64 = 0.0;
    for (t, tri) in patch.triangles().iter().enumerate() {
        let a = angles(&flatten_triangle(patch.triangle_points(t)));
        let b = angles(&[uv[tri[0]], uv[tri[1]], uv[tri[2]]]);
        for i in 0..3 {
            worst = worst.max((a[i] - b[i]).abs());
        }
    }
    worst
}

/// Writes `patch_id,vertex,u,v` rows.
pub fn write_chart_vertex_csv(chart: &ConformalChart, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "patch_id,vertex,u,v")?;
    for (i, p) in chart.uv.iter().enumerate() {
        writeln!(out, "{},{},{:.17e},{:.17e}", chart.patch_id, i, p[0], p[1])?;
    }
    Ok(())
}

/// Writes `patch_id,triangle,mu_re,mu_im,mu_abs` rows.
pub fn write_chart_triangle_csv(
    chart: &ConformalChart,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(out, "patch_id,triangle,mu_re,mu_im,mu_abs")?;
    for (i, m) in chart.mu_final.iter().enumerate() {
        writeln!(
            out,
            "{},{},{:.17e},{:.17e},{:.17e}",
            chart.patch_id,
            i,
            m.re,
            m.im,
            m.norm()
        )?;
    }
    Ok(())
}

/// OBJ copy of the patch with the chart as texture coordinates.
pub fn write_chart_obj(
    patch: &TriMesh,
    chart: &ConformalChart,
    out: &mut impl Write,
) -> std::io::Result<()> {
    write_obj(patch, Some(&chart.uv), out)
}
