use std::f64::consts::TAU;

use crate::linalg::SolverOptions;
use crate::mesh::{norm, sub, topology_summary, TriMesh};

use super::laplacian::{signed_area2, Tri2};
use super::{build_laplacian, solve_dirichlet, ConformalError};

/// Harmonic map of a disk-topology patch onto the closed unit disk.
///
/// The boundary loop goes to the unit circle with angles proportional to chord length, starting
/// at angle 0 with the loop's first vertex; interior vertices solve the cotangent Laplace
/// system. Flipped output triangles are reported as an error.
pub fn harmonic_disk_map(patch: &TriMesh) -> Result<Vec<[f64; 2]>, ConformalError> {
    harmonic_disk_map_with(patch, SolverOptions::default())
}

pub fn harmonic_disk_map_with(
    patch: &TriMesh,
    options: SolverOptions,
) -> Result<Vec<[f64; 2]>, ConformalError> {
    let summary = topology_summary(patch);
    if !summary.is_disk() {
        return Err(ConformalError::NotDisk {
            genus: summary.genus,
            boundary_loops: summary.boundary_loop_count,
            components: summary.connected_components,
        });
    }
    if patch.referenced_vertex_count() != patch.vertex_count() {
        return Err(ConformalError::UnreferencedVertices);
    }
    let boundary = &summary.boundary_loops[0];
    let n = boundary.len();
    let mut cumulative = Vec::with_capacity(n);
    let mut total = 0.0;
    for k in 0..n {
        cumulative.push(total);
        total += norm(sub(
            patch.vertex(boundary[(k + 1) % n]),
            patch.vertex(boundary[k]),
        ));
    }
    let mut fixed_u = vec![None; patch.vertex_count()];
    let mut fixed_v = vec![None; patch.vertex_count()];
    for (k, &b) in boundary.iter().enumerate() {
        let angle = TAU * cumulative[k] / total;
        fixed_u[b] = Some(angle.cos());
        fixed_v[b] = Some(angle.sin());
    }
    let lap = build_laplacian(patch, None)?;
    let u = solve_dirichlet(&lap, &fixed_u, options)?;
    let v = solve_dirichlet(&lap, &fixed_v, options)?;
    let uv: Vec<[f64; 2]> = u.into_iter().zip(v).map(|(a, b)| [a, b]).collect();
    check_orientation("disk map", &uv, patch.triangles())?;
    Ok(uv)
}

pub(crate) fn check_orientation(
    stage: &'static str,
    uv: &[[f64; 2]],
    triangles: &[[usize; 3]],
) -> Result<(), ConformalError> {
    let flipped: Vec<usize> = triangles
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let q: Tri2 = [uv[t[0]], uv[t[1]], uv[t[2]]];
            !(signed_area2(&q) > 0.0)
        })
        .map(|(i, _)| i)
        .collect();
    if let Some(&first) = flipped.first() {
        return Err(ConformalError::Flipped {
            stage,
            count: flipped.len(),
            first,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn flat_disk_is_fixed() {
        let m = fixtures::unit_disk(8);
        let uv = harmonic_disk_map(&m).unwrap();
        for (p, q) in m.vertices().iter().zip(&uv) {
            assert!((p[0] - q[0]).abs() < 1e-8 && (p[1] - q[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_on_unit_circle() {
        let m = fixtures::hemisphere(6);
        let uv = harmonic_disk_map(&m).unwrap();
        let mask = m.boundary_vertex_mask();
        let max = uv.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        for (i, p) in uv.iter().enumerate() {
            let r = p[0].hypot(p[1]);
            if mask[i] {
                assert!((r - 1.0).abs() < 1e-12);
            } else {
                assert!(r < 1.0);
            }
        }
    }

    #[test]
    fn torus_is_rejected() {
        let m = fixtures::torus(3.0, 1.0, 8, 6);
        assert!(matches!(
            harmonic_disk_map(&m),
            Err(ConformalError::NotDisk { genus: 1, .. })
        ));
    }
}
