use crate::linalg::CsrMatrix;
use crate::mesh::{cross, dot, norm, sub, TriMesh, Vec3};

use super::ConformalError;

/// Symmetric 2x2 matrix stored as `[a11, a12, a22]`.
pub type SymmetricCoefficient = [f64; 3];

pub(crate) type Tri2 = [[f64; 2]; 3];

/// Lays a surface triangle out in its own plane, preserving edge lengths and orientation.
pub(crate) fn flatten_triangle(p: [Vec3; 3]) -> Tri2 {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let l1 = norm(e1);
    let x2 = dot(e1, e2) / l1;
    let y2 = norm(cross(e1, e2)) / l1;
    [[0.0, 0.0], [l1, 0.0], [x2, y2]]
}

pub(crate) fn signed_area2(q: &Tri2) -> f64 {
    (q[1][0] - q[0][0]) * (q[2][1] - q[0][1]) - (q[2][0] - q[0][0]) * (q[1][1] - q[0][1])
}

/// Gradients of the three linear shape functions, or `None` for a degenerate triangle.
pub(crate) fn shape_gradients(q: &Tri2) -> Option<[[f64; 2]; 3]> {
    let a2 = signed_area2(q);
    let scale = (q[1][0] - q[0][0])
        .hypot(q[1][1] - q[0][1])
        .max((q[2][0] - q[0][0]).hypot(q[2][1] - q[0][1]));
    if a2.abs() <= 1e-14 * scale * scale || !a2.is_finite() {
        return None;
    }
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(q[j][1] - q[k][1]) / a2, (q[k][0] - q[j][0]) / a2];
    }
    Some(g)
}

/// Local stiffness `area * G^T A G` of one triangle.
pub(crate) fn local_stiffness(q: &Tri2, a: Option<SymmetricCoefficient>) -> Option<[[f64; 3]; 3]> {
    let g = shape_gradients(q)?;
    let area = 0.5 * signed_area2(q).abs();
    let [a11, a12, a22] = a.unwrap_or([1.0, 0.0, 1.0]);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        let ag = [a11 * g[i][0] + a12 * g[i][1], a12 * g[i][0] + a22 * g[i][1]];
        for j in 0..3 {
            k[i][j] = area * (ag[0] * g[j][0] + ag[1] * g[j][1]);
        }
    }
    Some(k)
}

fn check_coefficient(t: usize, a: SymmetricCoefficient) -> Result<(), ConformalError> {
    if a[0] > 0.0 && a[0] * a[2] - a[1] * a[1] > 0.0 && a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ConformalError::NotPositiveDefinite { triangle: t })
    }
}

fn assemble(n: usize, locals: impl Iterator<Item = ([usize; 3], [[f64; 3]; 3])>) -> CsrMatrix<f64> {
    let mut trip = Vec::new();
    for (tri, k) in locals {
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Piecewise-linear stiffness operator of `div(A grad u)` on a surface mesh.
///
/// Each triangle is evaluated in its own isometric flattening, so the optional coefficients are
/// expressed in that frame (first axis along the edge from the first to the second vertex).
/// With `A = I` this is the cotangent Laplacian: the off-diagonal entry of edge `(i, j)` is
/// `-(cot a + cot b) / 2`.
pub fn build_laplacian(
    mesh: &TriMesh,
    coefficients: Option<&[SymmetricCoefficient]>,
) -> Result<CsrMatrix<f64>, ConformalError> {
    let flat: Vec<Tri2> = (0..mesh.triangle_count())
        .map(|t| flatten_triangle(mesh.triangle_points(t)))
        .collect();
    build_from_local(mesh.vertex_count(), mesh.triangles(), &flat, coefficients)
}

/// Same operator for a planar triangulation given by per-vertex 2D coordinates.
pub fn build_planar_laplacian(
    uv: &[[f64; 2]],
    triangles: &[[usize; 3]],
    coefficients: Option<&[SymmetricCoefficient]>,
) -> Result<CsrMatrix<f64>, ConformalError> {
    let flat: Vec<Tri2> = triangles
        .iter()
        .map(|t| [uv[t[0]], uv[t[1]], uv[t[2]]])
        .collect();
    build_from_local(uv.len(), triangles, &flat, coefficients)
}

fn build_from_local(
    n: usize,
    triangles: &[[usize; 3]],
    flat: &[Tri2],
    coefficients: Option<&[SymmetricCoefficient]>,
) -> Result<CsrMatrix<f64>, ConformalError> {
    if let Some(c) = coefficients {
        if c.len() != triangles.len() {
            return Err(ConformalError::DimensionMismatch {
                expected: triangles.len(),
                got: c.len(),
            });
        }
    }
    let mut locals = Vec::with_capacity(triangles.len());
    for (t, (tri, q)) in triangles.iter().zip(flat).enumerate() {
        let a = coefficients.map(|c| c[t]);
        if let Some(a) = a {
            check_coefficient(t, a)?;
        }
        let k = local_stiffness(q, a).ok_or(ConformalError::DegenerateTriangle { triangle: t })?;
        locals.push((*tri, k));
    }
    Ok(assemble(n, locals.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn equilateral_pair_weight() {
        let s = 3f64.sqrt() / 2.0;
        let m = TriMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.5, s, 0.0],
                [0.5, -s, 0.0],
            ],
            vec![[0, 1, 2], [1, 0, 3]],
        )
        .unwrap();
        let l = build_laplacian(&m, None).unwrap();
        assert!((-l.get(0, 1) - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn right_angle_gives_zero_weight() {
        let m = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let l = build_laplacian(&m, None).unwrap();
        assert!(l.get(1, 2).abs() < 1e-15);
    }

    #[test]
    fn rows_sum_to_zero_and_symmetric() {
        let m = fixtures::hemisphere(6);
        let l = build_laplacian(&m, None).unwrap();
        let r = l.mul_vec(&vec![1.0; m.vertex_count()]);
        assert!(r.iter().all(|x| x.abs() < 1e-12));
        assert!(l.asymmetry() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_coefficients() {
        let m = fixtures::flat_grid(1, 1, 1.0, 1.0);
        let c = [[1.0, 0.0, 1.0], [1.0, 2.0, 1.0]];
        assert!(matches!(
            build_laplacian(&m, Some(&c)),
            Err(ConformalError::NotPositiveDefinite { triangle: 1 })
        ));
    }
}
