use super::{cross, dot, norm, sub, topology_summary, MeshError, TriMesh, Vec3};

type P2 = [f64; 2];

fn orient(a: P2, b: P2, c: P2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(p1: P2, p2: P2, q1: P2, q2: P2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: P2, b: P2, p: P2, d: f64| {
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Strictly inside the circumcircle of counter-clockwise `(a, b, c)`.
fn in_circumcircle(a: P2, b: P2, c: P2, d: P2) -> bool {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    let scale = (adx * adx + ady * ady + bdx * bdx + bdy * bdy + cdx * cdx + cdy * cdy).powi(2);
    det > 1e-12 * scale
}

fn point_in_triangle(a: P2, b: P2, c: P2, p: P2) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Ear clipping of a simple counter-clockwise polygon; returns index triples (CCW).
fn ear_clip(poly: &[P2]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    let mut guard = 0;
    while idx.len() > 3 && guard < 10 * poly.len() * poly.len() {
        guard += 1;
        let n = idx.len();
        // prefer the ear with the best (largest) minimum angle proxy: deterministic scan
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let (a, b, c) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            let area = orient(poly[a], poly[b], poly[c]);
            if area <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != a && j != b && j != c && point_in_triangle(poly[a], poly[b], poly[c], poly[j])
            });
            if blocked {
                continue;
            }
            let e = |p: P2, q: P2| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            let quality = area / (e(poly[a], poly[b]) + e(poly[b], poly[c]) + e(poly[c], poly[a]));
            if best.is_none_or(|(_, q)| quality > q) {
                best = Some((i, quality));
            }
        }
        let Some((i, _)) = best else { break };
        let n = idx.len();
        out.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    if idx.len() == 3 {
        out.push([idx[0], idx[1], idx[2]]);
    }
    out
}

/// Lawson flips on interior diagonals until every one is locally Delaunay.
fn delaunay_flips(poly: &[P2], tris: &mut [[usize; 3]]) {
    let n = poly.len();
    let is_boundary = |a: usize, b: usize| (a + 1) % n == b || (b + 1) % n == a;
    for _sweep in 0..(4 * n * n).max(8) {
        let mut flipped = false;
        'outer: for t1 in 0..tris.len() {
            for k in 0..3 {
                let (a, b) = (tris[t1][k], tris[t1][(k + 1) % 3]);
                if is_boundary(a, b) {
                    continue;
                }
                let c = tris[t1][(k + 2) % 3];
                let Some((t2, d)) = tris.iter().enumerate().find_map(|(t2, t)| {
                    (0..3).find_map(|m| {
                        (t[m] == b && t[(m + 1) % 3] == a).then_some((t2, t[(m + 2) % 3]))
                    })
                }) else {
                    continue;
                };
                if in_circumcircle(poly[a], poly[b], poly[c], poly[d])
                    && orient(poly[c], poly[a], poly[d]) > 0.0
                    && orient(poly[d], poly[b], poly[c]) > 0.0
                {
                    tris[t1] = [c, a, d];
                    tris[t2] = [d, b, c];
                    flipped = true;
                    break 'outer;
                }
            }
        }
        if !flipped {
            return;
        }
    }
}

/// Triangulates boundary loop `loop_id` (index into [`TriMesh::boundary_loops`]).
///
/// The loop is projected onto the plane given by its Newell normal, triangulated by a
/// constrained Delaunay triangulation without Steiner points, and lifted back. New triangles are
/// appended, so removing the returned indices restores the input exactly.
pub fn fill_hole(mesh: &TriMesh, loop_id: usize) -> Result<(TriMesh, Vec<usize>), MeshError> {
    let loops = topology_summary(mesh).boundary_loops;
    let count = loops.len();
    let lp = loops
        .into_iter()
        .nth(loop_id)
        .ok_or(MeshError::NoSuchLoop { loop_id, count })?;
    let mut distinct = lp.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != lp.len() || lp.len() < 3 {
        return Err(MeshError::LoopNotSimple { loop_id });
    }
    // polygon orientation opposite to the boundary loop so new faces pair up with it
    let polygon: Vec<usize> = lp.iter().rev().copied().collect();
    let pts: Vec<Vec3> = polygon.iter().map(|&v| mesh.vertex(v)).collect();
    let n = pts.len();
    let mut normal = [0.0; 3];
    let mut centroid = [0.0; 3];
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        normal[0] += (p[1] - q[1]) * (p[2] + q[2]);
        normal[1] += (p[2] - q[2]) * (p[0] + q[0]);
        normal[2] += (p[0] - q[0]) * (p[1] + q[1]);
        for k in 0..3 {
            centroid[k] += p[k] / n as f64;
        }
    }
    let nn = norm(normal);
    if !(nn > 1e-14 * mesh.bounding_box_diagonal().powi(2)) {
        return Err(MeshError::HoleDegenerate { loop_id });
    }
    let normal = normal.map(|c| c / nn);
    let helper = if normal[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = {
        let v = cross(helper, normal);
        let l = norm(v);
        v.map(|c| c / l)
    };
    let e2 = cross(normal, e1);
    let poly: Vec<P2> = pts
        .iter()
        .map(|&p| {
            let d = sub(p, centroid);
            [dot(d, e1), dot(d, e2)]
        })
        .collect();
    let signed: f64 = (0..n)
        .map(|i| orient([0.0, 0.0], poly[i], poly[(i + 1) % n]))
        .sum();
    if signed <= 0.0 {
        return Err(MeshError::HoleSelfIntersects { loop_id });
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if !adjacent
                && segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])
            {
                return Err(MeshError::HoleSelfIntersects { loop_id });
            }
        }
    }
    let mut local = ear_clip(&poly);
    if local.len() != n - 2 {
        return Err(MeshError::HoleSelfIntersects { loop_id });
    }
    delaunay_flips(&poly, &mut local);

    let mut tris = mesh.triangles().to_vec();
    let first_new = tris.len();
    tris.extend(local.iter().map(|t| t.map(|k| polygon[k])));
    let filled: Vec<usize> = (first_new..tris.len()).collect();
    let mut out = TriMesh::new(mesh.vertices().to_vec(), tris)?;
    for (name, values) in mesh.vertex_attributes() {
        out = out.with_vertex_attribute(name, values.clone());
    }
    Ok((out, filled))
}
