use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{topology_summary, MeshError, TriMesh};

/// One original cut vertex and the vertices it became.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeamVertex {
    pub original: usize,
    /// All copies in the cut mesh; the first keeps the original index.
    pub copies: Vec<usize>,
    /// Whether the original vertex was already on a boundary before the cut. Such a vertex is
    /// still split into one copy per side of the cut; the flag only records the case.
    pub on_original_boundary: bool,
}

/// Correspondence between the two sides of a cut.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeamMap {
    /// Paths on the input mesh that were cut.
    pub source_paths: Vec<Vec<usize>>,
    /// Every path vertex that was split, in ascending original index.
    pub vertices: Vec<SeamVertex>,
    /// Duplicate pairs `(first copy, other copy)`; positions coincide exactly.
    pub pairs: Vec<(usize, usize)>,
    /// Number of interior edges that were duplicated.
    pub duplicated_edges: usize,
}

impl SeamMap {
    pub fn duplicated_vertices(&self) -> usize {
        self.vertices.iter().map(|v| v.copies.len() - 1).sum()
    }

    /// Maps every vertex of the cut mesh to its vertex on the uncut mesh.
    pub fn to_uncut(&self, cut_vertex_count: usize) -> Vec<usize> {
        let mut map: Vec<usize> = (0..cut_vertex_count).collect();
        for sv in &self.vertices {
            for &c in &sv.copies {
                map[c] = sv.original;
            }
        }
        map
    }
}

/// Cuts along a single vertex path. See [`cut_along_paths`].
pub fn cut_along_path(mesh: &TriMesh, path: &[usize]) -> Result<(TriMesh, SeamMap), MeshError> {
    cut_along_paths(mesh, &[path.to_vec()])
}

/// Cuts the mesh open along the union of the given paths.
///
/// Each path is either closed (first vertex repeated at the end) or runs between two boundary
/// vertices. Different paths may cross each other; a single path may not revisit a vertex. Every
/// vertex on a path is split into one copy per wedge of incident triangles delimited by cut or
/// boundary edges. The change of Euler characteristic is checked against the number of
/// duplicated vertices and edges.
pub fn cut_along_paths(
    mesh: &TriMesh,
    paths: &[Vec<usize>],
) -> Result<(TriMesh, SeamMap), MeshError> {
    let nv = mesh.vertex_count();
    let half = mesh.half_edges();
    let boundary = mesh.boundary_vertex_mask();
    let mut cut_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut path_vertices: BTreeSet<usize> = BTreeSet::new();

    for path in paths {
        if path.len() < 2 {
            return Err(MeshError::PathTooShort);
        }
        if let Some(&v) = path.iter().find(|&&v| v >= nv) {
            return Err(MeshError::PathVertexOutOfRange { vertex: v });
        }
        let closed = path.len() > 2 && path.first() == path.last();
        let body = if closed {
            &path[..path.len() - 1]
        } else {
            path
        };
        let mut seen = BTreeSet::new();
        for &v in body {
            if !seen.insert(v) {
                return Err(MeshError::PathSelfIntersecting { vertex: v });
            }
        }
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !half.contains_key(&(a, b)) && !half.contains_key(&(b, a)) {
                return Err(MeshError::PathNotConnected { a, b });
            }
            cut_edges.insert((a.min(b), a.max(b)));
        }
        if !closed {
            for &end in [path[0], path[path.len() - 1]].iter() {
                if !boundary[end] {
                    return Err(MeshError::PathEndpointInterior { vertex: end });
                }
            }
        }
        path_vertices.extend(body.iter().copied());
    }

    let interior_cuts: Vec<(usize, usize)> = cut_edges
        .iter()
        .copied()
        .filter(|&(a, b)| half.contains_key(&(a, b)) && half.contains_key(&(b, a)))
        .collect();
    if interior_cuts.is_empty() {
        return Err(MeshError::PathOnBoundaryOnly);
    }

    // union-find over triangle corners (3 * t + k)
    let tris = mesh.triangles();
    let mut parent: Vec<usize> = (0..3 * tris.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let corner = |t: usize, v: usize| -> usize {
        let k = tris[t]
            .iter()
            .position(|&x| x == v)
            .expect("vertex in triangle");
        3 * t + k
    };
    let mut edges_sorted: Vec<(usize, usize)> = half
        .keys()
        .copied()
        .filter(|&(a, b)| a < b && half.contains_key(&(b, a)))
        .collect();
    edges_sorted.sort_unstable();
    for (a, b) in edges_sorted {
        if cut_edges.contains(&(a, b)) {
            continue;
        }
        let (t1, t2) = (half[&(a, b)], half[&(b, a)]);
        for v in [a, b] {
            let (c1, c2) = (corner(t1, v), corner(t2, v));
            let (r1, r2) = (find(&mut parent, c1), find(&mut parent, c2));
            if r1 != r2 {
                parent[r1.max(r2)] = r1.min(r2);
            }
        }
    }

    let mut corners_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for (k, &v) in tri.iter().enumerate() {
            if path_vertices.contains(&v) {
                corners_of.entry(v).or_default().push(3 * t + k);
            }
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut new_tris = tris.to_vec();
    let mut seam = SeamMap {
        source_paths: paths.to_vec(),
        duplicated_edges: interior_cuts.len(),
        ..Default::default()
    };
    for &v in &path_vertices {
        let Some(corners) = corners_of.get(&v) else {
            continue;
        };
        let mut wedge_ids: Vec<usize> = Vec::new();
        let mut copies = vec![v];
        for &c in corners {
            let root = find(&mut parent, c);
            let w = match wedge_ids.iter().position(|&r| r == root) {
                Some(w) => w,
                None => {
                    wedge_ids.push(root);
                    if wedge_ids.len() > 1 {
                        copies.push(vertices.len());
                        vertices.push(mesh.vertex(v));
                    }
                    wedge_ids.len() - 1
                }
            };
            new_tris[c / 3][c % 3] = copies[w];
        }
        if copies.len() > 1 {
            for &c in &copies[1..] {
                seam.pairs.push((copies[0], c));
            }
            seam.vertices.push(SeamVertex {
                original: v,
                copies,
                on_original_boundary: boundary[v],
            });
        }
    }

    let mut cut = TriMesh::new(vertices, new_tris)?;
    for (name, values) in mesh.vertex_attributes() {
        let mut extended = values.clone();
        extended.resize(cut.vertex_count(), 0.0);
        for sv in &seam.vertices {
            for &c in &sv.copies[1..] {
                extended[c] = values[sv.original];
            }
        }
        cut = cut.with_vertex_attribute(name, extended);
    }

    let before = topology_summary(mesh).euler_characteristic;
    let after = topology_summary(&cut).euler_characteristic;
    let expected = seam.duplicated_vertices() as i64 - seam.duplicated_edges as i64;
    if after - before != expected {
        return Err(MeshError::EulerMismatch {
            expected,
            observed: after - before,
        });
    }
    Ok((cut, seam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn torus_two_loops_becomes_a_disk() {
        let (nu, nv) = (12, 8);
        let torus = fixtures::torus(3.0, 1.0, nu, nv);
        let (meridian, longitude) = fixtures::torus_cut_loops(nu, nv);
        let (cut, seam) = cut_along_paths(&torus, &[meridian, longitude]).unwrap();
        let s = topology_summary(&cut);
        assert_eq!(s.genus, 0);
        assert_eq!(s.boundary_loop_count, 1);
        assert_eq!(s.euler_characteristic, 1);
        // the shared vertex becomes four corners
        let shared = seam.vertices.iter().find(|sv| sv.original == 0).unwrap();
        assert_eq!(shared.copies.len(), 4);
        assert_eq!(seam.duplicated_vertices(), (nu - 1) + (nv - 1) + 3);
        for &(a, b) in &seam.pairs {
            assert_eq!(cut.vertex(a), cut.vertex(b));
        }
    }

    #[test]
    fn cylinder_generator_cut() {
        let cyl = fixtures::open_cylinder(1.0, 2.0, 10, 4);
        let before = topology_summary(&cyl);
        assert_eq!(
            (before.euler_characteristic, before.boundary_loop_count),
            (0, 2)
        );
        let generator = fixtures::cylinder_generator(10, 4);
        let (cut, seam) = cut_along_path(&cyl, &generator).unwrap();
        let after = topology_summary(&cut);
        assert_eq!(after.euler_characteristic, 1);
        assert_eq!(after.boundary_loop_count, 1);
        // V grows by the path length, E by its edge count
        assert_eq!(after.vertex_count, before.vertex_count + generator.len());
        assert_eq!(after.edge_count, before.edge_count + generator.len() - 1);
        assert!(seam.vertices.iter().all(|sv| sv.copies.len() == 2));
        assert!(seam.vertices.first().unwrap().on_original_boundary);
    }

    #[test]
    fn path_errors() {
        let cyl = fixtures::open_cylinder(1.0, 2.0, 10, 4);
        assert!(matches!(
            cut_along_path(&cyl, &[]),
            Err(MeshError::PathTooShort)
        ));
        assert!(matches!(
            cut_along_path(&cyl, &[0, 22]),
            Err(MeshError::PathNotConnected { .. })
        ));
        // bottom ring: boundary only
        let ring: Vec<usize> = (0..10).chain([0]).collect();
        assert!(matches!(
            cut_along_path(&cyl, &ring),
            Err(MeshError::PathOnBoundaryOnly)
        ));
        let g = fixtures::cylinder_generator(10, 4);
        let mut twice = g.clone();
        twice.extend(g.iter().rev().skip(1));
        assert!(matches!(
            cut_along_path(&cyl, &twice),
            Err(MeshError::PathSelfIntersecting { .. })
        ));
        // stops in the interior
        assert!(matches!(
            cut_along_path(&cyl, &g[..3]),
            Err(MeshError::PathEndpointInterior { .. })
        ));
    }
}
