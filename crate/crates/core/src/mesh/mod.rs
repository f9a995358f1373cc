//! Indexed triangle surfaces: validation, topology bookkeeping, cutting and hole filling.

mod cut;
mod fill;
mod io;

pub use cut::{cut_along_path, cut_along_paths, SeamMap, SeamVertex};
pub use fill::fill_hole;
pub use io::{load_mesh, read_obj, read_ply, write_obj, write_ply, MeshFormat, PlyEncoding};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = [f64; 3];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("mesh has no triangles")]
    Empty,
    #[error(
        "triangle {triangle}: vertex index {index} out of range (vertex count {vertex_count})"
    )]
    IndexOutOfRange {
        triangle: usize,
        index: i64,
        vertex_count: usize,
    },
    #[error("triangle {triangle} repeats a vertex")]
    RepeatedVertex { triangle: usize },
    #[error("face {face} has {arity} vertices; only triangles are supported")]
    NonTriangularFace { face: usize, arity: usize },
    #[error("degenerate triangle {triangle} (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("non-manifold edge ({a}, {b}) shared by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("inconsistent orientation across edge ({a}, {b})")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("cut path too short")]
    PathTooShort,
    #[error("cut path is not edge-connected between {a} and {b}")]
    PathNotConnected { a: usize, b: usize },
    #[error("cut path self-intersects at vertex {vertex}")]
    PathSelfIntersecting { vertex: usize },
    #[error("open cut path endpoint {vertex} is not on the boundary")]
    PathEndpointInterior { vertex: usize },
    #[error("cut path runs only along boundary edges; nothing to cut")]
    PathOnBoundaryOnly,
    #[error("cut path vertex {vertex} out of range")]
    PathVertexOutOfRange { vertex: usize },
    #[error("Euler bookkeeping failed after cut: expected change {expected}, observed {observed}")]
    EulerMismatch { expected: i64, observed: i64 },
    #[error("boundary loop {loop_id} does not exist (mesh has {count})")]
    NoSuchLoop { loop_id: usize, count: usize },
    #[error("boundary loop {loop_id} is not a simple cycle")]
    LoopNotSimple { loop_id: usize },
    #[error("boundary loop {loop_id} self-intersects when projected to its best-fit plane; split the loop")]
    HoleSelfIntersects { loop_id: usize },
    #[error("boundary loop {loop_id} has no well-defined best-fit plane")]
    HoleDegenerate { loop_id: usize },
}

/// Indexed triangle surface with consistently oriented, edge-manifold connectivity.
///
/// Construction through [`TriMesh::new`] checks every invariant; a `TriMesh` is immutable
/// afterwards and all surgery returns new meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    vertex_attributes: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    triangle_attributes: BTreeMap<String, Vec<f64>>,
}

/// Exact topological invariants of a mesh.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub euler_characteristic: i64,
    pub connected_components: usize,
    pub boundary_loop_count: usize,
    pub genus: i64,
    /// Boundary cycles; each follows the mesh orientation (interior on the left).
    pub boundary_loops: Vec<Vec<usize>>,
}

impl TopologySummary {
    pub fn is_disk(&self) -> bool {
        self.connected_components == 1 && self.genus == 0 && self.boundary_loop_count == 1
    }
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = Self {
            vertices,
            triangles,
            vertex_attributes: BTreeMap::new(),
            triangle_attributes: BTreeMap::new(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<(), MeshError> {
        if self.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= nv) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    index: bad as i64,
                    vertex_count: nv,
                });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex { triangle: t });
            }
        }
        let diag = self.bounding_box_diagonal();
        let min_area = 1e-12 * diag * diag;
        for t in 0..self.triangles.len() {
            let area = self.triangle_area(t);
            if !(area > min_area) {
                return Err(MeshError::DegenerateTriangle { triangle: t, area });
            }
        }
        // (count, direction of first use, same direction seen twice)
        let mut undirected: HashMap<(usize, usize), (usize, bool, bool)> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let entry = undirected
                    .entry((a.min(b), a.max(b)))
                    .or_insert((0, a < b, false));
                entry.0 += 1;
                if entry.0 > 1 && entry.1 == (a < b) {
                    entry.2 = true;
                }
            }
        }
        let mut keys: Vec<_> = undirected.into_iter().collect();
        keys.sort_unstable_by_key(|(k, _)| *k);
        for ((a, b), (count, _, same_direction)) in keys {
            if count > 2 {
                return Err(MeshError::NonManifoldEdge { a, b, count });
            }
            if same_direction {
                return Err(MeshError::InconsistentOrientation { a, b });
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn vertex_attributes(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.vertex_attributes
    }

    pub fn triangle_attributes(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.triangle_attributes
    }

    /// Attaches a per-vertex attribute; panics if the length is wrong.
    pub fn with_vertex_attribute(mut self, name: &str, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.vertices.len());
        self.vertex_attributes.insert(name.to_owned(), values);
        self
    }

    pub fn with_triangle_attribute(mut self, name: &str, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.triangles.len());
        self.triangle_attributes.insert(name.to_owned(), values);
        self
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        if self.vertices.is_empty() {
            return 0.0;
        }
        norm(sub(hi, lo))
    }

    pub fn triangle_normal_unnormalized(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle_points(t);
        cross(sub(b, a), sub(c, a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * norm(self.triangle_normal_unnormalized(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Directed half-edge `(from, to)` to owning triangle.
    pub fn half_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut map = HashMap::with_capacity(self.triangles.len() * 3);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.insert((tri[k], tri[(k + 1) % 3]), t);
            }
        }
        map
    }

    /// Sorted undirected edges `(min, max)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Per-vertex flag: lies on at least one boundary edge.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let he = self.half_edges();
        let mut mask = vec![false; self.vertices.len()];
        for &(a, b) in he.keys() {
            if !he.contains_key(&(b, a)) {
                mask[a] = true;
                mask[b] = true;
            }
        }
        mask
    }

    /// Boundary cycles ordered by their smallest half-edge, each rotated to start at its
    /// smallest vertex index.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let he = self.half_edges();
        let mut boundary: Vec<(usize, usize)> = he
            .keys()
            .copied()
            .filter(|&(a, b)| !he.contains_key(&(b, a)))
            .collect();
        boundary.sort_unstable();
        let mut used: HashMap<(usize, usize), bool> =
            boundary.iter().map(|&e| (e, false)).collect();
        let mut loops = Vec::new();
        for &start in &boundary {
            if used[&start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut edge = start;
            loop {
                used.insert(edge, true);
                cycle.push(edge.0);
                let next = self.next_boundary_edge(&he, edge);
                if next == start || used.get(&next).copied().unwrap_or(true) {
                    break;
                }
                edge = next;
            }
            let min_pos = cycle
                .iter()
                .enumerate()
                .min_by_key(|&(_, &v)| v)
                .map(|(i, _)| i)
                .unwrap_or(0);
            cycle.rotate_left(min_pos);
            loops.push(cycle);
        }
        loops
    }

    fn next_boundary_edge(
        &self,
        he: &HashMap<(usize, usize), usize>,
        (a, b): (usize, usize),
    ) -> (usize, usize) {
        let mut tri = he[&(a, b)];
        let mut from = a;
        loop {
            let t = self.triangles[tri];
            let k = (0..3)
                .find(|&k| t[k] == from && t[(k + 1) % 3] == b)
                .expect("half-edge");
            let c = t[(k + 2) % 3];
            match he.get(&(c, b)) {
                None => return (b, c),
                Some(&t2) => {
                    tri = t2;
                    from = c;
                }
            }
        }
    }

    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.triangles {
            for k in 1..3 {
                let (ra, rb) = (find(&mut parent, t[0]), find(&mut parent, t[k]));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut referenced = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                referenced[v] = true;
            }
        }
        (0..self.vertices.len())
            .filter(|&v| referenced[v] && find(&mut parent, v) == v)
            .count()
    }

    /// Vertex count used in the Euler characteristic: vertices referenced by a triangle.
    pub fn referenced_vertex_count(&self) -> usize {
        let mut referenced = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                referenced[v] = true;
            }
        }
        referenced.iter().filter(|&&r| r).count()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.referenced_vertex_count() as i64 - self.edges().len() as i64
            + self.triangles.len() as i64
    }

    /// Submesh made of the listed triangles. Vertices are compacted in ascending original order;
    /// the second return value maps new vertex indices to original ones.
    pub fn extract(&self, triangles: &[usize]) -> Result<(TriMesh, Vec<usize>), MeshError> {
        let mut used = vec![false; self.vertices.len()];
        for &t in triangles {
            for &v in &self.triangles[t] {
                used[v] = true;
            }
        }
        let to_global: Vec<usize> = (0..self.vertices.len()).filter(|&v| used[v]).collect();
        let mut to_local = vec![usize::MAX; self.vertices.len()];
        for (l, &g) in to_global.iter().enumerate() {
            to_local[g] = l;
        }
        let verts = to_global.iter().map(|&g| self.vertices[g]).collect();
        let tris = triangles
            .iter()
            .map(|&t| self.triangles[t].map(|v| to_local[v]))
            .collect();
        Ok((TriMesh::new(verts, tris)?, to_global))
    }

    /// Drops the listed triangles, keeping all vertices (and their indices).
    pub fn remove_triangles(&self, remove: &[usize]) -> Result<TriMesh, MeshError> {
        let mut drop = vec![false; self.triangles.len()];
        for &t in remove {
            drop[t] = true;
        }
        let tris = self
            .triangles
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(t, _)| *t)
            .collect();
        let mut mesh = TriMesh::new(self.vertices.clone(), tris)?;
        mesh.vertex_attributes = self.vertex_attributes.clone();
        Ok(mesh)
    }

    /// Applies a rigid motion `x -> R x + t` (row-major `R`).
    pub fn transformed(&self, rotation: [[f64; 3]; 3], translation: Vec3) -> TriMesh {
        let mut m = self.clone();
        for v in &mut m.vertices {
            let p = *v;
            for (k, row) in rotation.iter().enumerate() {
                v[k] = dot(*row, p) + translation[k];
            }
        }
        m
    }
}

/// Exact topology data of `mesh`.
pub fn topology_summary(mesh: &TriMesh) -> TopologySummary {
    let v = mesh.referenced_vertex_count();
    let e = mesh.edges().len();
    let f = mesh.triangle_count();
    let chi = v as i64 - e as i64 + f as i64;
    let loops = mesh.boundary_loops();
    let components = mesh.connected_components();
    let b = loops.len() as i64;
    TopologySummary {
        vertex_count: v,
        edge_count: e,
        face_count: f,
        euler_characteristic: chi,
        connected_components: components,
        boundary_loop_count: loops.len(),
        genus: (2 * components as i64 - chi - b) / 2,
        boundary_loops: loops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn icosahedron_is_a_sphere() {
        let s = topology_summary(&fixtures::icosahedron());
        assert_eq!((s.vertex_count, s.edge_count, s.face_count), (12, 30, 20));
        assert_eq!(s.euler_characteristic, 2);
        assert_eq!(s.boundary_loop_count, 0);
        assert_eq!(s.genus, 0);
    }

    #[test]
    fn torus_has_genus_one() {
        let s = topology_summary(&fixtures::torus(3.0, 1.0, 16, 8));
        assert_eq!(s.euler_characteristic, 0);
        assert_eq!(s.boundary_loop_count, 0);
        assert_eq!(s.genus, 1);
    }

    #[test]
    fn fan_counts_by_hand() {
        let s = topology_summary(&fixtures::hexagonal_fan());
        assert_eq!((s.vertex_count, s.edge_count, s.face_count), (7, 12, 6));
        assert_eq!(s.euler_characteristic, 1);
        assert_eq!(s.boundary_loop_count, 1);
        assert_eq!(s.genus, 0);
        assert_eq!(s.boundary_loops[0].len(), 6);
    }

    #[test]
    fn boundary_loop_follows_orientation() {
        let m = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(m.boundary_loops(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn rejects_bad_meshes() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
        ];
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 4]]),
            Err(MeshError::IndexOutOfRange { index: 4, .. })
        ));
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 1]]),
            Err(MeshError::RepeatedVertex { .. })
        ));
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 2], [0, 1, 3]]),
            Err(MeshError::InconsistentOrientation { a: 0, b: 1 })
        ));
        let colinear = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(matches!(
            TriMesh::new(colinear, vec![[0, 1, 2]]),
            Err(MeshError::DegenerateTriangle { triangle: 0, .. })
        ));
        let mut v5 = v.clone();
        v5.push([0.5, 0.5, 1.0]);
        assert!(matches!(
            TriMesh::new(v5, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]),
            Err(MeshError::InconsistentOrientation { .. }) | Err(MeshError::NonManifoldEdge { .. })
        ));
    }

    #[test]
    fn three_triangles_on_an_edge_is_non_manifold() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, 1.0, 0.0],
            [0.5, -1.0, 0.0],
            [0.5, 0.0, 1.0],
        ];
        let err = TriMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [1, 0, 4]]).unwrap_err();
        assert!(matches!(
            err,
            MeshError::NonManifoldEdge {
                a: 0,
                b: 1,
                count: 3
            }
        ));
    }
}
