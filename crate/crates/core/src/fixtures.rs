//! Procedurally generated surfaces used by the shipped configs, the tests and the acceptance
//! suite.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::conformal::{build_chart, Aspect, ConformalChart, ConformalError};
use crate::mesh::{topology_summary, TriMesh};
use crate::mmc::{Atlas, AtlasChart, ChartSample};

fn build(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> TriMesh {
    TriMesh::new(vertices, triangles).expect("fixture mesh is valid")
}

pub fn icosahedron() -> TriMesh {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let v = vec![
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let t = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    build(v, t)
}

/// Six triangles around one interior vertex (vertex 0).
pub fn hexagonal_fan() -> TriMesh {
    let mut v = vec![[0.0, 0.0, 0.0]];
    for k in 0..6 {
        let a = TAU * k as f64 / 6.0;
        v.push([a.cos(), a.sin(), 0.0]);
    }
    let t = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    build(v, t)
}

/// Torus index of vertex `(i, j)`: `i` runs around the central axis, `j` around the tube.
pub fn torus_index(nu: usize, nv: usize, i: usize, j: usize) -> usize {
    (i % nu) * nv + (j % nv)
}

/// Closed torus with `2 * nu * nv` triangles.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriMesh {
    let mut v = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let w = TAU * j as f64 / nv as f64;
            let r = major + minor * w.cos();
            v.push([r * u.cos(), r * u.sin(), minor * w.sin()]);
        }
    }
    let idx = |i, j| torus_index(nu, nv, i, j);
    let mut t = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    build(v, t)
}

/// Tube circle and central-axis circle through vertex 0, as closed paths.
pub fn torus_cut_loops(nu: usize, nv: usize) -> (Vec<usize>, Vec<usize>) {
    let meridian = (0..=nv).map(|j| torus_index(nu, nv, 0, j)).collect();
    let longitude = (0..=nu).map(|i| torus_index(nu, nv, i, 0)).collect();
    (meridian, longitude)
}

/// Vertices of the torus on the innermost equator (tube angle π).
pub fn torus_inner_ring(nu: usize, nv: usize) -> Vec<usize> {
    assert!(nv.is_multiple_of(2));
    (0..nu).map(|i| torus_index(nu, nv, i, nv / 2)).collect()
}

/// Open cylinder around the z axis; ring `j` holds vertices `j * n_around .. (j + 1) * n_around`.
pub fn open_cylinder(radius: f64, height: f64, n_around: usize, n_axial: usize) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=n_axial {
        let z = height * j as f64 / n_axial as f64;
        for i in 0..n_around {
            let a = TAU * i as f64 / n_around as f64;
            v.push([radius * a.cos(), radius * a.sin(), z]);
        }
    }
    let idx = |i: usize, j: usize| j * n_around + i % n_around;
    let mut t = Vec::new();
    for j in 0..n_axial {
        for i in 0..n_around {
            t.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            t.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    build(v, t)
}

/// Straight generator of [`open_cylinder`] through angle 0, bottom to top.
pub fn cylinder_generator(n_around: usize, n_axial: usize) -> Vec<usize> {
    (0..=n_axial).map(|j| j * n_around).collect()
}

/// Concentric-ring triangulation of the unit disk: ring `k` has `6k` vertices, `6 n²` triangles.
/// Returns planar positions; vertex 0 is the center and the first boundary vertex sits at
/// angle 0.
fn ring_disk(n: usize) -> (Vec<[f64; 2]>, Vec<usize>, Vec<[usize; 3]>) {
    let mut pts = vec![[0.0, 0.0]];
    let mut radius_index = vec![0];
    let mut ring_start = vec![0usize];
    for k in 1..=n {
        ring_start.push(pts.len());
        let m = 6 * k;
        for j in 0..m {
            let a = TAU * j as f64 / m as f64;
            let r = k as f64 / n as f64;
            pts.push([r * a.cos(), r * a.sin()]);
            radius_index.push(k);
        }
    }
    let mut tris = Vec::with_capacity(6 * n * n);
    for j in 0..6 {
        tris.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for k in 2..=n {
        let (ni, no) = (6 * (k - 1), 6 * k);
        let inner = |i: usize| ring_start[k - 1] + i % ni;
        let outer = |j: usize| ring_start[k] + j % no;
        let (mut i, mut j) = (0, 0);
        while i < ni || j < no {
            let ai = (i + 1) as f64 / ni as f64;
            let aj = (j + 1) as f64 / no as f64;
            if j < no && (aj <= ai || i == ni) {
                tris.push([inner(i), outer(j), outer(j + 1)]);
                j += 1;
            } else {
                tris.push([inner(i), outer(j), inner(i + 1)]);
                i += 1;
            }
        }
    }
    (pts, radius_index, tris)
}

/// Flat unit disk whose boundary vertices are uniformly spaced on the unit circle.
pub fn unit_disk(n_rings: usize) -> TriMesh {
    let (pts, _, tris) = ring_disk(n_rings);
    build(pts.iter().map(|p| [p[0], p[1], 0.0]).collect(), tris)
}

/// Unit upper hemisphere (`z >= 0`) with `6 n²` triangles; polar angle proportional to the ring
/// index. The equator is the boundary.
pub fn hemisphere(n_rings: usize) -> TriMesh {
    let (pts, ring, tris) = ring_disk(n_rings);
    let v = pts
        .iter()
        .zip(&ring)
        .map(|(p, &k)| {
            let theta = FRAC_PI_2 * k as f64 / n_rings as f64;
            let phi = p[1].atan2(p[0]);
            [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ]
        })
        .collect();
    build(v, tris)
}

/// Boundary vertices of [`hemisphere`] at angles 0, π/2, π, 3π/2.
pub fn hemisphere_corners(n_rings: usize) -> [usize; 4] {
    let start = 1 + 3 * n_rings * (n_rings - 1);
    let m = 6 * n_rings;
    [start, start + m / 4, start + m / 2, start + 3 * m / 4]
}

/// Regular grid on `[0, w] x [0, h]`, one diagonal per cell. Vertex `(i, j)` is `j * (nx+1) + i`.
pub fn flat_grid(nx: usize, ny: usize, w: f64, h: f64) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            v.push([w * i as f64 / nx as f64, h * j as f64 / ny as f64, 0.0]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut t = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            t.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            t.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    build(v, t)
}

/// Grid with a center vertex in every cell (four triangles per cell), mirror symmetric in both
/// axes. Corner grid vertex `(i, j)` is `j * (nx+1) + i`; cell centers follow.
pub fn crossed_grid(nx: usize, ny: usize, x0: f64, y0: f64, w: f64, h: f64) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            v.push([
                x0 + w * i as f64 / nx as f64,
                y0 + h * j as f64 / ny as f64,
                0.0,
            ]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut t = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let c = v.len();
            v.push([
                x0 + w * (i as f64 + 0.5) / nx as f64,
                y0 + h * (j as f64 + 0.5) / ny as f64,
                0.0,
            ]);
            let (a, b, cc, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            t.push([a, b, c]);
            t.push([b, cc, c]);
            t.push([cc, d, c]);
            t.push([d, a, c]);
        }
    }
    build(v, t)
}

pub fn crossed_grid_corners(nx: usize, ny: usize) -> [usize; 4] {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    [idx(0, 0), idx(nx, 0), idx(nx, ny), idx(0, ny)]
}

/// Irregular planar mesh of `[0, w] x [0, h]`: a regular grid with interior vertices displaced
/// by a deterministic pseudo-random amount of up to `jitter` cell sizes.
pub fn perturbed_grid(nx: usize, ny: usize, w: f64, h: f64, jitter: f64) -> TriMesh {
    let base = flat_grid(nx, ny, w, h);
    let (dx, dy) = (w / nx as f64, h / ny as f64);
    let mut v = base.vertices().to_vec();
    for j in 1..ny {
        for i in 1..nx {
            let k = j * (nx + 1) + i;
            let s1 = ((k as f64 * 12.9898).sin() * 43758.5453).fract();
            let s2 = ((k as f64 * 78.233).sin() * 12345.678).fract();
            v[k][0] += jitter * dx * s1;
            v[k][1] += jitter * dy * s2;
        }
    }
    build(v, base.triangles().to_vec())
}

/// Saddle `z = curvature (x² - y²)` over `[-half, half]²` on a [`crossed_grid`] with `n` cells
/// per side. For odd `n` the saddle point is a cell-center vertex.
pub fn saddle(n: usize, half: f64, curvature: f64) -> TriMesh {
    let flat = crossed_grid(n, n, -half, -half, 2.0 * half, 2.0 * half);
    let v = flat
        .vertices()
        .iter()
        .map(|p| [p[0], p[1], curvature * (p[0] * p[0] - p[1] * p[1])])
        .collect();
    build(v, flat.triangles().to_vec())
}

/// Shallow shell over `[0, w] x [0, h]` on a [`flat_grid`], lifted by
/// `z = rise sin(pi x / w) sin(pi y / h)`. Corner vertices are [`crossed_grid_corners`].
pub fn shallow_shell(nx: usize, ny: usize, w: f64, h: f64, rise: f64) -> TriMesh {
    let flat = flat_grid(nx, ny, w, h);
    let v = flat
        .vertices()
        .iter()
        .map(|p| {
            let z = rise * (PI * p[0] / w).sin() * (PI * p[1] / h).sin();
            [p[0], p[1], z]
        })
        .collect();
    build(v, flat.triangles().to_vec())
}

/// Atlas with a single chart covering a disk-like `mesh`.
pub fn single_chart_atlas(
    mesh: &TriMesh,
    corners: [usize; 4],
    aspect: Aspect,
) -> Result<(Atlas<f64>, ConformalChart), ConformalError> {
    let chart = build_chart(mesh, "patch", corners, aspect)?;
    let samples = chart
        .uv
        .iter()
        .enumerate()
        .map(|(vertex, &uv)| ChartSample { vertex, uv })
        .collect();
    let atlas = Atlas::new(
        mesh.vertex_count(),
        vec![AtlasChart {
            id: chart.patch_id.clone(),
            width: chart.width,
            height: chart.height,
            samples,
        }],
    )
    .expect("chart covers every vertex");
    Ok((atlas, chart))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeeJointParams {
    pub radius: f64,
    pub length: f64,
    pub n_around: usize,
    pub n_axial: usize,
    /// Removed cell block `[start, end)` along the axis.
    pub hole_axial: (usize, usize),
    /// Removed cell block `[start, end)` around the circumference.
    pub hole_around: (usize, usize),
}

impl Default for TeeJointParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            length: 4.0,
            n_around: 32,
            n_axial: 24,
            hole_axial: (9, 15),
            hole_around: (5, 11),
        }
    }
}

/// Joint patch of a tee-branch pipe: a main-pipe section along the x axis with the opening
/// where the side branch attaches.
#[derive(Debug, Clone)]
pub struct TeeJoint {
    pub mesh: TriMesh,
    /// Index of the branch opening among `mesh.boundary_loops()`.
    pub hole_loop: usize,
    /// A vertex on the branch opening.
    pub hole_vertex: usize,
    /// Generator opposite the opening, from one pipe end to the other.
    pub cut_path: Vec<usize>,
}

pub fn tee_joint(p: TeeJointParams) -> TeeJoint {
    let mut v = Vec::new();
    for i in 0..=p.n_axial {
        let x = p.length * i as f64 / p.n_axial as f64;
        for j in 0..p.n_around {
            let a = TAU * j as f64 / p.n_around as f64;
            v.push([x, p.radius * a.cos(), p.radius * a.sin()]);
        }
    }
    let idx = |i: usize, j: usize| i * p.n_around + j % p.n_around;
    let mut t = Vec::new();
    for i in 0..p.n_axial {
        for j in 0..p.n_around {
            let in_hole = (p.hole_axial.0..p.hole_axial.1).contains(&i)
                && (p.hole_around.0..p.hole_around.1).contains(&j);
            if in_hole {
                continue;
            }
            t.push([idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)]);
            t.push([idx(i, j), idx(i + 1, j + 1), idx(i + 1, j)]);
        }
    }
    let full = build(v, t);
    let all: Vec<usize> = (0..full.triangle_count()).collect();
    let (mesh, to_global) = full.extract(&all).expect("compaction");
    let mut to_local = vec![usize::MAX; full.vertex_count()];
    for (l, &g) in to_global.iter().enumerate() {
        to_local[g] = l;
    }
    let hole_vertex = to_local[idx(p.hole_axial.0, p.hole_around.0)];
    let loops = topology_summary(&mesh).boundary_loops;
    let hole_loop = loops
        .iter()
        .position(|l| l.contains(&hole_vertex))
        .expect("hole loop");
    let opposite = (p.hole_around.0 + p.hole_around.1) / 2 + p.n_around / 2;
    let cut_path = (0..=p.n_axial)
        .map(|i| to_local[idx(i, opposite)])
        .collect();
    TeeJoint {
        mesh,
        hole_loop,
        hole_vertex,
        cut_path,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
pub struct TeeBranchParams {
    pub radius: f64,
    pub length: f64,
    pub n_around: usize,
    pub n_axial: usize,
    /// Rows `[start, end)` of the main pipe that form the joint patch.
    pub joint_rows: (usize, usize),
    pub hole_axial: (usize, usize),
    pub hole_around: (usize, usize),
    pub branch_radius: f64,
    /// Height of the branch end above the main pipe axis.
    pub branch_top: f64,
    pub branch_rings: usize,
}

impl Default for TeeBranchParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            length: 6.0,
            n_around: 32,
            n_axial: 36,
            joint_rows: (12, 24),
            hole_axial: (15, 21),
            hole_around: (5, 11),
            branch_radius: 0.5,
            branch_top: 2.5,
            branch_rings: 9,
        }
    }
}

/// Tee-branch pipe: a main pipe along the x axis and a side branch lofted from the opening in
/// its top to a circle.
#[derive(Debug, Clone)]
pub struct TeeBranch {
    pub mesh: TriMesh,
    /// Triangle ranges of the left pipe, the joint, the right pipe and the branch.
    pub left: std::ops::Range<usize>,
    pub joint: std::ops::Range<usize>,
    pub right: std::ops::Range<usize>,
    pub branch: std::ops::Range<usize>,
    /// A vertex on the opening between joint and branch.
    pub hole_vertex: usize,
    /// Generators of the left, joint and right pipe sections, bottom side.
    pub main_cuts: [Vec<usize>; 3],
    /// Branch generator from the opening to the branch end.
    pub branch_cut: Vec<usize>,
    /// Rings at `x = 0` and `x = length`.
    pub end_rings: [Vec<usize>; 2],
    /// Ring at the branch end.
    pub top_ring: Vec<usize>,
}

pub fn tee_branch(p: TeeBranchParams) -> TeeBranch {
    let na = p.n_around;
    let mut v = Vec::new();
    for i in 0..=p.n_axial {
        let x = p.length * i as f64 / p.n_axial as f64;
        for j in 0..na {
            let a = TAU * j as f64 / na as f64;
            v.push([x, p.radius * a.cos(), p.radius * a.sin()]);
        }
    }
    let idx = |i: usize, j: usize| i * na + j % na;
    let mut t = Vec::new();
    let mut row_start = Vec::new();
    for i in 0..p.n_axial {
        row_start.push(t.len());
        for j in 0..na {
            let in_hole = (p.hole_axial.0..p.hole_axial.1).contains(&i)
                && (p.hole_around.0..p.hole_around.1).contains(&j);
            if !in_hole {
                t.push([idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)]);
                t.push([idx(i, j), idx(i + 1, j + 1), idx(i + 1, j)]);
            }
        }
    }
    row_start.push(t.len());
    let main_end = t.len();

    let hole_vertex = idx(p.hole_axial.0, p.hole_around.0);
    let pipe = build(v.clone(), t.clone());
    let hole_loop = pipe
        .boundary_loops()
        .into_iter()
        .find(|l| l.contains(&hole_vertex))
        .expect("opening");
    let m = hole_loop.len();
    let xc = p.length * (p.hole_axial.0 + p.hole_axial.1) as f64 / (2.0 * p.n_axial as f64);
    let mut rings = vec![hole_loop.clone()];
    for k in 1..=p.branch_rings {
        let s = k as f64 / p.branch_rings as f64;
        let ring: Vec<usize> = hole_loop
            .iter()
            .map(|&h| {
                let q = v[h];
                let psi = q[1].atan2(q[0] - xc);
                let c = [
                    xc + p.branch_radius * psi.cos(),
                    p.branch_radius * psi.sin(),
                    p.branch_top,
                ];
                v.push([
                    (1.0 - s) * q[0] + s * c[0],
                    (1.0 - s) * q[1] + s * c[1],
                    (1.0 - s) * q[2] + s * c[2],
                ]);
                v.len() - 1
            })
            .collect();
        rings.push(ring);
    }
    for k in 0..p.branch_rings {
        let (lo, hi) = (&rings[k], &rings[k + 1]);
        for i in 0..m {
            let n = (i + 1) % m;
            t.push([lo[n], lo[i], hi[i]]);
            t.push([lo[n], hi[i], hi[n]]);
        }
    }
    let start = hole_loop
        .iter()
        .enumerate()
        .max_by(|a, b| v[*a.1][0].total_cmp(&v[*b.1][0]))
        .map(|(i, _)| i)
        .expect("non-empty opening");
    let branch_cut = rings.iter().map(|r| r[start]).collect();

    let opposite = (p.hole_around.0 + p.hole_around.1) / 2 + na / 2;
    let generator = |a: usize, b: usize| (a..=b).map(|i| idx(i, opposite)).collect::<Vec<_>>();
    let (j0, j1) = p.joint_rows;
    TeeBranch {
        left: 0..row_start[j0],
        joint: row_start[j0]..row_start[j1],
        right: row_start[j1]..main_end,
        branch: main_end..t.len(),
        mesh: build(v, t),
        hole_vertex,
        main_cuts: [
            generator(0, j0),
            generator(j0, j1),
            generator(j1, p.n_axial),
        ],
        branch_cut,
        end_rings: [
            (0..na).map(|j| idx(0, j)).collect(),
            (0..na).map(|j| idx(p.n_axial, j)).collect(),
        ],
        top_ring: rings[p.branch_rings].clone(),
    }
    .compacted()
}

impl TeeBranch {
    /// Drops the unreferenced vertices inside the opening.
    fn compacted(mut self) -> Self {
        let all: Vec<usize> = (0..self.mesh.triangle_count()).collect();
        let (mesh, to_global) = self.mesh.extract(&all).expect("compaction");
        let mut to_local = vec![usize::MAX; self.mesh.vertex_count()];
        for (l, &g) in to_global.iter().enumerate() {
            to_local[g] = l;
        }
        let map = |list: &mut Vec<usize>| list.iter_mut().for_each(|x| *x = to_local[*x]);
        self.main_cuts.iter_mut().for_each(map);
        self.end_rings.iter_mut().for_each(map);
        map(&mut self.branch_cut);
        map(&mut self.top_ring);
        self.hole_vertex = to_local[self.hole_vertex];
        self.mesh = mesh;
        self
    }
}
