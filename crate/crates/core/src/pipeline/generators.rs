//! Built-in surfaces with their default patches, loads and supports.
//!
//! Load magnitudes are unit values; only the load pattern follows the problem descriptions.

use std::f64::consts::TAU;

use crate::conformal::Aspect;
use crate::fea::Selector;
use crate::fixtures::{self, TeeBranchParams};
use crate::mesh::TriMesh;

use super::config::{
    Generator, LoadSpec, PatchConfig, SaddleParams, SupportSpec, TorusParams, TriangleSet,
};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub mesh: TriMesh,
    pub patches: Vec<PatchConfig>,
    pub loads: Vec<LoadSpec>,
    pub supports: Vec<SupportSpec>,
}

pub fn scenario(g: &Generator) -> Scenario {
    match g {
        Generator::Saddle(p) => saddle(p),
        Generator::Torus(p) => torus(p),
        Generator::TeeBranch(p) => tee_branch(p),
    }
}

fn patch(
    id: &str,
    triangles: TriangleSet,
    cuts: Vec<Vec<usize>>,
    corners: Vec<usize>,
) -> PatchConfig {
    PatchConfig {
        id: id.into(),
        triangles,
        cuts,
        fill_holes: Vec::new(),
        corners: Some(corners),
        aspect: Aspect::Auto,
    }
}

/// Clamped boundary and a horizontal point load at the saddle point.
fn saddle(p: &SaddleParams) -> Scenario {
    let mesh = fixtures::saddle(p.n, p.half, p.curvature);
    Scenario {
        patches: vec![patch(
            "saddle",
            TriangleSet::Whole,
            Vec::new(),
            fixtures::crossed_grid_corners(p.n, p.n).to_vec(),
        )],
        loads: vec![LoadSpec {
            at: Selector::Sphere {
                center: [0.0, 0.0, 0.0],
                radius: 1e-3 * p.half,
            },
            force: [1.0, 0.0, 0.0],
            moment: [0.0; 3],
        }],
        supports: vec![SupportSpec {
            at: Selector::Boundary,
            dofs: [true; 6],
        }],
        mesh,
    }
}

/// Inner equator clamped; four tangential forces on the outer equator forming a torque about
/// the axis.
fn torus(p: &TorusParams) -> Scenario {
    let mesh = fixtures::torus(p.major, p.minor, p.nu, p.nv);
    let (meridian, longitude) = fixtures::torus_cut_loops(p.nu, p.nv);
    let loads = (0..4)
        .map(|k| {
            let i = k * p.nu / 4;
            let u = TAU * i as f64 / p.nu as f64;
            LoadSpec {
                at: Selector::Vertices(vec![fixtures::torus_index(p.nu, p.nv, i, 0)]),
                force: [-u.sin(), u.cos(), 0.0],
                moment: [0.0; 3],
            }
        })
        .collect();
    Scenario {
        patches: vec![patch(
            "torus",
            TriangleSet::Whole,
            vec![meridian, longitude],
            vec![fixtures::torus_index(p.nu, p.nv, 0, 0)],
        )],
        loads,
        supports: vec![SupportSpec {
            at: Selector::Vertices(fixtures::torus_inner_ring(p.nu, p.nv)),
            dofs: [true; 6],
        }],
        mesh,
    }
}

/// Both main pipe ends clamped; a unit downward force spread over the branch end.
fn tee_branch(p: &TeeBranchParams) -> Scenario {
    let tb = fixtures::tee_branch(*p);
    let range = |r: &std::ops::Range<usize>| TriangleSet::Ranges(vec![[r.start, r.end]]);
    let ends = |c: &[usize]| vec![c[0], *c.last().expect("non-empty cut")];
    let [left_cut, joint_cut, right_cut] = tb.main_cuts.clone();
    let mut joint = patch(
        "joint",
        range(&tb.joint),
        vec![joint_cut.clone()],
        ends(&joint_cut),
    );
    joint.fill_holes = vec![tb.hole_vertex];
    Scenario {
        patches: vec![
            patch(
                "left",
                range(&tb.left),
                vec![left_cut.clone()],
                ends(&left_cut),
            ),
            joint,
            patch(
                "right",
                range(&tb.right),
                vec![right_cut.clone()],
                ends(&right_cut),
            ),
            patch(
                "branch",
                range(&tb.branch),
                vec![tb.branch_cut.clone()],
                ends(&tb.branch_cut),
            ),
        ],
        loads: vec![LoadSpec {
            at: Selector::Vertices(tb.top_ring.clone()),
            force: [0.0, 0.0, -1.0],
            moment: [0.0; 3],
        }],
        supports: vec![SupportSpec {
            at: Selector::Vertices(tb.end_rings.concat()),
            dofs: [true; 6],
        }],
        mesh: tb.mesh,
    }
}
