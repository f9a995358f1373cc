//! Ersatz-material shell analysis on the surface mesh.
//!
//! Element densities come from nodal TDF values through a regularized Heaviside. Each facet is
//! a flat shell triangle whose stiffness scales linearly with its density.

mod element;
mod model;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::mesh::TriMesh;
use crate::Scalar;

pub use element::{
    element_stiffness, element_stiffness_with, ElementMatrix, DEFAULT_DRILLING_FACTOR,
};
pub use model::{rigid_body_modes, FieldSnapshot, ModelOptions, ShellModel};

pub const DOFS_PER_NODE: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeaError {
    #[error("triangle {triangle} is degenerate")]
    DegenerateTriangle { triangle: usize },
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid Heaviside parameters: {0}")]
    InvalidHeaviside(String),
    #[error("vertex {vertex} is out of range")]
    VertexOutOfRange { vertex: usize },
    #[error("supports leave rigid-body motion free (only {rank} of 6 modes restrained)")]
    RigidBodyModes { rank: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("stiffness matrix is singular or indefinite: {0}")]
    Solve(#[from] LinalgError),
}

/// Smoothed step from `alpha` to 1 over `[-epsilon, epsilon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(bound = "", default)]
pub struct HeavisideParams<T: Scalar> {
    pub epsilon: T,
    pub alpha: T,
}

impl<T: Scalar> Default for HeavisideParams<T> {
    fn default() -> Self {
        Self {
            epsilon: T::c(0.1),
            alpha: T::c(1e-3),
        }
    }
}

impl<T: Scalar> HeavisideParams<T> {
    pub fn validate(&self) -> Result<(), FeaError> {
        if !(self.epsilon > T::zero()) {
            return Err(FeaError::InvalidHeaviside(format!(
                "epsilon = {}",
                self.epsilon
            )));
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(FeaError::InvalidHeaviside(format!(
                "alpha = {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Value and derivative of the regularized Heaviside function. The cubic band is offset by
/// `(1 + alpha) / 2`, which makes it meet both plateaus continuously.
pub fn heaviside<T: Scalar>(x: T, p: HeavisideParams<T>) -> (T, T) {
    let eps = p.epsilon;
    if x > eps {
        (T::one(), T::zero())
    } else if x < -eps {
        (p.alpha, T::zero())
    } else {
        let k = T::c(0.75) * (T::one() - p.alpha);
        let s = x / eps;
        let value = k * (s - s * s * s / T::c(3.0)) + (T::one() + p.alpha) / T::c(2.0);
        (value, k * (T::one() - s * s) / eps)
    }
}

/// Element density as the mean nodal Heaviside value, with `d rho / d phi_j`.
pub fn element_density<T: Scalar>(phi: [T; 3], p: HeavisideParams<T>) -> (T, [T; 3]) {
    let third = T::one() / T::c(3.0);
    let h = phi.map(|x| heaviside(x, p));
    (
        (h[0].0 + h[1].0 + h[2].0) * third,
        [h[0].1 * third, h[1].1 * third, h[2].1 * third],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(bound = "", default)]
pub struct ShellMaterial<T: Scalar> {
    pub youngs_modulus: T,
    pub poisson_ratio: T,
    pub thickness: T,
}

impl<T: Scalar> Default for ShellMaterial<T> {
    fn default() -> Self {
        Self {
            youngs_modulus: T::one(),
            poisson_ratio: T::c(0.3),
            thickness: T::one(),
        }
    }
}

impl<T: Scalar> ShellMaterial<T> {
    pub fn validate(&self) -> Result<(), FeaError> {
        if !(self.youngs_modulus > T::zero()) {
            return Err(FeaError::InvalidMaterial(format!(
                "E = {}",
                self.youngs_modulus
            )));
        }
        if !(self.poisson_ratio > -T::one() && self.poisson_ratio < T::c(0.5)) {
            return Err(FeaError::InvalidMaterial(format!(
                "nu = {}",
                self.poisson_ratio
            )));
        }
        if !(self.thickness > T::zero()) {
            return Err(FeaError::InvalidMaterial(format!("t = {}", self.thickness)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PointLoad<T: Scalar> {
    pub vertex: usize,
    pub force: [T; 3],
    #[serde(default = "zero3")]
    pub moment: [T; 3],
}

fn zero3<T: Scalar>() -> [T; 3] {
    [T::zero(); 3]
}

/// Zero-displacement support; `dofs` masks `(ux, uy, uz, rx, ry, rz)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    pub vertices: Vec<usize>,
    #[serde(default = "all_dofs")]
    pub dofs: [bool; 6],
}

fn all_dofs() -> [bool; 6] {
    [true; 6]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(bound = "")]
pub struct LoadCase<T: Scalar> {
    pub loads: Vec<PointLoad<T>>,
    pub supports: Vec<Support>,
}

impl<T: Scalar> LoadCase<T> {
    /// Global load vector with 6 entries per vertex.
    pub fn force_vector(&self, vertex_count: usize) -> Result<Vec<T>, FeaError> {
        let mut f = vec![T::zero(); DOFS_PER_NODE * vertex_count];
        for l in &self.loads {
            if l.vertex >= vertex_count {
                return Err(FeaError::VertexOutOfRange { vertex: l.vertex });
            }
            for k in 0..3 {
                f[DOFS_PER_NODE * l.vertex + k] += l.force[k];
                f[DOFS_PER_NODE * l.vertex + 3 + k] += l.moment[k];
            }
        }
        Ok(f)
    }

    pub fn constrained_mask(&self, vertex_count: usize) -> Result<Vec<bool>, FeaError> {
        let mut m = vec![false; DOFS_PER_NODE * vertex_count];
        for s in &self.supports {
            for &v in &s.vertices {
                if v >= vertex_count {
                    return Err(FeaError::VertexOutOfRange { vertex: v });
                }
                for k in 0..6 {
                    m[DOFS_PER_NODE * v + k] |= s.dofs[k];
                }
            }
        }
        Ok(m)
    }

    /// Multiplies every load by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        for l in &mut out.loads {
            l.force = l.force.map(|x| x * s);
            l.moment = l.moment.map(|x| x * s);
        }
        out
    }
}

/// Vertex selection resolved against a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Vertices(Vec<usize>),
    /// Every vertex within `radius` of `center`.
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Every vertex inside the axis-aligned box.
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
    /// Every vertex on a boundary loop of the mesh.
    Boundary,
}

impl Selector {
    pub fn resolve(&self, mesh: &TriMesh) -> Result<Vec<usize>, FeaError> {
        match self {
            Selector::Vertices(v) => {
                if let Some(&bad) = v.iter().find(|&&i| i >= mesh.vertex_count()) {
                    return Err(FeaError::VertexOutOfRange { vertex: bad });
                }
                Ok(v.clone())
            }
            Selector::Sphere { center, radius } => Ok(mesh
                .vertices()
                .iter()
                .enumerate()
                .filter(|(_, p)| {
                    let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
                    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() <= *radius
                })
                .map(|(i, _)| i)
                .collect()),
            Selector::Box { min, max } => Ok(mesh
                .vertices()
                .iter()
                .enumerate()
                .filter(|(_, p)| (0..3).all(|k| min[k] <= p[k] && p[k] <= max[k]))
                .map(|(i, _)| i)
                .collect()),
            Selector::Boundary => Ok(mesh
                .boundary_vertex_mask()
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| i)
                .collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heaviside_values() {
        let p = HeavisideParams::<f64>::default();
        assert_eq!(heaviside(0.2, p).0, 1.0);
        assert_eq!(heaviside(-0.2, p).0, 1e-3);
        assert!((heaviside(0.0, p).0 - 0.5005).abs() < 1e-15);
        assert!((heaviside(0.1, p).0 - 1.0).abs() < 1e-12);
        assert!((heaviside(-0.1, p).0 - 1e-3).abs() < 1e-12);
        assert!(heaviside(0.1, p).1.abs() < 1e-12 && heaviside(-0.1, p).1.abs() < 1e-12);
    }

    #[test]
    fn density_values() {
        let p = HeavisideParams::<f64>::default();
        assert_eq!(element_density([1.0, 1.0, 1.0], p).0, 1.0);
        assert!((element_density([-1.0, -1.0, -1.0], p).0 - 1e-3).abs() < 1e-18);
        assert!((element_density([1.0, 1.0, -1.0], p).0 - 2.001 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn selectors() {
        let m = crate::fixtures::flat_grid(2, 2, 2.0, 2.0);
        let s = Selector::Sphere {
            center: [0.0, 0.0, 0.0],
            radius: 1.01,
        };
        assert_eq!(s.resolve(&m).unwrap(), vec![0, 1, 3]);
        assert!(Selector::Vertices(vec![9]).resolve(&m).is_err());
        let b = Selector::Box {
            min: [0.5, -1.0, -1.0],
            max: [1.5, 3.0, 1.0],
        };
        assert_eq!(b.resolve(&m).unwrap(), vec![1, 4, 7]);
        assert_eq!(Selector::Boundary.resolve(&m).unwrap().len(), 8);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Selector>(&json).unwrap(), s);
    }
}
