use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::dense::column_rank;
use crate::linalg::{
    CsrMatrix, SkylineCholesky, SkylineSymbolic, SolverOptions, SparsityPattern, SpdSolver,
};
use crate::mesh::TriMesh;
use crate::Scalar;

use super::element::{element_stiffness_with, local_frame, ElementMatrix, DEFAULT_DRILLING_FACTOR};
use super::{FeaError, LoadCase, ShellMaterial, DOFS_PER_NODE};

/// Result of one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FieldSnapshot<T: Scalar> {
    pub rho: Vec<T>,
    /// Six entries per vertex: `(ux, uy, uz, rx, ry, rz)`.
    pub displacement: Vec<T>,
    pub compliance: T,
    pub volume_fraction: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
pub struct ModelOptions {
    pub drilling_factor: f64,
    pub solver: SolverOptions,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            drilling_factor: DEFAULT_DRILLING_FACTOR,
            solver: SolverOptions::default(),
        }
    }
}

/// The six rigid-body displacement fields of a mesh: three translations, then three rotations
/// about the centroid scaled by the bounding-box diagonal.
pub fn rigid_body_modes<T: Scalar>(mesh: &TriMesh) -> Vec<Vec<T>> {
    let n = mesh.vertex_count();
    let mut c = [0.0; 3];
    for p in mesh.vertices() {
        for k in 0..3 {
            c[k] += p[k] / n as f64;
        }
    }
    let l = mesh.bounding_box_diagonal().max(f64::MIN_POSITIVE);
    let mut modes = vec![vec![T::zero(); DOFS_PER_NODE * n]; 6];
    for (v, p) in mesh.vertices().iter().enumerate() {
        let r = [(p[0] - c[0]) / l, (p[1] - c[1]) / l, (p[2] - c[2]) / l];
        for k in 0..3 {
            modes[k][DOFS_PER_NODE * v + k] = T::one();
            let mut a = [0.0; 3];
            a[k] = 1.0;
            let u = [
                a[1] * r[2] - a[2] * r[1],
                a[2] * r[0] - a[0] * r[2],
                a[0] * r[1] - a[1] * r[0],
            ];
            for q in 0..3 {
                modes[3 + k][DOFS_PER_NODE * v + q] = T::c(u[q]);
                modes[3 + k][DOFS_PER_NODE * v + 3 + q] = T::c(a[q] / l);
            }
        }
    }
    modes
}

const ELEMENT_DOFS: usize = 18;

/// Shell model with fixed geometry, material, supports and loads; only densities change
/// between solves. Unit-density element matrices, the constrained sparsity pattern and the
/// factorization layout are computed once.
#[derive(Debug, Clone)]
pub struct ShellModel<T: Scalar> {
    triangles: Vec<[usize; 3]>,
    vertex_count: usize,
    unit: Vec<ElementMatrix<T>>,
    areas: Vec<T>,
    total_area: T,
    force: Vec<T>,
    free: Vec<usize>,
    pattern: SparsityPattern,
    /// Per element, position of each of the 18x18 entries in the reduced matrix values.
    scatter: Vec<usize>,
    symbolic: Option<SkylineSymbolic>,
    options: ModelOptions,
}

impl<T: Scalar> ShellModel<T> {
    pub fn new(
        mesh: &TriMesh,
        material: &ShellMaterial<T>,
        loads: &LoadCase<T>,
        options: ModelOptions,
    ) -> Result<Self, FeaError> {
        material.validate()?;
        let nv = mesh.vertex_count();
        let force = loads.force_vector(nv)?;
        let constrained = loads.constrained_mask(nv)?;
        let modes = rigid_body_modes::<T>(mesh);
        let restricted: Vec<Vec<T>> = modes
            .iter()
            .map(|m| {
                m.iter()
                    .zip(&constrained)
                    .map(|(&x, &c)| if c { x } else { T::zero() })
                    .collect()
            })
            .collect();
        let rank = column_rank(&restricted, T::c(1e-6));
        if rank < 6 {
            return Err(FeaError::RigidBodyModes { rank });
        }

        let drill = T::c(options.drilling_factor);
        let unit: Vec<ElementMatrix<T>> = (0..mesh.triangle_count())
            .into_par_iter()
            .map(|t| {
                let p = mesh.triangle_points(t).map(|v| v.map(T::c));
                element_stiffness_with(p, material, T::one(), drill)
                    .map_err(|_| FeaError::DegenerateTriangle { triangle: t })
            })
            .collect::<Result<_, _>>()?;
        let areas: Vec<T> = (0..mesh.triangle_count())
            .map(|t| {
                let p = mesh.triangle_points(t).map(|v| v.map(T::c));
                local_frame(p).map(|f| f.2).unwrap_or_else(T::zero)
            })
            .collect();
        let total_area = areas.iter().copied().sum();

        let mut reduced = vec![usize::MAX; DOFS_PER_NODE * nv];
        let mut free = Vec::new();
        for (d, &c) in constrained.iter().enumerate() {
            if !c {
                reduced[d] = free.len();
                free.push(d);
            }
        }
        let dofs = |tri: &[usize; 3]| -> [usize; ELEMENT_DOFS] {
            let mut out = [0; ELEMENT_DOFS];
            for (i, &v) in tri.iter().enumerate() {
                for k in 0..DOFS_PER_NODE {
                    out[DOFS_PER_NODE * i + k] = DOFS_PER_NODE * v + k;
                }
            }
            out
        };
        let triangles = mesh.triangles().to_vec();
        let mut entries = Vec::new();
        for tri in &triangles {
            let d = dofs(tri).map(|g| reduced[g]);
            for &a in &d {
                for &b in &d {
                    if a != usize::MAX && b != usize::MAX {
                        entries.push((a, b));
                    }
                }
            }
        }
        let pattern = SparsityPattern::from_entries(free.len(), free.len(), entries);
        let mut scatter = Vec::with_capacity(ELEMENT_DOFS * ELEMENT_DOFS * triangles.len());
        for tri in &triangles {
            let d = dofs(tri).map(|g| reduced[g]);
            for &a in &d {
                for &b in &d {
                    scatter.push(if a != usize::MAX && b != usize::MAX {
                        pattern.index_of(a, b).expect("entry in pattern")
                    } else {
                        usize::MAX
                    });
                }
            }
        }
        let symbolic = (free.len() <= options.solver.direct_max_dim)
            .then(|| SkylineSymbolic::analyze(&pattern));
        log::debug!(
            "shell model: {} elements, {} free of {} DOFs",
            triangles.len(),
            free.len(),
            DOFS_PER_NODE * nv
        );
        Ok(Self {
            triangles,
            vertex_count: nv,
            unit,
            areas,
            total_area,
            force,
            free,
            pattern,
            scatter,
            symbolic,
            options,
        })
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn areas(&self) -> &[T] {
        &self.areas
    }

    pub fn total_area(&self) -> T {
        self.total_area
    }

    pub fn force(&self) -> &[T] {
        &self.force
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// Unit-density element matrix in global coordinates.
    pub fn unit_matrix(&self, e: usize) -> &ElementMatrix<T> {
        &self.unit[e]
    }

    pub fn volume_fraction(&self, rho: &[T]) -> T {
        rho.iter().zip(&self.areas).map(|(&r, &a)| r * a).sum::<T>() / self.total_area
    }

    fn check_rho(&self, rho: &[T]) -> Result<(), FeaError> {
        if rho.len() != self.triangles.len() {
            return Err(FeaError::DimensionMismatch {
                expected: self.triangles.len(),
                got: rho.len(),
            });
        }
        Ok(())
    }

    /// Reduced stiffness `K(rho)` on the free DOFs, summed in element order.
    pub fn assemble(&self, rho: &[T]) -> Result<CsrMatrix<T>, FeaError> {
        self.check_rho(rho)?;
        let mut values = vec![T::zero(); self.pattern.nnz()];
        let per = ELEMENT_DOFS * ELEMENT_DOFS;
        for (e, k) in self.unit.iter().enumerate() {
            let map = &self.scatter[e * per..(e + 1) * per];
            for i in 0..ELEMENT_DOFS {
                for j in 0..ELEMENT_DOFS {
                    let idx = map[i * ELEMENT_DOFS + j];
                    if idx != usize::MAX {
                        values[idx] += rho[e] * k[i][j];
                    }
                }
            }
        }
        Ok(CsrMatrix::from_pattern(self.pattern.clone(), values)?)
    }

    /// Solves `K(rho) x = rhs` for full-length right-hand sides (one per entry of `rhs`);
    /// constrained entries of the results are zero.
    pub fn solve_many(&self, rho: &[T], rhs: &[&[T]]) -> Result<Vec<Vec<T>>, FeaError> {
        let k = self.assemble(rho)?;
        let solver = match &self.symbolic {
            Some(s) => SpdSolver::Direct(SkylineCholesky::factor_with(s.clone(), &k)?),
            None => SpdSolver::new(k, self.options.solver)?,
        };
        rhs.iter()
            .map(|b| {
                if b.len() != self.force.len() {
                    return Err(FeaError::DimensionMismatch {
                        expected: self.force.len(),
                        got: b.len(),
                    });
                }
                let rb: Vec<T> = self.free.iter().map(|&d| b[d]).collect();
                let x = solver.solve(&rb)?;
                let mut full = vec![T::zero(); self.force.len()];
                for (&d, v) in self.free.iter().zip(x) {
                    full[d] = v;
                }
                Ok(full)
            })
            .collect()
    }

    pub fn solve(&self, rho: &[T]) -> Result<FieldSnapshot<T>, FeaError> {
        let u = self
            .solve_many(rho, &[&self.force])?
            .pop()
            .expect("one solution");
        let compliance = self.force.iter().zip(&u).map(|(&f, &x)| f * x).sum();
        Ok(FieldSnapshot {
            rho: rho.to_vec(),
            displacement: u,
            compliance,
            volume_fraction: self.volume_fraction(rho),
        })
    }

    fn gather(&self, e: usize, u: &[T]) -> [T; ELEMENT_DOFS] {
        let mut ue = [T::zero(); ELEMENT_DOFS];
        for (i, &v) in self.triangles[e].iter().enumerate() {
            for k in 0..DOFS_PER_NODE {
                ue[DOFS_PER_NODE * i + k] = u[DOFS_PER_NODE * v + k];
            }
        }
        ue
    }

    /// `a_e^T K_e^unit b_e` for every element.
    pub fn element_products(&self, a: &[T], b: &[T]) -> Vec<T> {
        (0..self.triangles.len())
            .into_par_iter()
            .map(|e| {
                let (ae, be) = (self.gather(e, a), self.gather(e, b));
                let k = &self.unit[e];
                (0..ELEMENT_DOFS)
                    .map(|i| ae[i] * (0..ELEMENT_DOFS).map(|j| k[i][j] * be[j]).sum::<T>())
                    .sum()
            })
            .collect()
    }

    /// `u_e^T K_e^unit u_e` for every element.
    pub fn element_energies(&self, u: &[T]) -> Vec<T> {
        self.element_products(u, u)
    }

    /// Strain energy per unit area, `rho_e u_e^T K_e^unit u_e / (2 A_e)`.
    pub fn strain_energy_density(&self, snapshot: &FieldSnapshot<T>) -> Vec<T> {
        self.element_energies(&snapshot.displacement)
            .into_iter()
            .zip(snapshot.rho.iter().zip(&self.areas))
            .map(|(w, (&r, &a))| r * w / (T::c(2.0) * a))
            .collect()
    }
}
