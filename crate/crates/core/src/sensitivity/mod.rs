//! Design sensitivities of compliance and volume fraction, chained from element energies
//! through the Heaviside density map and the TDF Jacobian.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fea::{element_density, FeaError, FieldSnapshot, HeavisideParams, ShellModel};
use crate::mmc::{global_tdf, Atlas, DesignState, KsParams, MmcError, TdfJacobian};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensitivityError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vertex count of the atlas ({atlas}) differs from the model ({model})")]
    AtlasMismatch { atlas: usize, model: usize },
    #[error(transparent)]
    Fea(#[from] FeaError),
    #[error(transparent)]
    Mmc(#[from] MmcError),
}

/// Element densities with their partials with respect to the three nodal TDF values.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<T> {
    pub rho: Vec<T>,
    pub drho_dphi: Vec<[T; 3]>,
}

pub fn element_densities<T: Scalar>(
    triangles: &[[usize; 3]],
    phi: &[T],
    hp: HeavisideParams<T>,
) -> DensityField<T> {
    let (rho, drho_dphi) = triangles
        .iter()
        .map(|t| element_density(t.map(|v| phi[v]), hp))
        .unzip();
    DensityField { rho, drho_dphi }
}

/// Pulls a per-element derivative back to the vertices, summing in element order.
fn to_vertices<T: Scalar>(
    triangles: &[[usize; 3]],
    density: &DensityField<T>,
    per_element: &[T],
    vertex_count: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); vertex_count];
    for ((tri, d), &g) in triangles.iter().zip(&density.drho_dphi).zip(per_element) {
        for j in 0..3 {
            out[tri[j]] += g * d[j];
        }
    }
    out
}

fn check<T: Scalar>(
    model: &ShellModel<T>,
    density: &DensityField<T>,
    jacobian: &TdfJacobian<T>,
) -> Result<(), SensitivityError> {
    if density.rho.len() != model.element_count() {
        return Err(SensitivityError::DimensionMismatch {
            expected: model.element_count(),
            got: density.rho.len(),
        });
    }
    if jacobian.rows() != model.vertex_count() {
        return Err(SensitivityError::AtlasMismatch {
            atlas: jacobian.rows(),
            model: model.vertex_count(),
        });
    }
    Ok(())
}

/// `dC/dD = -sum_e (u_e^T K_e u_e) d rho_e / dD`.
pub fn compliance_gradient<T: Scalar>(
    model: &ShellModel<T>,
    density: &DensityField<T>,
    snapshot: &FieldSnapshot<T>,
    jacobian: &TdfJacobian<T>,
) -> Result<Vec<T>, SensitivityError> {
    check(model, density, jacobian)?;
    let de: Vec<T> = model
        .element_energies(&snapshot.displacement)
        .into_iter()
        .map(|e| -e)
        .collect();
    let dphi = to_vertices(model.triangles(), density, &de, model.vertex_count());
    Ok(jacobian.transpose_mul(&dphi))
}

/// Compliance gradient through an explicit adjoint solve `K W = -F`, then
/// `dC/drho_e = w_e^T K_e u_e`. Agrees with [`compliance_gradient`] up to solver roundoff.
pub fn compliance_gradient_adjoint<T: Scalar>(
    model: &ShellModel<T>,
    density: &DensityField<T>,
    snapshot: &FieldSnapshot<T>,
    jacobian: &TdfJacobian<T>,
) -> Result<Vec<T>, SensitivityError> {
    check(model, density, jacobian)?;
    let minus_f: Vec<T> = model.force().iter().map(|&f| -f).collect();
    let w = model
        .solve_many(&density.rho, &[&minus_f])?
        .pop()
        .expect("one solution");
    let de = model.element_products(&w, &snapshot.displacement);
    let dphi = to_vertices(model.triangles(), density, &de, model.vertex_count());
    Ok(jacobian.transpose_mul(&dphi))
}

/// `dV/dD = sum_e (A_e / A) d rho_e / dD`.
pub fn volume_gradient<T: Scalar>(
    model: &ShellModel<T>,
    density: &DensityField<T>,
    jacobian: &TdfJacobian<T>,
) -> Result<Vec<T>, SensitivityError> {
    check(model, density, jacobian)?;
    let total = model.total_area();
    let de: Vec<T> = model.areas().iter().map(|&a| a / total).collect();
    let dphi = to_vertices(model.triangles(), density, &de, model.vertex_count());
    Ok(jacobian.transpose_mul(&dphi))
}

/// Gradients at one design plus the fields they came from.
#[derive(Debug, Clone)]
pub struct Evaluation<T: Scalar> {
    pub phi: Vec<T>,
    pub density: DensityField<T>,
    pub snapshot: FieldSnapshot<T>,
    pub report: SensitivityReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SensitivityReport<T: Scalar> {
    pub d_compliance: Vec<T>,
    pub d_volume: Vec<T>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<GradientCheckRow>,
}

/// TDF, densities, FEA solve and both gradients for `design`.
pub fn evaluate<T: Scalar>(
    model: &ShellModel<T>,
    atlas: &Atlas<T>,
    design: &DesignState<T>,
    ks: KsParams<T>,
    hp: HeavisideParams<T>,
) -> Result<Evaluation<T>, SensitivityError> {
    if atlas.vertex_count() != model.vertex_count() {
        return Err(SensitivityError::AtlasMismatch {
            atlas: atlas.vertex_count(),
            model: model.vertex_count(),
        });
    }
    let tdf = global_tdf(atlas, design, ks)?;
    let density = element_densities(model.triangles(), &tdf.phi, hp);
    let snapshot = model.solve(&density.rho)?;
    let d_compliance = compliance_gradient(model, &density, &snapshot, &tdf.jacobian)?;
    let d_volume = volume_gradient(model, &density, &tdf.jacobian)?;
    Ok(Evaluation {
        phi: tdf.phi,
        density,
        snapshot,
        report: SensitivityReport {
            d_compliance,
            d_volume,
            diagnostics: Vec::new(),
        },
    })
}

/// Compliance and volume fraction only.
pub fn evaluate_values<T: Scalar>(
    model: &ShellModel<T>,
    atlas: &Atlas<T>,
    design: &DesignState<T>,
    ks: KsParams<T>,
    hp: HeavisideParams<T>,
) -> Result<(T, T), SensitivityError> {
    let phi = crate::mmc::global_tdf_values(atlas, design, ks)?;
    let density = element_densities(model.triangles(), &phi, hp);
    let snap = model.solve(&density.rho)?;
    Ok((snap.compliance, snap.volume_fraction))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckRow {
    pub index: usize,
    pub quantity: Quantity,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
    /// Whether `|analytic|` is above the noise floor `noise_floor * max |analytic|`.
    pub significant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Compliance,
    Volume,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quantity::Compliance => "compliance",
            Quantity::Volume => "volume",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
pub struct CheckOptions {
    pub step: f64,
    pub noise_floor: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-6,
            noise_floor: 1e-8,
        }
    }
}

/// Central-difference check of every design variable, re-solving the FEA at each perturbed
/// design.
pub fn check_gradients<T: Scalar>(
    model: &ShellModel<T>,
    atlas: &Atlas<T>,
    design: &DesignState<T>,
    ks: KsParams<T>,
    hp: HeavisideParams<T>,
    report: &SensitivityReport<T>,
    options: CheckOptions,
) -> Result<Vec<GradientCheckRow>, SensitivityError> {
    let x = design.to_vector();
    let mut numeric_c = Vec::with_capacity(x.len());
    let mut numeric_v = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = T::c(options.step);
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] += h;
        xm[i] -= h;
        let (cp, vp) = evaluate_values(model, atlas, &design.with_vector(&xp)?, ks, hp)?;
        let (cm, vm) = evaluate_values(model, atlas, &design.with_vector(&xm)?, ks, hp)?;
        let denom = (xp[i] - xm[i]).to_f64_lossy();
        numeric_c.push((cp - cm).to_f64_lossy() / denom);
        numeric_v.push((vp - vm).to_f64_lossy() / denom);
    }
    let rows = |q: Quantity, analytic: &[T], numeric: &[f64]| {
        let a: Vec<f64> = analytic.iter().map(|v| v.to_f64_lossy()).collect();
        let floor = options.noise_floor * a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter()
            .zip(numeric)
            .enumerate()
            .map(|(index, (&analytic, &numeric))| {
                let scale = analytic.abs().max(numeric.abs());
                GradientCheckRow {
                    index,
                    quantity: q,
                    analytic,
                    numeric,
                    rel_error: if scale > 0.0 {
                        (analytic - numeric).abs() / scale
                    } else {
                        0.0
                    },
                    significant: analytic.abs() > floor,
                }
            })
            .collect::<Vec<_>>()
    };
    let mut out = rows(Quantity::Compliance, &report.d_compliance, &numeric_c);
    out.extend(rows(Quantity::Volume, &report.d_volume, &numeric_v));
    Ok(out)
}

/// Largest relative error among significant rows of `quantity`.
pub fn max_significant_error(rows: &[GradientCheckRow], quantity: Quantity) -> f64 {
    rows.iter()
        .filter(|r| r.quantity == quantity && r.significant)
        .map(|r| r.rel_error)
        .fold(0.0, f64::max)
}

pub fn write_gradient_check_csv<W: Write>(
    mut out: W,
    rows: &[GradientCheckRow],
) -> std::io::Result<()> {
    writeln!(out, "quantity,index,analytic,numeric,rel_error")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e}",
            r.quantity, r.index, r.analytic, r.numeric, r.rel_error
        )?;
    }
    Ok(())
}
