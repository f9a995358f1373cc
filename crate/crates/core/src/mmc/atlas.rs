use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Scalar;

use super::{
    ks_aggregate, ks_value, tdf_component, tdf_component_value_grad, DesignState, KsParams,
    MmcError, PARAMS_PER_COMPONENT,
};

/// One chart position of a surface vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ChartSample<T: Scalar> {
    /// Vertex of the surface mesh.
    pub vertex: usize,
    pub uv: [T; 2],
}

/// A rectangle chart given by the positions of the surface vertices it covers. A vertex may be
/// sampled more than once when the chart was cut open through it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AtlasChart<T: Scalar> {
    pub id: String,
    pub width: T,
    pub height: T,
    pub samples: Vec<ChartSample<T>>,
}

impl<T: Scalar> AtlasChart<T> {
    pub fn diagonal(&self) -> T {
        self.width.hypot(self.height)
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "")]
struct AtlasData<T: Scalar> {
    vertex_count: usize,
    charts: Vec<AtlasChart<T>>,
}

/// Set of charts covering every vertex of a surface mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", try_from = "AtlasData<T>", into = "AtlasData<T>")]
pub struct Atlas<T: Scalar> {
    vertex_count: usize,
    charts: Vec<AtlasChart<T>>,
    offsets: Vec<usize>,
    /// `(chart, sample)` pairs grouped by vertex.
    occurrences: Vec<(usize, usize)>,
}

impl<T: Scalar> TryFrom<AtlasData<T>> for Atlas<T> {
    type Error = MmcError;
    fn try_from(d: AtlasData<T>) -> Result<Self, MmcError> {
        Atlas::new(d.vertex_count, d.charts)
    }
}

impl<T: Scalar> From<Atlas<T>> for AtlasData<T> {
    fn from(a: Atlas<T>) -> Self {
        AtlasData {
            vertex_count: a.vertex_count,
            charts: a.charts,
        }
    }
}

impl<T: Scalar> Atlas<T> {
    pub fn new(vertex_count: usize, charts: Vec<AtlasChart<T>>) -> Result<Self, MmcError> {
        let mut counts = vec![0usize; vertex_count];
        for (c, chart) in charts.iter().enumerate() {
            for s in &chart.samples {
                if s.vertex >= vertex_count {
                    return Err(MmcError::SampleOutOfRange {
                        chart: c,
                        vertex: s.vertex,
                    });
                }
                counts[s.vertex] += 1;
            }
        }
        if let Some(v) = counts.iter().position(|&n| n == 0) {
            return Err(MmcError::UncoveredVertex { vertex: v });
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        offsets.push(0);
        for &n in &counts {
            offsets.push(offsets.last().unwrap() + n);
        }
        let mut fill = offsets[..vertex_count].to_vec();
        let mut occurrences = vec![(0, 0); offsets[vertex_count]];
        for (c, chart) in charts.iter().enumerate() {
            for (k, s) in chart.samples.iter().enumerate() {
                occurrences[fill[s.vertex]] = (c, k);
                fill[s.vertex] += 1;
            }
        }
        Ok(Self {
            vertex_count,
            charts,
            offsets,
            occurrences,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn charts(&self) -> &[AtlasChart<T>] {
        &self.charts
    }

    /// `(chart, sample)` pairs of a vertex.
    pub fn occurrences(&self, vertex: usize) -> &[(usize, usize)] {
        &self.occurrences[self.offsets[vertex]..self.offsets[vertex + 1]]
    }

    /// `(width, height)` of every chart.
    pub fn chart_sizes(&self) -> Vec<(T, T)> {
        self.charts.iter().map(|c| (c.width, c.height)).collect()
    }

    fn components_by_chart(&self, design: &DesignState<T>) -> Result<Vec<Vec<usize>>, MmcError> {
        let mut by = vec![Vec::new(); self.charts.len()];
        for (k, c) in design.components.iter().enumerate() {
            by.get_mut(c.chart)
                .ok_or(MmcError::UnknownChart {
                    component: k,
                    chart: c.chart,
                })?
                .push(k);
        }
        Ok(by)
    }
}

/// Sparse `d phi_S / d D`: per vertex, the contributing components and their 7-gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct TdfJacobian<T> {
    component_count: usize,
    offsets: Vec<usize>,
    entries: Vec<(usize, [T; PARAMS_PER_COMPONENT])>,
}

impl<T: Scalar> TdfJacobian<T> {
    pub fn row(&self, vertex: usize) -> &[(usize, [T; PARAMS_PER_COMPONENT])] {
        &self.entries[self.offsets[vertex]..self.offsets[vertex + 1]]
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz_blocks(&self) -> usize {
        self.entries.len()
    }

    /// `J^T w` for a per-vertex vector `w`; summed in vertex order.
    pub fn transpose_mul(&self, w: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); PARAMS_PER_COMPONENT * self.component_count];
        for (v, &wv) in w.iter().enumerate().take(self.rows()) {
            if wv == T::zero() {
                continue;
            }
            for (k, g) in self.row(v) {
                for i in 0..PARAMS_PER_COMPONENT {
                    out[PARAMS_PER_COMPONENT * k + i] += wv * g[i];
                }
            }
        }
        out
    }

    /// `J d` for a design-space direction `d`.
    pub fn mul(&self, d: &[T]) -> Vec<T> {
        (0..self.rows())
            .map(|v| {
                self.row(v)
                    .iter()
                    .map(|(k, g)| {
                        (0..PARAMS_PER_COMPONENT)
                            .map(|i| g[i] * d[PARAMS_PER_COMPONENT * k + i])
                            .sum::<T>()
                    })
                    .sum()
            })
            .collect()
    }
}

/// Global TDF on the surface vertices with its Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTdf<T> {
    pub phi: Vec<T>,
    pub jacobian: TdfJacobian<T>,
}

fn vertex_values<T: Scalar>(
    atlas: &Atlas<T>,
    design: &DesignState<T>,
    by_chart: &[Vec<usize>],
    v: usize,
) -> (Vec<T>, Vec<(usize, [T; 2])>) {
    let mut vals = Vec::new();
    let mut pairs = Vec::new();
    for &(c, s) in atlas.occurrences(v) {
        let uv = atlas.charts[c].samples[s].uv;
        for &k in &by_chart[c] {
            vals.push(tdf_component(&design.components[k], uv));
            pairs.push((k, uv));
        }
    }
    (vals, pairs)
}

/// Smooth union over every component of every chart sample of the vertex.
///
/// One KS over all (sample, component) pairs equals the KS of per-sample KS values, so seam
/// duplicates and overlapping charts are blended by the same formula and the field is
/// single-valued on the surface. A vertex whose charts hold no component is an error.
pub fn global_tdf<T: Scalar>(
    atlas: &Atlas<T>,
    design: &DesignState<T>,
    ks: KsParams<T>,
) -> Result<GlobalTdf<T>, MmcError> {
    let by_chart = atlas.components_by_chart(design)?;
    let rows: Vec<Result<(T, Vec<(usize, [T; 7])>), MmcError>> = (0..atlas.vertex_count)
        .into_par_iter()
        .map(|v| {
            let (vals, pairs) = vertex_values(atlas, design, &by_chart, v);
            let (phi, w) =
                ks_aggregate(&vals, ks).map_err(|_| MmcError::NoComponents { vertex: v })?;
            let mut row: Vec<(usize, [T; 7])> = Vec::new();
            for ((k, uv), wi) in pairs.into_iter().zip(w) {
                if wi == T::zero() {
                    continue;
                }
                let (_, g) = tdf_component_value_grad(&design.components[k], uv);
                row.push((k, g.map(|x| wi * x)));
            }
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, [T; 7])> = Vec::with_capacity(row.len());
            for (k, g) in row {
                match merged.last_mut() {
                    Some((kk, gg)) if *kk == k => {
                        for i in 0..PARAMS_PER_COMPONENT {
                            gg[i] += g[i];
                        }
                    }
                    _ => merged.push((k, g)),
                }
            }
            Ok((phi, merged))
        })
        .collect();
    let mut phi = Vec::with_capacity(atlas.vertex_count);
    let mut offsets = vec![0];
    let mut entries = Vec::new();
    for r in rows {
        let (p, row) = r?;
        phi.push(p);
        entries.extend(row);
        offsets.push(entries.len());
    }
    Ok(GlobalTdf {
        phi,
        jacobian: TdfJacobian {
            component_count: design.component_count(),
            offsets,
            entries,
        },
    })
}

/// Global TDF values only.
pub fn global_tdf_values<T: Scalar>(
    atlas: &Atlas<T>,
    design: &DesignState<T>,
    ks: KsParams<T>,
) -> Result<Vec<T>, MmcError> {
    let by_chart = atlas.components_by_chart(design)?;
    (0..atlas.vertex_count)
        .into_par_iter()
        .map(|v| {
            let (vals, _) = vertex_values(atlas, design, &by_chart, v);
            ks_value(&vals, ks).map_err(|_| MmcError::NoComponents { vertex: v })
        })
        .collect()
}

/// KS over the chart's components at every sample of every chart (one-sided values).
pub fn chart_sample_values<T: Scalar>(
    atlas: &Atlas<T>,
    design: &DesignState<T>,
    ks: KsParams<T>,
) -> Result<Vec<Vec<T>>, MmcError> {
    let by_chart = atlas.components_by_chart(design)?;
    atlas
        .charts
        .iter()
        .enumerate()
        .map(|(c, chart)| {
            chart
                .samples
                .iter()
                .map(|s| {
                    let vals: Vec<T> = by_chart[c]
                        .iter()
                        .map(|&k| tdf_component(&design.components[k], s.uv))
                        .collect();
                    ks_value(&vals, ks).or(Ok(T::neg_infinity()))
                })
                .collect()
        })
        .collect()
}

/// How much the one-sided values disagree where they are blended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BlendDiagnostics<T: Scalar> {
    /// Vertices sampled more than once within one chart.
    pub seam_vertices: usize,
    pub max_seam_difference: T,
    /// Vertices sampled by more than one chart.
    pub overlap_vertices: usize,
    pub max_overlap_mismatch: T,
}

pub fn blend_diagnostics<T: Scalar>(
    atlas: &Atlas<T>,
    design: &DesignState<T>,
    ks: KsParams<T>,
) -> Result<BlendDiagnostics<T>, MmcError> {
    let side = chart_sample_values(atlas, design, ks)?;
    let mut d = BlendDiagnostics {
        seam_vertices: 0,
        max_seam_difference: T::zero(),
        overlap_vertices: 0,
        max_overlap_mismatch: T::zero(),
    };
    for v in 0..atlas.vertex_count {
        let occ = atlas.occurrences(v);
        let mut seam = false;
        let mut overlap = false;
        for (i, &(ca, sa)) in occ.iter().enumerate() {
            for &(cb, sb) in &occ[i + 1..] {
                let diff = (side[ca][sa] - side[cb][sb]).abs();
                if ca == cb {
                    seam = true;
                    d.max_seam_difference = d.max_seam_difference.max(diff);
                } else {
                    overlap = true;
                    d.max_overlap_mismatch = d.max_overlap_mismatch.max(diff);
                }
            }
        }
        d.seam_vertices += seam as usize;
        d.overlap_vertices += overlap as usize;
    }
    Ok(d)
}
