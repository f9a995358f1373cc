use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::conformal::Aspect;
use crate::fea::{HeavisideParams, ModelOptions, Selector, ShellMaterial};
use crate::fixtures::TeeBranchParams;
use crate::mesh::{load_mesh, MeshError, MeshFormat, TriMesh};
use crate::mmc::KsParams;
use crate::optimizer::OptimizerOptions;
use crate::sensitivity::CheckOptions;

use super::generators;
use super::{ErrorKind, PipelineError, Stage};

/// Declarative description of one optimization problem.
///
/// Optional sections left out of the file are filled in by [`ProblemConfig::resolve`]; the
/// resolved config has every section present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub mesh: MeshSource,
    #[serde(default)]
    pub patches: Option<Vec<PatchConfig>>,
    #[serde(default)]
    pub material: ShellMaterial<f64>,
    #[serde(default)]
    pub heaviside: HeavisideParams<f64>,
    #[serde(default)]
    pub ks: KsParams<f64>,
    #[serde(default)]
    pub loads: Option<Vec<LoadSpec>>,
    #[serde(default)]
    pub supports: Option<Vec<SupportSpec>>,
    /// Admissible material volume as a fraction of the surface area.
    #[serde(default = "default_volume_bound")]
    pub volume_bound: f64,
    #[serde(default)]
    pub components: ComponentLayout,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    #[serde(default)]
    pub fea: ModelOptions,
    #[serde(default)]
    pub gradient_check: CheckOptions,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "surfmmc".into()
}

fn default_volume_bound() -> f64 {
    0.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    /// PLY or OBJ file; the format defaults to the file extension.
    File {
        path: PathBuf,
        #[serde(default)]
        format: Option<MeshFormat>,
    },
    Generator(Generator),
}

/// Built-in parametric surfaces with their default patches, loads and supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Saddle(SaddleParams),
    Torus(TorusParams),
    TeeBranch(TeeBranchParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default)]
pub struct SaddleParams {
    /// Cells per side; odd so that the saddle point is a vertex.
    pub n: usize,
    pub half: f64,
    pub curvature: f64,
}

impl Default for SaddleParams {
    fn default() -> Self {
        Self {
            n: 27,
            half: 10.0,
            curvature: 0.025,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default)]
pub struct TorusParams {
    pub major: f64,
    pub minor: f64,
    pub nu: usize,
    pub nv: usize,
}

impl Default for TorusParams {
    fn default() -> Self {
        Self {
            major: 10.0,
            minor: 4.0,
            nu: 64,
            nv: 32,
        }
    }
}

/// One parameterized region of the surface. Vertex indices refer to the input mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub id: String,
    #[serde(default)]
    pub triangles: TriangleSet,
    /// Vertex paths to cut along; a closed path repeats its first vertex at the end.
    #[serde(default)]
    pub cuts: Vec<Vec<usize>>,
    /// One vertex on each boundary loop to fill before parameterizing. The fill triangles take
    /// part in the chart construction only.
    #[serde(default)]
    pub fill_holes: Vec<usize>,
    /// Rectangle corners. A vertex on a cut stands for all of its copies. Chosen by arc length
    /// along the boundary when absent.
    #[serde(default)]
    pub corners: Option<Vec<usize>>,
    #[serde(default)]
    pub aspect: Aspect,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TriangleSet {
    #[default]
    Whole,
    List(Vec<usize>),
    /// Half-open index ranges.
    Ranges(Vec<[usize; 2]>),
}

impl TriangleSet {
    pub fn indices(&self, triangle_count: usize) -> Vec<usize> {
        match self {
            TriangleSet::Whole => (0..triangle_count).collect(),
            TriangleSet::List(l) => l.clone(),
            TriangleSet::Ranges(r) => r.iter().flat_map(|&[a, b]| a..b).collect(),
        }
    }
}

/// Total force and moment, split evenly over the selected vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    pub at: Selector,
    #[serde(default)]
    pub force: [f64; 3],
    #[serde(default)]
    pub moment: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SupportSpec {
    pub at: Selector,
    /// Fixed `(ux, uy, uz, rx, ry, rz)`.
    #[serde(default = "all_dofs")]
    pub dofs: [bool; 6],
}

fn all_dofs() -> [bool; 6] {
    [true; 6]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ComponentLayout {
    /// `nx x ny` cells per chart with a crossed pair of components in each cell.
    Grid {
        nx: usize,
        ny: usize,
        /// Per-chart `[nx, ny]` overrides.
        #[serde(default)]
        per_chart: BTreeMap<String, [usize; 2]>,
        /// Initial thickness as a fraction of the chart diagonal.
        #[serde(default = "default_grid_thickness")]
        thickness: f64,
    },
    Explicit(Vec<ComponentRecord>),
}

impl Default for ComponentLayout {
    fn default() -> Self {
        ComponentLayout::Grid {
            nx: 2,
            ny: 2,
            per_chart: BTreeMap::new(),
            thickness: default_grid_thickness(),
        }
    }
}

fn default_grid_thickness() -> f64 {
    0.03
}

/// One component in chart coordinates; `length` is the half-length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ComponentRecord {
    pub chart: String,
    pub x0: f64,
    pub y0: f64,
    pub theta: f64,
    pub length: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl ComponentRecord {
    pub fn params(&self) -> [f64; 7] {
        [
            self.x0,
            self.y0,
            self.theta,
            self.length,
            self.t1,
            self.t2,
            self.t3,
        ]
    }

    pub fn from_params(chart: &str, p: [f64; 7]) -> Self {
        Self {
            chart: chart.to_string(),
            x0: p[0],
            y0: p[1],
            theta: p[2],
            length: p[3],
            t1: p[4],
            t2: p[5],
            t3: p[6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// VTK snapshot stride in iterations; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Checkpoint stride in iterations; 0 keeps only the final checkpoint.
    pub checkpoint_every: usize,
    /// Writes measured wall time into the history; off keeps the history reproducible.
    pub record_wall_time: bool,
    /// Reuses charts cached in the output directory when the mesh and patches are unchanged.
    pub chart_cache: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_every: 10,
            checkpoint_every: 10,
            record_wall_time: false,
            chart_cache: true,
        }
    }
}

/// JSON Schema of the config file format.
pub fn config_schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(ProblemConfig)).expect("schema serializes")
}

/// Config with every optional section filled in, together with the loaded mesh.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub config: ProblemConfig,
    pub mesh: TriMesh,
}

impl ResolvedProblem {
    pub fn patches(&self) -> &[PatchConfig] {
        self.config.patches.as_deref().unwrap_or_default()
    }

    pub fn loads(&self) -> &[LoadSpec] {
        self.config.loads.as_deref().unwrap_or_default()
    }

    pub fn supports(&self) -> &[SupportSpec] {
        self.config.supports.as_deref().unwrap_or_default()
    }
}

fn invalid(message: impl Into<String>) -> PipelineError {
    PipelineError::new(Stage::Config, ErrorKind::Validation, message)
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("cannot parse config: {e}")))
    }

    /// Reads a config file. Relative mesh and output paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::new(
                Stage::Config,
                ErrorKind::Io,
                format!("cannot read {}: {e}", path.display()),
            )
        })?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let MeshSource::File { path, .. } = &mut config.mesh {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if config.output.dir.is_relative() {
            config.output.dir = base.join(&config.output.dir);
        }
        Ok(config)
    }

    /// Checks everything that does not need the mesh.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.volume_bound > 0.0 && self.volume_bound <= 1.0) {
            return Err(invalid(format!(
                "volume_bound must be in (0, 1], got {}",
                self.volume_bound
            )));
        }
        self.material
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.heaviside
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if !(self.ks.zeta > 0.0 && self.ks.zeta.is_finite()) {
            return Err(invalid(format!(
                "ks.zeta must be positive, got {}",
                self.ks.zeta
            )));
        }
        self.optimizer
            .stop
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if !(self.gradient_check.step > 0.0) {
            return Err(invalid("gradient_check.step must be positive"));
        }
        if !(self.fea.drilling_factor >= 0.0) {
            return Err(invalid("fea.drilling_factor must be non-negative"));
        }
        match &self.components {
            ComponentLayout::Grid {
                nx,
                ny,
                per_chart,
                thickness,
            } => {
                if *nx == 0 || *ny == 0 || per_chart.values().any(|c| c[0] == 0 || c[1] == 0) {
                    return Err(invalid("component grid counts must be positive"));
                }
                if !(*thickness > 0.0 && *thickness <= 0.25) {
                    return Err(invalid("component grid thickness must be in (0, 0.25]"));
                }
            }
            ComponentLayout::Explicit(list) => {
                if list.is_empty() {
                    return Err(invalid("explicit component list is empty"));
                }
            }
        }
        if let Some(patches) = &self.patches {
            if patches.is_empty() {
                return Err(invalid("patch list is empty"));
            }
            let mut ids = BTreeSet::new();
            for p in patches {
                if p.id.is_empty() || !ids.insert(p.id.as_str()) {
                    return Err(invalid(format!("patch id {:?} is empty or repeated", p.id)));
                }
            }
        }
        Ok(())
    }

    /// Loads the mesh, fills in defaults and checks every index against the mesh.
    pub fn resolve(&self) -> Result<ResolvedProblem, PipelineError> {
        self.validate()?;
        let mut config = self.clone();
        let (mesh, defaults) = match &self.mesh {
            MeshSource::File { path, format } => {
                let format = format
                    .or_else(|| MeshFormat::from_path(path))
                    .ok_or_else(|| {
                        invalid(format!("cannot infer mesh format of {}", path.display()))
                    })?;
                let mesh = load_mesh(path, format).map_err(|e| match e {
                    MeshError::Io { .. } => {
                        PipelineError::new(Stage::Config, ErrorKind::Io, e.to_string())
                    }
                    e => invalid(e.to_string()),
                })?;
                (mesh, None)
            }
            MeshSource::Generator(g) => {
                let s = generators::scenario(g);
                (s.mesh.clone(), Some(s))
            }
        };
        if config.patches.is_none() {
            config.patches = Some(match &defaults {
                Some(s) => s.patches.clone(),
                None => vec![PatchConfig {
                    id: "whole".into(),
                    triangles: TriangleSet::Whole,
                    cuts: Vec::new(),
                    fill_holes: Vec::new(),
                    corners: None,
                    aspect: Aspect::Auto,
                }],
            });
        }
        if config.loads.is_none() {
            config.loads = Some(
                defaults
                    .as_ref()
                    .map(|s| s.loads.clone())
                    .ok_or_else(|| invalid("no loads given"))?,
            );
        }
        if config.supports.is_none() {
            config.supports = Some(
                defaults
                    .as_ref()
                    .map(|s| s.supports.clone())
                    .ok_or_else(|| invalid("no supports given"))?,
            );
        }
        let resolved = ResolvedProblem { config, mesh };
        check_against_mesh(&resolved)?;
        Ok(resolved)
    }
}

fn check_against_mesh(r: &ResolvedProblem) -> Result<(), PipelineError> {
    let (nv, nt) = (r.mesh.vertex_count(), r.mesh.triangle_count());
    let mut covered = vec![false; nt];
    for p in r.patches() {
        let tris = p.triangles.indices(nt);
        if tris.is_empty() {
            return Err(invalid(format!("patch {}: no triangles", p.id)));
        }
        for t in tris {
            if t >= nt {
                return Err(invalid(format!(
                    "patch {}: triangle {t} out of range ({nt} triangles)",
                    p.id
                )));
            }
            covered[t] = true;
        }
        let vertices = p
            .cuts
            .iter()
            .flatten()
            .chain(&p.fill_holes)
            .chain(p.corners.iter().flatten());
        for &v in vertices {
            if v >= nv {
                return Err(invalid(format!(
                    "patch {}: vertex {v} out of range ({nv} vertices)",
                    p.id
                )));
            }
        }
    }
    if let Some(t) = covered.iter().position(|&c| !c) {
        return Err(invalid(format!("triangle {t} is not covered by any patch")));
    }
    let selectors = r
        .loads()
        .iter()
        .map(|l| &l.at)
        .chain(r.supports().iter().map(|s| &s.at));
    for sel in selectors {
        let v = sel.resolve(&r.mesh).map_err(|e| invalid(e.to_string()))?;
        if v.is_empty() {
            return Err(invalid(format!("selector {sel:?} matches no vertex")));
        }
    }
    if let ComponentLayout::Explicit(list) = &r.config.components {
        for c in list {
            if !r.patches().iter().any(|p| p.id == c.chart) {
                return Err(invalid(format!(
                    "component refers to unknown chart {:?}",
                    c.chart
                )));
            }
        }
    }
    Ok(())
}
