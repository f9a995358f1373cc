use std::cell::RefCell;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::conformal::ConformalChart;
use crate::fea::{FeaError, LoadCase, PointLoad, ShellModel, Support};
use crate::mmc::{Atlas, DesignState};
use crate::optimizer::{
    self, read_history, BoxError, Constraint, DesignBox, Evaluated, HistoryRecord, HistoryWriter,
    OptimizerError, RunState,
};
use crate::sensitivity::{
    self, check_gradients, max_significant_error, write_gradient_check_csv, Evaluation, Quantity,
    SensitivityError,
};

use super::charts::{build_atlas, build_charts, strip_fill, write_chart_artifacts, ChartCache};
use super::config::{ComponentRecord, ProblemConfig, ResolvedProblem};
use super::init::{design_from_records, design_records, initialize_components};
use super::preprocess::{preprocess, PreparedPatch};
use super::vtk::export_vtk;
use super::{io_error, ErrorKind, PipelineError, Stage};

/// Everything computed before optimization starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Resolved problem; automatically chosen corners are filled in.
    pub problem: ResolvedProblem,
    pub patches: Vec<PreparedPatch>,
    pub charts: Vec<ConformalChart>,
    pub atlas: Atlas<f64>,
    pub charts_from_cache: bool,
}

/// Resolves the config, preprocesses the patches and builds (or reloads) their charts.
pub fn prepare(
    config: &ProblemConfig,
    cache_dir: Option<&Path>,
) -> Result<Prepared, PipelineError> {
    let mut problem = config.resolve()?;
    let mut patches = preprocess(&problem)?;
    if let Some(list) = problem.config.patches.as_mut() {
        for (cfg, p) in list.iter_mut().zip(&patches) {
            cfg.corners = Some(p.corner_globals.clone());
        }
    }
    let key = ChartCache::key_for(&problem);
    let cached = cache_dir
        .and_then(|d| ChartCache::load(d, &key))
        .filter(|charts| {
            charts.len() == patches.len()
                && charts
                    .iter()
                    .zip(&patches)
                    .all(|(c, p)| c.patch_id == p.id && c.uv.len() == p.mesh.vertex_count())
        });
    let charts_from_cache = cached.is_some();
    let charts = match cached {
        Some(mut charts) => {
            for (p, c) in patches.iter_mut().zip(charts.iter_mut()) {
                strip_fill(p, c)?;
            }
            log::info!("reusing {} cached charts", charts.len());
            charts
        }
        None => {
            let charts = build_charts(&mut patches)?;
            if let Some(dir) = cache_dir {
                ChartCache::store(dir, &key, &charts)?;
            }
            charts
        }
    };
    let atlas = build_atlas(problem.mesh.vertex_count(), &patches, &charts)?;
    Ok(Prepared {
        problem,
        patches,
        charts,
        atlas,
        charts_from_cache,
    })
}

/// Point loads and supports with selectors resolved; totals are split evenly.
pub fn load_case(problem: &ResolvedProblem) -> Result<LoadCase<f64>, PipelineError> {
    let invalid =
        |e: FeaError| PipelineError::new(Stage::Analysis, ErrorKind::Validation, e.to_string());
    let mut case = LoadCase::default();
    for (k, l) in problem.loads().iter().enumerate() {
        let vertices = l.at.resolve(&problem.mesh).map_err(invalid)?;
        let share = 1.0 / vertices.len() as f64;
        log::info!(
            "load {k}: vertices {vertices:?}, force {:?} and moment {:?} per vertex",
            l.force.map(|f| f * share),
            l.moment.map(|m| m * share)
        );
        for v in vertices {
            case.loads.push(PointLoad {
                vertex: v,
                force: l.force.map(|f| f * share),
                moment: l.moment.map(|m| m * share),
            });
        }
    }
    for (k, s) in problem.supports().iter().enumerate() {
        let vertices = s.at.resolve(&problem.mesh).map_err(invalid)?;
        let dofs: Vec<usize> = vertices
            .iter()
            .flat_map(|&v| (0..6).filter(|&d| s.dofs[d]).map(move |d| 6 * v + d))
            .collect();
        log::info!("support {k}: fixed DOFs {dofs:?}");
        case.supports.push(Support {
            vertices,
            dofs: s.dofs,
        });
    }
    Ok(case)
}

pub fn build_model(prepared: &Prepared) -> Result<ShellModel<f64>, PipelineError> {
    let problem = &prepared.problem;
    let loads = load_case(problem)?;
    ShellModel::new(
        &problem.mesh,
        &problem.config.material,
        &loads,
        problem.config.fea,
    )
    .map_err(|e| {
        let kind = match e {
            FeaError::Solve(_) => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        };
        PipelineError::new(Stage::Analysis, kind, e.to_string())
    })
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub const FILE_NAME: &'static str = ".surfmmc.lock";

    pub fn acquire(dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(dir).map_err(|e| io_error(Stage::Config, dir, e))?;
        let path = dir.join(Self::FILE_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::new(
                Stage::Config,
                ErrorKind::Locked,
                format!(
                    "{} is in use by another run (delete {} if that run has ended)",
                    dir.display(),
                    path.display()
                ),
            )),
            Err(e) => Err(io_error(Stage::Config, &path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Restart point written during optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: ProblemConfig,
    /// Design to evaluate next, in chart coordinates.
    pub components: Vec<ComponentRecord>,
    pub state: RunState<f64>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| io_error(Stage::Config, path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            PipelineError::new(
                Stage::Config,
                ErrorKind::Validation,
                format!("{}: not a checkpoint: {e}", path.display()),
            )
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let text = serde_json::to_string(self).expect("checkpoint serializes");
        fs::write(path, text).map_err(|e| io_error(Stage::Optimize, path, e))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Compares analytic gradients with central differences before optimizing.
    pub check_gradients: bool,
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub iterations: usize,
    pub converged: bool,
    pub components: usize,
    pub initial_compliance: f64,
    pub final_compliance: f64,
    pub final_volume_fraction: f64,
    pub output_dir: PathBuf,
}

fn numerical(stage: Stage, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::new(stage, ErrorKind::Numerical, e.to_string())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n").map_err(|e| io_error(Stage::Config, path, e))
}

fn evaluate(
    model: &ShellModel<f64>,
    prepared: &Prepared,
    design: &DesignState<f64>,
) -> Result<Evaluation<f64>, SensitivityError> {
    let cfg = &prepared.problem.config;
    sensitivity::evaluate(model, &prepared.atlas, design, cfg.ks, cfg.heaviside)
}

fn write_snapshot(
    path: &Path,
    prepared: &Prepared,
    model: &ShellModel<f64>,
    ev: &Evaluation<f64>,
) -> Result<(), PipelineError> {
    export_vtk(
        path,
        &prepared.problem.mesh,
        &ev.snapshot,
        &ev.phi,
        &model.strain_energy_density(&ev.snapshot),
    )
}

/// Charts only: resolves the config, builds the charts and writes the chart artifacts and the
/// resolved config.
pub fn parameterize(config: &ProblemConfig) -> Result<Prepared, PipelineError> {
    config.validate()?;
    let out = config.output.dir.clone();
    let _lock = OutputLock::acquire(&out)?;
    let prepared = prepare(config, config.output.chart_cache.then_some(out.as_path()))?;
    write_chart_artifacts(&out.join("charts"), &prepared.patches, &prepared.charts)?;
    write_json(&out.join("config.resolved.json"), &prepared.problem.config)?;
    Ok(prepared)
}

/// Full run. Artifacts in the output directory:
/// `config.resolved.json`, `charts/`, `history.csv`, `vtk/iter_NNNN.vtk`,
/// `checkpoints/iter_NNNN.json`, `final.vtk`, `checkpoint_final.json` and `summary.json`.
pub fn run_pipeline(
    config: &ProblemConfig,
    options: &RunOptions,
) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let out = config.output.dir.clone();
    let _lock = OutputLock::acquire(&out)?;
    let prepared = prepare(config, config.output.chart_cache.then_some(out.as_path()))?;
    write_chart_artifacts(&out.join("charts"), &prepared.patches, &prepared.charts)?;
    let cfg = &prepared.problem.config;
    write_json(&out.join("config.resolved.json"), cfg)?;
    let model = build_model(&prepared)?;
    let atlas = &prepared.atlas;

    let (template, state) = match &options.resume {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            let design = design_from_records(&ck.components, atlas)?;
            if ck.state.x.len() != design.len() {
                return Err(PipelineError::new(
                    Stage::Initialize,
                    ErrorKind::Validation,
                    "checkpoint state does not match its components",
                ));
            }
            log::info!(
                "resuming after iteration {} from {}",
                ck.state.completed_iterations,
                path.display()
            );
            (design, ck.state)
        }
        None => {
            let design = initialize_components(&cfg.components, atlas)?;
            let state = RunState::start(design.to_vector());
            (design, state)
        }
    };
    log::info!(
        "{} components ({} design variables), {} triangles, {} free DOFs",
        template.component_count(),
        template.len(),
        model.element_count(),
        model.free_dofs().len()
    );

    if options.check_gradients {
        let design = template
            .with_vector(&state.x)
            .map_err(|e| numerical(Stage::Optimize, e))?;
        let ev = evaluate(&model, &prepared, &design).map_err(|e| numerical(Stage::Optimize, e))?;
        let rows = check_gradients(
            &model,
            atlas,
            &design,
            cfg.ks,
            cfg.heaviside,
            &ev.report,
            cfg.gradient_check,
        )
        .map_err(|e| numerical(Stage::Optimize, e))?;
        let path = out.join("gradient_check.csv");
        let file = File::create(&path).map_err(|e| io_error(Stage::Optimize, &path, e))?;
        write_gradient_check_csv(BufWriter::new(file), &rows)
            .map_err(|e| io_error(Stage::Optimize, &path, e))?;
        log::info!(
            "gradient check: max relative error {:.3e} (compliance), {:.3e} (volume)",
            max_significant_error(&rows, Quantity::Compliance),
            max_significant_error(&rows, Quantity::Volume)
        );
    }

    let history_path = out.join("history.csv");
    let kept: Vec<HistoryRecord> = if options.resume.is_some() {
        fs::read_to_string(&history_path)
            .map(|t| read_history(&t))
            .unwrap_or_default()
            .into_iter()
            .filter(|r| r.iter <= state.completed_iterations)
            .collect()
    } else {
        Vec::new()
    };
    let file =
        File::create(&history_path).map_err(|e| io_error(Stage::Optimize, &history_path, e))?;
    let mut history = HistoryWriter::new(BufWriter::new(file), true)
        .map_err(|e| io_error(Stage::Optimize, &history_path, e))?;
    for r in &kept {
        history
            .append(r)
            .map_err(|e| io_error(Stage::Optimize, &history_path, e))?;
    }

    let vtk_dir = out.join("vtk");
    let ck_dir = out.join("checkpoints");
    for d in [&vtk_dir, &ck_dir] {
        fs::create_dir_all(d).map_err(|e| io_error(Stage::Optimize, d, e))?;
    }
    let bounds = DesignBox {
        lower: template.lower.clone(),
        upper: template.upper.clone(),
        scale: template
            .lower
            .iter()
            .zip(&template.upper)
            .map(|(lo, hi)| hi - lo)
            .collect(),
    };
    let last: RefCell<Option<Evaluation<f64>>> = RefCell::new(None);
    let vbar = cfg.volume_bound;
    let mut problem = |x: &[f64]| -> Result<Evaluated<f64>, BoxError> {
        let design = template.with_vector(x)?;
        let ev = evaluate(&model, &prepared, &design)?;
        let evaluated = Evaluated {
            objective: ev.snapshot.compliance,
            gradient: ev.report.d_compliance.clone(),
            constraints: vec![Constraint {
                value: ev.snapshot.volume_fraction / vbar - 1.0,
                gradient: ev.report.d_volume.iter().map(|g| g / vbar).collect(),
            }],
        };
        *last.borrow_mut() = Some(ev);
        Ok(evaluated)
    };
    let started = Instant::now();
    let out_cfg = &cfg.output;
    let observer = |rep: &optimizer::IterationReport<'_, f64>,
                    st: &RunState<f64>|
     -> Result<(), BoxError> {
        let guard = last.borrow();
        let ev = guard.as_ref().expect("evaluated before the observer runs");
        let record = HistoryRecord {
            iter: rep.iteration,
            compliance: rep.evaluated.objective,
            volume_fraction: ev.snapshot.volume_fraction,
            max_rel_change: rep.max_rel_change,
            wall_time_s: if out_cfg.record_wall_time {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        history.append(&record)?;
        log::info!(
            "iter {}: C = {:.6e}, V = {:.4}, change = {:.3e}, KKT = {:.2e}",
            rep.iteration,
            record.compliance,
            record.volume_fraction,
            rep.max_rel_change,
            rep.kkt_residual
        );
        if out_cfg.snapshot_every > 0 && rep.iteration.is_multiple_of(out_cfg.snapshot_every) {
            let path = vtk_dir.join(format!("iter_{:04}.vtk", rep.iteration));
            write_snapshot(&path, &prepared, &model, ev)?;
        }
        if out_cfg.checkpoint_every > 0 && rep.iteration.is_multiple_of(out_cfg.checkpoint_every) {
            let ck = Checkpoint {
                config: cfg.clone(),
                components: design_records(&template.with_vector(&st.x)?, atlas),
                state: st.clone(),
            };
            ck.save(&ck_dir.join(format!("iter_{:04}.json", rep.iteration)))?;
        }
        Ok(())
    };
    let final_state = optimizer::run(&mut problem, &bounds, state, &cfg.optimizer, observer)
        .map_err(|e| match e {
            OptimizerError::Observer { iteration, source } => PipelineError::new(
                Stage::Optimize,
                ErrorKind::Io,
                format!("iteration {iteration}: {source}"),
            ),
            OptimizerError::InvalidStopRule(m) => {
                PipelineError::new(Stage::Optimize, ErrorKind::Validation, m)
            }
            e => numerical(Stage::Optimize, e),
        })?;

    let design = template
        .with_vector(&final_state.x)
        .map_err(|e| numerical(Stage::Export, e))?;
    let ev = evaluate(&model, &prepared, &design).map_err(|e| numerical(Stage::Export, e))?;
    write_snapshot(&out.join("final.vtk"), &prepared, &model, &ev)?;
    Checkpoint {
        config: cfg.clone(),
        components: design_records(&design, atlas),
        state: final_state.clone(),
    }
    .save(&out.join("checkpoint_final.json"))?;
    let summary = RunSummary {
        name: cfg.name.clone(),
        iterations: final_state.completed_iterations,
        converged: final_state.converged,
        components: design.component_count(),
        initial_compliance: final_state.objective_scale.unwrap_or(f64::NAN),
        final_compliance: ev.snapshot.compliance,
        final_volume_fraction: ev.snapshot.volume_fraction,
        output_dir: out.clone(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    log::info!(
        "{}: {} after {} iterations, C = {:.6e} (initial {:.6e}), V = {:.4}",
        summary.name,
        if summary.converged {
            "converged"
        } else {
            "stopped"
        },
        summary.iterations,
        summary.final_compliance,
        summary.initial_compliance,
        summary.final_volume_fraction
    );
    Ok(summary)
}

/// Re-evaluates the design stored in a checkpoint and writes it as VTK. Returns the file
/// written; defaults to the checkpoint path with a `.vtk` extension.
pub fn export_checkpoint(
    checkpoint: &Path,
    output: Option<&Path>,
) -> Result<PathBuf, PipelineError> {
    let ck = Checkpoint::load(checkpoint)?;
    let cache = ck.config.output.dir.clone();
    let use_cache = ck.config.output.chart_cache && cache.is_dir();
    let prepared = prepare(&ck.config, use_cache.then_some(cache.as_path()))?;
    let model = build_model(&prepared)?;
    let design = design_from_records(&ck.components, &prepared.atlas)?;
    let ev = evaluate(&model, &prepared, &design).map_err(|e| numerical(Stage::Export, e))?;
    let path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| checkpoint.with_extension("vtk"));
    write_snapshot(&path, &prepared, &model, &ev)?;
    Ok(path)
}
