//! End-to-end driver: config, surface preprocessing, charts, component seeding, optimization
//! and export.

mod charts;
mod config;
mod generators;
mod init;
mod preprocess;
mod run;
mod vtk;

use std::fmt;

use thiserror::Error;

pub use charts::{build_atlas, build_charts, write_chart_artifacts, ChartCache};
pub use config::{
    config_schema, ComponentLayout, ComponentRecord, Generator, LoadSpec, MeshSource, OutputConfig,
    PatchConfig, ProblemConfig, ResolvedProblem, SaddleParams, SupportSpec, TorusParams,
    TriangleSet,
};
pub use generators::{scenario, Scenario};
pub use init::{design_from_records, design_records, initialize_components};
pub use preprocess::{preprocess, PreparedPatch};
pub use run::{
    build_model, export_checkpoint, load_case, parameterize, prepare, run_pipeline, Checkpoint,
    OutputLock, Prepared, RunOptions, RunSummary,
};
pub use vtk::{export_vtk, read_vtk, VtkData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Preprocess,
    Parameterize,
    Initialize,
    Analysis,
    Optimize,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Preprocess => "preprocess",
            Stage::Parameterize => "parameterize",
            Stage::Initialize => "initialize",
            Stage::Analysis => "analysis",
            Stage::Optimize => "optimize",
            Stage::Export => "export",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: config, mesh topology, indices.
    Validation,
    /// A solve, chart or optimizer step failed.
    Numerical,
    Io,
    /// Another run holds the output directory.
    Locked,
}

#[derive(Debug, Clone, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind,
            message: message.into(),
        }
    }

    /// Process exit status: 2 for validation errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io | ErrorKind::Locked => 1,
        }
    }
}

pub(crate) fn io_error(stage: Stage, what: &std::path::Path, e: std::io::Error) -> PipelineError {
    PipelineError::new(stage, ErrorKind::Io, format!("{}: {e}", what.display()))
}
