//! Moving morphable components drawn in rectangle charts and blended into one topology
//! description function on the surface.

mod atlas;
mod component;
mod design;
mod ks;

use thiserror::Error;

pub use atlas::{
    blend_diagnostics, chart_sample_values, global_tdf, global_tdf_values, Atlas, AtlasChart,
    BlendDiagnostics, ChartSample, GlobalTdf, TdfJacobian,
};
pub use component::{
    tdf_component, tdf_component_grad, tdf_component_value_grad, Component, PARAMS_PER_COMPONENT,
    THICKNESS_FLOOR,
};
pub use design::{chart_bounds, DesignState};
pub use ks::{ks_aggregate, ks_value, KsParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MmcError {
    #[error("cannot aggregate an empty list")]
    EmptyAggregate,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("lower bound exceeds upper bound for variable {variable}")]
    InvalidBounds { variable: usize },
    #[error("component {component} refers to unknown chart {chart}")]
    UnknownChart { component: usize, chart: usize },
    #[error("vertex {vertex} is not covered by any chart")]
    UncoveredVertex { vertex: usize },
    #[error("chart {chart} samples vertex {vertex}, which is out of range")]
    SampleOutOfRange { chart: usize, vertex: usize },
    #[error("no component lives in any chart covering vertex {vertex}")]
    NoComponents { vertex: usize },
}
