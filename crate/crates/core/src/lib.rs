//! Topology optimization of thin shells on triangulated free-form surfaces with moving
//! morphable components drawn in conformal parameter charts.

pub mod conformal;
pub mod fea;
pub mod fixtures;
pub mod linalg;
pub mod mesh;
pub mod mmc;
pub mod optimizer;
pub mod pipeline;
mod scalar;
pub mod sensitivity;

pub use scalar::Scalar;

pub type Real = f64;
pub type Atlas = mmc::Atlas<Real>;
pub type Component = mmc::Component<Real>;
pub type DesignState = mmc::DesignState<Real>;
pub type ShellModel = fea::ShellModel<Real>;
pub type ShellMaterial = fea::ShellMaterial<Real>;
pub type LoadCase = fea::LoadCase<Real>;
pub type Evaluation = sensitivity::Evaluation<Real>;
