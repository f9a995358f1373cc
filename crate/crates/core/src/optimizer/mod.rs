//! Method of Moving Asymptotes and the optimization loop around it.

mod mma;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub use mma::{mma_step, Constraint, MmaParams, MmaState, MmaStep};

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("dimension mismatch between design, bounds, gradients and state")]
    DimensionMismatch,
    #[error("variable {variable} is outside its bounds")]
    OutOfBounds { variable: usize },
    #[error("non-finite objective, constraint or gradient")]
    NonFinite,
    #[error("MMA subproblem Newton system is singular")]
    SubproblemSingular,
    #[error("invalid stop rule: {0}")]
    InvalidStopRule(String),
    #[error("evaluation failed at iteration {iteration}: {source}")]
    Evaluation { iteration: usize, source: BoxError },
    #[error("observer failed at iteration {iteration}: {source}")]
    Observer { iteration: usize, source: BoxError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
pub struct StopRule {
    /// Threshold on the largest design change per iteration, relative to each variable's range.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            tol: 0.001,
            max_iters: 500,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if !(self.tol > 0.0) {
            return Err(OptimizerError::InvalidStopRule(format!(
                "tol = {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Objective, gradient and constraints (`g_i <= 0`) at one design.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated<T> {
    pub objective: T,
    pub gradient: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

pub trait Problem<T: Scalar> {
    fn evaluate(&mut self, x: &[T]) -> Result<Evaluated<T>, BoxError>;
}

impl<T: Scalar, F> Problem<T> for F
where
    F: FnMut(&[T]) -> Result<Evaluated<T>, BoxError>,
{
    fn evaluate(&mut self, x: &[T]) -> Result<Evaluated<T>, BoxError> {
        self(x)
    }
}

/// Everything needed to continue a run: the next design to evaluate, the MMA state (in scaled
/// variables) and the objective normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunState<T: Scalar> {
    pub completed_iterations: usize,
    pub x: Vec<T>,
    pub mma: MmaState<T>,
    pub objective_scale: Option<T>,
    pub converged: bool,
}

impl<T: Scalar> RunState<T> {
    pub fn start(x0: Vec<T>) -> Self {
        let n = x0.len();
        Self {
            completed_iterations: 0,
            mma: MmaState::new(&vec![T::zero(); n]),
            x: x0,
            objective_scale: None,
            converged: false,
        }
    }
}

/// Passed to the observer after every MMA step.
#[derive(Debug, Clone)]
pub struct IterationReport<'a, T> {
    pub iteration: usize,
    /// Design that was evaluated in this iteration.
    pub x: &'a [T],
    pub evaluated: &'a Evaluated<T>,
    pub max_rel_change: T,
    pub kkt_residual: T,
    /// The subproblem had to relax a constraint.
    pub infeasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
#[derive(Default)]
pub struct OptimizerOptions {
    pub mma: MmaParams,
    pub stop: StopRule,
}

/// Bounds and per-variable scale factors of the design vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    /// MMA sees `x / scale`.
    pub scale: Vec<T>,
}

/// Runs MMA from `state` until the stop rule fires. The observer sees every iteration together
/// with the state to resume from.
pub fn run<T: Scalar, P: Problem<T>>(
    problem: &mut P,
    bounds: &DesignBox<T>,
    mut state: RunState<T>,
    options: &OptimizerOptions,
    mut observer: impl FnMut(&IterationReport<'_, T>, &RunState<T>) -> Result<(), BoxError>,
) -> Result<RunState<T>, OptimizerError> {
    options.stop.validate()?;
    let n = state.x.len();
    if bounds.lower.len() != n || bounds.upper.len() != n || bounds.scale.len() != n {
        return Err(OptimizerError::DimensionMismatch);
    }
    let smin: Vec<T> = (0..n).map(|j| bounds.lower[j] / bounds.scale[j]).collect();
    let smax: Vec<T> = (0..n).map(|j| bounds.upper[j] / bounds.scale[j]).collect();
    while !state.converged && state.completed_iterations < options.stop.max_iters {
        let iteration = state.completed_iterations + 1;
        let ev = problem
            .evaluate(&state.x)
            .map_err(|source| OptimizerError::Evaluation { iteration, source })?;
        let f_scale = *state.objective_scale.get_or_insert_with(|| {
            let f = ev.objective.abs();
            if f > T::zero() {
                f
            } else {
                T::one()
            }
        });
        let s: Vec<T> = (0..n).map(|j| state.x[j] / bounds.scale[j]).collect();
        let df0: Vec<T> = (0..n)
            .map(|j| ev.gradient[j] * bounds.scale[j] / f_scale)
            .collect();
        let cons: Vec<Constraint<T>> = ev
            .constraints
            .iter()
            .map(|c| Constraint {
                value: c.value,
                gradient: (0..n).map(|j| c.gradient[j] * bounds.scale[j]).collect(),
            })
            .collect();
        if ev.gradient.len() != n || cons.iter().any(|c| c.gradient.len() != n) {
            return Err(OptimizerError::DimensionMismatch);
        }
        let step = mma_step(&s, &smin, &smax, &df0, &cons, &mut state.mma, &options.mma)?;
        let max_rel_change = (0..n)
            .map(|j| (step.x[j] - s[j]).abs() / (smax[j] - smin[j]))
            .fold(T::zero(), T::max);
        let infeasible = step.y.iter().any(|&y| y > T::c(1e-6));
        if infeasible {
            log::warn!("iteration {iteration}: MMA subproblem infeasible, constraint relaxed");
        }
        let x_eval = std::mem::replace(
            &mut state.x,
            (0..n).map(|j| step.x[j] * bounds.scale[j]).collect(),
        );
        // the scaled round trip may leave the box by one ulp
        for j in 0..n {
            state.x[j] = state.x[j].max(bounds.lower[j]).min(bounds.upper[j]);
        }
        state.completed_iterations = iteration;
        state.converged = max_rel_change < T::c(options.stop.tol);
        let report = IterationReport {
            iteration,
            x: &x_eval,
            evaluated: &ev,
            max_rel_change,
            kkt_residual: step.kkt_residual,
            infeasible,
        };
        observer(&report, &state)
            .map_err(|source| OptimizerError::Observer { iteration, source })?;
    }
    Ok(state)
}

/// One row of the optimization history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iter: usize,
    pub compliance: f64,
    pub volume_fraction: f64,
    pub max_rel_change: f64,
    pub wall_time_s: f64,
}

pub const HISTORY_HEADER: &str = "iter,compliance,volume_fraction,max_rel_change,wall_time_s";

impl HistoryRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e}",
            self.iter, self.compliance, self.volume_fraction, self.max_rel_change, self.wall_time_s
        )
    }

    pub fn parse_csv_line(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 5 {
            return None;
        }
        Some(Self {
            iter: f[0].parse().ok()?,
            compliance: f[1].parse().ok()?,
            volume_fraction: f[2].parse().ok()?,
            max_rel_change: f[3].parse().ok()?,
            wall_time_s: f[4].parse().ok()?,
        })
    }
}

/// Appends history rows to a CSV stream, flushing after every row.
pub struct HistoryWriter<W: Write> {
    out: W,
}

impl<W: Write> HistoryWriter<W> {
    pub fn new(mut out: W, write_header: bool) -> std::io::Result<Self> {
        if write_header {
            writeln!(out, "{HISTORY_HEADER}")?;
            out.flush()?;
        }
        Ok(Self { out })
    }

    pub fn append(&mut self, record: &HistoryRecord) -> std::io::Result<()> {
        writeln!(self.out, "{}", record.csv_line())?;
        self.out.flush()
    }
}

pub fn read_history(text: &str) -> Vec<HistoryRecord> {
    text.lines()
        .skip(1)
        .filter_map(HistoryRecord::parse_csv_line)
        .collect()
}
