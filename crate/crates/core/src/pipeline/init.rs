use std::f64::consts::FRAC_PI_4;

use crate::mmc::{Atlas, Component, DesignState};

use super::config::{ComponentLayout, ComponentRecord};
use super::{ErrorKind, PipelineError, Stage};

fn invalid(message: impl Into<String>) -> PipelineError {
    PipelineError::new(Stage::Initialize, ErrorKind::Validation, message)
}

/// Initial design: the crossed-pair grid on every chart, or the explicit list.
///
/// Each grid cell holds two components through its center at +45 and -45 degrees with
/// half-length `0.45` cell diagonals and all thicknesses set to the layout's fraction of the
/// chart diagonal.
pub fn initialize_components(
    layout: &ComponentLayout,
    atlas: &Atlas<f64>,
) -> Result<DesignState<f64>, PipelineError> {
    match layout {
        ComponentLayout::Grid {
            nx,
            ny,
            per_chart,
            thickness,
        } => {
            let mut comps = Vec::new();
            for (k, chart) in atlas.charts().iter().enumerate() {
                let [nx, ny] = per_chart.get(&chart.id).copied().unwrap_or([*nx, *ny]);
                if nx == 0 || ny == 0 {
                    return Err(invalid(format!(
                        "chart {}: grid counts must be positive",
                        chart.id
                    )));
                }
                let (cw, ch) = (chart.width / nx as f64, chart.height / ny as f64);
                let length = 0.45 * cw.hypot(ch);
                let t = thickness * chart.width.hypot(chart.height);
                for iy in 0..ny {
                    for ix in 0..nx {
                        let (x0, y0) = ((ix as f64 + 0.5) * cw, (iy as f64 + 0.5) * ch);
                        for theta in [FRAC_PI_4, -FRAC_PI_4] {
                            comps.push(Component::new(k, [x0, y0, theta, length, t, t, t]));
                        }
                    }
                }
            }
            design(comps, atlas)
        }
        ComponentLayout::Explicit(records) => design_from_records(records, atlas),
    }
}

fn design(
    comps: Vec<Component<f64>>,
    atlas: &Atlas<f64>,
) -> Result<DesignState<f64>, PipelineError> {
    let d = DesignState::with_chart_bounds(comps, &atlas.chart_sizes())
        .map_err(|e| invalid(e.to_string()))?;
    if !d.within_bounds() {
        let x = d.to_vector();
        let i = (0..x.len())
            .find(|&i| !(d.lower[i] <= x[i] && x[i] <= d.upper[i]))
            .unwrap_or(0);
        return Err(invalid(format!(
            "component {} parameter {} = {} is outside [{}, {}]",
            i / 7,
            i % 7,
            x[i],
            d.lower[i],
            d.upper[i]
        )));
    }
    Ok(d)
}

pub fn design_from_records(
    records: &[ComponentRecord],
    atlas: &Atlas<f64>,
) -> Result<DesignState<f64>, PipelineError> {
    let comps = records
        .iter()
        .map(|r| {
            let k = atlas
                .charts()
                .iter()
                .position(|c| c.id == r.chart)
                .ok_or_else(|| invalid(format!("unknown chart {:?}", r.chart)))?;
            Ok(Component::new(k, r.params()))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    design(comps, atlas)
}

pub fn design_records(design: &DesignState<f64>, atlas: &Atlas<f64>) -> Vec<ComponentRecord> {
    design
        .components
        .iter()
        .map(|c| ComponentRecord::from_params(&atlas.charts()[c.chart].id, c.params()))
        .collect()
}
