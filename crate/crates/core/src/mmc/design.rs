use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::Scalar;

use super::{Component, MmcError, PARAMS_PER_COMPONENT};

/// Ordered components with the flat design vector and its box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DesignState<T: Scalar> {
    pub components: Vec<Component<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

/// Box bounds for a component living in a `width x height` chart.
///
/// Centers stay in the rectangle and angles in `[-pi, pi]`; half-lengths reach at most half the
/// chart diagonal and thicknesses a tenth of it, both with a floor of `1e-4` diagonals.
pub fn chart_bounds<T: Scalar>(width: T, height: T) -> ([T; 7], [T; 7]) {
    let diag = width.hypot(height);
    let floor = T::c(1e-4) * diag;
    let l_max = T::c(0.5) * diag;
    let t_max = T::c(0.1) * diag;
    let pi = T::c(PI);
    (
        [T::zero(), T::zero(), -pi, floor, floor, floor, floor],
        [width, height, pi, l_max, t_max, t_max, t_max],
    )
}

impl<T: Scalar> DesignState<T> {
    pub fn new(
        components: Vec<Component<T>>,
        lower: Vec<T>,
        upper: Vec<T>,
    ) -> Result<Self, MmcError> {
        let n = PARAMS_PER_COMPONENT * components.len();
        for len in [lower.len(), upper.len()] {
            if len != n {
                return Err(MmcError::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if let Some(i) = (0..n).find(|&i| !(lower[i] <= upper[i])) {
            return Err(MmcError::InvalidBounds { variable: i });
        }
        Ok(Self {
            components,
            lower,
            upper,
        })
    }

    /// Uses [`chart_bounds`] for every component, given `(width, height)` per chart.
    pub fn with_chart_bounds(
        components: Vec<Component<T>>,
        charts: &[(T, T)],
    ) -> Result<Self, MmcError> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for (k, c) in components.iter().enumerate() {
            let &(w, h) = charts.get(c.chart).ok_or(MmcError::UnknownChart {
                component: k,
                chart: c.chart,
            })?;
            let (lo, hi) = chart_bounds(w, h);
            lower.extend(lo);
            upper.extend(hi);
        }
        Self::new(components, lower, upper)
    }

    pub fn len(&self) -> usize {
        PARAMS_PER_COMPONENT * self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn to_vector(&self) -> Vec<T> {
        self.components.iter().flat_map(|c| c.params()).collect()
    }

    /// Same components (and charts) with new parameters.
    pub fn with_vector(&self, x: &[T]) -> Result<Self, MmcError> {
        if x.len() != self.len() {
            return Err(MmcError::DimensionMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(x.chunks_exact(PARAMS_PER_COMPONENT))
            .map(|(c, p)| Component::new(c.chart, [p[0], p[1], p[2], p[3], p[4], p[5], p[6]]))
            .collect();
        Ok(Self {
            components,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        })
    }

    pub fn within_bounds(&self) -> bool {
        self.to_vector()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&lo, &hi))| lo <= x && x <= hi)
    }

    /// Projects the parameters onto the box.
    pub fn clamped(&self) -> Self {
        let x: Vec<T> = self
            .to_vector()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&lo, &hi))| x.max(lo).min(hi))
            .collect();
        self.with_vector(&x).expect("same length")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_round_trip() {
        let comps = vec![
            Component::new(0, [0.1, 0.2, 0.3, 0.4, 0.05, 0.06, 0.07]),
            Component::new(1, [1.1, 0.8, 1.3, 0.4, 0.05, 0.06, 0.07]),
        ];
        let d = DesignState::with_chart_bounds(comps, &[(1.0, 1.0), (2.0, 1.0)]).unwrap();
        let x = d.to_vector();
        assert_eq!(x.len(), 14);
        assert_eq!(d.with_vector(&x).unwrap(), d);
        assert!(d.within_bounds());
        assert!(matches!(
            d.with_vector(&x[..7]),
            Err(MmcError::DimensionMismatch {
                expected: 14,
                got: 7
            })
        ));
    }
}
