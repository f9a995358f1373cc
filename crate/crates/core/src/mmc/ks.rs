use serde::{Deserialize, Serialize};

use crate::Scalar;

use super::MmcError;

/// Sharpness of the Kreisselmeier-Steinhauser smooth maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(bound = "", default)]
pub struct KsParams<T: Scalar> {
    pub zeta: T,
}

impl<T: Scalar> Default for KsParams<T> {
    fn default() -> Self {
        Self { zeta: T::c(100.0) }
    }
}

/// `ln(sum exp(zeta v)) / zeta`, evaluated relative to the maximum.
pub fn ks_value<T: Scalar>(values: &[T], ks: KsParams<T>) -> Result<T, MmcError> {
    let m = max_of(values)?;
    let s: T = values.iter().map(|&v| (ks.zeta * (v - m)).exp()).sum();
    Ok(m + s.ln() / ks.zeta)
}

/// KS value and its softmax weights `dKS/dv_i`.
pub fn ks_aggregate<T: Scalar>(values: &[T], ks: KsParams<T>) -> Result<(T, Vec<T>), MmcError> {
    let m = max_of(values)?;
    let e: Vec<T> = values.iter().map(|&v| (ks.zeta * (v - m)).exp()).collect();
    let s: T = e.iter().copied().sum();
    Ok((m + s.ln() / ks.zeta, e.into_iter().map(|x| x / s).collect()))
}

fn max_of<T: Scalar>(values: &[T]) -> Result<T, MmcError> {
    values
        .iter()
        .copied()
        .reduce(T::max)
        .ok_or(MmcError::EmptyAggregate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let ks = KsParams::default();
        assert_eq!(ks_value(&[0.37f64], ks).unwrap(), 0.37);
        let v = ks_value(&[0.0f64, 0.0], ks).unwrap();
        assert!((v - 2f64.ln() / 100.0).abs() < 1e-16);
        let (v, w) = ks_aggregate(&[0.2f64, -0.5], ks).unwrap();
        assert!((v - 0.2).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!(matches!(
            ks_value::<f64>(&[], ks),
            Err(MmcError::EmptyAggregate)
        ));
    }

    #[test]
    fn large_values_do_not_overflow() {
        let (v, w) = ks_aggregate(&[1e3f64, 1e3], KsParams::default()).unwrap();
        assert!(v.is_finite() && (w[0] - 0.5).abs() < 1e-15);
    }
}
