use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::laplacian::{shape_gradients, SymmetricCoefficient, Tri2};
use super::ConformalError;

/// Per-triangle Beltrami coefficients of a piecewise-linear planar map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltramiField {
    pub mu: Vec<Complex64>,
}

impl BeltramiField {
    /// Builds a field, rejecting any coefficient with `|mu| >= 1`.
    pub fn new(mu: Vec<Complex64>) -> Result<Self, ConformalError> {
        if let Some((t, m)) = mu.iter().enumerate().find(|(_, m)| !(m.norm() < 1.0)) {
            return Err(ConformalError::BeltramiTooLarge {
                triangle: t,
                modulus: m.norm(),
            });
        }
        Ok(Self { mu })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            mu: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.mu.iter().map(|m| m.re).collect()
    }

    pub fn tau(&self) -> Vec<f64> {
        self.mu.iter().map(|m| m.im).collect()
    }

    /// `[alpha1, alpha2, alpha3]` per triangle: the diffusion matrix `[[a1, a2], [a2, a3]]` of
    /// the linear Beltrami equation. Its determinant is 1.
    pub fn diffusion_coefficients(&self) -> Vec<SymmetricCoefficient> {
        self.mu.iter().map(|&m| diffusion_matrix(m)).collect()
    }

    pub fn mean_abs(&self) -> f64 {
        if self.mu.is_empty() {
            return 0.0;
        }
        self.mu.iter().map(|m| m.norm()).sum::<f64>() / self.mu.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.mu.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn diffusion_matrix(m: Complex64) -> SymmetricCoefficient {
    let (r, t) = (m.re, m.im);
    let d = 1.0 - r * r - t * t;
    [
        ((r - 1.0).powi(2) + t * t) / d,
        -2.0 * t / d,
        ((r + 1.0).powi(2) + t * t) / d,
    ]
}

/// `(f_z, f_zbar)` of the affine map taking `source` to `target`.
pub(crate) fn complex_derivatives(source: &Tri2, target: &Tri2) -> Option<(Complex64, Complex64)> {
    let g = shape_gradients(source)?;
    let mut jac = [[0.0; 2]; 2];
    for i in 0..3 {
        for c in 0..2 {
            jac[c][0] += target[i][c] * g[i][0];
            jac[c][1] += target[i][c] * g[i][1];
        }
    }
    let [[xx, xy], [yx, yy]] = jac;
    let fz = Complex64::new(xx + yy, yx - xy) * 0.5;
    let fzb = Complex64::new(xx - yy, yx + xy) * 0.5;
    Some((fz, fzb))
}

/// Beltrami coefficient of the affine map between two triangles, without the `|mu| < 1` check.
/// Orientation-reversing maps give `|mu| > 1` (or infinity).
pub(crate) fn triangle_mu(source: &Tri2, target: &Tri2) -> Option<Complex64> {
    let (fz, fzb) = complex_derivatives(source, target)?;
    if fz.norm() == 0.0 {
        return Some(Complex64::new(f64::INFINITY, 0.0));
    }
    Some(fzb / fz)
}

/// Beltrami coefficient of the piecewise-linear map sending `source[v]` to `target[v]`.
pub fn beltrami_coefficient(
    source: &[[f64; 2]],
    target: &[[f64; 2]],
    triangles: &[[usize; 3]],
) -> Result<BeltramiField, ConformalError> {
    if source.len() != target.len() {
        return Err(ConformalError::DimensionMismatch {
            expected: source.len(),
            got: target.len(),
        });
    }
    let pairs = triangles.iter().map(|t| {
        (
            [source[t[0]], source[t[1]], source[t[2]]],
            [target[t[0]], target[t[1]], target[t[2]]],
        )
    });
    beltrami_from_triangles(pairs)
}

/// Same as [`beltrami_coefficient`] with independent corner coordinates per triangle.
pub fn beltrami_from_triangles(
    pairs: impl Iterator<Item = (Tri2, Tri2)>,
) -> Result<BeltramiField, ConformalError> {
    let mut mu = Vec::new();
    for (t, (s, d)) in pairs.enumerate() {
        mu.push(triangle_mu(&s, &d).ok_or(ConformalError::DegenerateTriangle { triangle: t })?);
    }
    BeltramiField::new(mu)
}

/// `|mu|` of `g o h` given `mu_g` and `mu_k` with `k = h^-1`, both on the same triangle.
pub(crate) fn composed_modulus(mu_g: Complex64, mu_k: Complex64) -> f64 {
    (mu_g - mu_k).norm() / (Complex64::new(1.0, 0.0) - mu_k.conj() * mu_g).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
        let p = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.4, 0.6]];
        let t = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        (p, t)
    }

    #[test]
    fn identity_is_conformal() {
        let (p, t) = grid();
        let f = beltrami_coefficient(&p, &p, &t).unwrap();
        assert!(f.max_abs() < 1e-15);
    }

    #[test]
    fn horizontal_stretch() {
        let (p, t) = grid();
        let q: Vec<_> = p.iter().map(|v| [2.0 * v[0], v[1]]).collect();
        let f = beltrami_coefficient(&p, &q, &t).unwrap();
        for m in &f.mu {
            assert!((m - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-14);
        }
        for a in f.diffusion_coefficients() {
            assert!((a[0] * a[2] - a[1] * a[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reflection_is_rejected() {
        let (p, t) = grid();
        let q: Vec<_> = p.iter().map(|v| [v[1], v[0]]).collect();
        assert!(matches!(
            beltrami_coefficient(&p, &q, &t),
            Err(ConformalError::BeltramiTooLarge { .. })
        ));
    }

    #[test]
    fn zero_mu_gives_identity_diffusion() {
        assert_eq!(diffusion_matrix(Complex64::new(0.0, 0.0)), [1.0, 0.0, 1.0]);
    }
}
