use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Number of design variables per component.
pub const PARAMS_PER_COMPONENT: usize = 7;

/// Smallest admissible local thickness; the profile is clamped here.
pub const THICKNESS_FLOOR: f64 = 1e-9;

/// A straight component with a quadratically varying thickness, in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Component<T: Scalar> {
    pub chart: usize,
    pub x0: T,
    pub y0: T,
    pub theta: T,
    /// Half-length.
    pub length: T,
    pub t1: T,
    pub t2: T,
    pub t3: T,
}

impl<T: Scalar> Component<T> {
    pub fn new(chart: usize, params: [T; PARAMS_PER_COMPONENT]) -> Self {
        let [x0, y0, theta, length, t1, t2, t3] = params;
        Self {
            chart,
            x0,
            y0,
            theta,
            length,
            t1,
            t2,
            t3,
        }
    }

    /// `(x0, y0, theta, L, t1, t2, t3)`.
    pub fn params(&self) -> [T; PARAMS_PER_COMPONENT] {
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

    /// Point in the component frame.
    pub fn local(&self, p: [T; 2]) -> [T; 2] {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (p[0] - self.x0, p[1] - self.y0);
        [c * dx + s * dy, -s * dx + c * dy]
    }

    /// Quadratic thickness profile along the axis, before clamping.
    pub fn profile(&self, xl: T) -> T {
        let l = self.length;
        let two = T::c(2.0);
        let a = (self.t1 + self.t2 - two * self.t3) / (two * l * l);
        let b = (self.t2 - self.t1) / (two * l);
        a * xl * xl + b * xl + self.t3
    }
}

/// Superellipse norm `(|a|^6 + |b|^6)^(1/6)` without overflow.
fn norm6<T: Scalar>(a: T, b: T) -> T {
    let m = a.abs().max(b.abs());
    if m == T::zero() {
        return T::zero();
    }
    let (ra, rb) = (a / m, b / m);
    m * (ra.powi(6) + rb.powi(6)).powf(T::c(1.0 / 6.0))
}

/// Topology description function of one component at chart point `p`: positive inside, zero on
/// the boundary.
pub fn tdf_component<T: Scalar>(comp: &Component<T>, p: [T; 2]) -> T {
    let [xl, yl] = comp.local(p);
    let f = comp.profile(xl).max(T::c(THICKNESS_FLOOR));
    T::one() - norm6(xl / comp.length, yl / f)
}

/// Gradient of [`tdf_component`] with respect to `(x0, y0, theta, L, t1, t2, t3)`.
///
/// Zero at the component center. Thickness terms vanish where the profile is clamped.
pub fn tdf_component_grad<T: Scalar>(comp: &Component<T>, p: [T; 2]) -> [T; PARAMS_PER_COMPONENT] {
    tdf_component_value_grad(comp, p).1
}

pub fn tdf_component_value_grad<T: Scalar>(
    comp: &Component<T>,
    p: [T; 2],
) -> (T, [T; PARAMS_PER_COMPONENT]) {
    let zero = T::zero();
    let two = T::c(2.0);
    let l = comp.length;
    let (s, c) = comp.theta.sin_cos();
    let [xl, yl] = comp.local(p);
    let raw = comp.profile(xl);
    let floor = T::c(THICKNESS_FLOOR);
    let clamped = raw < floor;
    let f = if clamped { floor } else { raw };
    let (r1, r2) = (xl / l, yl / f);
    let n = norm6(r1, r2);
    let mut g = [zero; PARAMS_PER_COMPONENT];
    if n == zero {
        return (T::one(), g);
    }
    let phi = T::one() - n;
    let w1 = (r1 / n).powi(5);
    let w2 = (r2 / n).powi(5);

    let a = (comp.t1 + comp.t2 - two * comp.t3) / (two * l * l);
    let b = (comp.t2 - comp.t1) / (two * l);
    let df_dx = if clamped { zero } else { two * a * xl + b };

    // d(phi) for a change (dxl, dyl) of the local coordinates, plus explicit df and dL
    let dphi = |dxl: T, dyl: T, df_explicit: T, dl: T| -> T {
        let df = df_dx * dxl + df_explicit;
        let dr1 = dxl / l - xl * dl / (l * l);
        let dr2 = dyl / f - yl * df / (f * f);
        -(w1 * dr1 + w2 * dr2)
    };

    g[0] = dphi(-c, s, zero, zero);
    g[1] = dphi(-s, -c, zero, zero);
    g[2] = dphi(yl, -xl, zero, zero);
    let df_dl = if clamped {
        zero
    } else {
        -(comp.t1 + comp.t2 - two * comp.t3) * xl * xl / (l * l * l)
            - (comp.t2 - comp.t1) * xl / (two * l * l)
    };
    g[3] = dphi(zero, zero, df_dl, T::one());
    if !clamped {
        let q = xl * xl / (two * l * l);
        let h = xl / (two * l);
        g[4] = dphi(zero, zero, q - h, zero);
        g[5] = dphi(zero, zero, q + h, zero);
        g[6] = dphi(zero, zero, T::one() - xl * xl / (l * l), zero);
    }
    (phi, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(t: f64) -> Component<f64> {
        Component::new(0, [0.3, -0.2, 0.4, 1.5, t, t, t])
    }

    fn at_local(c: &Component<f64>, xl: f64, yl: f64) -> [f64; 2] {
        let (s, co) = c.theta.sin_cos();
        [c.x0 + co * xl - s * yl, c.y0 + s * xl + co * yl]
    }

    #[test]
    fn reference_values() {
        let c = uniform(0.2);
        assert_eq!(tdf_component(&c, [c.x0, c.y0]), 1.0);
        assert!(tdf_component(&c, at_local(&c, 1.5, 0.0)).abs() < 1e-14);
        assert!((tdf_component(&c, at_local(&c, 0.0, 0.4)) + 1.0).abs() < 1e-13);
        assert_eq!(tdf_component_grad(&c, [c.x0, c.y0]), [0.0; 7]);
    }

    #[test]
    fn axial_length_derivative() {
        let c = uniform(0.2);
        let g = tdf_component_grad(&c, at_local(&c, 0.75, 0.0));
        assert!((g[3] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision_evaluates() {
        let c: Component<f32> = Component::new(0, [0.0, 0.0, 0.0, 1.0, 0.1, 0.1, 0.1]);
        assert!((tdf_component(&c, [0.5, 0.0]) - 0.5).abs() < 1e-6);
    }
}
