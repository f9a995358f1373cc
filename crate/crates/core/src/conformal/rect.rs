use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::SolverOptions;

use super::beltrami::{composed_modulus, BeltramiField};
use super::laplacian::{shape_gradients, Tri2};
use super::{build_planar_laplacian, solve_dirichlet, ConformalError};

/// Width-to-height ratio of the target rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AspectRepr", into = "AspectRepr")]
#[derive(Default)]
pub enum Aspect {
    Fixed(f64),
    /// Chosen by golden-section search on mean `|mu|` of the composed map.
    #[default]
    Auto,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AspectRepr {
    Number(f64),
    Text(String),
}

impl schemars::JsonSchema for Aspect {
    fn schema_name() -> String {
        "Aspect".into()
    }

    fn json_schema(_: &mut schemars::gen::SchemaGenerator) -> schemars::schema::Schema {
        serde_json::from_value(serde_json::json!({
            "description": "Width-to-height ratio of the target rectangle, or \"auto\".",
            "anyOf": [
                { "type": "number", "exclusiveMinimum": 0.0 },
                { "type": "string", "enum": ["auto"] }
            ]
        }))
        .expect("valid schema")
    }
}

impl TryFrom<AspectRepr> for Aspect {
    type Error = String;
    fn try_from(r: AspectRepr) -> Result<Self, String> {
        match r {
            AspectRepr::Number(a) if a > 0.0 && a.is_finite() => Ok(Aspect::Fixed(a)),
            AspectRepr::Number(a) => Err(format!("aspect must be positive, got {a}")),
            AspectRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Aspect> for AspectRepr {
    fn from(a: Aspect) -> Self {
        match a {
            Aspect::Fixed(v) => AspectRepr::Number(v),
            Aspect::Auto => AspectRepr::Text("auto".into()),
        }
    }
}

impl FromStr for Aspect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Aspect::Auto);
        }
        match s.parse::<f64>() {
            Ok(a) if a > 0.0 && a.is_finite() => Ok(Aspect::Fixed(a)),
            _ => Err(format!(
                "aspect must be a positive number or \"auto\", got {s:?}"
            )),
        }
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aspect::Fixed(a) => write!(f, "{a}"),
            Aspect::Auto => f.write_str("auto"),
        }
    }
}

pub const AUTO_ASPECT_RANGE: (f64, f64) = (0.25, 4.0);
pub const AUTO_ASPECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RectangleMap {
    pub uv: Vec<[f64; 2]>,
    pub width: f64,
    pub height: f64,
}

/// Oriented boundary loop of a triangle list, starting at its smallest vertex.
pub(crate) fn boundary_loop(triangles: &[[usize; 3]]) -> Vec<usize> {
    let mut half = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            half.insert((t[k], t[(k + 1) % 3]), ());
        }
    }
    let mut next = HashMap::new();
    for &(a, b) in half.keys() {
        if !half.contains_key(&(b, a)) {
            next.insert(a, b);
        }
    }
    let Some(&start) = next.keys().min() else {
        return Vec::new();
    };
    let mut out = vec![start];
    let mut v = next[&start];
    while v != start && out.len() <= next.len() {
        out.push(v);
        v = next[&v];
    }
    out
}

/// Per-triangle distortion evaluator for `(u, v) -> (w u, v)` composed with the disk map.
pub(crate) struct AspectObjective {
    grads: Vec<([f64; 2], [f64; 2])>,
    mu_k: Vec<Complex64>,
}

impl AspectObjective {
    fn new(disk: &[Tri2], u: &[Tri2Values], v: &[Tri2Values], mu_k: &BeltramiField) -> Self {
        let grads = disk
            .iter()
            .zip(u.iter().zip(v))
            .map(|(q, (uu, vv))| {
                let g = shape_gradients(q).expect("disk triangles are non-degenerate");
                let du = [0, 1].map(|c| (0..3).map(|i| uu[i] * g[i][c]).sum::<f64>());
                let dv = [0, 1].map(|c| (0..3).map(|i| vv[i] * g[i][c]).sum::<f64>());
                (du, dv)
            })
            .collect();
        Self {
            grads,
            mu_k: mu_k.mu.clone(),
        }
    }

    pub(crate) fn mean_abs_mu(&self, w: f64) -> f64 {
        let total: f64 = self
            .grads
            .iter()
            .zip(&self.mu_k)
            .map(|(&(du, dv), &mk)| {
                let (xx, xy, yx, yy) = (w * du[0], w * du[1], dv[0], dv[1]);
                let fz = Complex64::new(xx + yy, yx - xy);
                let fzb = Complex64::new(xx - yy, yx + xy);
                composed_modulus(fzb / fz, mk)
            })
            .sum();
        total / self.grads.len() as f64
    }
}

type Tri2Values = [f64; 3];

pub(crate) fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Corrects the disk map to a rectangle by solving the linear Beltrami equations.
///
/// `u` is pinned to `0` on the boundary arc from corner 4 to corner 1 and to `w` on the arc from
/// corner 2 to corner 3; `v` to `0` on arc 1 to 2 and to `h` on arc 3 to 4. The remaining arcs
/// carry natural conditions. The height is 1.
pub fn rectangle_map(
    disk_uv: &[[f64; 2]],
    triangles: &[[usize; 3]],
    mu_h_inverse: &BeltramiField,
    corners: [usize; 4],
    aspect: Aspect,
    options: SolverOptions,
) -> Result<RectangleMap, ConformalError> {
    if mu_h_inverse.len() != triangles.len() {
        return Err(ConformalError::DimensionMismatch {
            expected: triangles.len(),
            got: mu_h_inverse.len(),
        });
    }
    let mu = BeltramiField::new(mu_h_inverse.mu.clone())?;
    let boundary = boundary_loop(triangles);
    let pos: HashMap<usize, usize> = boundary.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut p = [0usize; 4];
    for (k, &c) in corners.iter().enumerate() {
        p[k] = *pos
            .get(&c)
            .ok_or(ConformalError::CornerNotOnBoundary { vertex: c })?;
    }
    let n = boundary.len();
    let offset = |k: usize| (p[k] + n - p[0]) % n;
    if !(offset(1) > 0 && offset(1) < offset(2) && offset(2) < offset(3)) {
        return Err(ConformalError::CornersNotInOrder);
    }
    let arc = |a: usize, b: usize| -> Vec<usize> {
        let len = (p[b] + n - p[a]) % n;
        (0..=len).map(|i| boundary[(p[a] + i) % n]).collect()
    };

    let nv = disk_uv.len();
    let lap = build_planar_laplacian(disk_uv, triangles, Some(&mu.diffusion_coefficients()))?;
    let mut fixed_u = vec![None; nv];
    for v in arc(3, 0) {
        fixed_u[v] = Some(0.0);
    }
    for v in arc(1, 2) {
        fixed_u[v] = Some(1.0);
    }
    let mut fixed_v = vec![None; nv];
    for v in arc(0, 1) {
        fixed_v[v] = Some(0.0);
    }
    for v in arc(2, 3) {
        fixed_v[v] = Some(1.0);
    }
    let u1 = solve_dirichlet(&lap, &fixed_u, options)?;
    let v1 = solve_dirichlet(&lap, &fixed_v, options)?;

    let width = match aspect {
        Aspect::Fixed(a) if a > 0.0 && a.is_finite() => a,
        Aspect::Fixed(a) => return Err(ConformalError::InvalidAspect(a)),
        Aspect::Auto => {
            let disk: Vec<Tri2> = triangles
                .iter()
                .map(|t| [disk_uv[t[0]], disk_uv[t[1]], disk_uv[t[2]]])
                .collect();
            let uu: Vec<Tri2Values> = triangles.iter().map(|t| t.map(|i| u1[i])).collect();
            let vv: Vec<Tri2Values> = triangles.iter().map(|t| t.map(|i| v1[i])).collect();
            let obj = AspectObjective::new(&disk, &uu, &vv, &mu);
            let (lo, hi) = AUTO_ASPECT_RANGE;
            golden_section(|w| obj.mean_abs_mu(w), lo, hi, AUTO_ASPECT_TOL)
        }
    };
    let uv = u1.iter().zip(&v1).map(|(&a, &b)| [width * a, b]).collect();
    Ok(RectangleMap {
        uv,
        width,
        height: 1.0,
    })
}

/// Mean `|mu|` of the composed map for a list of trial widths, for checking the search.
pub fn aspect_sweep(
    disk_uv: &[[f64; 2]],
    triangles: &[[usize; 3]],
    mu_h_inverse: &BeltramiField,
    unit_map: &RectangleMap,
    widths: &[f64],
) -> Vec<f64> {
    let disk: Vec<Tri2> = triangles
        .iter()
        .map(|t| [disk_uv[t[0]], disk_uv[t[1]], disk_uv[t[2]]])
        .collect();
    let uu: Vec<Tri2Values> = triangles
        .iter()
        .map(|t| t.map(|i| unit_map.uv[i][0] / unit_map.width))
        .collect();
    let vv: Vec<Tri2Values> = triangles
        .iter()
        .map(|t| t.map(|i| unit_map.uv[i][1]))
        .collect();
    let obj = AspectObjective::new(&disk, &uu, &vv, mu_h_inverse);
    widths.iter().map(|&w| obj.mean_abs_mu(w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aspect_parsing() {
        assert_eq!("auto".parse::<Aspect>().unwrap(), Aspect::Auto);
        assert_eq!("2.5".parse::<Aspect>().unwrap(), Aspect::Fixed(2.5));
        assert!("-1".parse::<Aspect>().is_err());
        let a: Aspect = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(a, Aspect::Auto);
        let b: Aspect = serde_json::from_str("1.5").unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), "1.5");
    }

    #[test]
    fn golden_section_finds_minimum() {
        let x = golden_section(|x| (x - 1.7).powi(2), 0.25, 4.0, 1e-6);
        assert!((x - 1.7).abs() < 1e-5);
    }
}
