use crate::Scalar;

use super::{FeaError, ShellMaterial};

/// Element matrix over `(u, v, w, rx, ry, rz)` at each of the three nodes.
pub type ElementMatrix<T> = [[T; 18]; 18];

/// Default drilling stiffness as a fraction of the smallest in-plane membrane diagonal entry.
pub const DEFAULT_DRILLING_FACTOR: f64 = 1e-4;

fn sub<T: Scalar>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross<T: Scalar>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot<T: Scalar>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit<T: Scalar>(a: [T; 3]) -> [T; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Element frame: rows of `r` are the local axes (first along edge 1-2, third the normal),
/// plus local 2D node coordinates and the area.
pub(crate) fn local_frame<T: Scalar>(p: [[T; 3]; 3]) -> Option<([[T; 3]; 3], [[T; 2]; 3], T)> {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let n = cross(e1, e2);
    let a2 = dot(n, n).sqrt();
    let scale = dot(e1, e1).max(dot(e2, e2));
    if !(a2 > T::c(1e-12) * scale) {
        return None;
    }
    let ex = unit(e1);
    let ez = unit(n);
    let ey = cross(ez, ex);
    let r = [ex, ey, ez];
    let xy = [
        [T::zero(); 2],
        [dot(e1, ex), dot(e1, ey)],
        [dot(e2, ex), dot(e2, ey)],
    ];
    Some((r, xy, T::c(0.5) * a2))
}

fn membrane<T: Scalar>(xy: &[[T; 2]; 3], area: T, mat: &ShellMaterial<T>) -> [[T; 6]; 6] {
    let two = T::c(2.0);
    let mut b = [[T::zero(); 6]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let bi = (xy[j][1] - xy[k][1]) / (two * area);
        let ci = (xy[k][0] - xy[j][0]) / (two * area);
        b[0][2 * i] = bi;
        b[1][2 * i + 1] = ci;
        b[2][2 * i] = ci;
        b[2][2 * i + 1] = bi;
    }
    let nu = mat.poisson_ratio;
    let c = mat.youngs_modulus * mat.thickness / (T::one() - nu * nu);
    let d = [
        [c, c * nu, T::zero()],
        [c * nu, c, T::zero()],
        [T::zero(), T::zero(), c * (T::one() - nu) / two],
    ];
    triple_product(&b, &d, area)
}

fn triple_product<T: Scalar, const N: usize>(
    b: &[[T; N]; 3],
    d: &[[T; 3]; 3],
    w: T,
) -> [[T; N]; N] {
    let mut db = [[T::zero(); N]; 3];
    for r in 0..3 {
        for c in 0..N {
            db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
        }
    }
    let mut k = [[T::zero(); N]; N];
    for i in 0..N {
        for j in 0..N {
            k[i][j] = w * (0..3).map(|r| b[r][i] * db[r][j]).sum::<T>();
        }
    }
    k
}

/// Shape-function values of the 6-node quadratic triangle: corners, then mid-sides 23, 31, 12.
fn quadratic_shape<T: Scalar>(xi: T, eta: T) -> [[T; 6]; 3] {
    let (one, two, four) = (T::one(), T::c(2.0), T::c(4.0));
    let half = T::c(0.5);
    let l = one - xi - eta;
    let n = [
        two * l * (half - xi - eta),
        xi * (two * xi - one),
        eta * (two * eta - one),
        four * xi * eta,
        four * eta * l,
        four * xi * l,
    ];
    let dxi = [
        -T::c(3.0) + four * xi + four * eta,
        four * xi - one,
        T::zero(),
        four * eta,
        -four * eta,
        four - T::c(8.0) * xi - four * eta,
    ];
    let deta = [
        -T::c(3.0) + four * xi + four * eta,
        T::zero(),
        four * eta - one,
        four * xi,
        four - four * xi - T::c(8.0) * eta,
        -four * xi,
    ];
    [n, dxi, deta]
}

struct DktCoefficients<T> {
    a: [T; 3],
    b: [T; 3],
    c: [T; 3],
    d: [T; 3],
    e: [T; 3],
}

fn dkt_coefficients<T: Scalar>(xy: &[[T; 2]; 3]) -> DktCoefficients<T> {
    // sides 23, 31, 12 (mid-side nodes 4, 5, 6)
    let sides = [(1, 2), (2, 0), (0, 1)];
    let z = [T::zero(); 3];
    let mut k = DktCoefficients {
        a: z,
        b: z,
        c: z,
        d: z,
        e: z,
    };
    let (q, h, tq) = (T::c(0.25), T::c(0.5), T::c(0.75));
    for (s, &(i, j)) in sides.iter().enumerate() {
        let x = xy[i][0] - xy[j][0];
        let y = xy[i][1] - xy[j][1];
        let l2 = x * x + y * y;
        k.a[s] = -x / l2;
        k.b[s] = tq * x * y / l2;
        k.c[s] = (q * x * x - h * y * y) / l2;
        k.d[s] = -y / l2;
        k.e[s] = (q * y * y - h * x * x) / l2;
    }
    k
}

/// Rotation interpolants `beta_x = Hx . U`, `beta_y = Hy . U` for `U = (w, rx, ry)` per node.
fn dkt_h<T: Scalar>(n: &[T; 6], k: &DktCoefficients<T>) -> ([T; 9], [T; 9]) {
    let t = T::c(1.5);
    let (n4, n5, n6) = (n[3], n[4], n[5]);
    let (a, b, c, d, e) = (&k.a, &k.b, &k.c, &k.d, &k.e);
    let hx = [
        t * (a[2] * n6 - a[1] * n5),
        b[1] * n5 + b[2] * n6,
        n[0] - c[1] * n5 - c[2] * n6,
        t * (a[0] * n4 - a[2] * n6),
        b[2] * n6 + b[0] * n4,
        n[1] - c[2] * n6 - c[0] * n4,
        t * (a[1] * n5 - a[0] * n4),
        b[0] * n4 + b[1] * n5,
        n[2] - c[0] * n4 - c[1] * n5,
    ];
    let hy = [
        t * (d[2] * n6 - d[1] * n5),
        -n[0] + e[1] * n5 + e[2] * n6,
        -hx[1],
        t * (d[0] * n4 - d[2] * n6),
        -n[1] + e[2] * n6 + e[0] * n4,
        -hx[4],
        t * (d[1] * n5 - d[0] * n4),
        -n[2] + e[0] * n4 + e[1] * n5,
        -hx[7],
    ];
    (hx, hy)
}

fn bending<T: Scalar>(xy: &[[T; 2]; 3], area: T, mat: &ShellMaterial<T>) -> [[T; 9]; 9] {
    let k = dkt_coefficients(xy);
    let x12 = xy[0][0] - xy[1][0];
    let x31 = xy[2][0] - xy[0][0];
    let y12 = xy[0][1] - xy[1][1];
    let y31 = xy[2][1] - xy[0][1];
    let two_a = T::c(2.0) * area;
    let nu = mat.poisson_ratio;
    let t = mat.thickness;
    let c = mat.youngs_modulus * t * t * t / (T::c(12.0) * (T::one() - nu * nu));
    let d = [
        [c, c * nu, T::zero()],
        [c * nu, c, T::zero()],
        [T::zero(), T::zero(), c * (T::one() - nu) / T::c(2.0)],
    ];
    let (s, f) = (T::c(1.0 / 6.0), T::c(2.0 / 3.0));
    let points = [(s, s), (f, s), (s, f)];
    let mut out = [[T::zero(); 9]; 9];
    for (xi, eta) in points {
        let [_, dxi, deta] = quadratic_shape(xi, eta);
        let (hx_xi, hy_xi) = dkt_h(&dxi, &k);
        let (hx_eta, hy_eta) = dkt_h(&deta, &k);
        let mut b = [[T::zero(); 9]; 3];
        for i in 0..9 {
            b[0][i] = (y31 * hx_xi[i] + y12 * hx_eta[i]) / two_a;
            b[1][i] = (-x31 * hy_xi[i] - x12 * hy_eta[i]) / two_a;
            b[2][i] =
                (-x31 * hx_xi[i] - x12 * hx_eta[i] + y31 * hy_xi[i] + y12 * hy_eta[i]) / two_a;
        }
        // weight 1/6 on the reference triangle, Jacobian 2A
        let kb = triple_product(&b, &d, two_a * s);
        for i in 0..9 {
            for j in 0..9 {
                out[i][j] += kb[i][j];
            }
        }
    }
    out
}

/// Facet shell stiffness of one triangle in global coordinates: constant-strain membrane,
/// discrete Kirchhoff bending and a drilling penalty tying `rz` to the in-plane rotation, all
/// scaled by `rho`.
pub fn element_stiffness<T: Scalar>(
    tri: [[T; 3]; 3],
    mat: &ShellMaterial<T>,
    rho: T,
) -> Result<ElementMatrix<T>, FeaError> {
    element_stiffness_with(tri, mat, rho, T::c(DEFAULT_DRILLING_FACTOR))
}

pub fn element_stiffness_with<T: Scalar>(
    tri: [[T; 3]; 3],
    mat: &ShellMaterial<T>,
    rho: T,
    drilling_factor: T,
) -> Result<ElementMatrix<T>, FeaError> {
    let (r, xy, area) = local_frame(tri).ok_or(FeaError::DegenerateTriangle { triangle: 0 })?;
    let km = membrane(&xy, area, mat);
    let kb = bending(&xy, area, mat);
    let mut kl = [[T::zero(); 18]; 18];
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..2 {
                for b in 0..2 {
                    kl[6 * i + a][6 * j + b] = km[2 * i + a][2 * j + b];
                }
            }
            for a in 0..3 {
                for b in 0..3 {
                    kl[6 * i + 2 + a][6 * j + 2 + b] = kb[3 * i + a][3 * j + b];
                }
            }
        }
    }
    // penalty on rz - omega with omega = (dv/dx - du/dy) / 2 of the constant-strain field
    let kd = drilling_factor * (1..6).map(|i| km[i][i]).fold(km[0][0], |a, b| a.min(b));
    let mut omega = [T::zero(); 18];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let four_a = T::c(4.0) * area;
        omega[6 * i] = -(xy[k][0] - xy[j][0]) / four_a;
        omega[6 * i + 1] = (xy[j][1] - xy[k][1]) / four_a;
    }
    for n in 0..3 {
        let mut g = omega.map(|x| -x);
        g[6 * n + 5] = T::one();
        for a in 0..18 {
            for b in 0..18 {
                kl[a][b] += kd * g[a] * g[b];
            }
        }
    }
    // K_global = T^T K_local T with T = blockdiag(r)
    let mut kg = [[T::zero(); 18]; 18];
    for bi in 0..6 {
        for bj in 0..6 {
            let mut tmp = [[T::zero(); 3]; 3];
            for a in 0..3 {
                for q in 0..3 {
                    tmp[a][q] = (0..3).map(|p| kl[3 * bi + a][3 * bj + p] * r[p][q]).sum();
                }
            }
            for p in 0..3 {
                for q in 0..3 {
                    kg[3 * bi + p][3 * bj + q] =
                        rho * (0..3).map(|a| r[a][p] * tmp[a][q]).sum::<T>();
                }
            }
        }
    }
    Ok(kg)
}
