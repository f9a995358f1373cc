use serde::{Deserialize, Serialize};

use crate::linalg::dense;
use crate::Scalar;

use super::OptimizerError;

/// Tunable MMA constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
pub struct MmaParams {
    pub asyinit: f64,
    pub asyincr: f64,
    pub asydecr: f64,
    /// Steps shorter than this fraction of the variable's range count as no movement when the
    /// asymptotes are adapted.
    pub stall_tol: f64,
    /// Largest step per iteration as a fraction of each variable's range.
    pub move_limit: f64,
    pub albefa: f64,
    pub raa0: f64,
    /// Penalty on the artificial variables `y_i` (one value for every constraint).
    pub c: f64,
    pub d: f64,
    pub a0: f64,
    pub a: f64,
    /// Final barrier parameter of the interior-point subproblem solve.
    pub epsimin: f64,
}

impl Default for MmaParams {
    fn default() -> Self {
        Self {
            asyinit: 0.5,
            asyincr: 1.2,
            asydecr: 0.7,
            stall_tol: 1e-9,
            move_limit: 0.1,
            albefa: 0.1,
            raa0: 1e-5,
            c: 1000.0,
            d: 1.0,
            a0: 1.0,
            a: 0.0,
            epsimin: 1e-10,
        }
    }
}

/// Asymptotes and iterate history carried between MMA steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MmaState<T: Scalar> {
    pub iteration: usize,
    pub low: Vec<T>,
    pub upp: Vec<T>,
    pub xold1: Vec<T>,
    pub xold2: Vec<T>,
}

impl<T: Scalar> MmaState<T> {
    pub fn new(x: &[T]) -> Self {
        Self {
            iteration: 0,
            low: x.to_vec(),
            upp: x.to_vec(),
            xold1: x.to_vec(),
            xold2: x.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low.is_empty()
    }
}

/// Result of one MMA step.
#[derive(Debug, Clone, PartialEq)]
pub struct MmaStep<T> {
    pub x: Vec<T>,
    /// Artificial variables; a positive entry means constraint `i` could not be met.
    pub y: Vec<T>,
    pub lambda: Vec<T>,
    /// Infinity norm of the subproblem KKT residual at the returned point.
    pub kkt_residual: T,
}

/// Subproblem data for the primal-dual solve.
struct Sub<'a, T> {
    low: &'a [T],
    upp: &'a [T],
    alfa: &'a [T],
    beta: &'a [T],
    p0: &'a [T],
    q0: &'a [T],
    p: &'a [Vec<T>],
    q: &'a [Vec<T>],
    b: &'a [T],
    a0: T,
    a: T,
    c: T,
    d: T,
}

#[derive(Clone)]
struct Point<T> {
    x: Vec<T>,
    y: Vec<T>,
    z: T,
    lam: Vec<T>,
    xsi: Vec<T>,
    eta: Vec<T>,
    mu: Vec<T>,
    zet: T,
    s: Vec<T>,
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

impl<T: Scalar> Sub<'_, T> {
    fn n(&self) -> usize {
        self.low.len()
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    /// `(plam, qlam)` at multipliers `lam`.
    fn pq_lam(&self, lam: &[T]) -> (Vec<T>, Vec<T>) {
        let mut plam = self.p0.to_vec();
        let mut qlam = self.q0.to_vec();
        for (i, &l) in lam.iter().enumerate() {
            for j in 0..self.n() {
                plam[j] += self.p[i][j] * l;
                qlam[j] += self.q[i][j] * l;
            }
        }
        (plam, qlam)
    }

    fn gvec(&self, x: &[T]) -> Vec<T> {
        (0..self.m())
            .map(|i| {
                (0..self.n())
                    .map(|j| {
                        self.p[i][j] / (self.upp[j] - x[j]) + self.q[i][j] / (x[j] - self.low[j])
                    })
                    .sum()
            })
            .collect()
    }

    fn residual(&self, pt: &Point<T>, epsi: T) -> Vec<T> {
        let (plam, qlam) = self.pq_lam(&pt.lam);
        let gvec = self.gvec(&pt.x);
        let mut r = Vec::with_capacity(4 * self.n() + 5 * self.m() + 2);
        for j in 0..self.n() {
            let ux = self.upp[j] - pt.x[j];
            let xl = pt.x[j] - self.low[j];
            r.push(plam[j] / (ux * ux) - qlam[j] / (xl * xl) - pt.xsi[j] + pt.eta[j]);
        }
        for i in 0..self.m() {
            r.push(self.c + self.d * pt.y[i] - pt.mu[i] - pt.lam[i]);
        }
        r.push(self.a0 - pt.zet - self.a * pt.lam.iter().copied().sum::<T>());
        for i in 0..self.m() {
            r.push(gvec[i] - self.a * pt.z - pt.y[i] + pt.s[i] - self.b[i]);
        }
        for j in 0..self.n() {
            r.push(pt.xsi[j] * (pt.x[j] - self.alfa[j]) - epsi);
            r.push(pt.eta[j] * (self.beta[j] - pt.x[j]) - epsi);
        }
        for i in 0..self.m() {
            r.push(pt.mu[i] * pt.y[i] - epsi);
            r.push(pt.lam[i] * pt.s[i] - epsi);
        }
        r.push(pt.zet * pt.z - epsi);
        r
    }

    fn solve(&self, epsimin: T) -> Result<Point<T>, OptimizerError> {
        let (n, m) = (self.n(), self.m());
        let one = T::one();
        let half = T::c(0.5);
        let x: Vec<T> = (0..n)
            .map(|j| half * (self.alfa[j] + self.beta[j]))
            .collect();
        let mut pt = Point {
            xsi: (0..n)
                .map(|j| (one / (x[j] - self.alfa[j])).max(one))
                .collect(),
            eta: (0..n)
                .map(|j| (one / (self.beta[j] - x[j])).max(one))
                .collect(),
            x,
            y: vec![one; m],
            z: one,
            lam: vec![one; m],
            mu: vec![one.max(half * self.c); m],
            zet: one,
            s: vec![one; m],
        };
        let mut epsi = one;
        while epsi > epsimin {
            let mut res = self.residual(&pt, epsi);
            let mut resnorm = res.iter().map(|&v| v * v).sum::<T>().sqrt();
            let mut resmax = max_abs(&res);
            let mut inner = 0;
            while resmax > T::c(0.9) * epsi && inner < 200 {
                inner += 1;
                let d = self.newton_direction(&pt, epsi)?;
                let step = self.max_step(&pt, &d);
                let old = pt.clone();
                let mut steg = step;
                let mut tries = 0;
                let mut resnew = T::c(2.0) * resnorm;
                while resnew > resnorm && tries < 50 {
                    tries += 1;
                    pt = old.advanced(&d, steg);
                    res = self.residual(&pt, epsi);
                    resnew = res.iter().map(|&v| v * v).sum::<T>().sqrt();
                    steg *= half;
                }
                resnorm = resnew;
                resmax = max_abs(&res);
            }
            epsi *= T::c(0.1);
        }
        Ok(pt)
    }

    fn newton_direction(&self, pt: &Point<T>, epsi: T) -> Result<Point<T>, OptimizerError> {
        let (n, m) = (self.n(), self.m());
        let two = T::c(2.0);
        let (plam, qlam) = self.pq_lam(&pt.lam);
        let gvec = self.gvec(&pt.x);
        let mut gg = vec![vec![T::zero(); n]; m];
        let mut delx = vec![T::zero(); n];
        let mut diagx = vec![T::zero(); n];
        for j in 0..n {
            let ux = self.upp[j] - pt.x[j];
            let xl = pt.x[j] - self.low[j];
            let (ux2, xl2) = (ux * ux, xl * xl);
            for i in 0..m {
                gg[i][j] = self.p[i][j] / ux2 - self.q[i][j] / xl2;
            }
            let dpsidx = plam[j] / ux2 - qlam[j] / xl2;
            let xa = pt.x[j] - self.alfa[j];
            let bx = self.beta[j] - pt.x[j];
            delx[j] = dpsidx - epsi / xa + epsi / bx;
            diagx[j] = two * (plam[j] / (ux2 * ux) + qlam[j] / (xl2 * xl))
                + pt.xsi[j] / xa
                + pt.eta[j] / bx;
        }
        let dely: Vec<T> = (0..m)
            .map(|i| self.c + self.d * pt.y[i] - pt.lam[i] - epsi / pt.y[i])
            .collect();
        let delz = self.a0 - self.a * pt.lam.iter().copied().sum::<T>() - epsi / pt.z;
        let dellam: Vec<T> = (0..m)
            .map(|i| gvec[i] - self.a * pt.z - pt.y[i] - self.b[i] + epsi / pt.lam[i])
            .collect();
        let diagy: Vec<T> = (0..m).map(|i| self.d + pt.mu[i] / pt.y[i]).collect();
        let diaglamyi: Vec<T> = (0..m)
            .map(|i| pt.s[i] / pt.lam[i] + T::one() / diagy[i])
            .collect();

        let (dx, dz, dlam) = if m < n {
            let mut mat = vec![vec![T::zero(); m + 1]; m + 1];
            let mut rhs = vec![T::zero(); m + 1];
            for i in 0..m {
                let mut b = dellam[i] + dely[i] / diagy[i];
                for j in 0..n {
                    b -= gg[i][j] * delx[j] / diagx[j];
                }
                rhs[i] = b;
                for k in 0..m {
                    let mut v: T = (0..n).map(|j| gg[i][j] * gg[k][j] / diagx[j]).sum();
                    if i == k {
                        v += diaglamyi[i];
                    }
                    mat[i][k] = v;
                }
                mat[i][m] = self.a;
                mat[m][i] = self.a;
            }
            mat[m][m] = -pt.zet / pt.z;
            rhs[m] = delz;
            let sol = dense::solve(mat, rhs).map_err(|_| OptimizerError::SubproblemSingular)?;
            let dlam: Vec<T> = sol[..m].to_vec();
            let dz = sol[m];
            let dx: Vec<T> = (0..n)
                .map(|j| {
                    let g: T = (0..m).map(|i| gg[i][j] * dlam[i]).sum();
                    -delx[j] / diagx[j] - g / diagx[j]
                })
                .collect();
            (dx, dz, dlam)
        } else {
            let dellamyi: Vec<T> = (0..m).map(|i| dellam[i] + dely[i] / diagy[i]).collect();
            let mut mat = vec![vec![T::zero(); n + 1]; n + 1];
            let mut rhs = vec![T::zero(); n + 1];
            for j in 0..n {
                for k in 0..n {
                    let mut v: T = (0..m).map(|i| gg[i][j] * gg[i][k] / diaglamyi[i]).sum();
                    if j == k {
                        v += diagx[j];
                    }
                    mat[j][k] = v;
                }
                let axz: T = -(0..m).map(|i| gg[i][j] * self.a / diaglamyi[i]).sum::<T>();
                mat[j][n] = axz;
                mat[n][j] = axz;
                let bx = delx[j]
                    + (0..m)
                        .map(|i| gg[i][j] * dellamyi[i] / diaglamyi[i])
                        .sum::<T>();
                rhs[j] = -bx;
            }
            mat[n][n] = pt.zet / pt.z + (0..m).map(|i| self.a * self.a / diaglamyi[i]).sum::<T>();
            rhs[n] = -(delz
                - (0..m)
                    .map(|i| self.a * dellamyi[i] / diaglamyi[i])
                    .sum::<T>());
            let sol = dense::solve(mat, rhs).map_err(|_| OptimizerError::SubproblemSingular)?;
            let dx = sol[..n].to_vec();
            let dz = sol[n];
            let dlam = (0..m)
                .map(|i| {
                    let g: T = (0..n).map(|j| gg[i][j] * dx[j]).sum();
                    g / diaglamyi[i] - dz * self.a / diaglamyi[i] + dellamyi[i] / diaglamyi[i]
                })
                .collect();
            (dx, dz, dlam)
        };
        let dy: Vec<T> = (0..m)
            .map(|i| -dely[i] / diagy[i] + dlam[i] / diagy[i])
            .collect();
        let dxsi = (0..n)
            .map(|j| {
                let xa = pt.x[j] - self.alfa[j];
                -pt.xsi[j] + epsi / xa - pt.xsi[j] * dx[j] / xa
            })
            .collect();
        let deta = (0..n)
            .map(|j| {
                let bx = self.beta[j] - pt.x[j];
                -pt.eta[j] + epsi / bx + pt.eta[j] * dx[j] / bx
            })
            .collect();
        let dmu = (0..m)
            .map(|i| -pt.mu[i] + epsi / pt.y[i] - pt.mu[i] * dy[i] / pt.y[i])
            .collect();
        let dzet = -pt.zet + epsi / pt.z - pt.zet * dz / pt.z;
        let ds = (0..m)
            .map(|i| -pt.s[i] + epsi / pt.lam[i] - pt.s[i] * dlam[i] / pt.lam[i])
            .collect();
        Ok(Point {
            x: dx,
            y: dy,
            z: dz,
            lam: dlam,
            xsi: dxsi,
            eta: deta,
            mu: dmu,
            zet: dzet,
            s: ds,
        })
    }

    /// Fraction-to-the-boundary step length.
    fn max_step(&self, pt: &Point<T>, d: &Point<T>) -> T {
        let f = T::c(-1.01);
        let mut worst = T::one();
        let mut see = |v: T, dv: T| worst = worst.max(f * dv / v);
        for i in 0..self.m() {
            see(pt.y[i], d.y[i]);
            see(pt.lam[i], d.lam[i]);
            see(pt.mu[i], d.mu[i]);
            see(pt.s[i], d.s[i]);
        }
        see(pt.z, d.z);
        see(pt.zet, d.zet);
        for j in 0..self.n() {
            see(pt.xsi[j], d.xsi[j]);
            see(pt.eta[j], d.eta[j]);
            see(pt.x[j] - self.alfa[j], d.x[j]);
            see(self.beta[j] - pt.x[j], -d.x[j]);
        }
        T::one() / worst
    }
}

impl<T: Scalar> Point<T> {
    fn advanced(&self, d: &Point<T>, t: T) -> Self {
        let add = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x + t * y).collect();
        Point {
            x: add(&self.x, &d.x),
            y: add(&self.y, &d.y),
            z: self.z + t * d.z,
            lam: add(&self.lam, &d.lam),
            xsi: add(&self.xsi, &d.xsi),
            eta: add(&self.eta, &d.eta),
            mu: add(&self.mu, &d.mu),
            zet: self.zet + t * d.zet,
            s: add(&self.s, &d.s),
        }
    }
}

/// Constraint values `g_i(x) <= 0` with their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub value: T,
    pub gradient: Vec<T>,
}

/// One MMA update of `x` for `min f0` subject to `g_i <= 0` and `xmin <= x <= xmax`.
#[allow(clippy::too_many_arguments)]
pub fn mma_step<T: Scalar>(
    x: &[T],
    xmin: &[T],
    xmax: &[T],
    df0: &[T],
    constraints: &[Constraint<T>],
    state: &mut MmaState<T>,
    params: &MmaParams,
) -> Result<MmaStep<T>, OptimizerError> {
    let n = x.len();
    let m = constraints.len();
    let dims_ok = xmin.len() == n
        && xmax.len() == n
        && df0.len() == n
        && state.len() == n
        && constraints.iter().all(|c| c.gradient.len() == n);
    if !dims_ok {
        return Err(OptimizerError::DimensionMismatch);
    }
    if let Some(i) = (0..n).find(|&i| !(xmin[i] <= x[i] && x[i] <= xmax[i])) {
        return Err(OptimizerError::OutOfBounds { variable: i });
    }
    let finite = df0.iter().all(|g| g.is_finite())
        && constraints
            .iter()
            .all(|c| c.value.is_finite() && c.gradient.iter().all(|g| g.is_finite()));
    if !finite {
        return Err(OptimizerError::NonFinite);
    }
    let pr = |v: f64| T::c(v);
    let range: Vec<T> = (0..n).map(|j| xmax[j] - xmin[j]).collect();
    state.iteration += 1;
    if state.iteration <= 2 {
        for j in 0..n {
            state.low[j] = x[j] - pr(params.asyinit) * range[j];
            state.upp[j] = x[j] + pr(params.asyinit) * range[j];
        }
    } else {
        for j in 0..n {
            let (d1, d2) = (x[j] - state.xold1[j], state.xold1[j] - state.xold2[j]);
            let stall = pr(params.stall_tol) * range[j];
            let zzz = if d1.abs() <= stall || d2.abs() <= stall {
                T::zero()
            } else {
                d1 * d2
            };
            let factor = if zzz > T::zero() {
                pr(params.asyincr)
            } else if zzz < T::zero() {
                pr(params.asydecr)
            } else {
                T::one()
            };
            let low = x[j] - factor * (state.xold1[j] - state.low[j]);
            let upp = x[j] + factor * (state.upp[j] - state.xold1[j]);
            state.low[j] = low
                .max(x[j] - pr(10.0) * range[j])
                .min(x[j] - pr(0.01) * range[j]);
            state.upp[j] = upp
                .max(x[j] + pr(0.01) * range[j])
                .min(x[j] + pr(10.0) * range[j]);
        }
    }
    let (low, upp) = (&state.low, &state.upp);
    let mut alfa = vec![T::zero(); n];
    let mut beta = vec![T::zero(); n];
    let mut p0 = vec![T::zero(); n];
    let mut q0 = vec![T::zero(); n];
    let mut p = vec![vec![T::zero(); n]; m];
    let mut q = vec![vec![T::zero(); n]; m];
    let mut b: Vec<T> = constraints.iter().map(|c| -c.value).collect();
    for j in 0..n {
        alfa[j] = (low[j] + pr(params.albefa) * (x[j] - low[j]))
            .max(x[j] - pr(params.move_limit) * range[j])
            .max(xmin[j]);
        beta[j] = (upp[j] - pr(params.albefa) * (upp[j] - x[j]))
            .min(x[j] + pr(params.move_limit) * range[j])
            .min(xmax[j]);
        let xmami = range[j].max(pr(1e-5));
        let ux1 = upp[j] - x[j];
        let xl1 = x[j] - low[j];
        let split = |g: T| {
            let (pos, neg) = (g.max(T::zero()), (-g).max(T::zero()));
            let reg = pr(0.001) * (pos + neg) + pr(params.raa0) / xmami;
            ((pos + reg) * ux1 * ux1, (neg + reg) * xl1 * xl1)
        };
        (p0[j], q0[j]) = split(df0[j]);
        for (i, c) in constraints.iter().enumerate() {
            (p[i][j], q[i][j]) = split(c.gradient[j]);
            b[i] += p[i][j] / ux1 + q[i][j] / xl1;
        }
    }
    let sub = Sub {
        low,
        upp,
        alfa: &alfa,
        beta: &beta,
        p0: &p0,
        q0: &q0,
        p: &p,
        q: &q,
        b: &b,
        a0: pr(params.a0),
        a: pr(params.a),
        c: pr(params.c),
        d: pr(params.d),
    };
    let pt = sub.solve(pr(params.epsimin))?;
    let kkt = max_abs(&sub.residual(&pt, T::zero()));
    state.xold2 = std::mem::replace(&mut state.xold1, x.to_vec());
    let xnew: Vec<T> =
        pt.x.iter()
            .zip(xmin.iter().zip(xmax))
            .map(|(&v, (&lo, &hi))| v.max(lo).min(hi))
            .collect();
    Ok(MmaStep {
        x: xnew,
        y: pt.y,
        lambda: pt.lam,
        kkt_residual: kkt,
    })
}
