//! The first Heisenberg group: explicit heat kernel, Carnot-Caratheodory
//! and Riemannian-approximation distances, and the constants of the
//! smoothed left-invariant metric.
//!
//! Coordinates `(x, y, u)` with group law
//! `(z, u) (z', u') = (z + z', u + u' - Im(z conj(z')) / 2)` and
//! left-invariant frame `X = d_x - (y/2) d_u`, `Y = d_y + (x/2) d_u`,
//! `U = d_u`, `[X, Y] = U`.
//!
//! The heat kernel (Gaveau's formula) is evaluated through its even real
//! form
//!
//! `h_t(z, u) = 2/(4 pi t)^2 int cos(lambda u / t)
//!              exp(-|z|^2 lambda coth(lambda) / (4t)) lambda/sinh(lambda) dlambda`,
//!
//! by composite Gauss-Legendre panels sized to both the exponential decay
//! and the `cos` oscillation, with the removable singularity at 0 handled
//! by series.  Partial derivatives come from differentiating under the
//! integral.

use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::solve_psd;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

const PI: f64 = std::f64::consts::PI;

/// A point of the Heisenberg group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeisenbergPoint {
    pub x: f64,
    pub y: f64,
    pub u: f64,
}

impl HeisenbergPoint {
    pub fn new(x: f64, y: f64, u: f64) -> Self {
        Self { x, y, u }
    }

    pub fn origin() -> Self {
        Self { x: 0.0, y: 0.0, u: 0.0 }
    }

    /// Group product `self . other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            x: self.x + other.x,
            y: self.y + other.y,
            // Im(z conj(z')) = y x' - x y'
            u: self.u + other.u - 0.5 * (self.y * other.x - self.x * other.y),
        }
    }

    pub fn inverse(&self) -> Self {
        Self { x: -self.x, y: -self.y, u: -self.u }
    }

    /// Anisotropic dilation `(z, u) -> (l z, l^2 u)`.
    pub fn dilate(&self, l: f64) -> Self {
        Self { x: l * self.x, y: l * self.y, u: l * l * self.u }
    }

    /// Rotation about the vertical axis.
    pub fn rotate(&self, alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Self { x: c * self.x - s * self.y, y: s * self.x + c * self.y, u: self.u }
    }

    pub fn zn(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }
}

/// Coefficients of a tangent vector in the left-invariant frame (X, Y, U).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FrameCoefficients {
    /// Squared norm in the epsilon-Riemannian approximation:
    /// `a^2 + b^2 + (c/eps)^2`.
    pub fn riem_norm_sq(&self, eps: f64) -> f64 {
        self.a * self.a + self.b * self.b + (self.c / eps).powi(2)
    }

    /// Carnot-Caratheodory pseudo-norm squared: infinite off the
    /// horizontal distribution.
    pub fn cc_norm_sq(&self) -> f64 {
        if self.c == 0.0 {
            self.a * self.a + self.b * self.b
        } else {
            f64::INFINITY
        }
    }
}

// ---------------------------------------------------------------------------
// Gaveau kernel
// ---------------------------------------------------------------------------

/// Raw lambda-integrals of the kernel at one `(|z|^2, u)` line: the value
/// and the partials needed downstream.
#[derive(Debug, Clone, Default)]
pub(crate) struct KernelRow {
    pub h: Vec<f64>,
    /// d h / d(|z|^2)
    pub f1: Vec<f64>,
    /// d h / du
    pub fu: Vec<f64>,
    pub f11: Vec<f64>,
    pub f1u: Vec<f64>,
    pub fuu: Vec<f64>,
}

fn lambda_panels(zn2: f64, umax: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
    let rate = 1.0 + zn2 / (4.0 * t);
    let lam_max = (42.0 / rate + 1.0).min(40.0);
    let freq = umax / t;
    let npan = ((lam_max * freq / (2.0 * PI) * 3.0).ceil() as usize).clamp(24, 8000);
    let rule = gauss_legendre(16);
    let mut nodes = Vec::with_capacity(npan * 16);
    let mut wts = Vec::with_capacity(npan * 16);
    for p in 0..npan {
        let lo = lam_max * p as f64 / npan as f64;
        let hi = lam_max * (p + 1) as f64 / npan as f64;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(mid + half * x);
            wts.push(half * w);
        }
    }
    (nodes, wts)
}

/// Evaluate the kernel and its partials at fixed `|z|^2` for a batch of
/// vertical coordinates.
pub(crate) fn kernel_line(zn2: f64, us: &[f64], t: f64) -> KernelRow {
    let umax = us.iter().fold(0.0f64, |a, b| a.max(b.abs())) + 1e-9;
    let (lam, lw) = lambda_panels(zn2, umax, t);
    let n = lam.len();
    // per-lambda factors
    let mut e = vec![0.0f64; n];
    let mut a1 = vec![0.0f64; n];
    for i in 0..n {
        let l = lam[i];
        let (g, lcoth) = if l < 1e-4 {
            (1.0 - l * l / 6.0 + 7.0 * l.powi(4) / 360.0, 1.0 + l * l / 3.0 - l.powi(4) / 45.0)
        } else {
            (l / l.sinh(), l / l.tanh())
        };
        a1[i] = -lcoth / (4.0 * t);
        e[i] = (zn2 * a1[i]).exp() * g * lw[i];
    }
    let pref = 2.0 / (4.0 * PI * t).powi(2) * 2.0; // x2: even integrand, half line
    let m = us.len();
    let mut row = KernelRow {
        h: vec![0.0; m],
        f1: vec![0.0; m],
        fu: vec![0.0; m],
        f11: vec![0.0; m],
        f1u: vec![0.0; m],
        fuu: vec![0.0; m],
    };
    for (j, &u) in us.iter().enumerate() {
        let (mut h, mut f1, mut fu, mut f11, mut f1u, mut fuu) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let (s, c) = (lam[i] * u / t).sin_cos();
            let ce = c * e[i];
            let se = s * e[i] * (lam[i] / t);
            h += ce;
            f1 += ce * a1[i];
            f11 += ce * a1[i] * a1[i];
            fu -= se;
            f1u -= se * a1[i];
            fuu -= ce * (lam[i] / t) * (lam[i] / t);
        }
        row.h[j] = pref * h;
        row.f1[j] = pref * f1;
        row.fu[j] = pref * fu;
        row.f11[j] = pref * f11;
        row.f1u[j] = pref * f1u;
        row.fuu[j] = pref * fuu;
    }
    row
}

/// Kernel value with logarithmic derivatives at one point.
#[derive(Debug, Clone, Serialize)]
pub struct KernelEval {
    pub point: HeisenbergPoint,
    pub t: f64,
    pub value: f64,
    /// `X log h`, `Y log h`, `U log h` at the point.
    pub x_log: f64,
    pub y_log: f64,
    pub u_log: f64,
}

/// Evaluate the heat kernel at a point (relative error about 1e-8), with
/// frame logarithmic derivatives by differentiation under the integral.
pub fn gaveau_kernel(p: &HeisenbergPoint, t: f64) -> Result<KernelEval> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("time must be positive".into()));
    }
    let zn2 = p.x * p.x + p.y * p.y;
    let row = kernel_line(zn2, &[p.u], t);
    let h = row.h[0];
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "kernel quadrature unreliable at |z| = {:.3}, u = {:.3}",
            zn2.sqrt(),
            p.u
        )));
    }
    let hx = 2.0 * p.x * row.f1[0] - 0.5 * p.y * row.fu[0];
    let hy = 2.0 * p.y * row.f1[0] + 0.5 * p.x * row.fu[0];
    Ok(KernelEval {
        point: *p,
        t,
        value: h,
        x_log: hx / h,
        y_log: hy / h,
        u_log: row.fu[0] / h,
    })
}

// ---------------------------------------------------------------------------
// Quadrature grid adapted to the kernel
// ---------------------------------------------------------------------------

/// Grid construction parameters.
#[derive(Debug, Clone)]
pub struct GridParams {
    /// Gauss-Hermite order per horizontal axis.
    pub nh: usize,
    /// Gauss-Legendre points per vertical panel.
    pub n_gl: usize,
    /// Vertical cutoff in units of `t`.
    pub ucap_over_t: f64,
    /// Per-line relative density floor.
    pub rel_floor: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { nh: 48, n_gl: 12, ucap_over_t: 26.0, rel_floor: 1e-12 }
    }
}

/// Node cloud with Lebesgue weights, kernel values and partials.
#[derive(Debug)]
pub struct HeisenbergGrid {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    /// Lebesgue weights.
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    /// Frame derivatives of the kernel.
    pub hx: Vec<f64>,
    pub hy: Vec<f64>,
    pub hu: Vec<f64>,
    pub(crate) f1: Vec<f64>,
    pub(crate) f11: Vec<f64>,
    pub(crate) f1u: Vec<f64>,
    pub(crate) fuu: Vec<f64>,
}

fn vertical_line(width: f64, ucap: f64, n_gl: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(n_gl);
    let mut edges = vec![0.0f64];
    for f in [0.6, 1.6, 3.5, 7.0, 13.0, 24.0] {
        let e = f * width;
        if e < ucap {
            edges.push(e);
        }
    }
    edges.push(ucap);
    let mut us = Vec::new();
    let mut ws = Vec::new();
    for win in edges.windows(2) {
        let mid = 0.5 * (win[0] + win[1]);
        let half = 0.5 * (win[1] - win[0]);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            us.push(mid + half * x);
            ws.push(half * w);
        }
    }
    // mirror
    let mut all_u = Vec::with_capacity(2 * us.len());
    let mut all_w = Vec::with_capacity(2 * ws.len());
    for i in (0..us.len()).rev() {
        all_u.push(-us[i]);
        all_w.push(ws[i]);
    }
    all_u.extend(us);
    all_w.extend(ws);
    (all_u, all_w)
}

impl HeisenbergGrid {
    pub fn build(t: f64, params: &GridParams) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput("time must be positive".into()));
        }
        let rule = crate::quad::gauss_hermite(params.nh);
        let scale = 2.0 * t.sqrt();
        let xs: Vec<f64> = rule.nodes.iter().map(|v| scale * v).collect();
        let wx: Vec<f64> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(v, w)| scale * w * (v * v).exp())
            .collect();
        let nh = xs.len();
        let ucap = params.ucap_over_t * t;
        // one kernel line per (i <= j) pair; mirror fills the rest
        let pairs: Vec<(usize, usize)> = (0..nh).flat_map(|i| (i..nh).map(move |j| (i, j))).collect();
        let lines: Vec<Option<(Vec<f64>, Vec<f64>, KernelRow)>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let zn2 = xs[i] * xs[i] + xs[j] * xs[j];
                if zn2 > 4.0 * t * 70.0 {
                    return None;
                }
                let width = (t * t / 3.0 + t * zn2.min(300.0 * t) / 6.0).sqrt();
                let (us, ws) = vertical_line(width, ucap, params.n_gl);
                let row = kernel_line(zn2, &us, t);
                Some((us, ws, row))
            })
            .collect();

        let mut g = HeisenbergGrid {
            t,
            x: Vec::new(),
            y: Vec::new(),
            u: Vec::new(),
            w: Vec::new(),
            h: Vec::new(),
            hx: Vec::new(),
            hy: Vec::new(),
            hu: Vec::new(),
            f1: Vec::new(),
            f11: Vec::new(),
            f1u: Vec::new(),
            fuu: Vec::new(),
        };
        for (pi, &(i, j)) in pairs.iter().enumerate() {
            let Some((us, ws, row)) = &lines[pi] else { continue };
            let hmax = row.h.iter().cloned().fold(0.0f64, f64::max);
            if hmax <= 0.0 {
                continue;
            }
            let floor = params.rel_floor * hmax;
            // the pair (i, j) stands for (x, y) and, when i != j, (y, x)
            let mut emit = |xi: f64, yj: f64, wxy: f64| {
                for (k, (&uu, &wu)) in us.iter().zip(ws.iter()).enumerate() {
                    if row.h[k] < floor {
                        continue;
                    }
                    g.x.push(xi);
                    g.y.push(yj);
                    g.u.push(uu);
                    g.w.push(wxy * wu);
                    g.h.push(row.h[k]);
                    g.hx.push(2.0 * xi * row.f1[k] - 0.5 * yj * row.fu[k]);
                    g.hy.push(2.0 * yj * row.f1[k] + 0.5 * xi * row.fu[k]);
                    g.hu.push(row.fu[k]);
                    g.f1.push(row.f1[k]);
                    g.f11.push(row.f11[k]);
                    g.f1u.push(row.f1u[k]);
                    g.fuu.push(row.fuu[k]);
                }
            };
            emit(xs[i], xs[j], wx[i] * wx[j]);
            if i != j {
                emit(xs[j], xs[i], wx[i] * wx[j]);
            }
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Total kernel mass on the grid (1 up to truncation).
    pub fn mass(&self) -> f64 {
        self.w.iter().zip(&self.h).map(|(w, h)| w * h).sum()
    }

    /// `int ((X log h)^2 + (Y log h)^2) h dL`; equals `2/t`.
    pub fn horizontal_identity(&self) -> f64 {
        (0..self.len())
            .map(|k| self.w[k] * (self.hx[k] * self.hx[k] + self.hy[k] * self.hy[k]) / self.h[k])
            .sum()
    }

    /// Same integral computed with the right-invariant frame
    /// `Xhat = X + y U`, `Yhat = Y - x U`; also `2/t`.
    pub fn horizontal_identity_right(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                let xh = self.hx[k] + self.y[k] * self.hu[k];
                let yh = self.hy[k] - self.x[k] * self.hu[k];
                self.w[k] * (xh * xh + yh * yh) / self.h[k]
            })
            .sum()
    }

    /// `int (U log h)^2 h dL`; finite, reported.
    pub fn vertical_integral(&self) -> f64 {
        (0..self.len()).map(|k| self.w[k] * self.hu[k] * self.hu[k] / self.h[k]).sum()
    }

    /// Second moment of the vertical coordinate under the kernel.
    pub fn var_u(&self) -> f64 {
        (0..self.len()).map(|k| self.w[k] * self.h[k] * self.u[k] * self.u[k]).sum()
    }

    /// `int y^2 ((X log h)^2 + (Y log h)^2) h dL`: the squared norm of the
    /// explicit feasible field for the X-translation solve, hence an upper
    /// bound for `g(X)`.
    pub fn feasible_cap_x(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                self.w[k] * self.y[k] * self.y[k] * (self.hx[k] * self.hx[k] + self.hy[k] * self.hy[k]) / self.h[k]
            })
            .sum()
    }
}

/// Horizontal and vertical log-gradient integrals (the `2/t` identity and
/// the finite vertical integral).
pub fn grad_log_identity(grid: &HeisenbergGrid) -> (f64, f64) {
    (grid.horizontal_identity(), grid.vertical_integral())
}

/// Norm of the elevator field `(Y log rho) X - (X log rho) Y` transporting
/// the kernel vertically; equals `sqrt(2/t)`.
pub fn elevator_norm(grid: &HeisenbergGrid) -> f64 {
    grid.horizontal_identity().sqrt()
}

/// Max continuity-equation residual of the elevator field against
/// `-U rho` over low-degree test functions:
/// `|int (-U h) f - int <V, grad_H f> h| / ||grad_H f||_{L^2(h)}`.
pub fn elevator_residual(grid: &HeisenbergGrid) -> f64 {
    // test functions f with coordinate partials (fx, fy, fu)
    let tests: Vec<Box<dyn Fn(f64, f64, f64) -> (f64, f64, f64) + Sync>> = vec![
        Box::new(|_x, _y, _u| (0.0, 0.0, 1.0)),                    // f = u
        Box::new(|x, _y, u| (u, 0.0, x)),                          // f = x u
        Box::new(|_x, y, u| (0.0, u, y)),                          // f = y u
        Box::new(|x, y, _u| (y, x, 0.0)),                          // f = x y
        Box::new(|x, y, u| (2.0 * x * u, 2.0 * y * u, x * x + y * y)), // f = |z|^2 u
    ];
    let mut worst = 0.0f64;
    for f in &tests {
        let mut lhs = 0.0; // int h * du f  (= int (-U h) f by parts)
        let mut rhs = 0.0; // int <V, grad_H f> h = int (Yh Xf - Xh Yf)
        let mut norm = 0.0;
        for k in 0..grid.len() {
            let (fx, fy, fu) = f(grid.x[k], grid.y[k], grid.u[k]);
            let xf = fx - 0.5 * grid.y[k] * fu;
            let yf = fy + 0.5 * grid.x[k] * fu;
            lhs += grid.w[k] * grid.h[k] * fu;
            rhs += grid.w[k] * (grid.hy[k] * xf - grid.hx[k] * yf);
            norm += grid.w[k] * grid.h[k] * (xf * xf + yf * yf);
        }
        if norm > 0.0 {
            worst = worst.max((lhs - rhs).abs() / norm.sqrt());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Metric constants by Galerkin projection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Sector {
    X,
    Y,
    U,
}

fn sector_indices(d: usize, sector: Sector) -> Vec<(usize, usize, usize)> {
    let mut v = Vec::new();
    for a in 0..=d {
        for b in 0..=d - a {
            for c in 0..=d - a - b {
                let keep = match sector {
                    // source -Xhat h is odd under (x,u) -> (-x,-u) and even
                    // under (y,u) -> (-y,-u)
                    Sector::X => (a + c) % 2 == 1 && (b + c) % 2 == 0,
                    Sector::Y => (b + c) % 2 == 1 && (a + c) % 2 == 0,
                    // source -U h is odd in u, invariant in x, y
                    Sector::U => a % 2 == 0 && b % 2 == 0 && c % 2 == 1,
                };
                if keep && (a, b, c) != (0, 0, 0) {
                    v.push((a, b, c));
                }
            }
        }
    }
    v
}

struct SectorAssembly {
    gram: Vec<f64>,
    load: Vec<f64>,
    m: usize,
    /// index positions of the polynomial part per degree, for nested solves
    poly_count_by_degree: Vec<(usize, usize)>,
}

/// Assemble Gram and load for one sector at the top degree, polynomial
/// tensor basis plus kernel-adapted enrichment functions.
fn assemble_sector(grid: &HeisenbergGrid, sector: Sector, degrees: &[usize]) -> SectorAssembly {
    let top = *degrees.iter().max().unwrap();
    let mut idx = sector_indices(top, sector);
    // order indices by total degree so lower-degree bases are prefixes
    idx.sort_by_key(|&(a, b, c)| (a + b + c, a, b, c));
    let poly_count_by_degree: Vec<(usize, usize)> = degrees
        .iter()
        .map(|&d| (d, idx.iter().filter(|&&(a, b, c)| a + b + c <= d).count()))
        .collect();
    let n_poly = idx.len();
    let n_enrich = 2; // kernel-adapted elements appended after the polynomials
    let m = n_poly + n_enrich;

    let sx = grid.x.iter().fold(0.0f64, |a, &b| a.max(b.abs())) * 1.0001;
    let su = grid.u.iter().fold(0.0f64, |a, &b| a.max(b.abs())) * 1.0001;

    let nn = grid.len();
    let nthreads = rayon::current_num_threads().max(1);
    let chunk = nn.div_ceil(nthreads);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..nthreads)
        .into_par_iter()
        .map(|ti| {
            let lo = ti * chunk;
            let hi = ((ti + 1) * chunk).min(nn);
            let mut gram = vec![0.0f64; m * m];
            let mut load = vec![0.0f64; m];
            let mut vx = vec![0.0f64; top + 1];
            let mut dx = vec![0.0f64; top + 1];
            let mut vy = vec![0.0f64; top + 1];
            let mut dy = vec![0.0f64; top + 1];
            let mut vu = vec![0.0f64; top + 1];
            let mut du = vec![0.0f64; top + 1];
            let mut gxp = vec![0.0f64; m];
            let mut gyp = vec![0.0f64; m];
            let mut src = vec![0.0f64; m];
            for k in lo..hi {
                let (x, y, u) = (grid.x[k], grid.y[k], grid.u[k]);
                crate::elliptic::cheb_eval(x, sx, top, &mut vx, &mut dx);
                crate::elliptic::cheb_eval(y, sx, top, &mut vy, &mut dy);
                crate::elliptic::cheb_eval(u, su, top, &mut vu, &mut du);
                for (q, &(a, b, c)) in idx.iter().enumerate() {
                    let fx = dx[a] * vy[b] * vu[c];
                    let fy = vx[a] * dy[b] * vu[c];
                    let fu = vx[a] * vy[b] * du[c];
                    gxp[q] = fx - 0.5 * y * fu;
                    gyp[q] = fy + 0.5 * x * fu;
                    src[q] = match sector {
                        Sector::X => fx + 0.5 * y * fu,
                        Sector::Y => fy - 0.5 * x * fu,
                        Sector::U => fu,
                    };
                }
                // kernel-adapted enrichment: functions of M = U log h with
                // coordinate partials from the second derivatives
                let h = grid.h[k];
                let mm = grid.hu[k] / h; // U log h
                let lx = grid.hx[k] / h;
                let ly = grid.hy[k] / h;
                let m1 = grid.f1u[k] / h - (grid.hu[k] / h) * (grid.f1[k] / h); // dM/d|z|^2
                let mu = grid.fuu[k] / h - mm * mm; // dM/du
                let _ = (lx, ly);
                let en: [(f64, f64, f64); 2] = match sector {
                    // phi = y M and phi = x M^2
                    Sector::X => [
                        (2.0 * x * y * m1, mm + 2.0 * y * y * m1, y * mu),
                        (mm * mm + 4.0 * x * x * mm * m1, 4.0 * x * y * mm * m1, 2.0 * x * mm * mu),
                    ],
                    // mirror image: phi = x M and phi = y M^2
                    Sector::Y => [
                        (mm + 2.0 * x * x * m1, 2.0 * x * y * m1, x * mu),
                        (4.0 * x * y * mm * m1, mm * mm + 4.0 * y * y * mm * m1, 2.0 * y * mm * mu),
                    ],
                    // phi = M and phi = |z|^2 M
                    Sector::U => {
                        let r2 = x * x + y * y;
                        [
                            (2.0 * x * m1, 2.0 * y * m1, mu),
                            (2.0 * x * mm + r2 * 2.0 * x * m1, 2.0 * y * mm + r2 * 2.0 * y * m1, r2 * mu),
                        ]
                    }
                };
                for (e, &(fx, fy, fu)) in en.iter().enumerate() {
                    let q = n_poly + e;
                    gxp[q] = fx - 0.5 * y * fu;
                    gyp[q] = fy + 0.5 * x * fu;
                    src[q] = match sector {
                        Sector::X => fx + 0.5 * y * fu,
                        Sector::Y => fy - 0.5 * x * fu,
                        Sector::U => fu,
                    };
                }
                let wh = grid.w[k] * h;
                let wl = grid.w[k] * h;
                for i in 0..m {
                    load[i] += wl * src[i];
                    let gi_x = gxp[i];
                    let gi_y = gyp[i];
                    let row = i * m;
                    for j in 0..=i {
                        gram[row + j] += wh * (gi_x * gxp[j] + gi_y * gyp[j]);
                    }
                }
            }
            (gram, load)
        })
        .collect();

    let mut gram = vec![0.0f64; m * m];
    let mut load = vec![0.0f64; m];
    for (g, l) in partials {
        for (a, b) in gram.iter_mut().zip(&g) {
            *a += b;
        }
        for (a, b) in load.iter_mut().zip(&l) {
            *a += b;
        }
    }
    for i in 0..m {
        for j in 0..i {
            gram[j * m + i] = gram[i * m + j];
        }
    }
    SectorAssembly { gram, load, m, poly_count_by_degree }
}

fn solve_nested(asm: &SectorAssembly) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for &(deg, npoly) in &asm.poly_count_by_degree {
        // sub-problem: first npoly polynomial elements + the enrichment tail
        let keep: Vec<usize> = (0..npoly).chain(asm.m - 2..asm.m).collect();
        let mk = keep.len();
        let mut gram = vec![0.0f64; mk * mk];
        let mut load = vec![0.0f64; mk];
        for (ii, &i) in keep.iter().enumerate() {
            load[ii] = asm.load[i];
            for (jj, &j) in keep.iter().enumerate() {
                gram[ii * mk + jj] = asm.gram[i * asm.m + j];
            }
        }
        let (_, q, _) = solve_psd(&gram, &load, mk, 1e-12);
        out.push((deg, q));
    }
    out
}

/// Estimated constants of the smoothed left-invariant metric.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub t: f64,
    /// Galerkin lower bounds of `g(X)` by basis degree (nondecreasing).
    pub g_x_by_degree: Vec<(usize, f64)>,
    /// Final lower bound of `g(X)`.
    pub g_x: f64,
    /// `g(Y)` at the top degree (equals `g_x` by symmetry).
    pub g_y: f64,
    /// Lower bounds of the vertical coefficient `g(U)` by degree.
    pub g_u_by_degree: Vec<(usize, f64)>,
    pub g_u: f64,
    /// `K` lower bound: `sqrt(g(X))`.
    pub k_lower: f64,
    /// `K / kappa` estimate: `sqrt(g(U))` (the squared value is `g_u`).
    pub kk_ratio: f64,
    /// Elevator ceiling for `g(U)`: `2/t`.
    pub elevator_cap: f64,
    /// Feasible-field ceiling for `g(X)`:
    /// `int y^2 |grad_H log h|^2 h dL`.
    pub feasible_cap_x: f64,
    /// Positive margin `sqrt(2) - kk_ratio` (at `t = 1` scaling).
    pub kk_margin: f64,
    pub degrees: Vec<usize>,
}

/// Galerkin estimates of the metric constants, with monotone degree sweeps
/// and the explicit-field sanity caps.
pub fn estimate_constants(grid: &HeisenbergGrid, degrees: &[usize]) -> Result<ConstantsReport> {
    if degrees.is_empty() {
        return Err(Error::InvalidInput("need at least one basis degree".into()));
    }
    let mut degrees = degrees.to_vec();
    degrees.sort_unstable();
    let cap_x = grid.feasible_cap_x();
    let cap_u = 2.0 / grid.t;

    let asm_x = assemble_sector(grid, Sector::X, &degrees);
    let g_x_by_degree = solve_nested(&asm_x);
    let asm_y = assemble_sector(grid, Sector::Y, &degrees);
    let g_y = *solve_nested(&asm_y).last().map(|(_, q)| q).unwrap();
    let asm_u = assemble_sector(grid, Sector::U, &degrees);
    let g_u_by_degree = solve_nested(&asm_u);

    let g_x = g_x_by_degree.last().unwrap().1;
    let g_u = g_u_by_degree.last().unwrap().1;
    if g_x > cap_x * (1.0 + 1e-6) {
        return Err(Error::Diagnostic(format!(
            "g(X) estimate {g_x} exceeds its feasible-field cap {cap_x}; quadrature unreliable"
        )));
    }
    if g_u > cap_u * (1.0 + 1e-6) {
        return Err(Error::Diagnostic(format!(
            "g(U) estimate {g_u} exceeds the elevator cap {cap_u}; quadrature unreliable"
        )));
    }
    // scale-free ratio: g(U) at time t corresponds to t * g_u at t = 1
    let kk_ratio = (g_u * grid.t).sqrt();
    Ok(ConstantsReport {
        t: grid.t,
        g_x,
        g_y,
        g_u,
        k_lower: g_x.sqrt(),
        kk_ratio,
        elevator_cap: cap_u,
        feasible_cap_x: cap_x,
        kk_margin: 2.0f64.sqrt() - kk_ratio,
        g_x_by_degree,
        g_u_by_degree,
        degrees,
    })
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

/// Carnot-Caratheodory distance from the origin via the geodesic angle
/// equation: with `R = |z|`, solve
/// `(alpha - sin alpha) / (8 sin^2(alpha/2)) = |u| / R^2` on `(0, 2 pi)`
/// by bisection, then `d = alpha R / (2 sin(alpha/2))`.
pub fn d_cc(p: &HeisenbergPoint) -> Result<f64> {
    let r = p.zn();
    let u = p.u.abs();
    if u == 0.0 {
        return Ok(r);
    }
    if r == 0.0 {
        return Ok(2.0 * (PI * u).sqrt());
    }
    let target = u / (r * r);
    // m(alpha) is increasing from 0 to infinity on (0, 2 pi)
    let m = |alpha: f64| {
        let s = (0.5 * alpha).sin();
        (alpha - alpha.sin()) / (8.0 * s * s)
    };
    // for very vertical points use the asymptotic directly
    if target > 1e10 {
        return Ok(2.0 * (PI * u).sqrt());
    }
    let (mut lo, mut hi) = (1e-12, 2.0 * PI - 1e-12);
    if m(hi) < target {
        return Ok(2.0 * (PI * u).sqrt());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let s = (0.5 * alpha).sin();
    if s <= 0.0 {
        return Err(Error::RootFindFailure("degenerate geodesic angle".into()));
    }
    Ok(alpha * r / (2.0 * s))
}

/// CC distance between two points (left-invariance).
pub fn d_cc_pair(p: &HeisenbergPoint, q: &HeisenbergPoint) -> Result<f64> {
    d_cc(&p.inverse().mul(q))
}

/// Left-invariant Riemannian distance from the origin at `eps = 1`:
/// the frame `(X, Y, U)` is orthonormal.
///
/// Geodesics from the identity have closed form: with unit-speed momenta
/// `|v0|^2 + c^2 = 1`, horizontal velocity rotating at rate `c`, the
/// endpoint after time `s` satisfies (`psi = c s`)
///
/// `|z| = 2 sqrt(1 - c^2) |sin(psi/2)| / |c|`,
/// `u  = psi - (1 - c^2)/(2 c^2) (psi - sin psi)` (up to sign),
///
/// and the distance is the smallest `s` over momenta and winding branches.
pub fn d_riem1(p: &HeisenbergPoint) -> Result<f64> {
    let r = p.zn();
    let u = p.u.abs();
    // straight-line cap (feasible curve along the parameter line)
    let cap = (r * r + u * u).sqrt();
    if u < 1e-14 {
        return Ok(r);
    }
    if r < 1e-14 {
        // vertical axis: straight vertical curve (length |u|) vs closed
        // spirals with k full turns, s = 2 sqrt(pi k (u - pi k)), valid
        // once u >= 2 pi k
        let mut best = u;
        let mut k = 1.0f64;
        while 2.0 * PI * k <= u {
            best = best.min(2.0 * (PI * k * (u - PI * k)).sqrt());
            k += 1.0;
        }
        return Ok(best);
    }

    // Parametrize geodesics reaching radius `r` by the swing angle
    // `psi = c s > 0`: the radius equation pins
    // `c(psi) = beta / sqrt(1 + beta^2)` with `beta = 2 |sin(psi/2)| / r`,
    // the endpoint height is
    // `g(psi) = psi + (1 - c^2)/(2 c^2) (psi - sin psi) > 0`,
    // and the arclength is `s = psi / c >= psi`.  The vertical reflection
    // is an isometry, so it suffices to solve `g = |u|`; windings beyond
    // the current best arclength cannot improve it (`s >= psi`) and the
    // scan terminates.
    let c_of = |psi: f64| -> f64 {
        let beta = 2.0 * (0.5 * psi).sin().abs() / r;
        beta / (1.0 + beta * beta).sqrt()
    };
    let g_of = |psi: f64| -> f64 {
        let c = c_of(psi);
        if c <= 0.0 {
            return f64::INFINITY;
        }
        psi + (1.0 - c * c) / (2.0 * c * c) * (psi - psi.sin())
    };
    let mut best = cap;
    let mut consider = |psi: f64, best: &mut f64| {
        let c = c_of(psi);
        if c > 0.0 {
            let s = psi / c;
            if s > 0.0 && s < *best {
                *best = s;
            }
        }
    };
    let mut k = 0usize;
    loop {
        let lo = 2.0 * PI * k as f64;
        if lo >= best || lo > u + 1e-12 {
            // g >= psi, so later windings cannot reach u either
            break;
        }
        let hi = 2.0 * PI * (k + 1) as f64;
        let nscan = 800;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=nscan {
            let frac = (i as f64 + 0.5) / (nscan as f64 + 1.0);
            let psi = lo + (hi - lo) * frac;
            let f = g_of(psi) - u;
            if let Some((ppsi, pf)) = prev {
                if pf.is_finite() && f.is_finite() && pf * f < 0.0 {
                    let (mut a, mut b) = (ppsi, psi);
                    let mut fa = pf;
                    for _ in 0..80 {
                        let mid = 0.5 * (a + b);
                        let fmid = g_of(mid) - u;
                        if fa * fmid <= 0.0 {
                            b = mid;
                        } else {
                            a = mid;
                            fa = fmid;
                        }
                    }
                    consider(0.5 * (a + b), &mut best);
                }
            }
            prev = Some((psi, f));
        }
        k += 1;
        if k > 10_000 {
            return Err(Error::RootFindFailure("winding budget exhausted".into()));
        }
    }
    Ok(best)
}

/// Riemannian approximation distance from the origin for general `eps`,
/// via the dilation isometry
/// `d_Riem(eps)(0, p) = eps d_Riem(1)(0, delta_{1/eps} p)`.
pub fn d_riem(p: &HeisenbergPoint, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    Ok(eps * d_riem1(&p.dilate(1.0 / eps))?)
}

pub fn d_riem_pair(p: &HeisenbergPoint, q: &HeisenbergPoint, eps: f64) -> Result<f64> {
    d_riem(&p.inverse().mul(q), eps)
}

/// Smoothed distance `d_t = K d_Riem(kappa sqrt(t))` with constants from
/// [`estimate_constants`] (or any supplied pair).
pub fn dt_distance(p: &HeisenbergPoint, q: &HeisenbergPoint, t: f64, k: f64, kappa: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("time must be positive".into()));
    }
    Ok(k * d_riem_pair(p, q, kappa * t.sqrt())?)
}

impl ConstantsReport {
    /// `kappa = K / (K/kappa)` from the measured pair.
    pub fn kappa(&self) -> f64 {
        self.k_lower / self.kk_ratio
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use once_cell::sync::Lazy;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_value_at_origin() {
        let v = gaveau_kernel(&HeisenbergPoint::origin(), 1.0).unwrap();
        assert!((v.value - 1.0 / 16.0).abs() < 1e-10, "{}", v.value);
    }

    #[test]
    fn kernel_vertical_slice_closed_form() {
        // h_1(0, u) = sech^2(pi u / 2) / 16
        for u in [0.0, 0.3, 1.0, 2.5] {
            let v = gaveau_kernel(&HeisenbergPoint::new(0.0, 0.0, u), 1.0).unwrap();
            let want = (1.0 / 16.0) / (PI * u / 2.0).cosh().powi(2);
            assert!((v.value / want - 1.0).abs() < 1e-8, "u={u}: {} vs {want}", v.value);
        }
    }

    #[test]
    fn kernel_scaling_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let p = HeisenbergPoint::new(rng.gen::<f64>() * 3.0 - 1.5, rng.gen::<f64>() * 3.0 - 1.5, rng.gen::<f64>() * 4.0 - 2.0);
            let t = 0.5 + rng.gen::<f64>() * 3.0;
            let ht = gaveau_kernel(&p, t).unwrap().value;
            let h1 = gaveau_kernel(&HeisenbergPoint::new(p.x / t.sqrt(), p.y / t.sqrt(), p.u / t), 1.0).unwrap().value;
            assert!((ht * t * t / h1 - 1.0).abs() < 1e-9, "{} vs {}", ht * t * t, h1);
        }
    }

    #[test]
    fn kernel_log_derivatives_match_finite_differences() {
        let p = HeisenbergPoint::new(0.8, -0.4, 0.6);
        let t = 1.0;
        let e = 1e-5;
        let v = gaveau_kernel(&p, t).unwrap();
        let fd = |dp: [f64; 3]| -> f64 {
            let a = gaveau_kernel(&HeisenbergPoint::new(p.x + e * dp[0], p.y + e * dp[1], p.u + e * dp[2]), t).unwrap();
            let b = gaveau_kernel(&HeisenbergPoint::new(p.x - e * dp[0], p.y - e * dp[1], p.u - e * dp[2]), t).unwrap();
            (a.value.ln() - b.value.ln()) / (2.0 * e)
        };
        let dx = fd([1.0, 0.0, 0.0]);
        let dy = fd([0.0, 1.0, 0.0]);
        let du = fd([0.0, 0.0, 1.0]);
        let x_log = dx - 0.5 * p.y * du;
        let y_log = dy + 0.5 * p.x * du;
        assert!((v.x_log - x_log).abs() < 1e-6);
        assert!((v.y_log - y_log).abs() < 1e-6);
        assert!((v.u_log - du).abs() < 1e-6);
    }

    static GRID: Lazy<HeisenbergGrid> = Lazy::new(|| {
        HeisenbergGrid::build(1.0, &GridParams { nh: 40, n_gl: 12, ..Default::default() }).unwrap()
    });

    #[test]
    fn grid_identities() {
        let g = &*GRID;
        assert!((g.mass() - 1.0).abs() < 1e-4, "mass {}", g.mass());
        assert!((g.horizontal_identity() - 2.0).abs() < 0.02, "horiz {}", g.horizontal_identity());
        assert!((g.horizontal_identity_right() - 2.0).abs() < 0.02);
        assert!(g.vertical_integral().is_finite() && g.vertical_integral() > 0.0);
        assert!((g.var_u() - 1.0).abs() < 1e-3, "var u {}", g.var_u());
    }

    #[test]
    fn elevator_norm_and_residual() {
        let g = &*GRID;
        assert!((elevator_norm(g) - 2.0f64.sqrt()).abs() < 0.01 * 2.0f64.sqrt());
        assert!(elevator_residual(g) < 1e-3, "residual {}", elevator_residual(g));
    }

    #[test]
    fn grad_identity_scales_with_time() {
        let g4 = HeisenbergGrid::build(4.0, &GridParams { nh: 32, ..Default::default() }).unwrap();
        let (h, _v) = grad_log_identity(&g4);
        assert!((h - 0.5).abs() < 0.005, "2/t at t=4: {h}");
        assert!((elevator_norm(&g4) - 0.5f64.sqrt()).abs() < 0.01 * 0.5f64.sqrt());
    }

    #[test]
    fn constants_monotone_and_capped() {
        let g = &*GRID;
        let rep = estimate_constants(g, &[6, 8, 10]).unwrap();
        for w in rep.g_x_by_degree.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9, "{:?}", rep.g_x_by_degree);
        }
        assert!((rep.g_x - rep.g_y).abs() < 1e-6 * rep.g_x, "gx {} gy {}", rep.g_x, rep.g_y);
        assert!(rep.g_x <= rep.feasible_cap_x * (1.0 + 1e-6));
        assert!(rep.g_u <= rep.elevator_cap * (1.0 + 1e-6));
        assert!(rep.kk_ratio < 2.0f64.sqrt());
        assert!(rep.kk_margin > 0.0);
        // the lower bound is already well above the squared-estimate floor 2
        assert!(rep.g_x > 2.0, "g_x {}", rep.g_x);
    }

    #[test]
    fn group_law_and_dilations() {
        let p = HeisenbergPoint::new(0.3, -0.7, 0.2);
        let q = HeisenbergPoint::new(-1.0, 0.4, -0.6);
        let r = HeisenbergPoint::new(0.5, 0.1, 1.2);
        // associativity
        let a = p.mul(&q).mul(&r);
        let b = p.mul(&q.mul(&r));
        assert!((a.x - b.x).abs() + (a.y - b.y).abs() + (a.u - b.u).abs() < 1e-14);
        // inverse
        let e = p.mul(&p.inverse());
        assert!(e.x.abs() + e.y.abs() + e.u.abs() < 1e-15);
        // dilation is a group automorphism
        let l = 1.7;
        let lhs = p.dilate(l).mul(&q.dilate(l));
        let rhs = p.mul(&q).dilate(l);
        assert!((lhs.u - rhs.u).abs() < 1e-14);
    }

    #[test]
    fn cc_distance_special_cases() {
        // horizontal
        assert!((d_cc(&HeisenbergPoint::new(1.4, -0.3, 0.0)).unwrap() - (1.4f64.powi(2) + 0.09).sqrt()).abs() < 1e-14);
        // vertical
        let d = d_cc(&HeisenbergPoint::new(0.0, 0.0, 1.0)).unwrap();
        assert!((d - 2.0 * PI.sqrt()).abs() < 1e-10, "{d}");
        // dilation homogeneity
        let p = HeisenbergPoint::new(0.6, 0.2, 0.9);
        let d1 = d_cc(&p).unwrap();
        let d2 = d_cc(&p.dilate(2.5)).unwrap();
        assert!((d2 - 2.5 * d1).abs() < 1e-8 * d2);
    }

    #[test]
    fn cc_envelope_bounds() {
        // max(|z|, c(|z| + |u|^{1/2})) <= d_cc <= C (|z| + |u|^{1/2})
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cmin = f64::INFINITY;
        let mut cmax = 0.0f64;
        for _ in 0..60 {
            let p = HeisenbergPoint::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 8.0 - 4.0);
            let d = d_cc(&p).unwrap();
            let s = p.zn() + p.u.abs().sqrt();
            if s > 0.0 {
                cmin = cmin.min(d / s);
                cmax = cmax.max(d / s);
            }
            assert!(d >= p.zn() - 1e-12);
        }
        assert!(cmin > 0.0 && cmax.is_finite());
        assert!(cmin <= 1.0 + 1e-12 && cmax >= 1.0 - 1e-12);
    }

    #[test]
    fn riem_distance_basics() {
        // small horizontal: close to |z|
        let d = d_riem1(&HeisenbergPoint::new(0.1, 0.0, 0.0)).unwrap();
        assert!((d - 0.1).abs() < 1e-4);
        // vertical: straight line wins, d = |u|
        let d = d_riem1(&HeisenbergPoint::new(0.0, 0.0, 1.0)).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "{d}");
        // dominated by cc everywhere
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let p = HeisenbergPoint::new(rng.gen::<f64>() * 3.0 - 1.5, rng.gen::<f64>() * 3.0 - 1.5, rng.gen::<f64>() * 6.0 - 3.0);
            let dr = d_riem1(&p).unwrap();
            let dc = d_cc(&p).unwrap();
            assert!(dr <= dc + 1e-8, "riem {dr} vs cc {dc} at {p:?}");
            assert!(dc <= dr + 4.0 * PI + 1e-8);
        }
    }

    #[test]
    fn riem_eps_scaling_identity() {
        // d_Riem(eps)(p) = (1/l) d_Riem(eps l)(delta_l p)
        let p = HeisenbergPoint::new(0.7, -0.2, 0.8);
        for (eps, l) in [(1.0f64, 2.0f64), (0.5, 3.0), (2.0, 0.4)] {
            let lhs = d_riem(&p, eps).unwrap();
            let rhs = d_riem(&p.dilate(l), eps * l).unwrap() / l;
            assert!((lhs - rhs).abs() < 1e-6 * lhs.max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn dt_distance_properties() {
        let k = 1.66;
        let kappa = 1.33;
        // vertical pair is finite for t > 0
        let o = HeisenbergPoint::origin();
        let v = HeisenbergPoint::new(0.0, 0.0, 1.0);
        let d = dt_distance(&o, &v, 1.0, k, kappa).unwrap();
        assert!(d.is_finite() && d > 0.0);
        // scaling isometry d_t(delta_rt p, delta_rt q) = sqrt(t) d_1(p, q)
        let p = HeisenbergPoint::new(0.4, 0.6, -0.3);
        let q = HeisenbergPoint::new(-0.8, 0.1, 0.5);
        for t in [0.25f64, 4.0] {
            let st = t.sqrt();
            let lhs = dt_distance(&p.dilate(st), &q.dilate(st), t, k, kappa).unwrap();
            let rhs = st * dt_distance(&p, &q, 1.0, k, kappa).unwrap();
            assert!((lhs - rhs).abs() < 1e-6 * rhs.max(1e-9), "{lhs} vs {rhs}");
        }
        // horizontal pairs: d_t / d_cc -> K as t -> 0
        let hpair = HeisenbergPoint::new(1.0, 0.0, 0.0);
        let dcc = d_cc(&hpair).unwrap();
        let mut prev_gap = f64::INFINITY;
        for t in [1.0f64, 0.1, 0.01] {
            let ratio = dt_distance(&o, &hpair, t, k, kappa).unwrap() / dcc;
            let gap = (ratio - k).abs();
            assert!(gap <= prev_gap + 1e-9);
            prev_gap = gap;
        }
        assert!(prev_gap < 0.02 * k, "ratio gap {prev_gap}");
    }

    #[test]
    fn dt_triangle_inequality() {
        let k = 1.66;
        let kappa = 1.33;
        let a = HeisenbergPoint::new(0.3, 0.2, 0.1);
        let b = HeisenbergPoint::new(-0.4, 0.8, -0.2);
        let c = HeisenbergPoint::new(0.9, -0.5, 0.4);
        let dab = dt_distance(&a, &b, 1.0, k, kappa).unwrap();
        let dbc = dt_distance(&b, &c, 1.0, k, kappa).unwrap();
        let dac = dt_distance(&a, &c, 1.0, k, kappa).unwrap();
        assert!(dac <= dab + dbc + 1e-4);
    }

    #[test]
    fn frame_norms() {
        let v = FrameCoefficients { a: 1.0, b: 2.0, c: 0.0 };
        assert_eq!(v.cc_norm_sq(), 5.0);
        let w = FrameCoefficients { a: 1.0, b: 0.0, c: 0.5 };
        assert!(w.cc_norm_sq().is_infinite());
        assert!((w.riem_norm_sq(0.5) - 2.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn left_invariance_of_cc(
            px in -2.0f64..2.0, py in -2.0f64..2.0, pu in -2.0f64..2.0,
            qx in -2.0f64..2.0, qy in -2.0f64..2.0, qu in -2.0f64..2.0,
            gx in -2.0f64..2.0, gy in -2.0f64..2.0, gu in -2.0f64..2.0,
        ) {
            let p = HeisenbergPoint::new(px, py, pu);
            let q = HeisenbergPoint::new(qx, qy, qu);
            let g = HeisenbergPoint::new(gx, gy, gu);
            let d1 = d_cc_pair(&p, &q).unwrap();
            let d2 = d_cc_pair(&g.mul(&p), &g.mul(&q)).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-9 * (1.0 + d1));
        }
    }
}
