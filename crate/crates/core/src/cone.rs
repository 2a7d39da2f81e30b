//! Warped-metric coefficients of the smoothed cone metrics.
//!
//! On the cone of order `k` (angle `2 pi / k`, `k` in {2, 4}) the smoothed
//! distance is induced by `R(r/sqrt(t)) dr^2 + r^2 A(r/sqrt(t)) da^2`, so a
//! single tabulation at `t = 1` serves every time.
//!
//! `R` has a closed form: with `a = r` (k = 2) or `a = r / sqrt(2)` (k = 4,
//! after the quarter-turn product rotation),
//!
//! `R(r) = 1/2 int (eta(y-a) - eta(y+a))^2 / (eta(y-a) + eta(y+a)) dy
//!        = E_{y ~ N(a, 2)} [ tanh^2(a y / 2) ]`,
//!
//! evaluated by adaptive quadrature.  `A` comes from the minimal-norm
//! continuity-equation solve ([`crate::elliptic`]) with the angular source,
//! as a monotone-in-degree lower bound.

use serde::Serialize;

use crate::elliptic::{solve_min_norm, AxisParity, BasisSpec, SourceSpec, WeightSpec};
use crate::error::{Error, Result};
use crate::measures::rotate;
use crate::quad::adaptive_gk;

/// Radial coefficient `R(r)` at `t = 1` by adaptive quadrature of the
/// closed form; relative error about 1e-9.
pub fn radial_r(r: f64, k: usize) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidInput("radius must be nonnegative".into()));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let a = match k {
        2 => r,
        4 => r / 2.0f64.sqrt(),
        _ => return Err(Error::InvalidInput(format!("cone order must be 2 or 4, got {k}"))),
    };
    let sigma = 2.0f64.sqrt();
    let norm = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
    let f = move |y: f64| {
        let th = (a * y / 2.0).tanh();
        th * th * norm * (-(y - a) * (y - a) / 4.0).exp()
    };
    let lo = (a - 15.0 * sigma).min(-2.0 / a.max(0.1));
    let hi = a + 15.0 * sigma;
    adaptive_gk(f, lo, hi, 1e-10, 1e-300)
}

/// Angular coefficient with its refinement certificate.
#[derive(Debug, Clone, Serialize)]
pub struct AngularValue {
    pub r: f64,
    pub k: usize,
    /// Galerkin lower bound at the top degree.
    pub value: f64,
    /// (degree, value) refinement history; nondecreasing.
    pub by_degree: Vec<(usize, f64)>,
    /// Whether the last refinement step moved the value by less than 1%.
    pub converged: bool,
}

fn angular_problem(r: f64, k: usize) -> (WeightSpec, SourceSpec) {
    // centers are the k rotations of (r, 0); the angular perturbation moves
    // center j with the rotated tangent direction
    let centers: Vec<[f64; 2]> = (0..k).map(|j| rotate([r, 0.0], j, k)).collect();
    let dirs: Vec<[f64; 2]> = (0..k).map(|j| rotate([0.0, 1.0], j, k)).collect();
    (WeightSpec::mixture(centers, 1.0), SourceSpec::CenterMotion { dirs })
}

fn angular_basis(r: f64, degree: usize) -> BasisSpec {
    // box covering the assembly nodes keeps Chebyshev values order one
    let reach = 2.0 * ((2 * (degree + 4) + 1) as f64).sqrt() + 0.5;
    BasisSpec::new(degree, [r + reach, reach], [AxisParity::Odd, AxisParity::Odd])
}

/// Galerkin lower bound for `A(r)` at `t = 1`, with a degree sweep
/// certificate.  Below `r = 1e-3` the leading-order closed forms are used
/// directly (`A ~ r^2/4` for k = 2, `A ~ r^6/24` for k = 4).
pub fn angular_a(r: f64, k: usize, degree: usize) -> Result<AngularValue> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput("angular coefficient needs r > 0".into()));
    }
    if r < 1e-3 {
        let v = small_r_a(r, k)?;
        return Ok(AngularValue { r, k, value: v, by_degree: vec![(0, v)], converged: true });
    }
    let (w, s) = angular_problem(r, k);
    let degrees = [degree / 2, (3 * degree) / 4, degree];
    let mut by_degree = Vec::new();
    for d in degrees {
        let d = d.max(4);
        if by_degree.iter().any(|(dd, _)| *dd == d) {
            continue;
        }
        let basis = angular_basis(r, d);
        let sol = solve_min_norm(&w, &s, &basis)?;
        by_degree.push((d, sol.q));
    }
    let value = by_degree.last().unwrap().1;
    let converged = by_degree.len() < 2 || {
        let prev = by_degree[by_degree.len() - 2].1;
        (value - prev).abs() <= 0.01 * value.abs().max(1e-300)
    };
    Ok(AngularValue { r, k, value, by_degree, converged })
}

fn small_r_a(r: f64, k: usize) -> Result<f64> {
    // leading potentials are multiples of harmonic polynomials H with
    // -div(eta eta grad(cH)) = (deg H / 2) c H eta eta:
    //   k = 2: H = y1 y2,            c = r/4      => A ~ r^2 / 4
    //   k = 4: H = y1^3 y2 - y1 y2^3, c = r^3/384 => A ~ r^6 / 384
    match k {
        2 => Ok(r * r / 4.0),
        4 => Ok(r.powi(6) / 384.0),
        _ => Err(Error::InvalidInput("cone order must be 2 or 4".into())),
    }
}

fn small_r_r(r: f64, k: usize) -> f64 {
    match k {
        2 => r * r / 2.0,
        _ => r * r / 4.0,
    }
}

/// Monotone cubic (Fritsch-Carlson) interpolant.
#[derive(Debug, Clone)]
pub(crate) struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2);
        let mut d = vec![0.0f64; n - 1];
        for i in 0..n - 1 {
            d[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        let mut ms = vec![0.0f64; n];
        ms[0] = d[0];
        ms[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            if d[i - 1] * d[i] <= 0.0 {
                ms[i] = 0.0;
            } else {
                let w1 = 2.0 * (xs[i + 1] - xs[i]) + (xs[i] - xs[i - 1]);
                let w2 = (xs[i + 1] - xs[i]) + 2.0 * (xs[i] - xs[i - 1]);
                ms[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        // clamp endpoint slopes for monotonicity
        for (i, m) in ms.iter_mut().enumerate() {
            let di = if i == 0 { d[0] } else if i == n - 1 { d[n - 2] } else { continue };
            if di == 0.0 {
                *m = 0.0;
            } else if (*m / di) > 3.0 {
                *m = 3.0 * di;
            }
        }
        Self { xs, ys, ms }
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (y0, y1, m0, m1) = (self.ys[i], self.ys[i + 1], self.ms[i] * h, self.ms[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        y0 * (2.0 * s3 - 3.0 * s2 + 1.0) + m0 * (s3 - 2.0 * s2 + s) + y1 * (-2.0 * s3 + 3.0 * s2) + m1 * (s3 - s2)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (y0, y1, m0, m1) = (self.ys[i], self.ys[i + 1], self.ms[i] * h, self.ms[i + 1] * h);
        let s2 = s * s;
        (y0 * (6.0 * s2 - 6.0 * s) + m0 * (3.0 * s2 - 4.0 * s + 1.0) + y1 * (-6.0 * s2 + 6.0 * s) + m1 * (3.0 * s2 - 2.0 * s)) / h
    }
}

/// Tabulated warped-metric coefficients at `t = 1`; other times evaluate
/// the tables at `r / sqrt(t)`.
///
/// `R` and the cumulative `rho` are cheap (1-D quadrature of the closed
/// form) and live on a grid refined 8x relative to the Galerkin-priced `A`
/// tabulation.
#[derive(Debug, Clone)]
pub struct WarpedMetric {
    pub k: usize,
    /// Log-spaced tabulation radii of the angular coefficient.
    pub rs: Vec<f64>,
    pub a_vals: Vec<f64>,
    /// Refined radii carrying `R` and `rho`.
    pub rs_fine: Vec<f64>,
    pub r_vals: Vec<f64>,
    /// Cumulative `rho_1(r) = int_0^r sqrt(R)` on the refined radii.
    pub rho_vals: Vec<f64>,
    r_interp: Pchip,
    a_interp: Pchip,
    rho_interp: Pchip,
    abar_interp: Pchip,
    /// Whether small-r queries may fall back to the leading-order forms.
    heat_kernel_small_r: bool,
}

impl WarpedMetric {
    /// Tabulate the order-`k` cone coefficients on a log grid.
    pub fn tabulate(k: usize, rmin: f64, rmax: f64, n: usize, degree: usize) -> Result<Self> {
        use rayon::prelude::*;
        if !(rmin > 0.0 && rmax > rmin && n >= 8) {
            return Err(Error::InvalidInput("bad tabulation grid".into()));
        }
        let rs: Vec<f64> = (0..n)
            .map(|i| rmin * (rmax / rmin).powf(i as f64 / (n - 1) as f64))
            .collect();
        let nf = 8 * (n - 1) + 1;
        let rs_fine: Vec<f64> = (0..nf)
            .map(|i| rmin * (rmax / rmin).powf(i as f64 / (nf - 1) as f64))
            .collect();
        let r_vals: Vec<f64> = rs_fine.par_iter().map(|&r| radial_r(r, k)).collect::<Result<_>>()?;
        let a_vals: Vec<f64> = rs
            .par_iter()
            .map(|&r| angular_a(r, k, degree).map(|v| v.value))
            .collect::<Result<_>>()?;
        // cumulative rho by adaptive quadrature of the closed form
        let segs: Vec<f64> = (0..nf)
            .into_par_iter()
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { rs_fine[i - 1] };
                adaptive_gk(
                    |s| radial_r(s, k).map(|v| v.sqrt()).unwrap_or(0.0),
                    lo,
                    rs_fine[i],
                    1e-11,
                    1e-300,
                )
            })
            .collect::<Result<_>>()?;
        let mut rho_vals = Vec::with_capacity(nf);
        let mut acc = 0.0;
        for s in segs {
            acc += s;
            rho_vals.push(acc);
        }
        Self::from_tables_impl(k, rs, a_vals, rs_fine, r_vals, rho_vals, true)
    }

    /// Build from explicit coefficient tables (used for synthetic fixtures;
    /// `rho` is integrated from the tabulated `R` by the trapezoid rule on
    /// a refined grid).
    pub fn from_tables(k: usize, rs: Vec<f64>, r_vals: Vec<f64>, a_vals: Vec<f64>) -> Result<Self> {
        let r_interp = Pchip::new(rs.iter().map(|r| r.ln()).collect(), r_vals.clone());
        let mut rho_vals = Vec::with_capacity(rs.len());
        let mut acc = r_vals[0].sqrt() * rs[0]; // R ~ const near 0 for synthetic tables
        rho_vals.push(acc);
        for i in 1..rs.len() {
            // refined trapezoid on the interpolant
            let m = 256;
            let mut seg = 0.0;
            for j in 0..m {
                let x0 = rs[i - 1] + (rs[i] - rs[i - 1]) * j as f64 / m as f64;
                let x1 = rs[i - 1] + (rs[i] - rs[i - 1]) * (j + 1) as f64 / m as f64;
                let f0 = r_interp.eval(x0.ln()).max(0.0).sqrt();
                let f1 = r_interp.eval(x1.ln()).max(0.0).sqrt();
                seg += 0.5 * (f0 + f1) * (x1 - x0);
            }
            acc += seg;
            rho_vals.push(acc);
        }
        Self::from_tables_impl(k, rs.clone(), a_vals, rs, r_vals, rho_vals, false)
    }

    fn from_tables_impl(
        k: usize,
        rs: Vec<f64>,
        a_vals: Vec<f64>,
        rs_fine: Vec<f64>,
        r_vals: Vec<f64>,
        rho_vals: Vec<f64>,
        heat_kernel_small_r: bool,
    ) -> Result<Self> {
        let lx: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let lxf: Vec<f64> = rs_fine.iter().map(|r| r.ln()).collect();
        for w in rho_vals.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::NonMonotoneRho);
            }
        }
        let a_interp = Pchip::new(lx, a_vals.clone());
        // angular coefficient in the radial-arclength chart rbar = rho(r):
        // Abar(rbar) = A(r) r^2 / rbar^2; tabulated on the fine radii
        let sa = |r: f64| -> f64 {
            if r < rs[0] && heat_kernel_small_r {
                small_r_a(r, k).unwrap_or(0.0)
            } else {
                a_interp.eval(r.max(rs[0]).ln())
            }
        };
        let abar_vals: Vec<f64> = rs_fine
            .iter()
            .zip(&rho_vals)
            .map(|(&r, &rb)| sa(r) * r * r / (rb * rb))
            .collect();
        let abar_interp = Pchip::new(rho_vals.iter().map(|v| v.ln()).collect(), abar_vals);
        Ok(Self {
            k,
            r_interp: Pchip::new(lxf.clone(), r_vals.clone()),
            a_interp,
            rho_interp: Pchip::new(lxf, rho_vals.clone()),
            abar_interp,
            rs,
            a_vals,
            rs_fine,
            r_vals,
            rho_vals,
            heat_kernel_small_r,
        })
    }

    pub fn rmin(&self) -> f64 {
        self.rs[0]
    }

    pub fn rmax(&self) -> f64 {
        *self.rs.last().unwrap()
    }

    /// Cone angle `2 pi / k`.
    pub fn cone_angle(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k as f64
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if x > self.rmax() * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!(
                "r/sqrt(t) = {x} beyond tabulated {}",
                self.rmax()
            )));
        }
        Ok(())
    }

    /// `R` at `t = 1`.
    pub fn r1(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x < self.rmin() {
            if self.heat_kernel_small_r {
                return Ok(small_r_r(x, self.k));
            }
            return Ok(self.r_vals[0]);
        }
        Ok(self.r_interp.eval(x.ln()))
    }

    /// `A` at `t = 1`.
    pub fn a1(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x < self.rmin() {
            if self.heat_kernel_small_r {
                return small_r_a(x, self.k);
            }
            return Ok(self.a_vals[0]);
        }
        Ok(self.a_interp.eval(x.ln()))
    }

    /// `rho_1(x) = int_0^x sqrt(R)` at `t = 1`.
    pub fn rho1(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x < self.rmin() {
            // leading order: R ~ c x^2 so rho ~ sqrt(c) x^2 / 2
            let frac = if self.heat_kernel_small_r {
                let c = small_r_r(1.0, self.k); // R = c x^2
                c.sqrt() * x * x / 2.0
            } else {
                self.r_vals[0].sqrt() * x
            };
            return Ok(frac.min(self.rho_vals[0]));
        }
        Ok(self.rho_interp.eval(x.ln()))
    }

    /// Inverse of `rho_1` by bisection (rho is strictly increasing).
    pub fn rho1_inv(&self, target: f64) -> Result<f64> {
        if !(target >= 0.0) || target > *self.rho_vals.last().unwrap() {
            return Err(Error::OutOfRange(format!("rho target {target} outside table")));
        }
        let (mut lo, mut hi) = (0.0, self.rmax());
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.rho1(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Largest chart radius `rho_1(rmax)`.
    pub fn rbar_max(&self) -> f64 {
        *self.rho_vals.last().unwrap()
    }

    /// Chart angular coefficient `Abar` and its derivative at chart radius
    /// `xbar` (time 1 units).  In this chart the radial coefficient is 1.
    pub fn abar_coef(&self, xbar: f64) -> Result<(f64, f64)> {
        let rb0 = self.rho_vals[0];
        if xbar > self.rbar_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!(
                "chart radius {xbar} beyond tabulated {}",
                self.rbar_max()
            )));
        }
        if xbar < rb0 {
            if self.heat_kernel_small_r {
                // leading forms: k=2: Abar -> 2; k=4: Abar = (2/3) rbar^2
                return Ok(match self.k {
                    2 => (2.0, 0.0),
                    _ => (2.0 / 3.0 * xbar * xbar, 4.0 / 3.0 * xbar),
                });
            }
            return Ok((self.abar_interp.eval(rb0.ln()), 0.0));
        }
        let l = xbar.ln();
        Ok((self.abar_interp.eval(l), self.abar_interp.deriv(l) / xbar))
    }

    /// Metric coefficients and their radial derivatives at time `t`.
    pub fn coef(&self, r: f64, t: f64) -> Result<(f64, f64, f64, f64)> {
        let st = t.sqrt();
        let x = r / st;
        let rr = self.r1(x)?;
        let aa = self.a1(x)?;
        let (dr, da) = if x <= 0.0 {
            (0.0, 0.0)
        } else if x < self.rmin() {
            if self.heat_kernel_small_r {
                let c = small_r_r(1.0, self.k);
                let dr = 2.0 * c * x / st;
                let da = match self.k {
                    2 => 2.0 * x / 4.0 / st,
                    _ => 6.0 * x.powi(5) / 384.0 / st,
                };
                (dr, da)
            } else {
                (0.0, 0.0)
            }
        } else {
            (
                self.r_interp.deriv(x.ln()) / x / st,
                self.a_interp.deriv(x.ln()) / x / st,
            )
        };
        Ok((rr, aa, dr, da))
    }
}

/// Radial distance from the apex: `rho_t(r) = sqrt(t) rho_1(r / sqrt(t))`.
pub fn rho(metric: &WarpedMetric, r: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("time must be positive".into()));
    }
    Ok(t.sqrt() * metric.rho1(r / t.sqrt())?)
}

/// Circumference of the metric circle of radius `r`:
/// `l_t(r) = (cone angle) r sqrt(A(r / sqrt(t)))`.
pub fn circumference(metric: &WarpedMetric, r: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("time must be positive".into()));
    }
    Ok(metric.cone_angle() * r * metric.a1(r / t.sqrt())?.sqrt())
}

/// Circumference-to-radius ratio at radius `r`.
pub fn angle_ratio(metric: &WarpedMetric, r: f64, t: f64) -> Result<f64> {
    Ok(circumference(metric, r, t)? / rho(metric, r, t)?)
}

/// Apex-angle estimate: ratios at small radii plus the linear-in-`r`
/// extrapolated limit, and large-radius diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct AngleReport {
    pub k: usize,
    pub t: f64,
    pub rs: Vec<f64>,
    pub rho: Vec<f64>,
    pub ell: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Extrapolated `r -> 0` limit of the ratio (fit `L + a r`).
    pub apex_angle: f64,
    pub fit_slope: f64,
    /// Max absolute fit residual over the radii used.
    pub fit_residual: f64,
    /// Ratio at the largest tabulated radius (times sqrt(t)).
    pub ratio_at_rmax: f64,
    /// `1/r`-extrapolated large-radius limit of the ratio.
    pub infinity_angle: f64,
    pub flagged: bool,
}

/// Estimate the apex angle of the smoothed cone at time `t` from the 8
/// smallest tabulated radii, with a first-order Richardson fit.
pub fn apex_angle(metric: &WarpedMetric, t: f64, residual_tol: f64) -> Result<AngleReport> {
    let n_fit = 8.min(metric.rs.len());
    let st = t.sqrt();
    let rs: Vec<f64> = metric.rs[..n_fit].iter().map(|x| x * st).collect();
    let mut rho_v = Vec::new();
    let mut ell_v = Vec::new();
    let mut ratio_v = Vec::new();
    for &r in &rs {
        let rv = rho(metric, r, t)?;
        let lv = circumference(metric, r, t)?;
        rho_v.push(rv);
        ell_v.push(lv);
        ratio_v.push(lv / rv);
    }
    // weighted least squares for ratio = L + a r
    let (l, a, resid) = fit_linear(&rs, &ratio_v);
    // large-r behavior: ratio(r) ~ L_inf (1 + c / r): fit against 1/r on
    // the largest radii
    let m = metric.rs.len();
    let tail = 6.min(m);
    let rs_tail: Vec<f64> = metric.rs[m - tail..].iter().map(|x| x * st).collect();
    let mut ratio_tail = Vec::new();
    for &r in &rs_tail {
        ratio_tail.push(angle_ratio(metric, r, t)?);
    }
    let inv: Vec<f64> = rs_tail.iter().map(|r| 1.0 / r).collect();
    let (linf, _, _) = fit_linear(&inv, &ratio_tail);
    let ratio_at_rmax = *ratio_tail.last().unwrap();
    Ok(AngleReport {
        k: metric.k,
        t,
        rs,
        rho: rho_v,
        ell: ell_v,
        ratio: ratio_v,
        apex_angle: l,
        fit_slope: a,
        fit_residual: resid,
        ratio_at_rmax,
        infinity_angle: linf,
        flagged: resid > residual_tol,
    })
}

fn fit_linear(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let a = (n * sxy - sx * sy) / det;
    let l = (sy - a * sx) / n;
    let resid = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - l - a * x).abs())
        .fold(0.0f64, f64::max);
    (l, a, resid)
}

/// Tangent-cone chart: `Abar(rbar) rbar^2 = A(rho^{-1}(rbar)) rho^{-1}(rbar)^2`
/// after the radial reparametrization `rbar = rho_1(r)`.
#[derive(Debug, Clone, Serialize)]
pub struct TangentChart {
    pub k: usize,
    pub rbars: Vec<f64>,
    pub abars: Vec<f64>,
    /// `sqrt(Abar)` at the smallest chart radius.
    pub sqrt_abar_small: f64,
}

/// Transform the angular coefficient to the chart in which the radial
/// coefficient is 1; requires strictly increasing tabulated `rho`.
pub fn tangent_chart(metric: &WarpedMetric, rbars: &[f64]) -> Result<TangentChart> {
    let mut abars = Vec::with_capacity(rbars.len());
    for &rb in rbars {
        if !(rb > 0.0) {
            return Err(Error::InvalidInput("chart radius must be positive".into()));
        }
        let r = metric.rho1_inv(rb)?;
        let a = metric.a1(r)?;
        abars.push(a * r * r / (rb * rb));
    }
    let sqrt_abar_small = abars
        .iter()
        .zip(rbars)
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(a, _)| a.sqrt())
        .unwrap_or(f64::NAN);
    Ok(TangentChart { k: metric.k, rbars: rbars.to_vec(), abars, sqrt_abar_small })
}

/// Evaluate `Abar` at a single chart radius.
pub fn abar_at(metric: &WarpedMetric, rbar: f64) -> Result<f64> {
    let r = metric.rho1_inv(rbar)?;
    Ok(metric.a1(r)? * r * r / (rbar * rbar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_limits() {
        assert_eq!(radial_r(0.0, 2).unwrap(), 0.0);
        // R(r)/r^2 -> 1/2 (k=2) and 1/4 (k=4)
        let r = 1e-2;
        assert!((radial_r(r, 2).unwrap() / (r * r) - 0.5).abs() < 1e-3);
        assert!((radial_r(r, 4).unwrap() / (r * r) - 0.25).abs() < 1e-3);
        // far field approaches 1
        assert!((radial_r(10.0, 2).unwrap() - 1.0).abs() < 1e-9);
        assert!(radial_r(3.0, 2).unwrap() <= 1.0);
    }

    #[test]
    fn angular_small_r_and_bound() {
        let v = angular_a(0.1, 2, 24).unwrap();
        assert!((v.value / 0.01 - 0.25).abs() < 0.005, "A/r^2 = {}", v.value / 0.01);
        // monotone in degree
        for w in v.by_degree.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9 * w[0].1.abs());
        }
        // bounded by one
        for r in [0.5, 2.0, 10.0] {
            let v = angular_a(r, 2, 16).unwrap();
            assert!(v.value <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn angular_quartic_oracle_for_order_four() {
        // leading potential is c H with the harmonic H = y1^3 y2 - y1 y2^3;
        // matching -div(eta eta grad(c H)) = 2 c H eta eta to the expanded
        // source gives c = r^3/384 and A ~ ||grad(cH)||^2 = r^6 / 384
        let r = 0.05;
        let v = angular_a(r, 4, 12).unwrap();
        let oracle = r.powi(6) / 384.0;
        assert!((v.value / oracle - 1.0).abs() < 0.02, "ratio {}", v.value / oracle);
    }

    fn quick_metric(k: usize) -> WarpedMetric {
        WarpedMetric::tabulate(k, 1e-3, 60.0, 40, 16).unwrap()
    }

    #[test]
    fn rho_small_r_and_scaling() {
        let m = quick_metric(2);
        assert_eq!(rho(&m, 0.0, 1.0).unwrap(), 0.0);
        let r = 5e-3;
        let v = rho(&m, r, 1.0).unwrap();
        assert!((v / (r * r) - 1.0 / (2.0 * 2.0f64.sqrt())).abs() < 1e-3, "{}", v / (r * r));
        // rho_t(r) = sqrt(t) rho_1(r / sqrt(t))
        for t in [0.25f64, 4.0] {
            let lhs = rho(&m, 1.3, t).unwrap();
            let rhs = t.sqrt() * rho(&m, 1.3 / t.sqrt(), 1.0).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
        // rho <= r
        for r in [0.1, 1.0, 10.0] {
            assert!(rho(&m, r, 1.0).unwrap() <= r);
        }
    }

    #[test]
    fn circumference_forms() {
        let m = quick_metric(2);
        let r = 5e-3;
        let l = circumference(&m, r, 1.0).unwrap();
        assert!((l / (r * r) - std::f64::consts::PI / 2.0).abs() < 2e-2 * (l / (r * r)));
        // l <= angle * r
        for r in [0.5, 3.0, 20.0] {
            assert!(circumference(&m, r, 1.0).unwrap() <= m.cone_angle() * r + 1e-12);
        }
    }

    #[test]
    fn apex_angles_both_cones() {
        let m2 = quick_metric(2);
        let rep = apex_angle(&m2, 1.0, 0.1).unwrap();
        let target = 2.0f64.sqrt() * std::f64::consts::PI;
        assert!((rep.apex_angle / target - 1.0).abs() < 0.01, "apex {}", rep.apex_angle);

        let m4 = quick_metric(4);
        let rep4 = apex_angle(&m4, 1.0, 0.1).unwrap();
        assert!(rep4.apex_angle.abs() < 0.05, "apex {}", rep4.apex_angle);
        let ratio_small = angle_ratio(&m4, 1e-2, 1.0).unwrap();
        assert!(ratio_small < 0.05);
    }

    #[test]
    fn time_scaling_collapse() {
        let m = quick_metric(2);
        // coefficients at time t are the t = 1 tables at r / sqrt(t), so
        // the rescaling collapse is exact by construction
        for t in [0.25f64, 4.0] {
            for r in [0.3f64, 1.7, 9.0] {
                let (rt, at, _, _) = m.coef(r, t).unwrap();
                let (r1, a1, _, _) = m.coef(r / t.sqrt(), 1.0).unwrap();
                assert_eq!(rt, r1);
                assert_eq!(at, a1);
            }
        }
        // and the interpolated R table tracks the independent quadrature
        for t in [0.25f64, 4.0] {
            for r in [0.3f64, 1.7, 9.0] {
                let table = m.r1(r / t.sqrt()).unwrap();
                let direct = radial_r(r / t.sqrt(), 2).unwrap();
                assert!((table - direct).abs() < 5e-5 * direct.max(1e-6), "{table} vs {direct}");
            }
        }
    }

    #[test]
    fn tangent_chart_limits() {
        let m2 = quick_metric(2);
        let v = abar_at(&m2, 1e-4).unwrap();
        assert!((v.sqrt() - 2.0f64.sqrt()).abs() < 0.02 * 2.0f64.sqrt(), "sqrt Abar {}", v.sqrt());
        let m4 = quick_metric(4);
        let v4 = abar_at(&m4, 1e-4).unwrap();
        assert!(v4.sqrt() <= 0.05, "sqrt Abar k4 {}", v4.sqrt());
    }

    #[test]
    fn tangent_chart_constant_fixture() {
        // constant A = c with R = 1 is the exact cone of angle c * (2pi/k):
        // the chart must return Abar = c at every radius
        let c: f64 = 0.36;
        let rs: Vec<f64> = (0..40).map(|i| 1e-3 * (1e4f64).powf(i as f64 / 39.0)).collect();
        let r_vals = vec![1.0; rs.len()];
        let a_vals = vec![c; rs.len()];
        let m = WarpedMetric::from_tables(2, rs, r_vals, a_vals).unwrap();
        for rb in [0.01, 0.1, 1.0] {
            let v = abar_at(&m, rb).unwrap();
            // interpolation-limited on the synthetic 40-point table
            assert!((v - c).abs() < 1e-3 * c, "Abar {v} vs {c}");
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let m = quick_metric(2);
        assert!(rho(&m, 100.0, 1.0).is_err());
        // small t pushes the scaled argument out of range
        assert!(rho(&m, 10.0, 1e-4).is_err());
    }
}
