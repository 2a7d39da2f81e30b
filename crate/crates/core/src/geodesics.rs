//! Length distance in the warped metric by direct minimization of the
//! discrete curve energy, with explicit branch enumeration.
//!
//! Curves are polylines in cone coordinates with pinned endpoints.  The
//! squared-speed energy has a unique constant-speed minimizer per homotopy
//! class, so the optimizer works on the energy and the reported distance is
//! the length of the final feasible curve (upper-bound semantics).  The
//! quotient contributes two direct initializers (sweeping the angular gap
//! either way) and the through-apex alternative is the exact two-ray sum
//! `rho(r_p) + rho(r_q)`; the metric degenerates at the apex, so that
//! branch is compared as a closed form rather than left to the optimizer.

use serde::Serialize;

use crate::cone::{rho, WarpedMetric};
use crate::error::{Error, Result};
use crate::measures::ConePoint;

/// Polyline in cone coordinates, parametrized uniformly on [0, 1].
#[derive(Debug, Clone)]
pub struct DiscreteCurve {
    pub rs: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl DiscreteCurve {
    pub fn line(p: &ConePoint, q_r: f64, q_alpha: f64, n: usize) -> Self {
        let rs = (0..n)
            .map(|i| p.r + (q_r - p.r) * i as f64 / (n - 1) as f64)
            .collect();
        let alphas = (0..n)
            .map(|i| p.alpha + (q_alpha - p.alpha) * i as f64 / (n - 1) as f64)
            .collect();
        Self { rs, alphas }
    }

    pub fn len(&self) -> usize {
        self.rs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rs.is_empty()
    }

    /// Max/min segment-speed ratio (near 1 after optimization).
    pub fn speed_ratio(&self, metric: &WarpedMetric, t: f64) -> Result<f64> {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n - 1 {
            let rm = 0.5 * (self.rs[i] + self.rs[i + 1]);
            let (rr, aa, _, _) = metric.coef(rm, t)?;
            let dr = self.rs[i + 1] - self.rs[i];
            let da = self.alphas[i + 1] - self.alphas[i];
            let sp = (rr * dr * dr + rm * rm * aa * da * da).sqrt() * (n - 1) as f64;
            lo = lo.min(sp);
            hi = hi.max(sp);
        }
        Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
    }
}

/// Length of a polyline: per-segment 4-point Gauss quadrature of the speed
/// with linear interpolation of the coordinates.
pub fn length(curve: &DiscreteCurve, metric: &WarpedMetric, t: f64) -> Result<f64> {
    const GX: [f64; 4] = [-0.861136311594053, -0.339981043584856, 0.339981043584856, 0.861136311594053];
    const GW: [f64; 4] = [0.347854845137454, 0.652145154862546, 0.652145154862546, 0.347854845137454];
    let n = curve.len();
    if n < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..n - 1 {
        let (r0, r1) = (curve.rs[i], curve.rs[i + 1]);
        let (a0, a1) = (curve.alphas[i], curve.alphas[i + 1]);
        let dr = r1 - r0;
        let da = a1 - a0;
        let mut seg = 0.0;
        for (x, w) in GX.iter().zip(GW.iter()) {
            let s = 0.5 * (1.0 + x);
            let r = r0 + s * dr;
            let (rr, aa, _, _) = metric.coef(r.max(0.0), t)?;
            seg += w * (rr * dr * dr + r * r * aa * da * da).sqrt();
        }
        total += 0.5 * seg;
    }
    Ok(total)
}

// The optimizer works in the radial-arclength chart rbar = rho_t(r), where
// the metric is drbar^2 + rbar^2 Abar(rbar / sqrt(t)) dalpha^2; away from
// the degenerate (r, alpha) coordinates the energy is well conditioned all
// the way to the apex.
fn energy_and_grad(rbs: &[f64], alphas: &[f64], metric: &WarpedMetric, t: f64, grad: &mut [f64]) -> Result<f64> {
    let n = rbs.len();
    let h = 1.0 / (n - 1) as f64;
    let st = t.sqrt();
    for g in grad.iter_mut() {
        *g = 0.0;
    }
    let mut e = 0.0;
    for i in 0..n - 1 {
        let rm = 0.5 * (rbs[i] + rbs[i + 1]);
        let dr = rbs[i + 1] - rbs[i];
        let da = alphas[i + 1] - alphas[i];
        let (ab, dab) = metric.abar_coef((rm / st).max(0.0))?;
        let c2 = rm * rm * ab;
        e += (dr * dr + c2 * da * da) / h;
        let dc2_dm = 2.0 * rm * ab + rm * rm * dab / st;
        let de_dm = dc2_dm * da * da / h;
        let de_ddr = 2.0 * dr / h;
        let de_dda = 2.0 * c2 * da / h;
        // interior variables are indexed 1..n-1
        if i >= 1 {
            grad[2 * (i - 1)] += 0.5 * de_dm - de_ddr;
            grad[2 * (i - 1) + 1] += -de_dda;
        }
        if i + 1 <= n - 2 {
            grad[2 * i] += 0.5 * de_dm + de_ddr;
            grad[2 * i + 1] += de_dda;
        }
    }
    Ok(e)
}

fn chart_length(rbs: &[f64], alphas: &[f64], metric: &WarpedMetric, t: f64) -> Result<f64> {
    const GX: [f64; 4] = [-0.861136311594053, -0.339981043584856, 0.339981043584856, 0.861136311594053];
    const GW: [f64; 4] = [0.347854845137454, 0.652145154862546, 0.652145154862546, 0.347854845137454];
    let st = t.sqrt();
    let mut total = 0.0;
    for i in 0..rbs.len() - 1 {
        let dr = rbs[i + 1] - rbs[i];
        let da = alphas[i + 1] - alphas[i];
        let mut seg = 0.0;
        for (x, w) in GX.iter().zip(GW.iter()) {
            let s = 0.5 * (1.0 + x);
            let rb = rbs[i] + s * dr;
            let (ab, _) = metric.abar_coef((rb / st).max(0.0))?;
            seg += w * (dr * dr + rb * rb * ab * da * da).sqrt();
        }
        total += 0.5 * seg;
    }
    Ok(total)
}

/// Solve a symmetric positive tridiagonal system in place (Thomas).
fn solve_tridiag(diag: &mut [f64], off: &mut [f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
    }
}

/// Newton direction from the frozen-coefficient quadratic model: the
/// energy's Hessian splits into two SPD tridiagonal blocks (radial and
/// angular) when the midpoint coefficients are held fixed.
fn newton_direction(rbs: &[f64], alphas: &[f64], metric: &WarpedMetric, t: f64, grad: &[f64]) -> Result<Vec<f64>> {
    let n = rbs.len();
    let h = 1.0 / (n - 1) as f64;
    let st = t.sqrt();
    let ni = n - 2;
    let mut diag_r = vec![1e-30f64; ni];
    let mut off_r = vec![0.0f64; ni.saturating_sub(1)];
    let mut diag_a = vec![1e-30f64; ni];
    let mut off_a = vec![0.0f64; ni.saturating_sub(1)];
    for i in 0..n - 1 {
        let rm = 0.5 * (rbs[i] + rbs[i + 1]);
        let (ab, _) = metric.abar_coef((rm / st).max(0.0))?;
        let c2 = (rm * rm * ab).max(1e-30);
        let wr = 2.0 / h;
        let wa = 2.0 * c2 / h;
        // segment couples interior variables i-1 and i (0-based interior)
        if i >= 1 {
            diag_r[i - 1] += wr;
            diag_a[i - 1] += wa;
        }
        if i + 1 <= n - 2 {
            diag_r[i] += wr;
            diag_a[i] += wa;
        }
        if i >= 1 && i + 1 <= n - 2 {
            off_r[i - 1] -= wr;
            off_a[i - 1] -= wa;
        }
    }
    let mut rhs_r: Vec<f64> = (0..ni).map(|i| -grad[2 * i]).collect();
    let mut rhs_a: Vec<f64> = (0..ni).map(|i| -grad[2 * i + 1]).collect();
    solve_tridiag(&mut diag_r, &mut off_r, &mut rhs_r);
    solve_tridiag(&mut diag_a, &mut off_a, &mut rhs_a);
    let mut dir = vec![0.0f64; 2 * ni];
    for i in 0..ni {
        dir[2 * i] = rhs_r[i];
        dir[2 * i + 1] = rhs_a[i];
    }
    Ok(dir)
}

struct OptimOutcome {
    /// Optimized curve in chart coordinates `(rbar, alpha)`.
    rbs: Vec<f64>,
    alphas: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn optimize_curve(init: DiscreteCurve, metric: &WarpedMetric, t: f64, max_iter: usize) -> Result<OptimOutcome> {
    let n = init.len();
    let r_floor = 1e-12;
    let mut rs = init.rs;
    let mut alphas = init.alphas;
    let nvar = 2 * (n - 2);
    let mut grad = vec![0.0f64; nvar];
    let mut e = energy_and_grad(&rs, &alphas, metric, t, &mut grad)?;
    let mut converged = false;
    let mut iter = 0;
    let pack = |rs: &[f64], alphas: &[f64]| -> Vec<f64> {
        let mut v = Vec::with_capacity(nvar);
        for i in 1..n - 1 {
            v.push(rs[i]);
            v.push(alphas[i]);
        }
        v
    };
    let unpack = |v: &[f64], rs: &mut [f64], alphas: &mut [f64]| {
        for i in 1..n - 1 {
            rs[i] = v[2 * (i - 1)].max(r_floor);
            alphas[i] = v[2 * (i - 1) + 1];
        }
    };
    let mut x = pack(&rs, &alphas);
    while iter < max_iter {
        iter += 1;
        let gn: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn < 1e-11 * (1.0 + e.abs()) * (n as f64) {
            converged = true;
            break;
        }
        let dir = newton_direction(&rs, &alphas, metric, t, &grad)?;
        let dg: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        let dir = if dg < 0.0 { dir } else { grad.iter().map(|g| -g).collect() };
        let dg = dir.iter().zip(&grad).map(|(d, g)| d * g).sum::<f64>();
        // Armijo backtracking from the full Newton step
        let mut step = 1.0;
        let mut accepted = false;
        let mut new_x = x.clone();
        let mut new_grad = vec![0.0f64; nvar];
        let mut new_e = e;
        for _ in 0..40 {
            for (nx, (xi, di)) in new_x.iter_mut().zip(x.iter().zip(&dir)) {
                *nx = xi + step * di;
            }
            unpack(&new_x, &mut rs, &mut alphas);
            match energy_and_grad(&rs, &alphas, metric, t, &mut new_grad) {
                Ok(v) if v <= e + 1e-4 * step * dg => {
                    new_e = v;
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            unpack(&x, &mut rs, &mut alphas);
            energy_and_grad(&rs, &alphas, metric, t, &mut grad)?;
            break;
        }
        let delta_e = e - new_e;
        x = pack(&rs, &alphas);
        grad = new_grad;
        e = new_e;
        if delta_e <= 1e-15 * (1.0 + e.abs()) && step == 1.0 {
            // full Newton step with no measurable decrease: at the optimum
            converged = true;
            break;
        }
    }
    unpack(&x, &mut rs, &mut alphas);
    Ok(OptimOutcome { rbs: rs, alphas, iterations: iter, converged })
}

/// Outcome of a distance query.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicResult {
    pub p: (f64, f64),
    pub q: (f64, f64),
    pub t: f64,
    pub distance: f64,
    /// Which branch won: "direct" or "apex".
    pub branch: String,
    /// Through-apex alternative `rho(r_p) + rho(r_q)`.
    pub through_apex: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Max/min segment-speed ratio of the winning direct curve (1 ideal).
    pub speed_ratio: f64,
    #[serde(skip)]
    pub curve: Option<DiscreteCurve>,
}

/// Smoothed distance between two cone points at time `t` by branch-wise
/// curve optimization.
pub fn distance(p: &ConePoint, q: &ConePoint, metric: &WarpedMetric, t: f64, n: usize) -> Result<GeodesicResult> {
    if p.k != metric.k || q.k != metric.k {
        return Err(Error::InvalidInput("cone order mismatch".into()));
    }
    if n < 8 {
        return Err(Error::InvalidInput("need at least 8 curve samples".into()));
    }
    let through_apex = rho(metric, p.r, t)? + rho(metric, q.r, t)?;
    // apex endpoints: the radial ray is minimizing, and its length is rho
    if p.is_apex() || q.is_apex() {
        return Ok(GeodesicResult {
            p: (p.r, p.alpha),
            q: (q.r, q.alpha),
            t,
            distance: through_apex,
            branch: "apex".into(),
            through_apex,
            n,
            iterations: 0,
            converged: true,
            speed_ratio: 1.0,
            curve: None,
        });
    }
    let theta = p.cone_angle();
    let mut gap = (q.alpha - p.alpha).rem_euclid(theta);
    if gap > theta {
        gap -= theta;
    }
    // chart endpoints
    let rb_p = rho(metric, p.r, t)?;
    let rb_q = rho(metric, q.r, t)?;
    // two direct initializers: sweep the gap forward or backward
    let sweeps = [gap, gap - theta];
    let mut best: Option<(f64, OptimOutcome)> = None;
    for sw in sweeps {
        let init = DiscreteCurve {
            rs: (0..n).map(|i| rb_p + (rb_q - rb_p) * i as f64 / (n - 1) as f64).collect(),
            alphas: (0..n).map(|i| p.alpha + sw * i as f64 / (n - 1) as f64).collect(),
        };
        let out = optimize_curve(init, metric, t, 600)?;
        let len = chart_length(&out.rbs, &out.alphas, metric, t)?;
        if best.as_ref().map(|(l, _)| len < *l).unwrap_or(true) {
            best = Some((len, out));
        }
    }
    let (direct_len, out) = best.unwrap();
    if through_apex < direct_len {
        Ok(GeodesicResult {
            p: (p.r, p.alpha),
            q: (q.r, q.alpha),
            t,
            distance: through_apex,
            branch: "apex".into(),
            through_apex,
            n,
            iterations: out.iterations,
            converged: true,
            speed_ratio: 1.0,
            curve: None,
        })
    } else {
        // segment-speed spread in the chart
        let st = t.sqrt();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n - 1 {
            let rm = 0.5 * (out.rbs[i] + out.rbs[i + 1]);
            let (ab, _) = metric.abar_coef((rm / st).max(0.0))?;
            let dr = out.rbs[i + 1] - out.rbs[i];
            let da = out.alphas[i + 1] - out.alphas[i];
            let sp = (dr * dr + rm * rm * ab * da * da).sqrt();
            lo = lo.min(sp);
            hi = hi.max(sp);
        }
        let speed_ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        // convert the winning curve back to cone coordinates for reporting
        let mut rs_out = Vec::with_capacity(n);
        for &rb in &out.rbs {
            rs_out.push(st * metric.rho1_inv((rb / st).min(metric.rbar_max()))?);
        }
        Ok(GeodesicResult {
            p: (p.r, p.alpha),
            q: (q.r, q.alpha),
            t,
            distance: direct_len,
            branch: "direct".into(),
            through_apex,
            n,
            iterations: out.iterations,
            converged: out.converged,
            speed_ratio,
            curve: Some(DiscreteCurve { rs: rs_out, alphas: out.alphas }),
        })
    }
}

/// Relative error of the space-time scaling identity
/// `d_t(p, q) = sqrt(t) d_1(p / sqrt(t), q / sqrt(t))`, both sides by
/// independent optimizer runs.
pub fn scaling_check(p: &ConePoint, q: &ConePoint, metric: &WarpedMetric, t: f64, n: usize) -> Result<f64> {
    let lhs = distance(p, q, metric, t, n)?.distance;
    let st = t.sqrt();
    let ps = ConePoint::new(p.r / st, p.alpha, p.k)?;
    let qs = ConePoint::new(q.r / st, q.alpha, q.k)?;
    let rhs = st * distance(&ps, &qs, metric, 1.0, n)?.distance;
    if lhs == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).abs() / lhs.abs())
}

/// One row of the small-time convergence diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub d_t: f64,
    pub d: f64,
    pub gap: f64,
}

/// `d_t -> d` as `t` decreases: tabulates the gap `d - d_t` (nonnegative by
/// the chain inequality) along the given times.
pub fn convergence_sweep(p: &ConePoint, q: &ConePoint, metric: &WarpedMetric, ts: &[f64], n: usize) -> Result<Vec<SweepRow>> {
    let d = p.distance(q);
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let d_t = distance(p, q, metric, t, n)?.distance;
        rows.push(SweepRow { t, d_t, d, gap: d - d_t });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use once_cell::sync::Lazy;

    static METRIC2: Lazy<WarpedMetric> = Lazy::new(|| WarpedMetric::tabulate(2, 1e-3, 120.0, 72, 16).unwrap());
    static METRIC4: Lazy<WarpedMetric> = Lazy::new(|| WarpedMetric::tabulate(4, 1e-3, 60.0, 40, 16).unwrap());

    #[test]
    fn radial_segment_length_is_rho() {
        let m = &*METRIC2;
        let p = ConePoint::apex(2);
        let curve = DiscreteCurve::line(&p, 1.0, 0.0, 1025);
        let l = length(&curve, m, 1.0).unwrap();
        let want = rho(m, 1.0, 1.0).unwrap();
        assert!((l - want).abs() < 1e-6, "{l} vs {want}");
    }

    #[test]
    fn full_arc_length_is_circumference() {
        let m = &*METRIC2;
        let r = 0.8;
        let n = 257;
        let curve = DiscreteCurve {
            rs: vec![r; n],
            alphas: (0..n).map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64).collect(),
        };
        let l = length(&curve, m, 1.0).unwrap();
        let want = crate::cone::circumference(m, r, 1.0).unwrap();
        assert!((l - want).abs() < 1e-9, "{l} vs {want}");
        // constant curve has zero length
        let cc = DiscreteCurve { rs: vec![r; 9], alphas: vec![0.3; 9] };
        assert_eq!(length(&cc, m, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn apex_distance_is_rho_exactly() {
        let m = &*METRIC2;
        let p = ConePoint::new(1.0, 0.7, 2).unwrap();
        let res = distance(&ConePoint::apex(2), &p, m, 1.0, 257).unwrap();
        assert_eq!(res.branch, "apex");
        assert!((res.distance - rho(m, 1.0, 1.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn identical_points_zero() {
        let m = &*METRIC2;
        let p = ConePoint::new(1.3, 0.4, 2).unwrap();
        let res = distance(&p, &p, m, 1.0, 65).unwrap();
        assert!(res.distance < 1e-9);
    }

    #[test]
    fn symmetric_and_rotation_invariant() {
        let m = &*METRIC2;
        let p = ConePoint::new(0.9, 0.2, 2).unwrap();
        let q = ConePoint::new(1.6, 1.9, 2).unwrap();
        let a = distance(&p, &q, m, 1.0, 129).unwrap().distance;
        let b = distance(&q, &p, m, 1.0, 129).unwrap().distance;
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        // rotate both by the same angle
        let rot = 0.83;
        let pr = ConePoint::new(0.9, 0.2 + rot, 2).unwrap();
        let qr = ConePoint::new(1.6, 1.9 + rot, 2).unwrap();
        let c = distance(&pr, &qr, m, 1.0, 129).unwrap().distance;
        assert!((a - c).abs() < 1e-6, "{a} vs {c}");
    }

    #[test]
    fn upper_bound_vs_initializer_and_refinement() {
        let m = &*METRIC2;
        let p = ConePoint::new(0.7, 0.1, 2).unwrap();
        let q = ConePoint::new(1.2, 2.4, 2).unwrap();
        let res_coarse = distance(&p, &q, m, 1.0, 65).unwrap();
        let res_fine = distance(&p, &q, m, 1.0, 257).unwrap();
        // refinement never increases the distance beyond tolerance
        assert!(res_fine.distance <= res_coarse.distance + 1e-5);
        // near-constant speed at the optimum
        assert!(res_fine.speed_ratio <= 1.05, "speed ratio {}", res_fine.speed_ratio);
        // length below the direct initializer's length
        let init = DiscreteCurve::line(&p, q.r, q.alpha, 257);
        let init_len = length(&init, m, 1.0).unwrap();
        assert!(res_fine.distance <= init_len + 1e-9);
    }

    #[test]
    fn branch_comparison_near_antipodal_small_radius_order_four() {
        // angle-zero cusp: circles around the apex have length ~ r^4
        // (A ~ r^6) while the two-ray path costs 2 rho ~ r^2 / 2, so the
        // wrap-around branch beats the apex by orders of magnitude; the
        // distance op must report the cheaper of the two
        let m = &*METRIC4;
        let r = 0.05;
        let p = ConePoint::new(r, 0.0, 4).unwrap();
        let q = ConePoint::new(r, std::f64::consts::FRAC_PI_4, 4).unwrap();
        let res = distance(&p, &q, m, 1.0, 129).unwrap();
        assert_eq!(res.branch, "direct");
        assert!(res.distance < 0.1 * res.through_apex,
            "direct {} vs apex {}", res.distance, res.through_apex);
        // and both branch values agree with their closed-form scales
        let arc = m.cone_angle() / 2.0 * r * m.a1(r).unwrap().sqrt();
        assert!(res.distance <= arc * 1.05 + 1e-12);
        assert!((res.through_apex - 2.0 * crate::cone::rho(m, r, 1.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn scaling_identity() {
        let m = &*METRIC2;
        let p = ConePoint::new(0.8, 0.3, 2).unwrap();
        let q = ConePoint::new(1.1, 1.2, 2).unwrap();
        assert_eq!(scaling_check(&p, &q, m, 1.0, 65).unwrap(), 0.0);
        for t in [0.25f64, 4.0] {
            let e = scaling_check(&p, &q, m, t, 129).unwrap();
            assert!(e <= 1e-4, "t={t}: rel err {e}");
        }
    }

    #[test]
    fn convergence_gap_shrinks() {
        let m = &*METRIC2;
        let p = ConePoint::new(1.0, 0.2, 2).unwrap();
        let q = ConePoint::new(1.0, 1.8, 2).unwrap();
        let rows = convergence_sweep(&p, &q, m, &[1.0, 0.1, 0.01], 129).unwrap();
        for row in &rows {
            assert!(row.gap >= -1e-6, "gap {}", row.gap);
        }
        assert!(rows[2].gap < rows[0].gap);
        // apex-to-point case matches the closed form
        let rows = convergence_sweep(&ConePoint::apex(2), &p, m, &[0.5], 65).unwrap();
        let want = 1.0 - rho(m, 1.0, 0.5).unwrap();
        assert!((rows[0].gap - want).abs() < 1e-12);
    }

    #[test]
    fn triangle_inequality_sampled() {
        let m = &*METRIC2;
        let a = ConePoint::new(0.6, 0.1, 2).unwrap();
        let b = ConePoint::new(1.4, 1.0, 2).unwrap();
        let c = ConePoint::new(0.9, 2.6, 2).unwrap();
        let dab = distance(&a, &b, m, 1.0, 129).unwrap().distance;
        let dbc = distance(&b, &c, m, 1.0, 129).unwrap().distance;
        let dac = distance(&a, &c, m, 1.0, 129).unwrap().distance;
        assert!(dac <= dab + dbc + 2e-5);
    }
}
