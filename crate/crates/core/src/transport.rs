//! Optimal-transport distances: exact 1-D quadratic transport, an exact
//! small-instance solver, log-domain Sinkhorn, and the chord-distance
//! bracket between heat-kernel measures on the quotient cones.
//!
//! Estimates come as one-sided certificates wherever the underlying
//! inequality is one-sided: lower bounds from 1-D projections, upper bounds
//! from explicit feasible couplings.  [`chord_distance`] returns the pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{build_grid, discretize_mixture, ConePoint, RotGaussMixture};

/// Weighted point cloud in the plane.  Weights are nonnegative and sum to
/// one; construction merges exactly duplicated support points.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::InvalidInput("measure needs matching, nonempty support and weights".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("weights must sum to 1, got {sum}")));
        }
        // canonicalize: merge duplicates, drop zero weights, renormalize
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(points.len());
        let mut wts: Vec<f64> = Vec::with_capacity(points.len());
        for (p, w) in points.into_iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            if let Some(i) = pts.iter().position(|q| q == &p) {
                wts[i] += w;
            } else {
                pts.push(p);
                wts.push(w);
            }
        }
        let total: f64 = wts.iter().sum();
        for w in &mut wts {
            *w /= total;
        }
        Ok(Self { points: pts, weights: wts })
    }

    pub fn dirac(p: [f64; 2]) -> Self {
        Self { points: vec![p], weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared-Euclidean cost to another measure's support point.
    pub fn sq_cost(&self, i: usize, other: &Self, j: usize) -> f64 {
        let a = self.points[i];
        let b = other.points[j];
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
    }
}

/// Result of a transport solve, in squared-distance cost units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingResult {
    /// Transport cost `sum c_ij pi_ij` (squared-distance units).
    pub cost: f64,
    /// Solver that produced it.
    pub method: String,
    /// Entropic regularization, if applicable.
    pub eps: Option<f64>,
    /// L1 violation of the marginal constraints of the reported plan.
    pub marginal_violation: f64,
    /// Plan as (i, j, mass) triples; omitted for the 1-D solver.
    #[serde(skip)]
    pub plan: Vec<(usize, usize, f64)>,
    /// Set when the solver stopped before reaching its tolerance.
    pub converged: bool,
}

/// Exact squared `W_2` between two measures on the line via the monotone
/// (quantile) rearrangement.
pub fn w2_1d(xs: &[f64], xw: &[f64], ys: &[f64], yw: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidInput("empty support in 1-D transport".into()));
    }
    let mut a: Vec<(f64, f64)> = xs.iter().cloned().zip(xw.iter().cloned()).collect();
    let mut b: Vec<(f64, f64)> = ys.iter().cloned().zip(yw.iter().cloned()).collect();
    a.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    b.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut cost = 0.0;
    loop {
        let m = ra.min(rb);
        cost += m * (a[i].0 - b[j].0).powi(2);
        ra -= m;
        rb -= m;
        if ra <= 1e-300 {
            i += 1;
            if i >= a.len() {
                break;
            }
            ra = a[i].1;
        }
        if rb <= 1e-300 {
            j += 1;
            if j >= b.len() {
                break;
            }
            rb = b[j].1;
        }
    }
    Ok(cost)
}

/// Exact optimal transport for small instances by successive shortest
/// augmenting paths with potentials (a transportation-problem specialization
/// of min-cost flow; exact for real-valued weights).
pub fn w2_exact<F: Fn(usize, usize) -> f64>(aw: &[f64], bw: &[f64], cost: F) -> Result<CouplingResult> {
    const LIMIT: usize = 64;
    let (n, m) = (aw.len(), bw.len());
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("empty support".into()));
    }
    if n > LIMIT || m > LIMIT {
        return Err(Error::SupportTooLarge { got: n.max(m), limit: LIMIT });
    }
    let c: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| cost(i, j)).collect()).collect();
    let mut supply = aw.to_vec();
    let mut demand = bw.to_vec();
    let mut flow = vec![vec![0.0f64; m]; n];
    // single node potential per vertex; reduced costs stay nonnegative
    let mut pot = vec![0.0f64; n + m];
    let mut guard = 0usize;
    let guard_max = 4 * (n + 1) * (m + 1);

    loop {
        if !(0..n).any(|i| supply[i] > 1e-15) {
            break;
        }
        guard += 1;
        if guard > guard_max {
            return Err(Error::Diagnostic("transport augmentation budget exhausted".into()));
        }
        // Dijkstra over the bipartite residual graph in reduced costs;
        // nodes 0..n are sources, n..n+m sinks
        let inf = f64::INFINITY;
        let mut dist = vec![inf; n + m];
        let mut prev = vec![usize::MAX; n + m];
        let mut done = vec![false; n + m];
        for i in 0..n {
            if supply[i] > 1e-15 {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut best = usize::MAX;
            let mut bd = inf;
            for (v, d) in dist.iter().enumerate() {
                if !done[v] && *d < bd {
                    bd = *d;
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best < n {
                let i = best;
                for j in 0..m {
                    let rc = (c[i][j] + pot[i] - pot[n + j]).max(0.0);
                    let nd = dist[i] + rc;
                    if nd < dist[n + j] {
                        dist[n + j] = nd;
                        prev[n + j] = i;
                    }
                }
            } else {
                let j = best - n;
                for i in 0..n {
                    if flow[i][j] > 1e-15 {
                        let rc = (-c[i][j] + pot[n + j] - pot[i]).max(0.0);
                        let nd = dist[n + j] + rc;
                        if nd < dist[i] {
                            dist[i] = nd;
                            prev[i] = n + j;
                        }
                    }
                }
            }
        }
        // nearest sink with remaining demand
        let mut sink = usize::MAX;
        let mut sd = inf;
        for j in 0..m {
            if demand[j] > 1e-15 && dist[n + j] < sd {
                sd = dist[n + j];
                sink = j;
            }
        }
        if sink == usize::MAX {
            return Err(Error::Diagnostic("transportation graph disconnected".into()));
        }
        // trace the path back to a seeded source
        let mut path: Vec<(usize, usize, bool)> = Vec::new();
        let mut v = n + sink;
        while prev[v] != usize::MAX {
            let p = prev[v];
            if v >= n {
                path.push((p, v - n, true));
            } else {
                path.push((v, p - n, false));
            }
            v = p;
        }
        let start = v;
        let mut bottleneck = demand[sink].min(supply[start]);
        for &(i, j, fwd) in &path {
            if !fwd {
                bottleneck = bottleneck.min(flow[i][j]);
            }
        }
        supply[start] -= bottleneck;
        demand[sink] -= bottleneck;
        for (i, j, fwd) in path {
            if fwd {
                flow[i][j] += bottleneck;
            } else {
                flow[i][j] -= bottleneck;
            }
        }
        // potential update capped at the chosen sink's distance
        let cap = sd;
        for (v, d) in dist.iter().enumerate() {
            pot[v] += d.min(cap);
        }
    }

    let mut total = 0.0;
    let mut plan = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if flow[i][j] > 0.0 {
                total += flow[i][j] * c[i][j];
                plan.push((i, j, flow[i][j]));
            }
        }
    }
    let mut viol = 0.0;
    for i in 0..n {
        viol += (aw[i] - (0..m).map(|j| flow[i][j]).sum::<f64>()).abs();
    }
    for j in 0..m {
        viol += (bw[j] - (0..n).map(|i| flow[i][j]).sum::<f64>()).abs();
    }
    Ok(CouplingResult {
        cost: total,
        method: "assignment".into(),
        eps: None,
        marginal_violation: viol,
        plan,
        converged: true,
    })
}

/// Options for the entropic solver.
#[derive(Debug, Clone)]
pub struct SinkhornOptions {
    /// Final regularization as a fraction of the largest cost entry (the
    /// schedule halves from `0.1 * max cost` down to this), unless
    /// `eps_absolute` is set.
    pub eps_final: f64,
    /// Interpret `eps_final` (and `eps0`) in absolute cost units.
    pub eps_absolute: bool,
    /// Initial regularization; defaults to `0.1 * max cost` when zero.
    pub eps0: f64,
    pub max_iters_per_level: usize,
    pub tol_marginal: f64,
    /// Subtract the self-transport bias (Sinkhorn divergence).
    pub debias: bool,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            eps_final: 1e-3,
            eps_absolute: false,
            eps0: 0.0,
            max_iters_per_level: 400,
            tol_marginal: 1e-7,
            debias: false,
        }
    }
}

fn lse(acc: &mut [f64], row: impl Iterator<Item = f64>, out: &mut f64) {
    let mut m = f64::NEG_INFINITY;
    let mut k = 0;
    for v in row {
        acc[k] = v;
        if v > m {
            m = v;
        }
        k += 1;
    }
    if m == f64::NEG_INFINITY {
        *out = f64::NEG_INFINITY;
        return;
    }
    let s: f64 = acc[..k].iter().map(|v| (v - m).exp()).sum();
    *out = m + s.ln();
}

fn sinkhorn_core(aw: &[f64], bw: &[f64], c: &[f64], n: usize, m: usize, opts: &SinkhornOptions) -> (Vec<f64>, Vec<f64>, f64, usize, bool) {
    let la: Vec<f64> = aw.iter().map(|w| w.max(1e-300).ln()).collect();
    let lb: Vec<f64> = bw.iter().map(|w| w.max(1e-300).ln()).collect();
    let cmax = c.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let eps_final = if opts.eps_absolute { opts.eps_final } else { opts.eps_final * cmax };
    let eps0 = if opts.eps0 > 0.0 {
        if opts.eps_absolute { opts.eps0 } else { opts.eps0 * cmax }
    } else {
        (0.1 * cmax).max(eps_final)
    };
    let mut eps_levels = vec![eps0];
    while *eps_levels.last().unwrap() > eps_final * 1.0001 {
        eps_levels.push((eps_levels.last().unwrap() * 0.5).max(eps_final));
    }
    use rayon::prelude::*;
    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; m];
    let mut viol = f64::INFINITY;
    let mut iters = 0;
    let mut converged = false;
    for &eps in &eps_levels {
        let last_level = eps <= opts.eps_final * 1.0001;
        for it in 0..opts.max_iters_per_level {
            iters += 1;
            let gref = &g;
            f = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut scratch = vec![0.0f64; m];
                    let mut o = 0.0;
                    lse(&mut scratch, (0..m).map(|j| (gref[j] - c[i * m + j]) / eps + lb[j]), &mut o);
                    -eps * o
                })
                .collect();
            let fref = &f;
            g = (0..m)
                .into_par_iter()
                .map(|j| {
                    let mut scratch = vec![0.0f64; n];
                    let mut o = 0.0;
                    lse(&mut scratch, (0..n).map(|i| (fref[i] - c[i * m + j]) / eps + la[i]), &mut o);
                    -eps * o
                })
                .collect();
            // row-marginal violation of the implied plan (checked sparsely,
            // it costs as much as an iteration)
            if it % 8 == 7 || it + 1 == opts.max_iters_per_level {
                let fref = &f;
                let gref = &g;
                viol = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut scratch = vec![0.0f64; m];
                        let mut o = 0.0;
                        lse(&mut scratch, (0..m).map(|j| (fref[i] + gref[j] - c[i * m + j]) / eps + lb[j]), &mut o);
                        ((o + la[i]).exp() - aw[i]).abs()
                    })
                    .sum();
                if viol < opts.tol_marginal {
                    if last_level {
                        converged = true;
                    }
                    break;
                }
            }
        }
    }
    (f, g, viol, iters, converged)
}

fn plan_cost_rounded(aw: &[f64], bw: &[f64], c: &[f64], n: usize, m: usize, f: &[f64], g: &[f64], eps: f64) -> f64 {
    // materialize the plan, then round it onto the exact marginals so the
    // reported cost is the cost of a genuinely feasible coupling
    let la: Vec<f64> = aw.iter().map(|w| w.max(1e-300).ln()).collect();
    let lb: Vec<f64> = bw.iter().map(|w| w.max(1e-300).ln()).collect();
    let mut pi = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            pi[i * m + j] = ((f[i] + g[j] - c[i * m + j]) / eps + la[i] + lb[j]).exp();
        }
    }
    // scale rows down to marginals
    for i in 0..n {
        let r: f64 = pi[i * m..(i + 1) * m].iter().sum();
        if r > aw[i] && r > 0.0 {
            let s = aw[i] / r;
            for j in 0..m {
                pi[i * m + j] *= s;
            }
        }
    }
    for j in 0..m {
        let cl: f64 = (0..n).map(|i| pi[i * m + j]).sum();
        if cl > bw[j] && cl > 0.0 {
            let s = bw[j] / cl;
            for i in 0..n {
                pi[i * m + j] *= s;
            }
        }
    }
    let mut row_def = vec![0.0f64; n];
    let mut col_def = vec![0.0f64; m];
    let mut def_total = 0.0;
    for i in 0..n {
        let r: f64 = pi[i * m..(i + 1) * m].iter().sum();
        row_def[i] = (aw[i] - r).max(0.0);
        def_total += row_def[i];
    }
    for j in 0..m {
        let cl: f64 = (0..n).map(|i| pi[i * m + j]).sum();
        col_def[j] = (bw[j] - cl).max(0.0);
    }
    let mut cost = 0.0;
    for i in 0..n {
        for j in 0..m {
            let mut mass = pi[i * m + j];
            if def_total > 1e-300 {
                mass += row_def[i] * col_def[j] / def_total;
            }
            cost += mass * c[i * m + j];
        }
    }
    cost
}

/// Entropic optimal transport with log-domain iterations and an
/// epsilon-halving schedule.  The reported cost is the true cost of a
/// rounded (exactly feasible) plan; with `debias` the two self-transport
/// costs are subtracted.
pub fn w2_sinkhorn<F: Fn(usize, usize) -> f64>(aw: &[f64], bw: &[f64], cost: F, opts: &SinkhornOptions) -> Result<CouplingResult> {
    let (n, m) = (aw.len(), bw.len());
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("empty support".into()));
    }
    if !(opts.eps_final > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let c: Vec<f64> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| cost(i, j)).collect();
    let (f, g, viol, _iters, conv) = sinkhorn_core(aw, bw, &c, n, m, opts);
    let eps_last = {
        let cmax = c.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let eps_final = if opts.eps_absolute { opts.eps_final } else { opts.eps_final * cmax };
        let e0 = if opts.eps0 > 0.0 {
            if opts.eps_absolute { opts.eps0 } else { opts.eps0 * cmax }
        } else {
            (0.1 * cmax).max(eps_final)
        };
        let mut e = e0;
        while e > eps_final * 1.0001 {
            e = (e * 0.5).max(eps_final);
        }
        e
    };
    let total = plan_cost_rounded(aw, bw, &c, n, m, &f, &g, eps_last);
    Ok(CouplingResult {
        cost: total,
        method: "sinkhorn".into(),
        eps: Some(eps_last),
        marginal_violation: viol,
        plan: Vec::new(),
        converged: conv,
    })
}

fn sqd(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Sinkhorn between planar discrete measures with squared-Euclidean cost,
/// optionally debiased: `SD = OT(a,b) - (OT(a,a) + OT(b,b)) / 2`.
pub fn w2_sinkhorn_points(a: &DiscreteMeasure, b: &DiscreteMeasure, opts: &SinkhornOptions) -> Result<CouplingResult> {
    let mut res = w2_sinkhorn(&a.weights, &b.weights, |i, j| sqd(a.points[i], b.points[j]), opts)?;
    if opts.debias {
        let mut inner = opts.clone();
        inner.debias = false;
        let saa = w2_sinkhorn(&a.weights, &a.weights, |i, j| sqd(a.points[i], a.points[j]), &inner)?;
        let sbb = w2_sinkhorn(&b.weights, &b.weights, |i, j| sqd(b.points[i], b.points[j]), &inner)?;
        res.cost -= 0.5 * (saa.cost + sbb.cost);
        res.cost = res.cost.max(0.0);
        res.method = "sinkhorn-debiased".into();
    }
    Ok(res)
}

/// Exact 1-D lower bound on the squared planar `W_2` from projecting both
/// measures onto the line at the given angle.
pub fn projection_lower_bound_measures(a: &DiscreteMeasure, b: &DiscreteMeasure, angle: f64) -> Result<f64> {
    let (c, s) = (angle.cos(), angle.sin());
    let xa: Vec<f64> = a.points.iter().map(|p| c * p[0] + s * p[1]).collect();
    let xb: Vec<f64> = b.points.iter().map(|p| c * p[0] + s * p[1]).collect();
    w2_1d(&xa, &a.weights, &xb, &b.weights)
}

// ---------------------------------------------------------------------------
// Exact 1-D transport between equal-variance Gaussian mixtures
// ---------------------------------------------------------------------------

fn mixture_cdf(centers: &[f64], t: f64, x: f64) -> f64 {
    let s = (4.0 * t).sqrt(); // erf argument scale: (x - c) / sqrt(4t)
    centers.iter().map(|c| 0.5 * (1.0 + crate::quad::erf((x - c) / s))).sum::<f64>() / centers.len() as f64
}

fn mixture_quantile(centers: &[f64], t: f64, q: f64) -> f64 {
    let sigma = (2.0 * t).sqrt();
    let cmin = centers.iter().cloned().fold(f64::INFINITY, f64::min);
    let cmax = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = cmin - 14.0 * sigma;
    let mut hi = cmax + 14.0 * sigma;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mixture_cdf(centers, t, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact squared `W_2` between two 1-D Gaussian mixtures with equal
/// component variance `2t` and uniform component weights: the quantile
/// coupling integral, evaluated without any spatial grid.
pub fn w2_1d_gaussian_mixtures(centers_a: &[f64], centers_b: &[f64], t: f64) -> Result<f64> {
    if centers_a.is_empty() || centers_b.is_empty() {
        return Err(Error::InvalidInput("empty mixture".into()));
    }
    // quantile differences tend to constants in both tails, so the
    // integrand is bounded; refine panels toward the endpoints
    let mut edges = vec![
        0.0, 1e-9, 1e-7, 1e-5, 1e-4, 1e-3, 5e-3, 0.02, 0.06, 0.15, 0.3, 0.5,
    ];
    let mirror: Vec<f64> = edges.iter().rev().skip(1).map(|e| 1.0 - e).collect();
    edges.extend(mirror);
    let val = crate::quad::composite_gl(
        |q| {
            let qa = mixture_quantile(centers_a, t, q);
            let qb = mixture_quantile(centers_b, t, q);
            (qa - qb) * (qa - qb)
        },
        &edges,
        16,
    );
    Ok(val)
}

/// Two-sided estimate of a chord (Wasserstein) distance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChordBracket {
    /// Certified lower bound (best 1-D projection), distance units.
    pub lower: f64,
    /// Feasible-coupling upper bound, distance units.
    pub upper: f64,
    /// Upper bound from the entropic plan alone (diagnostic).
    pub upper_sinkhorn: f64,
    /// Upper bound from the translation coupling (equals the cone distance).
    pub upper_translation: f64,
    /// Set when the bracket is wider than the requested tolerance.
    pub flagged: bool,
    pub eps: f64,
    pub marginal_violation: f64,
}

impl ChordBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Controls for [`chord_distance`].
#[derive(Debug, Clone)]
pub struct ChordOptions {
    /// Gauss-Hermite order per axis for the Sinkhorn grid.
    pub order_coarse: usize,
    /// Relative mass floor when thresholding the grid support.
    pub rel_floor: f64,
    /// Number of projection directions in the fan (plus the aligned one).
    pub fan: usize,
    /// Requested bracket width (distance units); wider results are flagged.
    pub width_tol: f64,
    pub sinkhorn: SinkhornOptions,
}

impl Default for ChordOptions {
    fn default() -> Self {
        Self {
            order_coarse: 24,
            rel_floor: 1e-10,
            fan: 16,
            width_tol: f64::INFINITY,
            sinkhorn: SinkhornOptions { eps_final: 2e-3, max_iters_per_level: 200, tol_marginal: 1e-6, ..Default::default() },
        }
    }
}

fn lifted_pair_frame(p: &ConePoint, q: &ConePoint) -> ([f64; 2], [f64; 2], f64) {
    // choose lifts realizing the cone distance, and the frame angle that
    // aligns axis 1 with their difference
    let x = p.lift();
    let mut best = (q.lift(), f64::INFINITY);
    for j in 0..q.k {
        let y = crate::measures::rotate(q.lift(), j, q.k);
        let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        if d < best.1 {
            best = (y, d);
        }
    }
    let y = best.0;
    let phi = if best.1 > 0.0 { (y[1] - x[1]).atan2(y[0] - x[0]) } else { 0.0 };
    (x, y, phi)
}

fn rotate_by(p: [f64; 2], phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

fn projected_centers(m: &RotGaussMixture, angle: f64) -> Vec<f64> {
    let (c, s) = (angle.cos(), angle.sin());
    m.centers().iter().map(|p| c * p[0] + s * p[1]).collect()
}

/// Bracket the chord distance `W(nu_p^t, nu_q^t)` on the cone of order `k`
/// via the symmetric lifts.
///
/// Lower bound: exact 1-D transport between the projected lifts (both are
/// equal-variance Gaussian mixtures), maximized over a fan of directions;
/// grid-free, so genuinely one-sided.  Upper bound: the translation
/// coupling (cost `d(p, q)`, always feasible), refined by the rounded
/// entropic plan on a thresholded grid when that estimate is smaller.
pub fn chord_distance(p: &ConePoint, q: &ConePoint, t: f64, opts: &ChordOptions) -> Result<ChordBracket> {
    assert_eq!(p.k, q.k);
    if !(t > 0.0) {
        return Err(Error::InvalidInput("time must be positive".into()));
    }
    let k = p.k;
    let (x, y, phi) = lifted_pair_frame(p, q);
    let d_pq = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
    // mixtures in the frame aligned with the connecting segment
    let xr = rotate_by(x, -phi);
    let yr = rotate_by(y, -phi);
    let mp = RotGaussMixture::new(xr, t, k)?;
    let mq = RotGaussMixture::new(yr, t, k)?;

    // lower: best projection over the fan (angle 0 is the aligned one)
    let mut lower_sq = 0.0f64;
    for j in 0..opts.fan {
        let ang = std::f64::consts::PI * j as f64 / opts.fan as f64;
        let v = w2_1d_gaussian_mixtures(&projected_centers(&mp, ang), &projected_centers(&mq, ang), t)?;
        lower_sq = lower_sq.max(v);
    }

    // upper: entropic plan on the coarse grid, rounded to feasibility
    let centers: Vec<Vec<f64>> = mp.centers().iter().chain(mq.centers().iter()).map(|c| c.to_vec()).collect();
    let coarse = build_grid(2, t, &centers, opts.order_coarse, 10.0)?;
    let ac = discretize_mixture(&mp, &coarse, opts.rel_floor)?;
    let bc = discretize_mixture(&mq, &coarse, opts.rel_floor)?;
    let sk = w2_sinkhorn(&ac.weights, &bc.weights, |i, j| ac.sq_cost(i, &bc, j), &opts.sinkhorn)?;
    let upper_sinkhorn = sk.cost.max(0.0).sqrt();
    let upper_translation = d_pq;
    let upper = upper_sinkhorn.min(upper_translation);
    let lower = lower_sq.max(0.0).sqrt();
    Ok(ChordBracket {
        lower: lower.min(upper),
        upper,
        upper_sinkhorn,
        upper_translation,
        flagged: upper - lower > opts.width_tol,
        eps: sk.eps.unwrap_or(0.0),
        marginal_violation: sk.marginal_violation,
    })
}

/// Single-direction projection lower bound between two cone points'
/// heat-kernel lifts (distance units); exact 1-D mixture transport.
pub fn projection_lower_bound(p: &ConePoint, q: &ConePoint, t: f64, angle: f64) -> Result<f64> {
    let k = p.k;
    let (x, y, phi) = lifted_pair_frame(p, q);
    let mp = RotGaussMixture::new(rotate_by(x, -phi), t, k)?;
    let mq = RotGaussMixture::new(rotate_by(y, -phi), t, k)?;
    Ok(w2_1d_gaussian_mixtures(&projected_centers(&mp, angle), &projected_centers(&mq, angle), t)?
        .max(0.0)
        .sqrt())
}

/// Chord bracket for plain (unsymmetrized) planar Gaussians; the
/// translation-invariant fixture where the flow leaves distances unchanged
/// and the bracket collapses onto `|x - y|`.
pub fn plane_translation_bracket(x: [f64; 2], y: [f64; 2], t: f64) -> Result<ChordBracket> {
    let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
    // project along the connecting direction: both projections are single
    // Gaussians, so the quantile coupling is the translation
    let lower = w2_1d_gaussian_mixtures(&[0.0], &[d], t)?.max(0.0).sqrt();
    Ok(ChordBracket {
        lower: lower.min(d),
        upper: d,
        upper_sinkhorn: f64::NAN,
        upper_translation: d,
        flagged: false,
        eps: 0.0,
        marginal_violation: 0.0,
    })
}
