//! Minimal-norm solution of the weighted continuity equation
//! `s + div(mu V) = 0` by Galerkin projection onto gradient subspaces.
//!
//! The squared norm `q = c^T b` of the projected solution is a certified
//! lower bound of `||V||^2_{L^2(mu)}` that grows monotonically as the basis
//! is enlarged; it is the quantity the warped-metric coefficients are made
//! of.  For Gaussian-mixture weights every Gram and load entry is a
//! polynomial integrated against a shifted Gaussian, so assembly uses
//! per-component Gauss-Hermite rules of sufficient order and is exact to
//! rounding.
//!
//! Basis functions are tensor products of Chebyshev polynomials scaled to a
//! per-axis box that covers the weight's mass.  On a shared box the span is
//! the same as any other polynomial basis of equal degree; the Chebyshev
//! representation keeps values order one at every quadrature node, which is
//! what keeps the Gram numerically workable when mixture centers are far
//! apart.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::build_grid;
use crate::quad::gauss_hermite;

/// Per-axis parity constraint on basis indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisParity {
    Even,
    Odd,
    Any,
}

/// Tensor polynomial basis specification.
#[derive(Debug, Clone)]
pub struct BasisSpec {
    /// Maximum total degree.
    pub degree: usize,
    /// Per-axis half-widths of the Chebyshev scaling box.
    pub half_widths: [f64; 2],
    /// Per-axis parity filter.
    pub parity: [AxisParity; 2],
}

impl BasisSpec {
    pub fn new(degree: usize, half_widths: [f64; 2], parity: [AxisParity; 2]) -> Self {
        Self { degree, half_widths, parity }
    }

    /// Multi-indices admitted by the degree cap and parity filter; the
    /// constant is always excluded (its gradient vanishes).
    pub fn indices(&self) -> Vec<(usize, usize)> {
        let ok = |n: usize, p: AxisParity| match p {
            AxisParity::Even => n % 2 == 0,
            AxisParity::Odd => n % 2 == 1,
            AxisParity::Any => true,
        };
        let mut v = Vec::new();
        for a in 0..=self.degree {
            for b in 0..=self.degree - a {
                if (a, b) == (0, 0) {
                    continue;
                }
                if ok(a, self.parity[0]) && ok(b, self.parity[1]) {
                    v.push((a, b));
                }
            }
        }
        v
    }
}

/// The weight measure `mu`.
#[derive(Debug, Clone)]
pub enum WeightSpec {
    /// Positive mixture of planar Gaussians with common variance `2t`.
    GaussianMixture { centers: Vec<[f64; 2]>, component_weights: Vec<f64>, t: f64 },
    /// Weight sampled on an explicit quadrature rule (Lebesgue weights and
    /// pointwise density values).
    Sampled { nodes: Vec<[f64; 2]>, lebesgue: Vec<f64>, density: Vec<f64> },
}

impl WeightSpec {
    pub fn mixture(centers: Vec<[f64; 2]>, t: f64) -> Self {
        let k = centers.len();
        WeightSpec::GaussianMixture { centers, component_weights: vec![1.0 / k as f64; k], t }
    }
}

/// The source `s` of the continuity equation.
#[derive(Debug, Clone)]
pub enum SourceSpec {
    /// `s = d/dh|_0` of the mixture density when component `j`'s center
    /// moves with velocity `dirs[j]`.  The load then integrates by parts to
    /// `b_i = sum_j w_j int eta2(y - c_j) (dirs[j] . grad phi_i) dy`, an
    /// exact Gaussian-polynomial integral.
    CenterMotion { dirs: Vec<[f64; 2]> },
    /// Pointwise values on the sampled weight's nodes.
    Sampled { values: Vec<f64> },
}

/// Completed Galerkin projection.
#[derive(Debug, Clone, Serialize)]
pub struct GalerkinSolve {
    pub degree: usize,
    /// Effective rank after the spectral cutoff.
    pub rank: usize,
    /// Squared norm of the projected field; lower bound of `||V||^2`.
    pub q: f64,
    /// Relative spectral cutoff applied to the diagonally normalized Gram.
    pub cutoff: f64,
    /// Coefficients in the (diagonally re-scaled) basis ordering of
    /// `BasisSpec::indices`.
    pub coeffs: Vec<f64>,
    #[serde(skip)]
    pub indices: Vec<(usize, usize)>,
}

/// Chebyshev values and derivatives of all degrees `0..=deg` at a point.
pub(crate) fn cheb_eval(x: f64, half_width: f64, deg: usize, vals: &mut [f64], ders: &mut [f64]) {
    let t = x / half_width;
    vals[0] = 1.0;
    ders[0] = 0.0;
    if deg >= 1 {
        vals[1] = t;
        ders[1] = 1.0 / half_width;
    }
    for k in 2..=deg {
        vals[k] = 2.0 * t * vals[k - 1] - vals[k - 2];
        ders[k] = 2.0 * vals[k - 1] / half_width + 2.0 * t * ders[k - 1] - ders[k - 2];
    }
}

/// Solve `G c = b` for a PSD Gram with diagonal normalization and a
/// relative eigenvalue cutoff; returns `(coeffs, q = c^T b, rank)`.
pub fn solve_psd(gram: &[f64], load: &[f64], m: usize, cutoff: f64) -> (Vec<f64>, f64, usize) {
    use nalgebra::{DMatrix, DVector};
    let mut d = vec![0.0f64; m];
    for i in 0..m {
        let g = gram[i * m + i];
        d[i] = if g > 0.0 { g.sqrt() } else { 1.0 };
    }
    let gn = DMatrix::from_fn(m, m, |i, j| gram[i * m + j] / (d[i] * d[j]));
    let bn = DVector::from_fn(m, |i, _| load[i] / d[i]);
    let eig = gn.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut q = 0.0;
    let mut rank = 0;
    let mut cn = DVector::zeros(m);
    for k in 0..m {
        let ev = eig.eigenvalues[k];
        if ev > cutoff * lmax {
            rank += 1;
            let vk = eig.eigenvectors.column(k);
            let proj = vk.dot(&bn);
            q += proj * proj / ev;
            cn += vk * (proj / ev);
        }
    }
    let coeffs: Vec<f64> = (0..m).map(|i| cn[i] / d[i]).collect();
    (coeffs, q, rank)
}

const DEFAULT_CUTOFF: f64 = 1e-12;

struct MixtureTables {
    /// Per component: per-element arrays of (d/dx phi, d/dy phi, phi) over
    /// that component's tensor Gauss-Hermite nodes, plus node weights.
    per_component: Vec<ComponentTable>,
}

struct ComponentTable {
    weight: f64,
    node_w: Vec<f64>,
    dx: Vec<Vec<f64>>,
    dy: Vec<Vec<f64>>,
    val: Vec<Vec<f64>>,
}

fn mixture_tables(centers: &[[f64; 2]], comp_w: &[f64], t: f64, idx: &[(usize, usize)], basis: &BasisSpec, extra_order: usize) -> MixtureTables {
    let deg = basis.degree;
    let order = deg + 4 + extra_order;
    let rule = gauss_hermite(order);
    let scale = 2.0 * t.sqrt();
    let mut per_component = Vec::with_capacity(centers.len());
    for (c, w) in centers.iter().zip(comp_w) {
        // per-axis nodes and Gaussian-probability weights (total mass 1)
        let n = rule.nodes.len();
        let ax: Vec<f64> = rule.nodes.iter().map(|x| c[0] + scale * x).collect();
        let ay: Vec<f64> = rule.nodes.iter().map(|x| c[1] + scale * x).collect();
        let aw: Vec<f64> = rule.weights.iter().map(|w| w / std::f64::consts::PI.sqrt()).collect();
        let mut vx = vec![0.0; deg + 1];
        let mut dxs = vec![0.0; deg + 1];
        let mut tab_x: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n);
        for &x in &ax {
            cheb_eval(x, basis.half_widths[0], deg, &mut vx, &mut dxs);
            tab_x.push((vx.clone(), dxs.clone()));
        }
        let mut tab_y: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n);
        for &y in &ay {
            cheb_eval(y, basis.half_widths[1], deg, &mut vx, &mut dxs);
            tab_y.push((vx.clone(), dxs.clone()));
        }
        let nn = n * n;
        let mut node_w = vec![0.0f64; nn];
        for i in 0..n {
            for j in 0..n {
                node_w[i * n + j] = aw[i] * aw[j];
            }
        }
        let mut dx = Vec::with_capacity(idx.len());
        let mut dy = Vec::with_capacity(idx.len());
        let mut val = Vec::with_capacity(idx.len());
        for &(a, b) in idx {
            let mut ex = vec![0.0f64; nn];
            let mut ey = vec![0.0f64; nn];
            let mut ev = vec![0.0f64; nn];
            for i in 0..n {
                let (xv, xd) = &tab_x[i];
                for j in 0..n {
                    let (yv, yd) = &tab_y[j];
                    ex[i * n + j] = xd[a] * yv[b];
                    ey[i * n + j] = xv[a] * yd[b];
                    ev[i * n + j] = xv[a] * yv[b];
                }
            }
            dx.push(ex);
            dy.push(ey);
            val.push(ev);
        }
        per_component.push(ComponentTable { weight: *w, node_w, dx, dy, val });
    }
    MixtureTables { per_component }
}

fn assemble_mixture(tables: &MixtureTables, m: usize) -> Vec<f64> {
    use rayon::prelude::*;
    let mut gram = vec![0.0f64; m * m];
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0f64; m];
            for comp in &tables.per_component {
                let (dxi, dyi) = (&comp.dx[i], &comp.dy[i]);
                for j in 0..=i {
                    let (dxj, dyj) = (&comp.dx[j], &comp.dy[j]);
                    let mut acc = 0.0;
                    for (k, w) in comp.node_w.iter().enumerate() {
                        acc += w * (dxi[k] * dxj[k] + dyi[k] * dyj[k]);
                    }
                    row[j] += comp.weight * acc;
                }
            }
            row
        })
        .collect();
    for i in 0..m {
        for j in 0..=i {
            gram[i * m + j] = rows[i][j];
            gram[j * m + i] = rows[i][j];
        }
    }
    gram
}

/// Solve the continuity equation in minimal-norm (Galerkin) form.
///
/// Preconditions: the source integrates to zero (automatic for
/// [`SourceSpec::CenterMotion`], checked for sampled sources) and has
/// finite `int s^2 / rho`.
pub fn solve_min_norm(weight: &WeightSpec, source: &SourceSpec, basis: &BasisSpec) -> Result<GalerkinSolve> {
    let idx = basis.indices();
    let m = idx.len();
    if m == 0 {
        return Err(Error::InvalidInput("empty basis".into()));
    }
    match (weight, source) {
        (WeightSpec::GaussianMixture { centers, component_weights, t }, SourceSpec::CenterMotion { dirs }) => {
            if dirs.len() != centers.len() {
                return Err(Error::InvalidInput("one direction per mixture component required".into()));
            }
            let tables = mixture_tables(centers, component_weights, *t, &idx, basis, 0);
            let gram = assemble_mixture(&tables, m);
            let mut load = vec![0.0f64; m];
            for (comp, dir) in tables.per_component.iter().zip(dirs) {
                for i in 0..m {
                    let mut acc = 0.0;
                    for (k, w) in comp.node_w.iter().enumerate() {
                        acc += w * (dir[0] * comp.dx[i][k] + dir[1] * comp.dy[i][k]);
                    }
                    load[i] += comp.weight * acc;
                }
            }
            let (coeffs, q, rank) = solve_psd(&gram, &load, m, DEFAULT_CUTOFF);
            Ok(GalerkinSolve { degree: basis.degree, rank, q, cutoff: DEFAULT_CUTOFF, coeffs, indices: idx })
        }
        (WeightSpec::Sampled { nodes, lebesgue, density }, SourceSpec::Sampled { values }) => {
            if nodes.len() != lebesgue.len() || nodes.len() != density.len() || nodes.len() != values.len() {
                return Err(Error::InvalidInput("sampled weight/source length mismatch".into()));
            }
            let mass_s: f64 = lebesgue.iter().zip(values).map(|(w, s)| w * s).sum();
            if mass_s.abs() > 1e-8 {
                return Err(Error::InvalidInput(format!("source must integrate to zero, got {mass_s}")));
            }
            let deg = basis.degree;
            let nn = nodes.len();
            let mut dx = vec![vec![0.0f64; nn]; m];
            let mut dy = vec![vec![0.0f64; nn]; m];
            let mut phi = vec![vec![0.0f64; nn]; m];
            let mut xv = vec![0.0; deg + 1];
            let mut xd = vec![0.0; deg + 1];
            let mut yv = vec![0.0; deg + 1];
            let mut yd = vec![0.0; deg + 1];
            for (k, p) in nodes.iter().enumerate() {
                cheb_eval(p[0], basis.half_widths[0], deg, &mut xv, &mut xd);
                cheb_eval(p[1], basis.half_widths[1], deg, &mut yv, &mut yd);
                for (i, &(a, b)) in idx.iter().enumerate() {
                    dx[i][k] = xd[a] * yv[b];
                    dy[i][k] = xv[a] * yd[b];
                    phi[i][k] = xv[a] * yv[b];
                }
            }
            let wmu: Vec<f64> = lebesgue.iter().zip(density).map(|(w, d)| w * d).collect();
            let mut gram = vec![0.0f64; m * m];
            for i in 0..m {
                for j in 0..=i {
                    let mut acc = 0.0;
                    for k in 0..nn {
                        acc += wmu[k] * (dx[i][k] * dx[j][k] + dy[i][k] * dy[j][k]);
                    }
                    gram[i * m + j] = acc;
                    gram[j * m + i] = acc;
                }
            }
            let mut load = vec![0.0f64; m];
            for i in 0..m {
                load[i] = lebesgue.iter().zip(values).enumerate().map(|(k, (w, s))| w * s * phi[i][k]).sum();
            }
            let (coeffs, q, rank) = solve_psd(&gram, &load, m, DEFAULT_CUTOFF);
            Ok(GalerkinSolve { degree: basis.degree, rank, q, cutoff: DEFAULT_CUTOFF, coeffs, indices: idx })
        }
        _ => Err(Error::InvalidInput("weight and source specifications do not match".into())),
    }
}

/// Residual report over held-out test functions.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// `max_f |int s f - int grad(phi_c) . grad(f) dmu| / ||grad f||`.
    pub max_residual: f64,
    pub tested: usize,
}

/// Weak-form residual of a completed solve against test functions of
/// degree up to `solve.degree + extra` (same parity), excluding the basis
/// itself.
pub fn residual_check(weight: &WeightSpec, source: &SourceSpec, basis: &BasisSpec, solve: &GalerkinSolve, extra: usize) -> Result<ResidualReport> {
    let held = BasisSpec::new(basis.degree + extra, basis.half_widths, basis.parity);
    let all = held.indices();
    let tests: Vec<(usize, usize)> = all.into_iter().filter(|ij| !solve.indices.contains(ij)).collect();
    if tests.is_empty() {
        return Ok(ResidualReport { max_residual: 0.0, tested: 0 });
    }
    // assemble everything exactly on the union basis
    let mut union = solve.indices.clone();
    union.extend(tests.iter().cloned());
    let m_all = union.len();
    match (weight, source) {
        (WeightSpec::GaussianMixture { centers, component_weights, t }, SourceSpec::CenterMotion { dirs }) => {
            let big = BasisSpec::new(basis.degree + extra, basis.half_widths, basis.parity);
            let tables = mixture_tables(centers, component_weights, *t, &union, &big, 0);
            let gram = assemble_mixture(&tables, m_all);
            let mut load = vec![0.0f64; m_all];
            for (comp, dir) in tables.per_component.iter().zip(dirs) {
                for i in 0..m_all {
                    let mut acc = 0.0;
                    for (k, w) in comp.node_w.iter().enumerate() {
                        acc += w * (dir[0] * comp.dx[i][k] + dir[1] * comp.dy[i][k]);
                    }
                    load[i] += comp.weight * acc;
                }
            }
            let nb = solve.indices.len();
            let mut max_r: f64 = 0.0;
            for (ti, _) in tests.iter().enumerate() {
                let row = nb + ti;
                let b_f = load[row];
                let mut gc = 0.0;
                for i in 0..nb {
                    gc += gram[row * m_all + i] * solve.coeffs[i];
                }
                let gnorm = gram[row * m_all + row].sqrt();
                if gnorm > 0.0 {
                    max_r = max_r.max((b_f - gc).abs() / gnorm);
                }
            }
            Ok(ResidualReport { max_residual: max_r, tested: tests.len() })
        }
        _ => Err(Error::InvalidInput("residual check implemented for exact mixture assembly".into())),
    }
}

/// Outcome of the Poincare-type sanity bound `q <= C int s^2 / rho`.
#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub q: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Verify `q <= C ||s / sqrt(rho)||^2`; violation is a hard failure since
/// it indicates a quadrature or assembly bug.
pub fn poincare_bound(weight: &WeightSpec, source: &SourceSpec, solve: &GalerkinSolve, c: f64) -> Result<PoincareReport> {
    let s2_over_rho = match (weight, source) {
        (WeightSpec::GaussianMixture { centers, component_weights, t }, SourceSpec::CenterMotion { dirs }) => {
            let cs: Vec<Vec<f64>> = centers.iter().map(|c| c.to_vec()).collect();
            let grid = build_grid(2, *t, &cs, 96, 10.0)?;
            let norm = 1.0 / (4.0 * std::f64::consts::PI * t);
            grid.integrate(|p| {
                let mut rho = 0.0;
                let mut s = 0.0;
                for ((cc, w), d) in centers.iter().zip(component_weights).zip(dirs) {
                    let vx = p[0] - cc[0];
                    let vy = p[1] - cc[1];
                    let e = w * norm * (-(vx * vx + vy * vy) / (4.0 * t)).exp();
                    rho += e;
                    s += e * (vx * d[0] + vy * d[1]) / (2.0 * t);
                }
                if rho > 0.0 {
                    s * s / rho
                } else {
                    0.0
                }
            })
        }
        (WeightSpec::Sampled { lebesgue, density, .. }, SourceSpec::Sampled { values }) => lebesgue
            .iter()
            .zip(density)
            .zip(values)
            .map(|((w, d), s)| if *d > 0.0 { w * s * s / d } else { 0.0 })
            .sum(),
        _ => return Err(Error::InvalidInput("weight and source specifications do not match".into())),
    };
    let bound = c * s2_over_rho;
    if solve.q > bound * (1.0 + 1e-9) + 1e-14 {
        return Err(Error::Diagnostic(format!(
            "Poincare bound violated: q = {} > C ||s/sqrt(rho)||^2 = {}",
            solve.q, bound
        )));
    }
    Ok(PoincareReport { q: solve.q, bound, margin: bound - solve.q })
}

/// Numerical Poincare constant of the weight over the given basis: the
/// largest Rayleigh quotient `int f^2 dmu / int |grad f|^2 dmu` over
/// mean-zero combinations.  A lower estimate of the true constant.
pub fn rayleigh_constant(weight: &WeightSpec, basis: &BasisSpec) -> Result<f64> {
    use nalgebra::DMatrix;
    let idx = basis.indices();
    let m = idx.len();
    match weight {
        WeightSpec::GaussianMixture { centers, component_weights, t } => {
            let tables = mixture_tables(centers, component_weights, *t, &idx, basis, 8);
            let gram = assemble_mixture(&tables, m);
            // mass matrix and means
            let mut mass = vec![0.0f64; m * m];
            let mut mean = vec![0.0f64; m];
            for comp in &tables.per_component {
                for i in 0..m {
                    let mut mi = 0.0;
                    for (k, w) in comp.node_w.iter().enumerate() {
                        mi += w * comp.val[i][k];
                    }
                    mean[i] += comp.weight * mi;
                    for j in 0..=i {
                        let mut acc = 0.0;
                        for (k, w) in comp.node_w.iter().enumerate() {
                            acc += w * comp.val[i][k] * comp.val[j][k];
                        }
                        mass[i * m + j] += comp.weight * acc;
                        if i != j {
                            mass[j * m + i] += comp.weight * acc;
                        }
                    }
                }
            }
            // center: Mtilde = M - mean mean^T
            for i in 0..m {
                for j in 0..m {
                    mass[i * m + j] -= mean[i] * mean[j];
                }
            }
            // generalized symmetric eigenproblem via Gram eigenbasis
            let g = DMatrix::from_fn(m, m, |i, j| gram[i * m + j]);
            let mm = DMatrix::from_fn(m, m, |i, j| mass[i * m + j]);
            let eig = g.symmetric_eigen();
            let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
            let keep: Vec<usize> = (0..m).filter(|&k| eig.eigenvalues[k] > 1e-10 * lmax).collect();
            let r = keep.len();
            let mut w = DMatrix::zeros(m, r);
            for (col, &k) in keep.iter().enumerate() {
                let s = eig.eigenvalues[k].sqrt();
                for i in 0..m {
                    w[(i, col)] = eig.eigenvectors[(i, k)] / s;
                }
            }
            let b = w.transpose() * mm * &w;
            let bs = b.symmetric_eigen();
            Ok(bs.eigenvalues.iter().cloned().fold(0.0f64, f64::max))
        }
        _ => Err(Error::InvalidInput("Rayleigh sweep implemented for mixture weights".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn translation_fixture(degree: usize) -> GalerkinSolve {
        // single Gaussian translated along e1: V = e1, q -> 1
        let weight = WeightSpec::mixture(vec![[0.0, 0.0]], 1.0);
        let source = SourceSpec::CenterMotion { dirs: vec![[1.0, 0.0]] };
        let basis = BasisSpec::new(degree, [14.0, 14.0], [AxisParity::Any, AxisParity::Any]);
        solve_min_norm(&weight, &source, &basis).unwrap()
    }

    #[test]
    fn translation_speed_is_one() {
        let s = translation_fixture(8);
        assert!((s.q - 1.0).abs() < 1e-10, "q = {}", s.q);
    }

    #[test]
    fn translation_residual_small() {
        let weight = WeightSpec::mixture(vec![[0.0, 0.0]], 1.0);
        let source = SourceSpec::CenterMotion { dirs: vec![[1.0, 0.0]] };
        let basis = BasisSpec::new(8, [14.0, 14.0], [AxisParity::Any, AxisParity::Any]);
        let s = solve_min_norm(&weight, &source, &basis).unwrap();
        let rep = residual_check(&weight, &source, &basis, &s, 4).unwrap();
        assert!(rep.tested > 0);
        assert!(rep.max_residual < 1e-8, "residual {}", rep.max_residual);
    }

    fn angular_setup(r: f64, degree: usize) -> (WeightSpec, SourceSpec, BasisSpec) {
        let weight = WeightSpec::mixture(vec![[r, 0.0], [-r, 0.0]], 1.0);
        let source = SourceSpec::CenterMotion { dirs: vec![[0.0, 1.0], [0.0, -1.0]] };
        let basis = BasisSpec::new(degree, [r + 14.0, 14.0], [AxisParity::Odd, AxisParity::Odd]);
        (weight, source, basis)
    }

    #[test]
    fn angular_small_r_limit() {
        // q / r^2 -> 1/4 with oracle potential psi = r y1 y2 / 4
        let r = 1e-3;
        let (w, s, b) = angular_setup(r, 8);
        let sol = solve_min_norm(&w, &s, &b).unwrap();
        assert!((sol.q / (r * r) - 0.25).abs() < 1e-5, "q/r^2 = {}", sol.q / (r * r));
    }

    #[test]
    fn monotone_in_degree_and_linearity() {
        let r = 0.6;
        let mut last = 0.0;
        for d in [8, 16, 24] {
            let (w, s, b) = angular_setup(r, d);
            let sol = solve_min_norm(&w, &s, &b).unwrap();
            assert!(sol.q >= last - 1e-11, "degree {d}: {} < {}", sol.q, last);
            last = sol.q;
        }
        // linearity: doubling the source direction scales coefficients by 2
        let (w, s, b) = angular_setup(r, 12);
        let sol1 = solve_min_norm(&w, &s, &b).unwrap();
        let s2 = SourceSpec::CenterMotion { dirs: vec![[0.0, 2.0], [0.0, -2.0]] };
        let sol2 = solve_min_norm(&w, &s2, &b).unwrap();
        for (a, b2) in sol1.coeffs.iter().zip(&sol2.coeffs) {
            assert!((2.0 * a - b2).abs() < 1e-10 * (1.0 + b2.abs()));
        }
        assert!((4.0 * sol1.q - sol2.q).abs() < 1e-10 * (1.0 + sol2.q));
    }

    #[test]
    fn parity_filter_is_conservative() {
        let r = 0.5;
        let (w, s, _) = angular_setup(r, 10);
        let filtered = BasisSpec::new(10, [r + 14.0, 14.0], [AxisParity::Odd, AxisParity::Odd]);
        let unfiltered = BasisSpec::new(10, [r + 14.0, 14.0], [AxisParity::Any, AxisParity::Any]);
        let a = solve_min_norm(&w, &s, &filtered).unwrap();
        let b = solve_min_norm(&w, &s, &unfiltered).unwrap();
        assert!((a.q - b.q).abs() < 1e-9, "filtered {} vs full {}", a.q, b.q);
    }

    #[test]
    fn metric_bounded_by_speed() {
        // q <= |w|^2 when the source is translation of the whole mixture
        for r in [0.3, 1.0, 3.0] {
            let weight = WeightSpec::mixture(vec![[r, 0.0], [-r, 0.0]], 1.0);
            for dir in [[1.0, 0.0], [0.0, 1.0]] {
                let source = SourceSpec::CenterMotion { dirs: vec![dir, [-dir[0], -dir[1]]] };
                let basis = BasisSpec::new(16, [r + 14.0, 14.0], [AxisParity::Any, AxisParity::Any]);
                let sol = solve_min_norm(&weight, &source, &basis).unwrap();
                assert!(sol.q <= 1.0 + 1e-9, "q = {} for r = {r}", sol.q);
            }
        }
    }

    #[test]
    fn poincare_holds_on_fixtures() {
        // Gaussian weight: sharp constant 2t
        let weight = WeightSpec::mixture(vec![[0.0, 0.0]], 1.0);
        let source = SourceSpec::CenterMotion { dirs: vec![[1.0, 0.0]] };
        let basis = BasisSpec::new(8, [14.0, 14.0], [AxisParity::Any, AxisParity::Any]);
        let sol = solve_min_norm(&weight, &source, &basis).unwrap();
        let rep = poincare_bound(&weight, &source, &sol, 2.0).unwrap();
        // the Gaussian translation fixture is the sharp case: margin ~ 0
        assert!(rep.margin >= -1e-9 * rep.bound.abs());

        // mixture weight: numerically estimated constant
        let r = 0.8;
        let (w, s, b) = angular_setup(r, 12);
        let sol = solve_min_norm(&w, &s, &b).unwrap();
        let cbasis = BasisSpec::new(10, [r + 14.0, 14.0], [AxisParity::Any, AxisParity::Any]);
        let c = rayleigh_constant(&w, &cbasis).unwrap();
        assert!(c >= 2.0 - 1e-6, "mixture constant should be at least the Gaussian one, got {c}");
        let rep = poincare_bound(&w, &s, &sol, c * 1.05).unwrap();
        assert!(rep.margin >= 0.0);
    }

    #[test]
    fn sampled_weight_matches_exact_assembly() {
        // sample the same mixture on a fine grid and compare q
        let r = 0.5;
        let (w, s, b) = angular_setup(r, 10);
        let exact = solve_min_norm(&w, &s, &b).unwrap();

        let grid = build_grid(2, 1.0, &[vec![r, 0.0], vec![-r, 0.0]], 80, 10.0).unwrap();
        let norm = 1.0 / (4.0 * std::f64::consts::PI);
        let dens = |p: &[f64]| -> f64 {
            let mut v = 0.0;
            for c in [[r, 0.0], [-r, 0.0]] {
                v += 0.5 * norm * (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / 4.0).exp();
            }
            v
        };
        let srcv = |p: &[f64]| -> f64 {
            // d/dh of the symmetrized mixture when the centers move by
            // (0, +-1): s = sum_j w_j eta2(y - c_j) (y - c_j).d_j / 2t
            let mut v = 0.0;
            for (c, d) in [([r, 0.0], [0.0, 1.0]), ([-r, 0.0], [0.0, -1.0])] {
                let e = 0.5 * norm * (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / 4.0).exp();
                v += e * ((p[0] - c[0]) * d[0] + (p[1] - c[1]) * d[1]) / 2.0;
            }
            v
        };
        let nodes: Vec<[f64; 2]> = (0..grid.len()).map(|i| [grid.node(i)[0], grid.node(i)[1]]).collect();
        let sampled = WeightSpec::Sampled {
            lebesgue: grid.weights.clone(),
            density: nodes.iter().map(|p| dens(p)).collect(),
            nodes: nodes.clone(),
        };
        let src = SourceSpec::Sampled { values: nodes.iter().map(|p| srcv(p)).collect() };
        let got = solve_min_norm(&sampled, &src, &b).unwrap();
        assert!((got.q - exact.q).abs() < 1e-6 * (1.0 + exact.q), "sampled {} exact {}", got.q, exact.q);
    }
}
