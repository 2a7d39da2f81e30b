//! Gaussian densities, rotationally symmetrized mixtures, cone points, and
//! the tensor quadrature grids the other modules integrate against.
//!
//! Throughout, the heat kernel at time `t` on the line has variance `2t`,
//! i.e. density `eta_t(y) = (4 pi t)^{-1/2} exp(-y^2 / 4t)`; the planar
//! kernel is the product `eta_t ⊗ eta_t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_hermite;
use crate::transport::DiscreteMeasure;

/// One-dimensional Gaussian density with variance `2t`.
#[derive(Debug, Clone, Copy)]
pub struct GaussDensity1D {
    pub t: f64,
}

impl GaussDensity1D {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("time must be positive, got {t}")));
        }
        Ok(Self { t })
    }

    pub fn log_eval(&self, y: f64) -> f64 {
        -y * y / (4.0 * self.t) - 0.5 * (4.0 * std::f64::consts::PI * self.t).ln()
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.log_eval(y).exp()
    }

    /// Derivative; satisfies `eta'(y) = -(y / 2t) eta(y)`.
    pub fn deriv(&self, y: f64) -> f64 {
        -(y / (2.0 * self.t)) * self.eval(y)
    }
}

/// Rotate a planar point by `2 pi j / k` about the origin.
///
/// For the orders used here (k = 1, 2, 4) the rotations are quarter turns
/// and sign flips, so they are exact in floating point.
pub fn rotate(y: [f64; 2], j: usize, k: usize) -> [f64; 2] {
    match (k, j % k) {
        (_, 0) => y,
        (2, 1) => [-y[0], -y[1]],
        (4, 1) => [-y[1], y[0]],
        (4, 2) => [-y[0], -y[1]],
        (4, 3) => [y[1], -y[0]],
        _ => {
            let a = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let (s, c) = a.sin_cos();
            [c * y[0] - s * y[1], s * y[0] + c * y[1]]
        }
    }
}

/// A `k`-fold rotationally symmetrized planar Gaussian:
/// `f_x(y) = (1/k) sum_j eta⊗eta(y - R_{2 pi j/k} x)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RotGaussMixture {
    pub center: [f64; 2],
    pub t: f64,
    pub k: usize,
}

impl RotGaussMixture {
    pub fn new(center: [f64; 2], t: f64, k: usize) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("time must be positive, got {t}")));
        }
        if !matches!(k, 1 | 2 | 4) {
            return Err(Error::InvalidInput(format!("symmetrization order must be 1, 2 or 4, got {k}")));
        }
        if !center[0].is_finite() || !center[1].is_finite() {
            return Err(Error::NonFinite("mixture center".into()));
        }
        Ok(Self { center, t, k })
    }

    /// The `k` rotated copies of the center.
    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.k).map(|j| rotate(self.center, j, self.k)).collect()
    }

    /// Log-density; a log-sum-exp over the rotated components so the value
    /// stays meaningful far into the tails.
    pub fn log_density(&self, y: [f64; 2]) -> Result<f64> {
        if !y[0].is_finite() || !y[1].is_finite() {
            return Err(Error::NonFinite("density evaluation point".into()));
        }
        let norm = -(4.0 * std::f64::consts::PI * self.t).ln();
        let mut terms = [f64::NEG_INFINITY; 4];
        for (j, c) in self.centers().into_iter().enumerate() {
            let dx = y[0] - c[0];
            let dy = y[1] - c[1];
            terms[j] = -(dx * dx + dy * dy) / (4.0 * self.t) + norm;
        }
        let m = terms[..self.k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = terms[..self.k].iter().map(|v| (v - m).exp()).sum();
        Ok(m + (s / self.k as f64).ln())
    }

    pub fn density(&self, y: [f64; 2]) -> Result<f64> {
        Ok(self.log_density(y)?.exp())
    }
}

/// Evaluate the mixture density; convenience wrapper matching the module's
/// operation surface.
pub fn eval_density(m: &RotGaussMixture, y: [f64; 2]) -> Result<f64> {
    m.density(y)
}

/// A point of the cone `C(2 pi / k)` in polar coordinates, `k` in {2, 4}.
///
/// The apex is the unique point with `r = 0`; its angle is immaterial.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConePoint {
    pub r: f64,
    pub alpha: f64,
    pub k: usize,
}

impl ConePoint {
    pub fn new(r: f64, alpha: f64, k: usize) -> Result<Self> {
        if !(r >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("bad cone coordinates ({r}, {alpha})")));
        }
        if !matches!(k, 2 | 4) {
            return Err(Error::InvalidInput(format!("cone order must be 2 or 4, got {k}")));
        }
        let angle = 2.0 * std::f64::consts::PI / k as f64;
        Ok(Self { r, alpha: alpha.rem_euclid(angle), k })
    }

    pub fn apex(k: usize) -> Self {
        Self { r: 0.0, alpha: 0.0, k }
    }

    pub fn is_apex(&self) -> bool {
        self.r == 0.0
    }

    /// Full cone angle `2 pi / k`.
    pub fn cone_angle(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k as f64
    }

    /// A planar lift of the point.
    pub fn lift(&self) -> [f64; 2] {
        [self.r * self.alpha.cos(), self.r * self.alpha.sin()]
    }

    /// Quotient distance: minimum over the `k` rotations of the chordal
    /// distance between lifts.
    pub fn distance(&self, other: &ConePoint) -> f64 {
        assert_eq!(self.k, other.k, "cone orders must match");
        let x = self.lift();
        let y = other.lift();
        (0..self.k)
            .map(|j| {
                let ry = rotate(y, j, self.k);
                ((x[0] - ry[0]).powi(2) + (x[1] - ry[1]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Symmetric lift of a weighted cone point cloud: each atom is replaced by
/// its `k` rotated copies at weight `w / k`.  Apex atoms lift to a single
/// origin atom (the copies coincide and are merged by canonicalization).
pub fn symmetric_lift(atoms: &[(ConePoint, f64)], k: usize) -> Result<DiscreteMeasure> {
    let mut pts = Vec::with_capacity(atoms.len() * k);
    let mut wts = Vec::with_capacity(atoms.len() * k);
    for (p, w) in atoms {
        if p.k != k {
            return Err(Error::InvalidInput("cone order mismatch in lift".into()));
        }
        let x = p.lift();
        for j in 0..k {
            pts.push(rotate(x, j, k));
            wts.push(w / k as f64);
        }
    }
    DiscreteMeasure::new(pts, wts)
}

/// Project a planar measure back to the cone (the lift-project round trip
/// partner of [`symmetric_lift`]).
pub fn project_to_cone(m: &DiscreteMeasure, k: usize) -> Result<Vec<(ConePoint, f64)>> {
    let angle = 2.0 * std::f64::consts::PI / k as f64;
    let mut out: Vec<(ConePoint, f64)> = Vec::new();
    for (p, w) in m.points.iter().zip(&m.weights) {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let a = if r == 0.0 { 0.0 } else { p[1].atan2(p[0]).rem_euclid(angle) };
        let cp = ConePoint { r, alpha: a, k };
        if let Some(e) = out.iter_mut().find(|(q, _)| q.r == cp.r && q.alpha == cp.alpha) {
            e.1 += w;
        } else {
            out.push((cp, *w));
        }
    }
    Ok(out)
}

/// Tensor Gauss-Hermite grid with Lebesgue weights, scaled to the heat
/// kernel variance `2t` and wide enough to cover every requested center
/// plus `multiplier` standard deviations of tail.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub dim: usize,
    /// Flat node coordinates, `dim` entries per node.
    pub nodes: Vec<f64>,
    /// Lebesgue weights: `sum_i w_i f(y_i)` approximates the integral of a
    /// function with Gaussian decay at the grid scale.
    pub weights: Vec<f64>,
    pub truncation_radius: f64,
    pub order_per_axis: usize,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Integrate a function over the grid.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.node(i))).sum()
    }
}

/// Build a grid for integrals against Gaussian mixtures at time `t` with the
/// given component centers.
///
/// `multiplier` is the tail allowance in standard deviations (`>= 6`,
/// default 10); the per-axis extent is grown (by raising the order) until it
/// covers `max |center| + multiplier * sqrt(2t)`.
pub fn build_grid(dim: usize, t: f64, centers: &[Vec<f64>], order: usize, multiplier: f64) -> Result<QuadratureGrid> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!("grid dimension must be 1..3, got {dim}")));
    }
    if order < 4 {
        return Err(Error::InvalidInput(format!("grid order must be at least 4, got {order}")));
    }
    if !(multiplier >= 6.0) {
        return Err(Error::InvalidInput(format!("truncation multiplier must be >= 6, got {multiplier}")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput("time must be positive".into()));
    }
    let sigma = (2.0 * t).sqrt();
    let cmax = centers
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let radius = cmax + multiplier * sigma;
    let scale = 2.0 * t.sqrt();

    let mut n = order;
    let rule = loop {
        let rule = gauss_hermite(n);
        let extent = scale * rule.nodes.last().unwrap().abs();
        if extent >= radius || n >= 4096 {
            break rule;
        }
        n = (n * 3 / 2).max(n + 8);
    };

    // per-axis nodes and Lebesgue weights
    let axis_nodes: Vec<f64> = rule.nodes.iter().map(|x| scale * x).collect();
    let axis_w: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| scale * w * (x * x).exp())
        .collect();

    let m = axis_nodes.len();
    let total = m.pow(dim as u32);
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for d in 0..dim {
            nodes.push(axis_nodes[idx[d]]);
            w *= axis_w[idx[d]];
        }
        weights.push(w);
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(QuadratureGrid {
        dim,
        nodes,
        weights,
        truncation_radius: radius,
        order_per_axis: m,
    })
}

/// Discretize a mixture on a grid: node masses thresholded at a relative
/// floor and renormalized, delivered as a planar discrete measure.
pub fn discretize_mixture(m: &RotGaussMixture, grid: &QuadratureGrid, rel_floor: f64) -> Result<DiscreteMeasure> {
    assert_eq!(grid.dim, 2);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    let mut masses = Vec::with_capacity(grid.len());
    let mut max_mass = 0.0f64;
    for i in 0..grid.len() {
        let p = grid.node(i);
        let mass = grid.weights[i] * m.density([p[0], p[1]])?;
        max_mass = max_mass.max(mass);
        masses.push(mass);
    }
    for i in 0..grid.len() {
        if masses[i] > rel_floor * max_mass {
            let p = grid.node(i);
            pts.push([p[0], p[1]]);
            wts.push(masses[i]);
        }
    }
    let total: f64 = wts.iter().sum();
    for w in &mut wts {
        *w /= total;
    }
    DiscreteMeasure::new(pts, wts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn gauss1d_identity() {
        let g = GaussDensity1D::new(1.0).unwrap();
        for y in [-3.0, -0.7, 0.0, 0.4, 2.2] {
            assert!((g.deriv(y) + y / 2.0 * g.eval(y)).abs() < 1e-15);
        }
        // mass via Hermite grid
        let grid = build_grid(1, 1.0, &[vec![0.0]], 64, 10.0).unwrap();
        let mass = grid.integrate(|p| g.eval(p[0]));
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn density_values_match_closed_forms() {
        // collapsed mixture at the origin
        let m = RotGaussMixture::new([0.0, 0.0], 1.0, 2).unwrap();
        assert!((m.density([0.0, 0.0]).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        // two-term formula at the center
        let m = RotGaussMixture::new([1.0, 0.0], 1.0, 2).unwrap();
        let expect = 0.5 / (4.0 * PI) * (1.0 + (-1.0f64).exp());
        assert!((m.density([1.0, 0.0]).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn order_four_factorizes_after_quarter_turn_rotation() {
        // after rotating by pi/4 the k=4 mixture is a product of two 1-D
        // two-point mixtures at +-r/sqrt(2)
        let r = 1.3;
        let m = RotGaussMixture::new([r, 0.0], 1.0, 4).unwrap();
        let g = GaussDensity1D::new(1.0).unwrap();
        let a = r / 2.0f64.sqrt();
        let f1 = |x: f64| 0.5 * (g.eval(x - a) + g.eval(x + a));
        for y in [[0.3, -0.9], [1.5, 0.2], [-2.0, 1.0]] {
            // rotate y by pi/4 into product coordinates
            let c = (0.5f64).sqrt();
            let y1 = c * (y[0] + y[1]);
            let y2 = c * (-y[0] + y[1]);
            let prod = f1(y1) * f1(y2);
            assert!((m.density(y).unwrap() / prod - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_mass_and_rotation_invariance() {
        for k in [2usize, 4] {
            let m = RotGaussMixture::new([1.2, 0.4], 1.0, k).unwrap();
            let grid = build_grid(2, 1.0, &m.centers().iter().map(|c| c.to_vec()).collect::<Vec<_>>(), 96, 10.0).unwrap();
            let mass = grid.integrate(|p| m.density([p[0], p[1]]).unwrap());
            assert!((mass - 1.0).abs() < 1e-8, "mass {mass} for k={k}");
            for y in [[0.7, -0.3], [2.0, 1.5]] {
                let d0 = m.density(y).unwrap();
                let d1 = m.density(rotate(y, 1, k)).unwrap();
                assert_eq!(d0, d1, "rotation closure must be exact");
            }
        }
    }

    #[test]
    fn mixture_time_scaling() {
        let t = 0.37;
        let x = [0.8, -0.5];
        let m_t = RotGaussMixture::new(x, t, 2).unwrap();
        let m_1 = RotGaussMixture::new([x[0] / t.sqrt(), x[1] / t.sqrt()], 1.0, 2).unwrap();
        for y in [[0.2, 0.1], [-1.0, 0.6], [1.4, -2.0]] {
            let lhs = m_t.density(y).unwrap();
            let rhs = m_1.density([y[0] / t.sqrt(), y[1] / t.sqrt()]).unwrap() / t;
            assert!((lhs / rhs - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_examples_and_round_trip() {
        // apex lifts to the origin
        let lift = symmetric_lift(&[(ConePoint::apex(2), 1.0)], 2).unwrap();
        assert_eq!(lift.points.len(), 1);
        assert_eq!(lift.points[0], [0.0, 0.0]);
        assert!((lift.weights[0] - 1.0).abs() < 1e-15);

        // k = 2 unit atom
        let p = ConePoint::new(1.0, 0.0, 2).unwrap();
        let lift = symmetric_lift(&[(p, 1.0)], 2).unwrap();
        assert_eq!(lift.points.len(), 2);
        assert!(lift.weights.iter().all(|w| (w - 0.5).abs() < 1e-15));

        // k = 4 unit atom
        let p = ConePoint::new(1.0, 0.0, 4).unwrap();
        let lift = symmetric_lift(&[(p, 1.0)], 4).unwrap();
        assert_eq!(lift.points.len(), 4);
        assert!(lift.weights.iter().all(|w| (w - 0.25).abs() < 1e-15));

        // round trip recovers the atom
        let back = project_to_cone(&lift, 4).unwrap();
        assert_eq!(back.len(), 1);
        assert!((back[0].1 - 1.0).abs() < 1e-12);
        assert!((back[0].0.r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_construction_rules() {
        let g = build_grid(1, 1.0, &[vec![0.0]], 64, 10.0).unwrap();
        assert_eq!(g.len(), 64);
        let gd = GaussDensity1D::new(1.0).unwrap();
        let mass = g.integrate(|p| gd.eval(p[0]));
        assert!((mass - 1.0).abs() < 1e-12);

        let g = build_grid(2, 1.0, &[vec![5.0, 0.0]], 64, 10.0).unwrap();
        assert!(g.truncation_radius >= 5.0 + 10.0 * 2.0f64.sqrt());

        // variance scaling: node spread halves when t drops by 4
        let g1 = build_grid(1, 1.0, &[vec![0.0]], 32, 10.0).unwrap();
        let g2 = build_grid(1, 0.25, &[vec![0.0]], 32, 10.0).unwrap();
        let m1 = g1.nodes.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        let m2 = g2.nodes.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!((m1 / m2 - 2.0).abs() < 1e-12);

        assert!(build_grid(1, 1.0, &[vec![0.0]], 3, 10.0).is_err());
        assert!(build_grid(1, 1.0, &[vec![0.0]], 16, 4.0).is_err());
    }

    #[test]
    fn cone_distance_quotient() {
        let k = 4;
        let p = ConePoint::new(1.0, 0.0, k).unwrap();
        let q = ConePoint::new(1.0, 1.4, k).unwrap();
        // angular separation 1.4 exceeds half the cone angle pi/2, so the
        // quotient takes the shorter way around
        let th = q.alpha.min(p.cone_angle() - q.alpha);
        let expect = (2.0 - 2.0 * th.cos()).sqrt();
        assert!((p.distance(&q) - expect).abs() < 1e-12);
        assert!((p.distance(&ConePoint::apex(k)) - 1.0).abs() < 1e-15);
    }
}
