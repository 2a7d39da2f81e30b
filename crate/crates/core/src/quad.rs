//! Quadrature rules: Gauss-Hermite, Gauss-Legendre, adaptive Gauss-Kronrod.
//!
//! The Gauss rules come from the Golub-Welsch eigendecomposition of the
//! Jacobi matrix of the orthogonal-polynomial recurrence.  Rules are cached
//! by node count since tabulation sweeps request the same sizes repeatedly.

use nalgebra::DMatrix;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};

/// Nodes and weights of a 1-D Gauss rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(diag_len: usize, offdiag: &[f64], total_mass: f64) -> GaussRule {
    let n = diag_len;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (k, &b) in offdiag.iter().enumerate() {
        m[(k, k + 1)] = b;
        m[(k + 1, k)] = b;
    }
    let eig = m.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], total_mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

static HERMITE_CACHE: Lazy<Mutex<HashMap<usize, GaussRule>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));
static LEGENDRE_CACHE: Lazy<Mutex<HashMap<usize, GaussRule>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Gauss-Hermite rule with weight `exp(-x^2)` on the whole line.
///
/// Exact for polynomials of degree `2n - 1`; total weight `sqrt(pi)`.
pub fn gauss_hermite(n: usize) -> GaussRule {
    if let Some(r) = HERMITE_CACHE.lock().unwrap().get(&n) {
        return r.clone();
    }
    let offdiag: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let rule = golub_welsch(n, &offdiag, std::f64::consts::PI.sqrt());
    HERMITE_CACHE.lock().unwrap().insert(n, rule.clone());
    rule
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> GaussRule {
    if let Some(r) = LEGENDRE_CACHE.lock().unwrap().get(&n) {
        return r.clone();
    }
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let rule = golub_welsch(n, &offdiag, 2.0);
    LEGENDRE_CACHE.lock().unwrap().insert(n, rule.clone());
    rule
}

// Gauss-Kronrod 7-15 pair (positive abscissae; QUADPACK values).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Bisects intervals until the local K15-vs-G7 discrepancy meets the
/// tolerance split across subintervals.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    let (v0, e0) = gk15(&f, a, b);
    let mut total = v0;
    // stack of (a, b, value, error)
    let mut stack = vec![(a, b, v0, e0)];
    let mut done_val = 0.0;
    let mut done_err = 0.0;
    let max_intervals = 4000;
    let mut count = 0;
    while let Some((ia, ib, iv, ie)) = stack.pop() {
        let tol = abs_tol.max(rel_tol * total.abs());
        if ie <= tol * (ib - ia) / (b - a) || (ib - ia) < 1e-14 * (b - a).abs() {
            done_val += iv;
            done_err += ie;
            continue;
        }
        count += 1;
        if count > max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "interval budget exhausted, err ~ {:.3e}",
                done_err + ie
            )));
        }
        let m = 0.5 * (ia + ib);
        let (v1, e1) = gk15(&f, ia, m);
        let (v2, e2) = gk15(&f, m, ib);
        total = done_val + stack.iter().map(|s| s.2).sum::<f64>() + v1 + v2;
        stack.push((ia, m, v1, e1));
        stack.push((m, ib, v2, e2));
    }
    Ok(done_val)
}

/// Composite Gauss-Legendre over explicit panel edges.
pub fn composite_gl<F: Fn(f64) -> f64>(f: F, edges: &[f64], n_per_panel: usize) -> f64 {
    let rule = gauss_legendre(n_per_panel);
    let mut acc = 0.0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            acc += half * wt * f(mid + half * x);
        }
    }
    acc
}

/// Error function, double precision (series for small arguments, Lentz
/// continued fraction for the complementary function beyond).
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x <= 2.0 {
        // erf(x) = 2/sqrt(pi) sum (-1)^n x^{2n+1} / (n! (2n+1))
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..80 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        (2.0 / std::f64::consts::PI.sqrt()) * sum
    } else {
        1.0 - erfc_large(x)
    }
}

/// Complementary error function for `x > 0`.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x <= 2.0 {
        1.0 - erf(x)
    } else {
        erfc_large(x)
    }
}

fn erfc_large(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    // evaluated by modified Lentz
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0f64;
    for n in 1..300 {
        let a = n as f64 / 2.0;
        let b = x;
        d = b + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() / f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite(24);
        let m0: f64 = r.weights.iter().sum();
        assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        // int x^2 e^{-x^2} = sqrt(pi)/2
        let m2: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
        assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
        // degree 2n-1 exactness: x^10
        let m10: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(10)).sum();
        let exact = 945.0 / 32.0 * std::f64::consts::PI.sqrt(); // (9)!! / 2^5
        assert!((m10 / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule() {
        let r = gauss_legendre(16);
        let m0: f64 = r.weights.iter().sum();
        assert!((m0 - 2.0).abs() < 1e-13);
        let m4: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 0.4).abs() < 1e-13);
    }

    #[test]
    fn gk_adaptive_smooth_and_peaked() {
        let v = adaptive_gk(|x: f64| (-x * x).exp(), -10.0, 10.0, 1e-12, 1e-300).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-11);
        // sharp peak
        let v = adaptive_gk(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 1e-300).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((v / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn erf_reference_values() {
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-14);
        assert!((erf(0.5) - 0.5204998778130465).abs() < 1e-14);
        assert!((erfc(3.0) - 2.209049699858544e-05).abs() < 1e-18);
        assert!((erfc(5.0) - 1.5374597944280349e-12).abs() < 1e-25);
        assert!((erf(-1.3) + erf(1.3)).abs() < 1e-16);
        // complementarity across the series/fraction switch
        for x in [1.9, 2.0, 2.1, 4.0] {
            assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn composite_gl_matches_adaptive() {
        let f = |x: f64| (x.sin() * 3.0).cos() * (-x * 0.3).exp();
        let a = composite_gl(f, &[0.0, 1.0, 2.5, 6.0], 16);
        let b = adaptive_gk(f, 0.0, 6.0, 1e-12, 1e-300).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
}
