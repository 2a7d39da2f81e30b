//! Acceptance criteria: one function per criterion, shared expensive
//! fixtures, and a machine-readable result type.
//!
//! Each criterion checks the pinned tolerances and reports every sub-check
//! with its measured value.  The `acceptance` integration test and the
//! `heatmetric accept` command both run these.

use once_cell::sync::Lazy;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

use crate::cone::{abar_at, angle_ratio, angular_a, apex_angle, radial_r, WarpedMetric};
use crate::error::Result;
use crate::geodesics::{distance, scaling_check};
use crate::heisenberg::{
    d_cc, d_riem1, elevator_norm, estimate_constants, gaveau_kernel, ConstantsReport, GridParams,
    HeisenbergGrid, HeisenbergPoint,
};
use crate::measures::ConePoint;
use crate::transport::{
    chord_distance, plane_translation_bracket, w2_exact, w2_sinkhorn_points, ChordOptions,
    DiscreteMeasure, SinkhornOptions,
};

const PI: f64 = std::f64::consts::PI;

/// One measured sub-check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckDetail {
    pub label: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckDetail {
    fn rel(label: &str, value: f64, target: f64, rel_tol: f64) -> Self {
        let pass = (value - target).abs() <= rel_tol * target.abs();
        Self { label: label.into(), value, target, tolerance: rel_tol, pass }
    }

    fn abs(label: &str, value: f64, target: f64, abs_tol: f64) -> Self {
        let pass = (value - target).abs() <= abs_tol;
        Self { label: label.into(), value, target, tolerance: abs_tol, pass }
    }

    fn le(label: &str, value: f64, bound: f64) -> Self {
        Self { label: label.into(), value, target: bound, tolerance: 0.0, pass: value <= bound }
    }

    fn ge(label: &str, value: f64, bound: f64) -> Self {
        Self { label: label.into(), value, target: bound, tolerance: 0.0, pass: value >= bound }
    }
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub seconds: f64,
    pub checks: Vec<CheckDetail>,
}

impl CriterionResult {
    fn from_checks(id: usize, name: &str, started: Instant, checks: Vec<CheckDetail>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { id, name: name.into(), pass, seconds: started.elapsed().as_secs_f64(), checks }
    }

    /// One-line summary for the harness output.
    pub fn line(&self) -> String {
        let worst = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!(" [{}: {:.6} vs {:.6}]", c.label, c.value, c.target))
            .collect::<String>();
        format!(
            "criterion {:02} {} ({:.1} s): {}{}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.seconds,
            self.name,
            worst
        )
    }
}

// shared fixtures
static METRIC2: Lazy<WarpedMetric> = Lazy::new(|| {
    WarpedMetric::tabulate(2, 1e-3, 150.0, 72, 32).expect("order-2 cone tabulation")
});
static METRIC4: Lazy<WarpedMetric> = Lazy::new(|| {
    WarpedMetric::tabulate(4, 1e-3, 150.0, 72, 32).expect("order-4 cone tabulation")
});
static KGRID1: Lazy<HeisenbergGrid> = Lazy::new(|| {
    HeisenbergGrid::build(1.0, &GridParams::default()).expect("kernel grid at t=1")
});
static KGRID4: Lazy<HeisenbergGrid> = Lazy::new(|| {
    HeisenbergGrid::build(4.0, &GridParams::default()).expect("kernel grid at t=4")
});
static CONSTANTS: Lazy<ConstantsReport> =
    Lazy::new(|| estimate_constants(&KGRID1, &[8, 10, 12]).expect("constants"));

/// Criterion 1: small-radius radial coefficient of the order-2 cone.
pub fn criterion_01() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let r = 1e-2;
    let v = radial_r(r, 2)? / (r * r);
    Ok(CriterionResult::from_checks(
        1,
        "C(pi) radial coefficient R(r)/r^2 -> 1/2",
        t0,
        vec![CheckDetail::rel("R(1e-2)/r^2", v, 0.5, 0.01)],
    ))
}

/// Criterion 2: Galerkin angular coefficient at r = 0.1, monotone over the
/// degree sweep {16, 24, 32} and within 2% of 1/4.
pub fn criterion_02() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let r = 0.1;
    let sweep = angular_a(r, 2, 32)?;
    let mut checks = Vec::new();
    // monotone up to an 1e-8 relative rounding allowance
    for w in sweep.by_degree.windows(2) {
        checks.push(CheckDetail::ge(
            &format!("A(deg {}) - A(deg {})", w[1].0, w[0].0),
            w[1].1 - w[0].1,
            -1e-8 * w[0].1.abs(),
        ));
    }
    checks.push(CheckDetail::rel("A(0.1)/r^2", sweep.value / (r * r), 0.25, 0.02));
    Ok(CriterionResult::from_checks(2, "C(pi) angular coefficient A(r)/r^2 -> 1/4", t0, checks))
}

/// Criterion 3: extrapolated apex angle of the smoothed C(pi) is
/// `sqrt(2) pi`.
pub fn criterion_03() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let rep = apex_angle(&METRIC2, 1.0, 0.5)?;
    Ok(CriterionResult::from_checks(
        3,
        "C(pi) apex angle sqrt(2) pi",
        t0,
        vec![CheckDetail::rel("extrapolated l/rho", rep.apex_angle, 2.0f64.sqrt() * PI, 0.01)],
    ))
}

/// Criterion 4: the angle at infinity of the smoothed C(pi): the ratio at
/// r = 50, t = 1 against pi within 2%.
///
/// The exact ratio is `pi * 50 / rho(50)` with
/// `50 - rho(50) = int_0^50 (1 - sqrt(R)) = 1.0006`, i.e. the deviation is
/// 2.04% of pi; the stated tolerance excludes it, and the check is kept as
/// specified.  The 1/r-extrapolated limit (reported alongside) does land on
/// pi.
pub fn criterion_04() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let ratio = angle_ratio(&METRIC2, 50.0, 1.0)?;
    let rep = apex_angle(&METRIC2, 1.0, 0.5)?;
    let mut checks = vec![CheckDetail::rel("ratio at r=50", ratio, PI, 0.02)];
    // diagnostic, not part of the stated criterion: extrapolated limit
    checks.push(CheckDetail::rel("1/r-extrapolated limit (diagnostic)", rep.infinity_angle, PI, 0.02));
    Ok(CriterionResult::from_checks(4, "C(pi) angle at infinity pi", t0, checks))
}

/// Criterion 5: the order-4 cone: radial limit 1/4, cubic growth of
/// sqrt(A), vanishing apex ratio.
pub fn criterion_05() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let r = 1e-2;
    let mut checks = vec![CheckDetail::rel("R(1e-2)/r^2", radial_r(r, 4)? / (r * r), 0.25, 0.01)];
    // fitted log-log slope of sqrt(A) over r in [1e-2, 1e-1]
    let rs: Vec<f64> = (0..7).map(|i| 1e-2 * (10.0f64).powf(i as f64 / 6.0)).collect();
    let vals: Vec<f64> = rs
        .par_iter()
        .map(|&r| angular_a(r, 4, 32).map(|v| v.value.sqrt()))
        .collect::<Result<_>>()?;
    let lx: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let sx: f64 = lx.iter().sum();
    let sy: f64 = ly.iter().sum();
    let sxx: f64 = lx.iter().map(|x| x * x).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    checks.push(CheckDetail::abs("log-log slope of sqrt(A)", slope, 3.0, 0.1));
    checks.push(CheckDetail::le("l/rho at r=1e-2", angle_ratio(&METRIC4, 1e-2, 1.0)?, 0.05));
    Ok(CriterionResult::from_checks(5, "C(pi/2) coefficients and zero apex angle", t0, checks))
}

/// Criterion 6: tangent-cone chart limits.
pub fn criterion_06() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let v2 = abar_at(&METRIC2, 1e-4)?.sqrt();
    let v4 = abar_at(&METRIC4, 1e-4)?.sqrt();
    Ok(CriterionResult::from_checks(
        6,
        "tangent chart: sqrt(Abar) -> sqrt(2) (k=2) and -> 0 (k=4)",
        t0,
        vec![
            CheckDetail::rel("sqrt Abar(1e-4), k=2", v2, 2.0f64.sqrt(), 0.02),
            CheckDetail::le("sqrt Abar(1e-4), k=4", v4, 0.05),
        ],
    ))
}

fn seeded_pairs(seed: u64, n: usize, k: usize, rmax: f64) -> Vec<(ConePoint, ConePoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle = 2.0 * PI / k as f64;
    (0..n)
        .map(|_| {
            let p = ConePoint::new(0.15 + rng.gen::<f64>() * (rmax - 0.15), rng.gen::<f64>() * angle, k).unwrap();
            let q = ConePoint::new(0.15 + rng.gen::<f64>() * (rmax - 0.15), rng.gen::<f64>() * angle, k).unwrap();
            (p, q)
        })
        .collect()
}

/// Criterion 7: space-time scaling of the geodesic distance.
pub fn criterion_07() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let pairs = seeded_pairs(2024, 20, 2, 2.5);
    let worst: f64 = pairs
        .par_iter()
        .map(|(p, q)| -> Result<f64> {
            let mut w: f64 = 0.0;
            for t in [0.25, 4.0] {
                w = w.max(scaling_check(p, q, &METRIC2, t, 129)?);
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CriterionResult::from_checks(
        7,
        "scaling law d_t = sqrt(t) d_1(./sqrt(t)) on random pairs",
        t0,
        vec![CheckDetail::le("max relative error", worst, 1e-4)],
    ))
}

/// Criterion 8: chain inequality chord <= geodesic <= cone distance with a
/// valid bracket on 50 random pairs at t in {0.25, 1, 4}.
pub fn criterion_08() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let pairs = seeded_pairs(7, 50, 2, 2.5);
    let opts = ChordOptions::default();
    #[derive(Default)]
    struct Worst {
        chord_vs_geo: f64,
        geo_vs_cone: f64,
        bracket: f64,
    }
    let rows: Vec<Worst> = pairs
        .par_iter()
        .map(|(p, q)| -> Result<Worst> {
            let mut w = Worst::default();
            for t in [0.25, 1.0, 4.0] {
                let br = chord_distance(p, q, t, &opts)?;
                let geo = distance(p, q, &METRIC2, t, 129)?.distance;
                let d = p.distance(q);
                w.chord_vs_geo = w.chord_vs_geo.max(br.lower - geo);
                w.geo_vs_cone = w.geo_vs_cone.max(geo - d);
                w.bracket = w.bracket.max(br.lower - br.upper);
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut agg = Worst::default();
    for r in rows {
        agg.chord_vs_geo = agg.chord_vs_geo.max(r.chord_vs_geo);
        agg.geo_vs_cone = agg.geo_vs_cone.max(r.geo_vs_cone);
        agg.bracket = agg.bracket.max(r.bracket);
    }
    Ok(CriterionResult::from_checks(
        8,
        "chain inequality: chord bracket <= d_t <= d",
        t0,
        vec![
            // slack: discretization of the chord grid and curve optimizer
            CheckDetail::le("max (chord lower - d_t)", agg.chord_vs_geo, 2e-3),
            CheckDetail::le("max (d_t - d)", agg.geo_vs_cone, 2e-3),
            CheckDetail::le("max (lower - upper)", agg.bracket, 1e-12),
        ],
    ))
}

/// Criterion 9: transport oracles: Sinkhorn vs exact, the lifting identity,
/// and the translation-invariant fixture.
pub fn criterion_09() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let mut checks = Vec::new();
    // (a) debiased entropic vs exact on 20 random 32-atom instances
    let gaps: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + s);
            let n = 32;
            let a: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 2.0]).collect();
            let b: Vec<[f64; 2]> =
                (0..n).map(|_| [rng.gen::<f64>() * 2.0 + 0.7, rng.gen::<f64>() * 2.0 - 0.4]).collect();
            let w = vec![1.0 / n as f64; n];
            let ma = DiscreteMeasure::new(a, w.clone()).unwrap();
            let mb = DiscreteMeasure::new(b, w.clone()).unwrap();
            let exact = w2_exact(&w, &w, |i, j| {
                (ma.points[i][0] - mb.points[j][0]).powi(2) + (ma.points[i][1] - mb.points[j][1]).powi(2)
            })?;
            let diam2 = ma
                .points
                .iter()
                .chain(mb.points.iter())
                .flat_map(|p| {
                    ma.points
                        .iter()
                        .chain(mb.points.iter())
                        .map(move |q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                })
                .fold(0.0f64, f64::max);
            let _ = diam2;
            // schedule down to 1e-3 of the squared diameter (the max cost)
            let opts = SinkhornOptions {
                eps_final: 1e-3,
                debias: true,
                max_iters_per_level: 1500,
                tol_marginal: 1e-9,
                ..Default::default()
            };
            let sk = w2_sinkhorn_points(&ma, &mb, &opts)?;
            Ok((sk.cost - exact.cost).abs() / exact.cost)
        })
        .collect::<Result<Vec<_>>>()?;
    checks.push(CheckDetail::le("max relative Sinkhorn gap", gaps.into_iter().fold(0.0, f64::max), 0.01));

    // (b) lifting identity on 4-atom symmetric fixtures
    let mut worst_lift = 0.0f64;
    for k in [2usize, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(17 + k as u64);
        for _ in 0..6 {
            let atoms_p: Vec<(ConePoint, f64)> = (0..4)
                .map(|_| (ConePoint::new(rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 6.28, k).unwrap(), 0.25))
                .collect();
            let atoms_q: Vec<(ConePoint, f64)> = (0..4)
                .map(|_| (ConePoint::new(rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 6.28, k).unwrap(), 0.25))
                .collect();
            let la = crate::measures::symmetric_lift(&atoms_p, k)?;
            let lb = crate::measures::symmetric_lift(&atoms_q, k)?;
            let plane = w2_exact(&la.weights, &lb.weights, |i, j| la.sq_cost(i, &lb, j))?;
            let pc: Vec<ConePoint> = atoms_p.iter().map(|(p, _)| *p).collect();
            let qc: Vec<ConePoint> = atoms_q.iter().map(|(q, _)| *q).collect();
            let wu = vec![0.25; 4];
            let cone = w2_exact(&wu, &wu, |i, j| pc[i].distance(&qc[j]).powi(2))?;
            worst_lift = worst_lift.max((plane.cost - cone.cost).abs());
        }
    }
    checks.push(CheckDetail::le("max lifting identity error", worst_lift, 1e-9));

    // (c) translation-invariant fixture
    let br = plane_translation_bracket([0.3, -0.1], [1.4, 0.8], 1.0)?;
    let d = ((1.4f64 - 0.3).powi(2) + (0.8f64 + 0.1).powi(2)).sqrt();
    checks.push(CheckDetail::abs("normed fixture |lower - |x-y||", br.lower, d, 1e-6));
    checks.push(CheckDetail::abs("normed fixture |upper - |x-y||", br.upper, d, 1e-12));
    Ok(CriterionResult::from_checks(9, "transport oracles", t0, checks))
}

/// Criterion 10: kernel value at the origin and the space-time scaling
/// relation.
pub fn criterion_10() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let v = gaveau_kernel(&HeisenbergPoint::origin(), 1.0)?.value;
    let mut checks = vec![CheckDetail::abs("h_1(0,0)", v, 1.0 / 16.0, 1e-6)];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let worst = (0..100)
        .map(|_| {
            let p = HeisenbergPoint::new(
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 6.0 - 3.0,
            );
            let t = 0.3 + rng.gen::<f64>() * 3.0;
            let ht = gaveau_kernel(&p, t).unwrap().value;
            let h1 = gaveau_kernel(&HeisenbergPoint::new(p.x / t.sqrt(), p.y / t.sqrt(), p.u / t), 1.0)
                .unwrap()
                .value;
            (ht * t * t / h1 - 1.0).abs()
        })
        .fold(0.0f64, f64::max);
    checks.push(CheckDetail::le("max scaling violation (relative)", worst, 1e-9));
    Ok(CriterionResult::from_checks(10, "explicit heat kernel: origin value and scaling", t0, checks))
}

/// Criterion 11: the horizontal gradient identity `= 2/t` and the elevator
/// norm `= sqrt(2/t)` at t in {1, 4}.
pub fn criterion_11() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let h1 = KGRID1.horizontal_identity();
    let h4 = KGRID4.horizontal_identity();
    let e1 = elevator_norm(&KGRID1);
    let e4 = elevator_norm(&KGRID4);
    Ok(CriterionResult::from_checks(
        11,
        "gradient identity 2/t and elevator norm sqrt(2/t)",
        t0,
        vec![
            CheckDetail::rel("horizontal integral, t=1", h1, 2.0, 0.01),
            CheckDetail::rel("horizontal integral, t=4", h4, 0.5, 0.01),
            CheckDetail::rel("elevator norm, t=1", e1, 2.0f64.sqrt(), 0.01),
            CheckDetail::rel("elevator norm, t=4", e4, 0.5f64.sqrt(), 0.01),
        ],
    ))
}

/// Criterion 12: the smoothed-metric constants.
///
/// `K = sqrt(g(X))` as a monotone Galerkin lower bound; the criterion's
/// floor 1.9 tracks the source remark `K = C_2 >= 2`.  Three independent
/// discretizations put `g(X)` near 2.8 (so `K` near 1.67, consistent with
/// the squared reading `C_2^2 >= 2` but not with `C_2 >= 2`), hence the
/// floor check records an honest failure; the remaining sub-checks hold.
pub fn criterion_12() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let rep = &*CONSTANTS;
    let mut checks = Vec::new();
    for w in rep.g_x_by_degree.windows(2) {
        checks.push(CheckDetail::ge(
            &format!("K(deg {}) - K(deg {})", w[1].0, w[0].0),
            w[1].1.sqrt() - w[0].1.sqrt(),
            -1e-9,
        ));
    }
    checks.push(CheckDetail::ge("K lower bound", rep.k_lower, 1.9));
    checks.push(CheckDetail::le("K/kappa", rep.kk_ratio, 2.0f64.sqrt()));
    checks.push(CheckDetail::ge("K/kappa margin", rep.kk_margin, 1e-6));
    checks.push(CheckDetail::le(
        "relative |g(X) - g(Y)|",
        (rep.g_x - rep.g_y).abs() / rep.g_x,
        1e-6,
    ));
    Ok(CriterionResult::from_checks(12, "Heisenberg metric constants", t0, checks))
}

/// Criterion 13: the Riemannian/CC distance sandwich on 50 sample points.
pub fn criterion_13() -> Result<CriterionResult> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let pts: Vec<HeisenbergPoint> = (0..50)
        .map(|_| {
            HeisenbergPoint::new(
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 6.0 - 3.0,
                rng.gen::<f64>() * 10.0 - 5.0,
            )
        })
        .collect();
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let dr = d_riem1(p)?;
            let dc = d_cc(p)?;
            Ok((dr - dc, dc - dr - 4.0 * PI))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_lo = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let worst_hi = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(CriterionResult::from_checks(
        13,
        "distance sandwich d_Riem <= d_cc <= d_Riem + 4 pi",
        t0,
        vec![
            CheckDetail::le("max (d_Riem - d_cc)", worst_lo, 1e-8),
            CheckDetail::le("max (d_cc - d_Riem - 4 pi)", worst_hi, 1e-8),
        ],
    ))
}

/// Run a single criterion by id (1-based).
pub fn run_criterion(id: usize) -> Result<CriterionResult> {
    match id {
        1 => criterion_01(),
        2 => criterion_02(),
        3 => criterion_03(),
        4 => criterion_04(),
        5 => criterion_05(),
        6 => criterion_06(),
        7 => criterion_07(),
        8 => criterion_08(),
        9 => criterion_09(),
        10 => criterion_10(),
        11 => criterion_11(),
        12 => criterion_12(),
        13 => criterion_13(),
        _ => Err(crate::error::Error::InvalidInput(format!("no criterion {id}"))),
    }
}

/// Run the whole suite in order.
pub fn run_all() -> Result<Vec<CriterionResult>> {
    (1..=13).map(run_criterion).collect()
}
