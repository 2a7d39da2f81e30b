//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the measured values.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! every line, or via `heatmetric accept`.
//!
//! Expensive fixtures (metric tabulations, kernel grids) are process-wide
//! lazies shared across the criteria.

use heatmetric::accept;

fn run(id: usize) {
    let res = accept::run_criterion(id).expect("criterion execution");
    println!("{}", res.line());
    for c in &res.checks {
        println!(
            "    {} {}: value {:.9}, target {:.9} (tol {:.2e})",
            if c.pass { "ok  " } else { "FAIL" },
            c.label,
            c.value,
            c.target,
            c.tolerance
        );
    }
    assert!(res.pass, "{}", res.line());
}

#[test]
fn criterion_01_cone_pi_radial_limit() {
    run(1);
}

#[test]
fn criterion_02_cone_pi_angular_limit() {
    run(2);
}

#[test]
fn criterion_03_cone_pi_apex_angle() {
    run(3);
}

#[test]
fn criterion_04_cone_pi_angle_at_infinity() {
    run(4);
}

#[test]
fn criterion_05_cone_half_pi_coefficients() {
    run(5);
}

#[test]
fn criterion_06_tangent_chart() {
    run(6);
}

#[test]
fn criterion_07_scaling_law() {
    run(7);
}

#[test]
fn criterion_08_chain_inequality() {
    run(8);
}

#[test]
fn criterion_09_transport_oracles() {
    run(9);
}

#[test]
fn criterion_10_gaveau_kernel() {
    run(10);
}

#[test]
fn criterion_11_gradient_identity() {
    run(11);
}

#[test]
fn criterion_12_heisenberg_constants() {
    run(12);
}

#[test]
fn criterion_13_distance_sandwich() {
    run(13);
}
