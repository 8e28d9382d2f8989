//! Fast built-in checks that need no configuration.

use crate::kernels::WeightProfile;
use crate::modulation::{default_n0, slope_floor, verify_n0};
use crate::multipeakon::{evolve, exact_invariants, hamiltonian, PeakonState};
use crate::tolerances as tol;

use super::report::Check;
use super::scenarios::hamiltonian_gradient_error;
use crate::error::Result;

/// `(max(|Psi'''| - Psi'/2), max |Psi(-x) - 1 + Psi(x)|)` on `points` nodes of
/// `[-span, span]`.
pub fn weight_identity_violations(points: usize, span: f64) -> (f64, f64) {
    let w = WeightProfile;
    let mut third: f64 = f64::NEG_INFINITY;
    let mut reflect: f64 = 0.0;
    for i in 0..points {
        let x = -span + 2.0 * span * i as f64 / (points - 1) as f64;
        third = third.max(w.third(x).abs() - 0.5 * w.first(x));
        reflect = reflect.max((w.value(-x) - 1.0 + w.value(x)).abs());
    }
    (third, reflect)
}

pub fn selftest() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let (third, reflect) = weight_identity_violations(10_000, 60.0);
    checks.push(Check::at_most("psi_third_derivative", third, tol::WEIGHT_IDENTITY));
    checks.push(Check::at_most("psi_reflection", reflect, tol::WEIGHT_IDENTITY));

    let n0 = default_n0();
    let report = verify_n0(n0)?;
    checks.push(Check::at_least("n0_min_slope", report.min_slope, slope_floor()));

    let s0 = PeakonState::new(vec![1.0, 1.5, 2.0], vec![-3.0, 0.0, 2.0], 0.0)?;
    let states = evolve(&s0, 5.0, 1e-3)?;
    let end = &states[states.len() - 1];
    let h0 = hamiltonian(&s0);
    checks.push(Check::at_most(
        "multipeakon_hamiltonian_drift",
        (hamiltonian(end) - h0).abs() / h0,
        tol::MULTIPEAKON_DRIFT,
    ));
    let m0 = exact_invariants(&s0).0;
    checks.push(Check::at_most(
        "multipeakon_mass_drift",
        (exact_invariants(end).0 - m0).abs() / m0,
        tol::MULTIPEAKON_DRIFT,
    ));
    checks.push(Check::at_most(
        "hamiltonian_gradient",
        hamiltonian_gradient_error(3, 0)?,
        tol::HAMILTONIAN_GRADIENT,
    ));
    Ok(checks)
}
