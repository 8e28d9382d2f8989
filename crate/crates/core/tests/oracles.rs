//! Independent references: quadrature for the nonlocal term, nalgebra for
//! eigenvalues, closed forms for peakons.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chlab::eigen::symmetric_eigenvalues;
use chlab::field_solver::nonlocal_term;
use chlab::grid::Grid;
use chlab::measures::GridField;
use chlab::multipeakon::{asymptotic_speeds, PeakonState};

fn sech2(x: f64) -> f64 {
    1.0 / x.cosh().powi(2)
}

/// `F = u^2 + u_x^2 / 2` for `u = sech^2`.
fn source(x: f64) -> f64 {
    let u = sech2(x);
    let ux = -2.0 * u * x.tanh();
    u * u + 0.5 * ux * ux
}

/// Composite Simpson on `[a, b]`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `d_x (1 - d_xx)^{-1} F (x) = -1/2 \int sgn(x - s) e^{-|x - s|} F(s) ds`,
/// split at the kink so both pieces are smooth.
fn reference(x: f64) -> f64 {
    let left = simpson(|s| (-(x - s)).exp() * source(s), x - 40.0, x, 8000);
    let right = simpson(|s| (-(s - x)).exp() * source(s), x, x + 40.0, 8000);
    -0.5 * (left - right)
}

fn nonlocal_error(dx: f64) -> f64 {
    let grid = Grid::covering(-30.0, 30.0, dx).unwrap();
    let u = GridField::from_fn(grid, sech2).unwrap();
    let w = nonlocal_term(&u).unwrap();
    (0..grid.len())
        .filter(|i| grid.x(*i).abs() <= 5.0)
        .step_by((0.1 / dx).round() as usize)
        .map(|i| (w[i] - reference(grid.x(i))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn nonlocal_term_matches_quadrature_and_converges() {
    let coarse = nonlocal_error(0.02);
    let fine = nonlocal_error(0.01);
    assert!(fine <= 2e-5, "error {fine:e} at dx = 0.01");
    assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=12 {
        let mut a = vec![vec![0.0; n]; n];
        for (i, j) in (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))) {
            let v = rng.gen_range(-2.0..2.0);
            a[i][j] = v;
            a[j][i] = v;
        }
        let ours = symmetric_eigenvalues(&a).unwrap();
        let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
        let mut theirs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-10, "n = {n}: {x} vs {y}");
        }
    }
}

#[test]
fn asymptotic_speeds_match_general_eigensolver() {
    let s = PeakonState::from_unsorted(vec![1.0, 2.0, 0.7], vec![5.0, 0.0, -2.0], 0.0).unwrap();
    let ours = asymptotic_speeds(&s).unwrap();
    let n = s.len();
    let a = DMatrix::from_fn(n, n, |i, j| s.p()[j] * (-0.5 * (s.q()[i] - s.q()[j]).abs()).exp());
    let eig = a.complex_eigenvalues();
    let mut theirs: Vec<f64> = eig.iter().map(|z| {
        assert!(z.im.abs() < 1e-12);
        z.re
    }).collect();
    theirs.sort_by(f64::total_cmp);
    for (x, y) in ours.iter().zip(&theirs) {
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
}
