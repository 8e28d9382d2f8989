use proptest::prelude::*;

use chlab::field_solver::{evolve_field, particles_from_field, SolverSettings};
use chlab::grid::Grid;
use chlab::harness::ScenarioConfig;
use chlab::kernels::{apply_helmholtz, helmholtz_solve, weight_psi};
use chlab::measures::{check_yplus, field_from_atoms_on, momentum_of_field, Atom, GridField};
use chlab::modulation::{default_n0, locate};
use chlab::multipeakon::{
    asymptotic_speeds, evolve, exact_invariants, hamiltonian, rhs, PeakonState,
};
use chlab::characteristics::track_jump;
use chlab::trajectory::{Particles, Trajectory};

/// Sorted positions with gaps of at least `0.2`.
fn peakons(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max).prop_flat_map(|n| {
        (
            prop::collection::vec(0.2..2.0f64, n),
            prop::collection::vec(0.2..3.0f64, n),
        )
            .prop_map(|(p, gaps)| {
                let mut x = -5.0;
                let q = gaps
                    .iter()
                    .map(|g| {
                        x += g;
                        x
                    })
                    .collect();
                (p, q)
            })
    })
}

fn bump_momentum(grid: &Grid, centers: &[(f64, f64, f64)]) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|x| {
            centers
                .iter()
                .map(|(c, w, h)| {
                    let s = (x - c) / w;
                    if s.abs() < 1.0 {
                        h * (-1.0 / (1.0 - s * s)).exp()
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_and_mass_are_conserved((p, q) in peakons(5)) {
        let s = PeakonState::new(p, q, 0.0).unwrap();
        let states = evolve(&s, 2.0, 1e-3).unwrap();
        let (m0, e0) = exact_invariants(&s);
        let end = states.last().unwrap();
        let (m1, e1) = exact_invariants(end);
        prop_assert!((m1 - m0).abs() <= 1e-10 * m0);
        prop_assert!((e1 - e0).abs() <= 1e-9 * e0);
        prop_assert!((hamiltonian(end) - e0 / 4.0).abs() <= 1e-9 * e0);
    }

    #[test]
    fn vector_field_is_hamiltonian((p, q) in peakons(6)) {
        let s = PeakonState::new(p.clone(), q.clone(), 0.0).unwrap();
        let (dp, dq) = rhs(&s).unwrap();
        let h = 1e-6;
        for i in 0..p.len() {
            let at = |dpi: f64, dqi: f64| {
                let mut p2 = p.clone();
                let mut q2 = q.clone();
                p2[i] += dpi;
                q2[i] += dqi;
                hamiltonian(&PeakonState::new(p2, q2, 0.0).unwrap())
            };
            prop_assert!((dq[i] - (at(h, 0.0) - at(-h, 0.0)) / (2.0 * h)).abs() < 1e-7);
            prop_assert!((dp[i] + (at(0.0, h) - at(0.0, -h)) / (2.0 * h)).abs() < 1e-7);
        }
    }

    #[test]
    fn speeds_have_trace_sum_p((p, q) in peakons(6)) {
        let s = PeakonState::new(p.clone(), q, 0.0).unwrap();
        let speeds = asymptotic_speeds(&s).unwrap();
        let trace: f64 = p.iter().sum();
        prop_assert!((speeds.iter().sum::<f64>() - trace).abs() < 1e-10 * trace.max(1.0));
        prop_assert!(speeds.iter().all(|v| *v > 0.0));
        prop_assert!(speeds.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn atomic_sums_lie_in_the_cone((p, q) in peakons(6), x in -8.0..15.0f64) {
        let s = PeakonState::new(p, q, 0.0).unwrap();
        let (l, r) = s.slopes_at(x);
        let u = s.u_at(x);
        prop_assert!(l.abs() <= u * (1.0 + 1e-12));
        prop_assert!(r.abs() <= u * (1.0 + 1e-12));
        prop_assert!(l >= r - 1e-12);
    }

    #[test]
    fn rightmost_jump_never_decreases((p, q) in peakons(4)) {
        let s = PeakonState::new(p, q, 0.0).unwrap();
        let states = evolve(&s, 3.0, 1e-3).unwrap();
        let sub: Vec<PeakonState> = states.iter().step_by(50).cloned().collect();
        let grid = Grid::covering(-50.0, 60.0, 0.05).unwrap();
        let traj = Trajectory::from_peakon_states(&sub, grid).unwrap();
        let jt = track_jump(&traj, 0.0).unwrap();
        prop_assert!(jt.worst_decrease() <= 1e-12);
        prop_assert!(jt.saturation_gap().iter().all(|g| *g >= -1e-12));
    }

    #[test]
    fn helmholtz_solve_inverts_the_stencil(
        f in prop::collection::vec(-3.0..3.0f64, 3..200),
        dx in 0.005..0.5f64,
    ) {
        let u = helmholtz_solve(&f, dx).unwrap();
        let back = apply_helmholtz(&u, dx);
        let scale = f.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (a, b) in back.iter().zip(&f) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn particles_reconstruct_nonnegative_fields(
        bumps in prop::collection::vec((-5.0..5.0f64, 0.3..2.0f64, 0.0..2.0f64), 1..4),
    ) {
        let grid = Grid::covering(-30.0, 30.0, 0.02).unwrap();
        let y = bump_momentum(&grid, &bumps);
        let u = GridField::new(grid, helmholtz_solve(&y, grid.dx()).unwrap()).unwrap();
        prop_assert!(check_yplus(&momentum_of_field(&u)).is_nonnegative);
        let parts = particles_from_field(&u).unwrap();
        let back = parts.field_on(&grid).unwrap();
        let scale = u.max_abs().max(1e-300);
        for (a, b) in back.samples().iter().zip(u.samples()) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn yplus_is_preserved_by_the_flow(
        bumps in prop::collection::vec((-3.0..3.0f64, 0.3..1.0f64, 0.1..1.0f64), 1..3),
    ) {
        let grid = Grid::covering(-40.0, 60.0, 0.05).unwrap();
        let y = bump_momentum(&grid, &bumps);
        let u = GridField::new(grid, helmholtz_solve(&y, grid.dx()).unwrap()).unwrap();
        let traj = evolve_field(&u, &SolverSettings::new(0.05, 1.0)).unwrap();
        for k in 0..traj.len() {
            prop_assert!(check_yplus(&traj.momentum(k)).is_nonnegative);
        }
        prop_assert!(traj.warnings().is_empty());
    }

    #[test]
    fn locate_is_equivariant(shift in 0usize..200, amp in 0.1..10.0f64, c in 0.5..2.0f64) {
        let grid = Grid::covering(-30.0, 30.0, 0.02).unwrap();
        let atoms = [Atom::new(0.0, 2.0 * c), Atom::new(-2.5, 0.3 * c)];
        let u = field_from_atoms_on(&atoms, &grid).unwrap();
        let n0 = default_n0();
        let base = locate(&u, 0.0, n0).unwrap();
        let mut moved = vec![0.0; u.len()];
        moved[shift..].copy_from_slice(&u.samples()[..u.len() - shift]);
        let d = shift as f64 * grid.dx();
        let x = locate(&GridField::new(grid, moved).unwrap(), d, n0).unwrap();
        prop_assert!((x - base - d).abs() < 1e-9);
        let y = locate(&u.scaled(amp), 0.0, n0).unwrap();
        prop_assert!((y - base).abs() < 1e-9);
    }

    #[test]
    fn psi_reflects(x in -200.0..200.0f64) {
        let v = weight_psi(x, 0).unwrap();
        prop_assert!((weight_psi(-x, 0).unwrap() - (1.0 - v)).abs() <= 1e-14);
        prop_assert!(weight_psi(x, 3).unwrap().abs() <= 0.5 * weight_psi(x, 1).unwrap() + 1e-14);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec(-1e3..1e3f64, 16..64), origin in -10.0..10.0f64) {
        let grid = Grid::new(origin, 0.125, values.len()).unwrap();
        let u = GridField::new(grid, values).unwrap();
        let back = GridField::from_csv(&u.to_csv(&["note".into()])).unwrap();
        prop_assert_eq!(back.samples(), u.samples());
    }

    #[test]
    fn particle_lerp_stays_between(
        (p, q) in peakons(4),
        w in 0.0..1.0f64,
    ) {
        let a = Particles::new(p.clone(), q.clone()).unwrap();
        let b = Particles::new(p.iter().map(|v| v * 1.5).collect(), q.iter().map(|v| v + 0.1).collect()).unwrap();
        let m = a.lerp(&b, w);
        for i in 0..p.len() {
            prop_assert!(m.p()[i] >= a.p()[i] - 1e-12 && m.p()[i] <= b.p()[i] + 1e-12);
        }
    }

    #[test]
    fn unknown_keys_report_their_line(pad in 0usize..6, key in "[a-z]{3,8}") {
        let mut text = String::from("kind = single_peakon\nc = 1\ndx = 0.02\nT = 1\n");
        for _ in 0..pad {
            text.push_str("# filler\n");
        }
        text.push_str(&format!("{key}_x = 2\n"));
        match ScenarioConfig::parse(&text) {
            Err(chlab::Error::Config { line, .. }) => prop_assert_eq!(line, 5 + pad),
            other => prop_assert!(false, "unexpected {:?}", other.map(|_| ())),
        }
    }
}
