//! One runner per scenario kind. Each writes its CSVs into the output
//! directory and returns the checks it evaluated.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, ScenarioKind, DEFAULT_SNAPSHOTS};
use super::report::{Check, ScenarioReport};
use crate::characteristics::track_jump;
use crate::diagnostics::{
    cone_violation, energy_flux_residual, invariant_series, momentum_flux_residual, monotonicity_audit,
    AuditSettings, FluxWeight, InvariantRecord,
};
use crate::error::{domain, Result};
use crate::field_solver::{default_mollifier_index, domain_grid, evolve_field, SolverSettings};
use crate::grid::Grid;
use crate::kernels::{bump, helmholtz_solve, PeakonProfile};
use crate::measures::{check_yplus, h1_norm, GridField};
use crate::modulation::{track, windowed_peaks, ModulationTrack};
use crate::multipeakon::{
    asymptotic_speeds, evolve_strided, exact_invariants, hamiltonian, rhs, trajectory_csv, PeakonState,
};
use crate::tolerances as tol;
use crate::trajectory::Trajectory;

/// Grid spacing for diagnostics of exact multipeakon runs.
const EXACT_GRID_DX: f64 = 0.05;

/// Random states used by the Hamiltonian consistency check.
const GRADIENT_STATES: usize = 100;

/// Runs `cfg`, writing into `dir`. Solver failures are recorded in the
/// report, not returned.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<ScenarioReport> {
    std::fs::create_dir_all(dir)?;
    let mut report = ScenarioReport::new(cfg.kind.name());
    let header = cfg.header_lines();
    let outcome = match cfg.kind {
        ScenarioKind::SinglePeakon => single_peakon(cfg, dir, &header, &mut report),
        ScenarioKind::MultipeakonExact => multipeakon_exact(cfg, dir, &header, &mut report),
        ScenarioKind::EigenSpeedCheck => eigen_speed_check(cfg, dir, &header, &mut report),
        ScenarioKind::PeakonTrain => peakon_train(cfg, dir, &header, &mut report),
        ScenarioKind::PerturbedPeakon => perturbed_peakon(cfg, dir, &header, &mut report),
        ScenarioKind::LiouvilleProbe => liouville_probe(cfg, dir, &header, &mut report),
        ScenarioKind::MonotonicityAudit => audit_scenario(cfg, dir, &header, &mut report),
    };
    if let Err(e) = outcome {
        if let crate::Error::Io(_) = e {
            return Err(e);
        }
        report.aborted = Some(e.to_string());
    }
    let summary = report.summary(&header);
    report.write(dir, "summary.txt", &summary)?;
    Ok(report)
}

fn required(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| crate::Error::Domain(format!("`{key}` is required")))
}

/// Stored-step stride giving about `STORED_STEPS` snapshots.
fn auto_stride(cfg: &ScenarioConfig, steps: f64) -> usize {
    cfg.stride
        .unwrap_or_else(|| ((steps / tol::STORED_STEPS as f64).ceil() as usize).max(1))
}

fn settings(cfg: &ScenarioConfig, dx: f64, speed: f64, mollifier: Option<u32>) -> SolverSettings {
    let mut s = SolverSettings::new(dx, cfg.t_final);
    s.cfl = cfg.cfl;
    s.mollifier = mollifier;
    let steps = cfg.t_final / s.time_step(speed);
    s.stride = auto_stride(cfg, steps);
    s
}

fn nearest_index(times: &[f64], t: f64) -> usize {
    (0..times.len())
        .min_by(|a, b| (times[*a] - t).abs().total_cmp(&(times[*b] - t).abs()))
        .unwrap_or(0)
}

fn max_interval(times: &[f64]) -> f64 {
    times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn invariants_csv(records: &[InvariantRecord], header: &[String]) -> String {
    let mut out = comment_block(header);
    out.push_str("t,M,E,F\n");
    for r in records {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", r.t, r.m, r.e, r.f);
    }
    out
}

fn comment_block(header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    out
}

fn relative_drift(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let first = values.clone().next().unwrap_or(0.0);
    let scale = first.abs().max(f64::MIN_POSITIVE);
    values.map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

/// Writes every `snapshot_stride`-th stored field plus the last one.
fn write_snapshots(
    cfg: &ScenarioConfig,
    traj: &Trajectory,
    dir: &Path,
    header: &[String],
    report: &mut ScenarioReport,
) -> Result<()> {
    let stride = cfg
        .snapshot_stride
        .unwrap_or_else(|| (traj.len() / DEFAULT_SNAPSHOTS).max(1));
    let mut picks: Vec<usize> = (0..traj.len()).step_by(stride).collect();
    if picks.last() != Some(&(traj.len() - 1)) {
        picks.push(traj.len() - 1);
    }
    let fields = picks.iter().map(|k| traj.field(*k)).collect();
    let times = picks.iter().map(|k| traj.time(*k)).collect();
    let sub = Trajectory::from_fields(fields, times)?;
    let files = sub.write_dir(&dir.join("trajectory"), header)?;
    report.files.extend(files);
    Ok(())
}

/// Cone and `Y+` checks over every stored step, plus monotonicity of the
/// rightmost jump on atomic runs.
fn field_checks(traj: &Trajectory, dir: &Path, header: &[String], report: &mut ScenarioReport) -> Result<()> {
    let dx = traj.grid().dx();
    let cone = (0..traj.len())
        .map(|k| cone_violation(&traj.field(k)))
        .fold(f64::NEG_INFINITY, f64::max);
    report.check(Check::at_most("cone_violation", cone, tol::CONE_FACTOR * dx));
    let (worst, allowed) = (0..traj.len())
        .map(|k| {
            let r = check_yplus(&traj.momentum(k));
            (r.worst_violation, r.tolerance)
        })
        .fold((0.0_f64, f64::INFINITY), |(w, t), (a, b)| (w.max(a), t.min(b)));
    report.check(Check::at_most("yplus_violation", worst, allowed));
    for w in traj.warnings() {
        report.notes.push(w.clone());
    }
    if traj.is_atomic() {
        match track_jump(traj, 0.0) {
            Ok(jt) => {
                report.write(dir, "jump.csv", &jt.to_csv(header))?;
                report.check(Check::at_most("jump_monotone", jt.worst_decrease(), tol::JUMP_MONOTONE));
            }
            Err(e) => report.notes.push(format!("jump: {e}")),
        }
    }
    Ok(())
}

fn modulation_checks(track: &ModulationTrack, c: f64, report: &mut ScenarioReport) {
    let speed = track
        .xdot
        .iter()
        .map(|v| (v - c).abs())
        .fold(0.0, f64::max);
    report.check(Check::at_most(
        "modulation_speed",
        speed,
        c / tol::MODULATION_SPEED_DIVISOR,
    ));
    if let Some(msg) = &track.lost {
        report.notes.push(format!("modulation lost: {msg}"));
    }
}

/// Runs the traveling wave at `dx` and returns the trajectory and the H^1
/// error against the translated peakon at `T`.
pub fn traveling_wave(cfg: &ScenarioConfig, c: f64, dx: f64, mollifier: Option<u32>) -> Result<(Trajectory, f64)> {
    let grid = domain_grid(0.0, 0.0, c, cfg.t_final, dx)?;
    let u0 = GridField::new(grid, PeakonProfile::new(c, 0.0).sample(&grid))?;
    let traj = evolve_field(&u0, &settings(cfg, dx, c, mollifier))?;
    let last = traj.len() - 1;
    let exact = PeakonProfile::new(c, c * traj.time(last)).sample(&grid);
    let diff = traj.field(last).with_samples(
        traj.samples(last)
            .iter()
            .zip(&exact)
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    Ok((traj, h1_norm(&diff, None)?))
}

fn single_peakon(cfg: &ScenarioConfig, dir: &Path, header: &[String], report: &mut ScenarioReport) -> Result<()> {
    let c = required(cfg.c, "c")?;
    let dx = required(cfg.dx, "dx")?;
    let mollifier = cfg.mollifier()?;
    let (traj, err) = traveling_wave(cfg, c, dx, mollifier)?;
    let band = tol::TRAVELING_WAVE_H1 * dx.sqrt();
    report.measure("h1_error", err);
    if mollifier.is_some() {
        report.check(Check::at_most("h1_error", err, band));
        let fine_n = match cfg.n {
            Some(n) if n > 0 => Some(2 * n),
            _ => Some(default_mollifier_index(0.5 * dx)?),
        };
        let (_, fine) = traveling_wave(cfg, c, 0.5 * dx, fine_n)?;
        report.measure("h1_error_half_dx", fine);
        report.check(Check::at_least("h1_refinement_ratio", err / fine, tol::REFINEMENT_RATIO));
    } else {
        report.check(Check::at_most("h1_error", err, band));
    }

    let records = invariant_series(&traj);
    report.write(dir, "invariants.csv", &invariants_csv(&records, header))?;
    let dt = max_interval(traj.times());
    let rel_band = tol::FIELD_DRIFT_FACTOR * (dt * dt + dx);
    report.check(Check::at_most(
        "energy_drift",
        relative_drift(records.iter().map(|r| r.e)),
        rel_band,
    ));
    report.check(Check::at_most(
        "momentum_drift",
        relative_drift(records.iter().map(|r| r.m)),
        rel_band,
    ));

    let e0 = records[0].e;
    let flux_band = tol::FLUX_FACTOR * (dt * dt + dx) * e0;
    let weights = [
        ("const", FluxWeight::Constant(1.0)),
        ("psi", FluxWeight::Psi { shift: 0.5 * c * cfg.t_final }),
    ];
    for (label, g) in &weights {
        let mut energy: f64 = 0.0;
        let mut momentum: f64 = 0.0;
        for k in 1..traj.len().saturating_sub(1) {
            energy = energy.max(energy_flux_residual(&traj, g, k)?);
            momentum = momentum.max(momentum_flux_residual(&traj, g, k)?);
        }
        report.check(Check::at_most(format!("energy_flux_{label}"), energy, flux_band));
        report.check(Check::at_most(format!("momentum_flux_{label}"), momentum, flux_band));
    }

    field_checks(&traj, dir, header, report)?;
    let n0 = cfg.n0();
    let track = track(&traj, n0)?;
    report.write(dir, "modulation.csv", &track.to_csv(header))?;
    modulation_checks(&track, c, report);
    if let (Some(x), Some(t)) = (track.x.last(), track.times.last()) {
        report.measure("modulation_offset_final", x - c * t);
    }
    write_snapshots(cfg, &traj, dir, header, report)
}

fn initial_state(cfg: &ScenarioConfig) -> Result<PeakonState> {
    let q = if cfg.q.is_empty() {
        (0..cfg.p.len()).map(|i| i as f64 * cfg.spacing()).collect()
    } else {
        cfg.q.clone()
    };
    PeakonState::from_unsorted(cfg.p.clone(), q, 0.0)
}

fn ode_stride(cfg: &ScenarioConfig, dt: f64) -> usize {
    auto_stride(cfg, cfg.t_final / dt)
}

fn exact_grid(states: &[PeakonState]) -> Result<Grid> {
    let lo = states.iter().map(|s| s.q()[0]).fold(f64::INFINITY, f64::min);
    let hi = states.iter().map(|s| s.q()[s.len() - 1]).fold(f64::NEG_INFINITY, f64::max);
    Grid::covering(lo - 40.0, hi + 40.0, EXACT_GRID_DX)
}

/// Largest gap between `rhs` and central differences of `H` over random
/// ordered states with `n` peakons.
pub fn hamiltonian_gradient_error(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = tol::GRADIENT_STEP;
    let mut worst: f64 = 0.0;
    let mut made = 0;
    while made < GRADIENT_STATES {
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        q.sort_by(f64::total_cmp);
        if q.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        made += 1;
        let s = PeakonState::new(p.clone(), q.clone(), 0.0)?;
        let (dp, dq) = rhs(&s)?;
        for i in 0..n {
            let shifted = |dpi: f64, dqi: f64| -> Result<f64> {
                let mut p2 = p.clone();
                let mut q2 = q.clone();
                p2[i] += dpi;
                q2[i] += dqi;
                Ok(hamiltonian(&PeakonState::new(p2, q2, 0.0)?))
            };
            let dh_dp = (shifted(h, 0.0)? - shifted(-h, 0.0)?) / (2.0 * h);
            let dh_dq = (shifted(0.0, h)? - shifted(0.0, -h)?) / (2.0 * h);
            worst = worst.max((dq[i] - dh_dp).abs()).max((dp[i] + dh_dq).abs());
        }
    }
    Ok(worst)
}

fn multipeakon_exact(
    cfg: &ScenarioConfig,
    dir: &Path,
    header: &[String],
    report: &mut ScenarioReport,
) -> Result<()> {
    let s0 = initial_state(cfg)?;
    let dt = cfg.dt();
    let stride = ode_stride(cfg, dt);
    let states = evolve_strided(&s0, cfg.t_final, dt, stride)?;
    report.write(dir, "multipeakon.csv", &trajectory_csv(&states, header))?;

    let h: Vec<f64> = states.iter().map(hamiltonian).collect();
    let inv: Vec<(f64, f64)> = states.iter().map(exact_invariants).collect();
    let mut csv = comment_block(header);
    csv.push_str("t,H,M,E\n");
    for (s, (hv, (m, e))) in states.iter().zip(h.iter().zip(&inv)) {
        let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e}", s.time(), hv, m, e);
    }
    report.write(dir, "invariants.csv", &csv)?;
    report.check(Check::at_most("hamiltonian_drift", relative_drift(h.iter().copied()), tol::MULTIPEAKON_DRIFT));
    report.check(Check::at_most("mass_drift", relative_drift(inv.iter().map(|v| v.0)), tol::MULTIPEAKON_DRIFT));
    report.check(Check::at_most("energy_drift", relative_drift(inv.iter().map(|v| v.1)), tol::MULTIPEAKON_DRIFT));
    report.check(Check::at_most(
        "hamiltonian_gradient",
        hamiltonian_gradient_error(s0.len(), cfg.seed)?,
        tol::HAMILTONIAN_GRADIENT,
    ));

    let grid = exact_grid(&states)?;
    let traj = Trajectory::from_peakon_states(&states, grid)?;
    let rightmost = s0.q()[s0.len() - 1];
    let jt = track_jump(&traj, rightmost)?;
    report.write(dir, "jump.csv", &jt.to_csv(header))?;
    report.check(Check::at_most("jump_monotone", jt.worst_decrease(), tol::JUMP_MONOTONE));
    let a_vs_p = jt
        .a
        .iter()
        .zip(&states)
        .map(|(a, s)| (a - 2.0 * s.p()[s.len() - 1]).abs())
        .fold(0.0, f64::max);
    report.check(Check::at_most("jump_equals_2p", a_vs_p, tol::JUMP_MONOTONE));
    let fine = jt.ode_residual.iter().copied().fold(0.0, f64::max);
    report.measure("jump_ode_residual", fine);
    if s0.len() == 1 {
        report.check(Check::at_most("jump_ode_residual", fine, tol::JUMP_ODE));
        let c = s0.p()[0];
        let track = track(&traj, cfg.n0())?;
        report.write(dir, "modulation.csv", &track.to_csv(header))?;
        let err = track
            .times
            .iter()
            .zip(&track.x)
            .map(|(t, x)| (x - s0.q()[0] - c * t).abs())
            .fold(0.0, f64::max);
        report.check(Check::at_most("modulation_position", err, tol::MODULATION_POSITION));
        modulation_checks(&track, c, report);
    } else {
        let coarse_states: Vec<PeakonState> = states.iter().step_by(2).cloned().collect();
        let coarse = Trajectory::from_peakon_states(&coarse_states, grid)?;
        let coarse_res = track_jump(&coarse, rightmost)?
            .ode_residual
            .into_iter()
            .fold(0.0, f64::max);
        report.measure("jump_ode_residual_coarse", coarse_res);
        report.check(Check::at_least(
            "jump_ode_refinement",
            coarse_res / fine,
            tol::JUMP_REFINEMENT_RATIO,
        ));
    }
    Ok(())
}

fn eigen_speed_check(
    cfg: &ScenarioConfig,
    dir: &Path,
    header: &[String],
    report: &mut ScenarioReport,
) -> Result<()> {
    let s0 = initial_state(cfg)?;
    let dt = cfg.dt();
    let states = evolve_strided(&s0, cfg.t_final, dt, ode_stride(cfg, dt))?;
    report.write(dir, "multipeakon.csv", &trajectory_csv(&states, header))?;
    let times: Vec<f64> = states.iter().map(PeakonState::time).collect();
    let last = &states[states.len() - 1];
    let early = &states[nearest_index(&times, (1.0 - tol::EIGEN_LATE_WINDOW) * cfg.t_final)];
    let span = last.time() - early.time();
    let eig = asymptotic_speeds(&s0)?;
    let mut csv = comment_block(header);
    csv.push_str("i,measured,eigenvalue\n");
    let mut worst: f64 = 0.0;
    for i in 0..s0.len() {
        let measured = (last.q()[i] - early.q()[i]) / span;
        worst = worst.max((measured - eig[i]).abs());
        let _ = writeln!(csv, "{i},{measured:.16e},{:.16e}", eig[i]);
    }
    report.write(dir, "speeds.csv", &csv)?;
    let bound = if s0.len() <= 2 {
        tol::EIGEN_SPEED_PAIR
    } else {
        tol::EIGEN_SPEED_MANY
    };
    report.check(Check::at_most("eigen_speed", worst, bound));
    Ok(())
}

/// Linear interpolation of ODE positions at `t`.
fn ode_positions(states: &[PeakonState], t: f64) -> Vec<f64> {
    let k = states.partition_point(|s| s.time() <= t).clamp(1, states.len() - 1);
    let (a, b) = (&states[k - 1], &states[k]);
    let w = ((t - a.time()) / (b.time() - a.time())).clamp(0.0, 1.0);
    a.q().iter().zip(b.q()).map(|(x, y)| (1.0 - w) * x + w * y).collect()
}

fn peakon_train(cfg: &ScenarioConfig, dir: &Path, header: &[String], report: &mut ScenarioReport) -> Result<()> {
    let dx = required(cfg.dx, "dx")?;
    let raw = initial_state(cfg)?;
    let speed = raw.p().iter().copied().fold(0.0, f64::max) * 1.5;
    let grid = domain_grid(raw.q()[0], raw.q()[raw.len() - 1], speed, cfg.t_final, dx)?;
    // atoms sit on nodes so the sampled field is an exact multipeakon
    let q: Vec<f64> = raw.q().iter().map(|x| grid.x(grid.nearest(*x))).collect();
    let s0 = PeakonState::new(raw.p().to_vec(), q, 0.0)?;
    let u0 = s0.field_on(&grid)?;
    let mollifier = cfg.mollifier()?;
    let traj = evolve_field(&u0, &settings(cfg, dx, speed, mollifier))?;
    let ode = evolve_strided(&s0, cfg.t_final, cfg.dt(), 1)?;
    let min_gap = s0.q().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let half_window = (0.25 * min_gap).min(2.0);
    let mut csv = comment_block(header);
    let n = s0.len();
    let names: Vec<String> = (1..=n)
        .map(|i| format!("field_q{i}"))
        .chain((1..=n).map(|i| format!("ode_q{i}")))
        .collect();
    let _ = writeln!(csv, "t,{}", names.join(","));
    let mut worst: f64 = 0.0;
    for k in 0..traj.len() {
        let t = traj.time(k);
        let expected = ode_positions(&ode, t);
        let found = windowed_peaks(&traj, k, &expected, half_window);
        for (a, b) in found.iter().zip(&expected) {
            worst = worst.max((a - b).abs());
        }
        let row: Vec<String> = std::iter::once(t)
            .chain(found.iter().copied())
            .chain(expected.iter().copied())
            .map(|v| format!("{v:.16e}"))
            .collect();
        let _ = writeln!(csv, "{}", row.join(","));
    }
    report.write(dir, "peaks.csv", &csv)?;
    let width = mollifier.map_or(0.0, |n| 1.0 / n as f64);
    report.check(Check::at_most(
        "cross_solver_peaks",
        worst,
        tol::CROSS_SOLVER_FACTOR * (dx + width),
    ));
    field_checks(&traj, dir, header, report)?;
    let records = invariant_series(&traj);
    report.write(dir, "invariants.csv", &invariants_csv(&records, header))?;
    write_snapshots(cfg, &traj, dir, header, report)
}

/// Peakon `c phi` at the origin plus a seeded momentum bump behind it, scaled
/// so the H^1 distance to the peakon is `fraction * c`.
pub fn perturbed_initial(c: f64, fraction: f64, seed: u64, grid: &Grid) -> Result<GridField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = -rng.gen_range(2.0..4.0);
    let width = rng.gen_range(0.5..1.5);
    let y: Vec<f64> = grid.nodes().iter().map(|x| bump((x - center) / width)).collect();
    let ub = GridField::new(*grid, helmholtz_solve(&y, grid.dx())?)?;
    let norm = h1_norm(&ub, None)?;
    if !(norm > 0.0) {
        return domain("perturbation bump is not resolved by the grid");
    }
    let eps = fraction * c / norm;
    let peak = PeakonProfile::new(c, 0.0).sample(grid);
    GridField::new(
        *grid,
        peak.iter().zip(ub.samples()).map(|(a, b)| a + eps * b).collect(),
    )
}

struct PerturbedRun {
    c: f64,
    traj: Trajectory,
    track: ModulationTrack,
}

fn perturbed_run(cfg: &ScenarioConfig, dir: &Path, header: &[String], report: &mut ScenarioReport) -> Result<PerturbedRun> {
    let c = required(cfg.c, "c")?;
    let dx = required(cfg.dx, "dx")?;
    let fraction = required(cfg.perturbation, "perturbation")?;
    let speed = 1.5 * c;
    let grid = domain_grid(-6.0, 1.0, speed, cfg.t_final, dx)?;
    let u0 = perturbed_initial(c, fraction, cfg.seed, &grid)?;
    let peak = GridField::new(grid, PeakonProfile::new(c, 0.0).sample(&grid))?;
    report.measure("initial_h1_distance", h1_norm(&u0.minus(&peak)?, None)?);
    let traj = evolve_field(&u0, &settings(cfg, dx, speed, cfg.mollifier()?))?;
    let track = track(&traj, cfg.n0())?;
    report.write(dir, "modulation.csv", &track.to_csv(header))?;
    if let Some(msg) = &track.lost {
        report.notes.push(format!("modulation lost: {msg}"));
    }
    field_checks(&traj, dir, header, report)?;
    let records = invariant_series(&traj);
    report.write(dir, "invariants.csv", &invariants_csv(&records, header))?;
    write_snapshots(cfg, &traj, dir, header, report)?;
    Ok(PerturbedRun { c, traj, track })
}

fn perturbed_peakon(cfg: &ScenarioConfig, dir: &Path, header: &[String], report: &mut ScenarioReport) -> Result<()> {
    let theta = required(cfg.theta, "theta")?;
    let PerturbedRun { traj, track, .. } = perturbed_run(cfg, dir, header, report)?;
    if track.len() != traj.len() {
        return domain("modulation track ended early");
    }
    let times = traj.times();
    let t_end = cfg.t_final;
    let lam = |t: f64| track.lambda[nearest_index(times, t)];
    let c_star = lam(t_end);
    report.measure("c_star", c_star);
    report.check(Check::less_than(
        "lambda_stabilizes",
        (c_star - lam(0.5 * t_end)).abs(),
        (lam(0.5 * t_end) - lam(0.25 * t_end)).abs(),
    ));
    let grid = *traj.grid();
    let mut distance = Vec::with_capacity(traj.len());
    let mut csv = comment_block(header);
    let _ = writeln!(csv, "# c_star = {c_star:.16e}");
    csv.push_str("t,distance\n");
    for k in 0..traj.len() {
        let profile = PeakonProfile::new(c_star, track.x[k]).sample(&grid);
        let diff = traj.field(k).with_samples(
            traj.samples(k).iter().zip(&profile).map(|(a, b)| a - b).collect(),
        )?;
        let d = h1_norm(&diff, Some(theta * traj.time(k)))?;
        let _ = writeln!(csv, "{:.16e},{d:.16e}", traj.time(k));
        distance.push(d);
    }
    report.write(dir, "halfline.csv", &csv)?;
    let half = nearest_index(times, 0.5 * t_end);
    let last = traj.len() - 1;
    let decreasing = distance[half..].windows(2).all(|w| w[1] <= w[0]);
    report.notes.push(format!(
        "half-line distance decreasing over the last half: {decreasing}"
    ));
    report.check(Check::less_than("halfline_distance", distance[last], distance[half]));
    Ok(())
}

fn liouville_probe(cfg: &ScenarioConfig, dir: &Path, header: &[String], report: &mut ScenarioReport) -> Result<()> {
    let PerturbedRun { traj, .. } = perturbed_run(cfg, dir, header, report)?;
    let jt = track_jump(&traj, 0.0)?;
    let gap = jt.saturation_gap();
    let mut csv = comment_block(header);
    csv.push_str("t,gap\n");
    for (t, g) in jt.times.iter().zip(&gap) {
        let _ = writeln!(csv, "{t:.16e},{g:.16e}");
    }
    report.write(dir, "liouville.csv", &csv)?;
    if let Some(msg) = &jt.lost {
        report.notes.push(format!("jump lost: {msg}"));
    }
    let min = gap.iter().copied().fold(f64::INFINITY, f64::min);
    report.check(Check::at_least("saturation_gap_min", min, -tol::JUMP_MONOTONE));
    report.check(Check::less_than(
        "saturation_gap_ratio",
        gap[gap.len() - 1] / gap[0],
        tol::LIOUVILLE_RATIO,
    ));
    Ok(())
}

/// Audits every `(R, gamma)` pair with one `K0` fitted at the smallest `R`.
#[allow(clippy::too_many_arguments)]
pub fn audit_trajectory(
    traj: &Trajectory,
    centers: &[f64],
    rs: &[f64],
    gammas: &[f64],
    z_fraction: f64,
    dir: &Path,
    header: &[String],
    report: &mut ScenarioReport,
) -> Result<()> {
    let Some(r_fit) = rs.iter().copied().reduce(f64::min) else {
        return domain("no R values to audit");
    };
    let t0_index = traj.len() - 1;
    let base = |r: f64, gamma: f64, k0: f64| AuditSettings { r, gamma, z_fraction, t0_index, k0 };
    let mut k0: f64 = 0.0;
    for g in gammas {
        let audit = monotonicity_audit(traj, centers, base(r_fit, *g, 0.0))?;
        k0 = k0.max(audit.fitted_k0());
    }
    k0 *= tol::AUDIT_K0_MARGIN;
    report.measure("audit_k0", k0);
    for r in rs {
        for g in gammas {
            let audit = monotonicity_audit(traj, centers, base(*r, *g, k0))?;
            let tag = format!("R{r}_gamma{}", (g * 1e4).round() / 1e4);
            report.write(dir, &format!("audit_{tag}.csv"), &audit.to_csv(header))?;
            report.check(Check::at_most(format!("monotone_right_{tag}"), audit.worst_increase, audit.bound));
            report.check(Check::at_most(format!("monotone_left_{tag}"), audit.jl_worst_decrease, audit.bound));
        }
    }
    Ok(())
}

fn audit_scenario(cfg: &ScenarioConfig, dir: &Path, header: &[String], report: &mut ScenarioReport) -> Result<()> {
    let PerturbedRun { traj, track, c } = perturbed_run(cfg, dir, header, report)?;
    if track.len() != traj.len() {
        return domain("modulation track ended early");
    }
    modulation_checks(&track, c, report);
    audit_trajectory(&traj, &track.x, &cfg.r, &cfg.gamma, cfg.z_fraction, dir, header, report)
}
