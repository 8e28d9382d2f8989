//! Conserved quantities, Psi-weighted localized functionals, monotonicity
//! audits, tail-decay fits and the weighted flux identities.

use std::fmt::Write as _;

use crate::error::{domain, Error, Result};
use crate::grid::{backward_slopes, forward_slopes, squared_slopes, trapezoid};
use crate::kernels::{green_convolve, WeightProfile, PSI_SCALE};
use crate::measures::{GridField, MomentumDensity};
use crate::trajectory::Trajectory;

/// Tails below this level are excluded from decay fits.
pub const TAIL_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantRecord {
    pub t: f64,
    pub m: f64,
    pub e: f64,
    pub f: f64,
}

/// `M = \int y`, `E = \int u^2 + u_x^2`, `F = \int u^3 + u u_x^2`.
pub fn invariants(u: &GridField, y: &MomentumDensity) -> InvariantRecord {
    let dx = u.dx();
    let sq = squared_slopes(u.samples(), dx);
    let e: Vec<f64> = u.samples().iter().zip(&sq).map(|(v, s)| v * v + s).collect();
    let f: Vec<f64> = u
        .samples()
        .iter()
        .zip(&sq)
        .map(|(v, s)| v * v * v + v * s)
        .collect();
    InvariantRecord {
        t: 0.0,
        m: momentum_integral(y, |_| 1.0),
        e: trapezoid(&e, dx),
        f: trapezoid(&f, dx),
    }
}

pub fn invariant_series(traj: &Trajectory) -> Vec<InvariantRecord> {
    (0..traj.len())
        .map(|k| InvariantRecord {
            t: traj.time(k),
            ..invariants(&traj.field(k), &traj.momentum(k))
        })
        .collect()
}

/// `\int y g` for either representation.
fn momentum_integral(y: &MomentumDensity, g: impl Fn(f64) -> f64) -> f64 {
    match y {
        MomentumDensity::Atomic(atoms) => atoms.iter().map(|a| a.mass * g(a.position)).sum(),
        MomentumDensity::Sampled(field) => {
            let v: Vec<f64> = (0..field.len())
                .map(|i| field.samples()[i] * g(field.x(i)))
                .collect();
            trapezoid(&v, field.dx())
        }
    }
}

/// `\int (u^2 + u_x^2) g + gamma \int y g`.
fn weighted_energy(u: &GridField, y: &MomentumDensity, gamma: f64, g: impl Fn(f64) -> f64) -> f64 {
    let sq = squared_slopes(u.samples(), u.dx());
    let v: Vec<f64> = (0..u.len())
        .map(|i| (u.samples()[i].powi(2) + sq[i]) * g(u.x(i)))
        .collect();
    let mut total = trapezoid(&v, u.dx());
    if gamma != 0.0 {
        total += gamma * momentum_integral(y, &g);
    }
    total
}

fn check_gamma_r(r: f64, gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return domain(format!("gamma must be non-negative, got {gamma}"));
    }
    if !(r.is_finite() && r > 0.0) {
        return domain(format!("R must be positive, got {r}"));
    }
    Ok(())
}

/// `J_r = \int (u^2 + u_x^2 + gamma y) Psi(x - center - R)`.
pub fn localized_right(u: &GridField, y: &MomentumDensity, center: f64, r: f64, gamma: f64) -> Result<f64> {
    check_gamma_r(r, gamma)?;
    let w = WeightProfile;
    Ok(weighted_energy(u, y, gamma, |x| w.value(x - center - r)))
}

/// `J_l = \int (u^2 + u_x^2 + gamma y) (1 - Psi(x - center + R))`.
pub fn localized_left(u: &GridField, y: &MomentumDensity, center: f64, r: f64, gamma: f64) -> Result<f64> {
    check_gamma_r(r, gamma)?;
    let w = WeightProfile;
    Ok(weighted_energy(u, y, gamma, |x| w.value(-(x - center + r))))
}

/// The complementary middle piece, `\int (...) (Psi(x - center + R) - Psi(x - center - R))`.
pub fn localized_middle(u: &GridField, y: &MomentumDensity, center: f64, r: f64, gamma: f64) -> Result<f64> {
    check_gamma_r(r, gamma)?;
    let w = WeightProfile;
    Ok(weighted_energy(u, y, gamma, |x| {
        w.value(x - center + r) - w.value(x - center - r)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalSample {
    pub t: f64,
    pub j_right: f64,
    pub j_left: f64,
    pub i_value: f64,
    pub r: f64,
    pub gamma: f64,
    pub center: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditSettings {
    pub r: f64,
    pub gamma: f64,
    /// Speed of the weight line as a fraction of the center's speed.
    pub z_fraction: f64,
    pub t0_index: usize,
    /// Constant in the bound `K0 exp(-R/6)`.
    pub k0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityAudit {
    pub settings: AuditSettings,
    pub samples: Vec<FunctionalSample>,
    /// `max(0, I(t0) - I(t))` for `t <= t0`, zero afterwards.
    pub violation: Vec<f64>,
    pub worst_increase: f64,
    /// `max_{s <= t} (J_l(s) - J_l(t))`.
    pub jl_worst_decrease: f64,
    pub bound: f64,
}

impl MonotonicityAudit {
    pub fn within_bound(&self) -> bool {
        self.worst_increase <= self.bound
    }

    pub fn jl_within_bound(&self) -> bool {
        self.jl_worst_decrease <= self.bound
    }

    /// Smallest `K0` that would make this run pass.
    pub fn fitted_k0(&self) -> f64 {
        self.worst_increase * (self.settings.r / PSI_SCALE).exp()
    }

    /// `t,I,J_right,J_left,violation` with a `#` summary block first.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let s = &self.settings;
        let _ = writeln!(out, "# R = {}", s.r);
        let _ = writeln!(out, "# gamma = {}", s.gamma);
        let _ = writeln!(out, "# z_fraction = {}", s.z_fraction);
        let _ = writeln!(out, "# t0_index = {}", s.t0_index);
        let _ = writeln!(out, "# K0 = {:.16e}", s.k0);
        let _ = writeln!(out, "# bound = {:.16e}", self.bound);
        let _ = writeln!(out, "# worst_increase = {:.16e}", self.worst_increase);
        let _ = writeln!(out, "# jl_worst_decrease = {:.16e}", self.jl_worst_decrease);
        out.push_str("t,I,J_right,J_left,violation\n");
        for (smp, v) in self.samples.iter().zip(&self.violation) {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                smp.t, smp.i_value, smp.j_right, smp.j_left, v
            );
        }
        out
    }
}

/// Audits `I(t) = \int (u^2 + u_x^2 + gamma y)(t) Psi(x - z(t))` along
/// `z(t) = center(t0) + R + z_fraction (center(t) - center(t0))`.
pub fn monotonicity_audit(
    traj: &Trajectory,
    centers: &[f64],
    settings: AuditSettings,
) -> Result<MonotonicityAudit> {
    let AuditSettings {
        r,
        gamma,
        z_fraction,
        t0_index,
        k0,
    } = settings;
    check_gamma_r(r, gamma)?;
    if !(z_fraction > 0.0 && z_fraction < 1.0) {
        return domain(format!("z_fraction must lie in (0, 1), got {z_fraction}"));
    }
    if centers.len() != traj.len() {
        return Err(Error::DimensionMismatch {
            expected: traj.len(),
            found: centers.len(),
        });
    }
    if t0_index >= traj.len() {
        return Err(Error::TimeIndex {
            index: t0_index,
            len: traj.len(),
        });
    }
    let w = WeightProfile;
    let c0 = centers[t0_index];
    let mut samples = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let u = traj.field(k);
        let y = traj.momentum(k);
        let z = c0 + r + z_fraction * (centers[k] - c0);
        samples.push(FunctionalSample {
            t: traj.time(k),
            j_right: localized_right(&u, &y, centers[k], r, gamma)?,
            j_left: localized_left(&u, &y, centers[k], r, gamma)?,
            i_value: weighted_energy(&u, &y, gamma, |x| w.value(x - z)),
            r,
            gamma,
            center: centers[k],
        });
    }
    let i0 = samples[t0_index].i_value;
    let violation: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(k, s)| if k <= t0_index { (i0 - s.i_value).max(0.0) } else { 0.0 })
        .collect();
    let worst_increase = violation.iter().copied().fold(0.0, f64::max);
    let mut running = f64::NEG_INFINITY;
    let mut jl_worst_decrease: f64 = 0.0;
    for s in &samples {
        running = running.max(s.j_left);
        jl_worst_decrease = jl_worst_decrease.max(running - s.j_left);
    }
    Ok(MonotonicityAudit {
        settings,
        samples,
        violation,
        worst_increase,
        jl_worst_decrease,
        bound: k0 * (-r / PSI_SCALE).exp(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayProfile {
    pub tails: Vec<(f64, f64)>,
    /// Least-squares slope of `ln tail` against `R`; `None` when fewer than
    /// two tails clear the floor.
    pub rate: Option<f64>,
    pub fit_tolerance: f64,
}

impl DecayProfile {
    /// `rate <= -1/6 + fit_tolerance`; vacuous when no fit was possible.
    pub fn satisfies_bound(&self) -> bool {
        self.rate
            .is_none_or(|r| r <= -1.0 / PSI_SCALE + self.fit_tolerance)
    }
}

/// `J_r + J_l` at each `R` and an exponential fit of the tails.
pub fn decay_profile(
    u: &GridField,
    y: &MomentumDensity,
    center: f64,
    rs: &[f64],
    gamma: f64,
    fit_tolerance: f64,
) -> Result<DecayProfile> {
    if rs.windows(2).any(|w| w[1] <= w[0]) {
        return domain("R values must be increasing");
    }
    let mut tails = Vec::with_capacity(rs.len());
    for &r in rs {
        if !u.grid().contains(center + r) || !u.grid().contains(center - r) {
            return domain(format!("center +- R = {center} +- {r} leaves the grid"));
        }
        let tail = localized_right(u, y, center, r, gamma)? + localized_left(u, y, center, r, gamma)?;
        tails.push((r, tail));
    }
    let pts: Vec<(f64, f64)> = tails
        .iter()
        .filter(|(_, v)| *v > TAIL_FLOOR)
        .map(|(r, v)| (*r, v.ln()))
        .collect();
    let rate = if pts.len() < 2 {
        None
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    };
    Ok(DecayProfile {
        tails,
        rate,
        fit_tolerance,
    })
}

/// Weight `g` in the flux identities, with its derivative.
#[derive(Clone, Debug, PartialEq)]
pub enum FluxWeight {
    Constant(f64),
    /// `g = Psi(x - shift)`.
    Psi { shift: f64 },
    /// Nodal values on the trajectory grid; `g'` by centered differences.
    Sampled(GridField),
}

impl FluxWeight {
    fn nodal(&self, u: &GridField) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = u.len();
        match self {
            FluxWeight::Constant(c) => Ok((vec![*c; n], vec![0.0; n])),
            FluxWeight::Psi { shift } => {
                let w = WeightProfile;
                Ok((0..n)
                    .map(|i| (w.value(u.x(i) - shift), w.first(u.x(i) - shift)))
                    .unzip())
            }
            FluxWeight::Sampled(g) => {
                if g.grid() != u.grid() {
                    return Err(Error::DimensionMismatch {
                        expected: u.len(),
                        found: g.len(),
                    });
                }
                let d = crate::grid::centered_slopes(g.samples(), g.dx());
                Ok((g.samples().to_vec(), d))
            }
        }
    }

    fn at(&self, x: f64, u: &GridField) -> (f64, f64) {
        match self {
            FluxWeight::Constant(c) => (*c, 0.0),
            FluxWeight::Psi { shift } => {
                let w = WeightProfile;
                (w.value(x - shift), w.first(x - shift))
            }
            FluxWeight::Sampled(g) => {
                let d = crate::grid::centered_slopes(g.samples(), g.dx());
                (
                    crate::grid::interpolate(u.grid(), g.samples(), x),
                    crate::grid::interpolate(u.grid(), &d, x),
                )
            }
        }
    }
}

fn interior_index(traj: &Trajectory, k: usize) -> Result<()> {
    if k == 0 || k + 1 >= traj.len() {
        return Err(Error::TimeIndex {
            index: k,
            len: traj.len(),
        });
    }
    Ok(())
}

/// `|d/dt \int (u^2 + u_x^2) g - \int u u_x^2 g' - 2 \int u h g'|` at stored step `k`,
/// `h = (1 - d_xx)^{-1}(u^2 + u_x^2/2)`.
pub fn energy_flux_residual(traj: &Trajectory, g: &FluxWeight, k: usize) -> Result<f64> {
    interior_index(traj, k)?;
    let energy = |j: usize| -> Result<f64> {
        let u = traj.field(j);
        let (gv, _) = g.nodal(&u)?;
        let sq = squared_slopes(u.samples(), u.dx());
        let v: Vec<f64> = (0..u.len())
            .map(|i| (u.samples()[i].powi(2) + sq[i]) * gv[i])
            .collect();
        Ok(trapezoid(&v, u.dx()))
    };
    let dt = traj.time(k + 1) - traj.time(k - 1);
    let lhs = (energy(k + 1)? - energy(k - 1)?) / dt;
    let u = traj.field(k);
    let dx = u.dx();
    let (_, gd) = g.nodal(&u)?;
    let sq = squared_slopes(u.samples(), dx);
    let src: Vec<f64> = u
        .samples()
        .iter()
        .zip(&sq)
        .map(|(v, s)| v * v + 0.5 * s)
        .collect();
    let h = green_convolve(&src, dx)?;
    let v: Vec<f64> = (0..u.len())
        .map(|i| {
            let ui = u.samples()[i];
            (ui * sq[i] + 2.0 * ui * h[i]) * gd[i]
        })
        .collect();
    Ok((lhs - trapezoid(&v, dx)).abs())
}

/// `|d/dt \int y g - \int y u g' - 1/2 \int (u^2 - u_x^2) g'|` at stored step `k`.
/// Atomic momenta are integrated exactly; `u_x^2` on the grid uses the mean of
/// the squared one-sided slopes.
pub fn momentum_flux_residual(traj: &Trajectory, g: &FluxWeight, k: usize) -> Result<f64> {
    interior_index(traj, k)?;
    let u = traj.field(k);
    let mass = |j: usize| -> Result<f64> {
        let field = traj.field(j);
        match traj.momentum(j) {
            MomentumDensity::Atomic(atoms) => Ok(atoms
                .iter()
                .map(|a| a.mass * g.at(a.position, &field).0)
                .sum()),
            MomentumDensity::Sampled(y) => {
                let (gv, _) = g.nodal(&field)?;
                let v: Vec<f64> = y.samples().iter().zip(&gv).map(|(a, b)| a * b).collect();
                Ok(trapezoid(&v, y.dx()))
            }
        }
    };
    let dt = traj.time(k + 1) - traj.time(k - 1);
    let lhs = (mass(k + 1)? - mass(k - 1)?) / dt;
    let dx = u.dx();
    let (_, gd) = g.nodal(&u)?;
    let transport = match (traj.momentum(k), traj.particles(k)) {
        (MomentumDensity::Atomic(atoms), Some(parts)) => atoms
            .iter()
            .map(|a| a.mass * parts.u_at(a.position) * g.at(a.position, &u).1)
            .sum(),
        (MomentumDensity::Sampled(y), _) => {
            let v: Vec<f64> = (0..u.len())
                .map(|i| y.samples()[i] * u.samples()[i] * gd[i])
                .collect();
            trapezoid(&v, dx)
        }
        (MomentumDensity::Atomic(_), None) => unreachable!("atomic momentum implies particles"),
    };
    let sq = squared_slopes(u.samples(), dx);
    let v: Vec<f64> = (0..u.len())
        .map(|i| 0.5 * (u.samples()[i].powi(2) - sq[i]) * gd[i])
        .collect();
    Ok((lhs - transport - trapezoid(&v, dx)).abs())
}

/// `max_i (max(|D- u|, |D+ u|) - u)_i`, the discrete form of `|u_x| <= u`.
pub fn cone_violation(u: &GridField) -> f64 {
    let back = backward_slopes(u.samples(), u.dx());
    let fwd = forward_slopes(u.samples(), u.dx());
    (0..u.len())
        .map(|i| back[i].abs().max(fwd[i].abs()) - u.samples()[i])
        .fold(f64::NEG_INFINITY, f64::max)
}
