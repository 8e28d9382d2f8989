//! Evolution of general `Y+` data.
//!
//! The default scheme discretizes the momentum density as atoms at the nodes
//! where `y > 0` and evolves them with the multipeakon system; each snapshot
//! is the exact atomic sum on the grid. The grid scheme with upwinded
//! advection and a Green-convolved nonlocal term is kept as
//! [`Scheme::Upwind`].

use crate::error::{domain, Error, Result};
use crate::expsum::exp_sums;
use crate::grid::{backward_slopes, forward_slopes, squared_slopes, Grid};
use crate::kernels::{apply_helmholtz, green_convolve, MollifierKernel};
use crate::measures::{check_yplus, momentum_of_field, yplus_tolerance, GridField};
use crate::multipeakon::rk4_step;
use crate::trajectory::{Particles, Trajectory};

/// Atoms below this fraction of `max y` are dropped.
pub const ATOM_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    Particle,
    Upwind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub dx: f64,
    pub cfl: f64,
    pub t_final: f64,
    pub stride: usize,
    pub mollifier: Option<u32>,
    pub scheme: Scheme,
}

impl SolverSettings {
    pub fn new(dx: f64, t_final: f64) -> Self {
        Self {
            dx,
            cfl: 0.5,
            t_final,
            stride: 1,
            mollifier: None,
            scheme: Scheme::Particle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx.is_finite() && self.dx > 0.0) {
            return domain(format!("dx must be positive, got {}", self.dx));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return domain(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return domain(format!("T must be positive, got {}", self.t_final));
        }
        if self.stride == 0 {
            return domain("store stride must be at least 1");
        }
        if self.mollifier == Some(0) {
            return domain("mollifier index must be positive");
        }
        Ok(())
    }

    /// `dt = cfl * dx / max(1, max|u|)`.
    pub fn time_step(&self, max_u: f64) -> f64 {
        self.cfl * self.dx / max_u.abs().max(1.0)
    }
}

/// Largest `n` with `2 n dx <= 1`, so the mollifier spans at least two nodes
/// on each side of the center.
pub fn default_mollifier_index(dx: f64) -> Result<u32> {
    if !(dx.is_finite() && dx > 0.0) {
        return domain(format!("dx must be positive, got {dx}"));
    }
    let n = (0.5 / dx + 1e-9).floor();
    if n < 1.0 {
        return domain(format!("dx = {dx} is too coarse for any mollifier"));
    }
    Ok(n as u32)
}

/// Grid for a run: length `4 (S + v T + 40)` where `S` is the support width
/// and `v` the largest speed, centered on the swept region.
pub fn domain_grid(support_lo: f64, support_hi: f64, speed: f64, t_final: f64, dx: f64) -> Result<Grid> {
    if !(support_lo <= support_hi) {
        return domain(format!("empty support [{support_lo}, {support_hi}]"));
    }
    let sweep = speed.abs() * t_final;
    let length = 4.0 * (support_hi - support_lo + sweep + 40.0);
    let center = 0.5 * (support_lo + support_hi + sweep);
    Grid::covering(center - 0.5 * length, center + 0.5 * length, dx)
}

/// Discrete convolution with the renormalized `rho_n`.
pub fn mollify_initial(u0: &GridField, n: u32) -> Result<GridField> {
    let kernel = MollifierKernel::new(n, u0.dx())?;
    u0.with_samples(kernel.convolve(u0.samples()))
}

/// `d_x (1 - d_xx)^{-1} (u^2 + u_x^2/2)` with trapezoid Green convolution and
/// centered outer differences.
pub fn nonlocal_term(u: &GridField) -> Result<Vec<f64>> {
    let dx = u.dx();
    let sq = squared_slopes(u.samples(), dx);
    let source: Vec<f64> = u
        .samples()
        .iter()
        .zip(&sq)
        .map(|(v, s)| v * v + 0.5 * s)
        .collect();
    let h = green_convolve(&source, dx)?;
    let n = h.len();
    let mut out = vec![0.0; n];
    out[0] = (h[1] - h[0]) / dx;
    out[n - 1] = (h[n - 1] - h[n - 2]) / dx;
    for i in 1..n - 1 {
        out[i] = (h[i + 1] - h[i - 1]) / (2.0 * dx);
    }
    Ok(out)
}

/// `-u u_x - d_x (1 - d_xx)^{-1}(u^2 + u_x^2/2)` with `u_x` upwinded by the
/// sign of `u`.
pub fn ch_rhs(u: &GridField) -> Result<GridField> {
    let dx = u.dx();
    let back = backward_slopes(u.samples(), dx);
    let fwd = forward_slopes(u.samples(), dx);
    let nl = nonlocal_term(u)?;
    let out = u
        .samples()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let ux = if *v >= 0.0 { back[i] } else { fwd[i] };
            -v * ux - nl[i]
        })
        .collect();
    u.with_samples(out)
}

/// Atoms `p_j = y_j tanh(dx/2)` at the nodes with `y_j > ATOM_CUTOFF * max y`.
///
/// With the fitted second difference the atomic sum reproduces `u` at every
/// node up to the truncation of the cutoff and the boundary closure.
pub fn particles_from_field(u: &GridField) -> Result<Particles> {
    let y = apply_helmholtz(u.samples(), u.dx());
    let ymax = y.iter().copied().fold(0.0, f64::max);
    let weight = (0.5 * u.dx()).tanh();
    let mut p = Vec::new();
    let mut q = Vec::new();
    if ymax > 0.0 {
        for (i, v) in y.iter().enumerate() {
            if *v > ATOM_CUTOFF * ymax {
                p.push(v * weight);
                q.push(u.x(i));
            }
        }
    }
    Particles::new(p, q)
}

/// Evolves `u0` (mollified first when `settings.mollifier` is set).
pub fn evolve_field(u0: &GridField, settings: &SolverSettings) -> Result<Trajectory> {
    settings.validate()?;
    if (u0.dx() - settings.dx).abs() > 1e-12 * settings.dx {
        return domain(format!(
            "field spacing {} differs from settings dx {}",
            u0.dx(),
            settings.dx
        ));
    }
    let start = match settings.mollifier {
        Some(n) => mollify_initial(u0, n)?,
        None => u0.clone(),
    };
    let report = check_yplus(&momentum_of_field(&start));
    if !report.is_nonnegative {
        return domain(format!(
            "initial data is not in Y+ (worst violation {:e}, tolerance {:e})",
            report.worst_violation, report.tolerance
        ));
    }
    match settings.scheme {
        Scheme::Particle => evolve_particles(&start, settings),
        Scheme::Upwind => evolve_upwind(&start, settings),
    }
}

fn evolve_particles(u0: &GridField, settings: &SolverSettings) -> Result<Trajectory> {
    let grid = *u0.grid();
    let mut state = particles_from_field(u0)?;
    let initial_max = state.max_u();
    let mut times = vec![0.0];
    let mut stored = vec![state.clone()];
    let mut warnings = Vec::new();
    let mut t = 0.0;
    let mut step = 0usize;
    let t_final = settings.t_final;
    while t_final - t > 1e-12 * t_final.max(1.0) {
        let max_u = atom_speeds(&state).into_iter().fold(0.0, f64::max);
        let h = settings.time_step(max_u).min(t_final - t);
        let (p, q) = if state.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            rk4_step(state.p(), state.q(), t, h)?
        };
        t += h;
        step += 1;
        if let Some(i) = p.iter().position(|v| !(*v > 0.0)) {
            warnings.push(format!("t = {t}: atom {i} has momentum {:e}", p[i]));
        }
        if let Some(x) = q.iter().copied().find(|x| !grid.contains(*x)) {
            return Err(Error::DomainExit {
                last_time: t - h,
                position: x,
            });
        }
        state = Particles::from_raw(p, q);
        let current = state.max_u();
        if initial_max > 0.0 && current > 2.0 * initial_max {
            return Err(Error::BlowUp {
                time: t,
                max_u: current,
                initial: initial_max,
            });
        }
        let done = t_final - t <= 1e-12 * t_final.max(1.0);
        if step.is_multiple_of(settings.stride) || done {
            times.push(if done { t_final } else { t });
            stored.push(state.clone());
        }
    }
    let mut traj = Trajectory::from_particles(grid, times, stored)?;
    for w in warnings {
        traj.push_warning(w);
    }
    Ok(traj)
}

/// `u(q_i)` for every atom.
fn atom_speeds(s: &Particles) -> Vec<f64> {
    let sums = exp_sums(s.q(), s.p(), s.q());
    (0..s.len()).map(|i| sums.total(i)).collect()
}

fn evolve_upwind(u0: &GridField, settings: &SolverSettings) -> Result<Trajectory> {
    let initial_max = u0.max_abs();
    let mut u = u0.clone();
    let mut fields = vec![u.clone()];
    let mut times = vec![0.0];
    let mut warnings = Vec::new();
    let tol = match momentum_of_field(u0) {
        crate::measures::MomentumDensity::Sampled(y) => yplus_tolerance(&y),
        crate::measures::MomentumDensity::Atomic(_) => unreachable!(),
    };
    let mut t = 0.0;
    let mut step = 0usize;
    let t_final = settings.t_final;
    while t_final - t > 1e-12 * t_final.max(1.0) {
        let h = settings.time_step(u.max_abs()).min(t_final - t);
        let k1 = ch_rhs(&u)?;
        let k2 = ch_rhs(&axpy(&u, 0.5 * h, &k1)?)?;
        let k3 = ch_rhs(&axpy(&u, 0.5 * h, &k2)?)?;
        let k4 = ch_rhs(&axpy(&u, h, &k3)?)?;
        let next: Vec<f64> = (0..u.len())
            .map(|i| {
                u.samples()[i]
                    + h / 6.0
                        * (k1.samples()[i]
                            + 2.0 * k2.samples()[i]
                            + 2.0 * k3.samples()[i]
                            + k4.samples()[i])
            })
            .collect();
        u = u.with_samples(next)?;
        t += h;
        step += 1;
        let max_u = u.max_abs();
        if initial_max > 0.0 && max_u > 2.0 * initial_max {
            return Err(Error::BlowUp {
                time: t,
                max_u,
                initial: initial_max,
            });
        }
        let y = apply_helmholtz(u.samples(), u.dx());
        let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
        if ymin < -100.0 * tol {
            warnings.push(format!("t = {t}: min y = {ymin:e} below -100 tol_Y"));
        }
        let done = t_final - t <= 1e-12 * t_final.max(1.0);
        if step.is_multiple_of(settings.stride) || done {
            times.push(if done { t_final } else { t });
            fields.push(u.clone());
        }
    }
    let mut traj = Trajectory::from_fields(fields, times)?;
    for w in warnings {
        traj.push_warning(w);
    }
    Ok(traj)
}

fn axpy(u: &GridField, a: f64, k: &GridField) -> Result<GridField> {
    u.with_samples(
        u.samples()
            .iter()
            .zip(k.samples())
            .map(|(x, y)| x + a * y)
            .collect(),
    )
}
