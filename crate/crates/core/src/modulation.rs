//! Modulation center `x(t)` from the orthogonality condition
//! `\int u (rho_{n0} * phi')(x - x(t)) dx = 0`, the peak height `lambda(t)` and
//! the admissibility check for `n0`.

use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use crate::kernels::mollifier_density;
use crate::measures::GridField;
use crate::quadrature::GaussLegendre;
use crate::trajectory::{Particles, Trajectory};

/// Lower bound on the slope of the pairing on `[-1/2, 1/2]`, `exp(-1/2)/4`.
pub fn slope_floor() -> f64 {
    0.25 * (-0.5f64).exp()
}

/// Bisection stops once the bracket is this narrow.
pub const ROOT_TOL: f64 = 1e-10;

/// First candidate in the search for an admissible `n0`.
pub const N0_SEARCH_START: u32 = 4;

const GL_POINTS: usize = 32;

/// `K = rho_{n0} * phi'` and the pairing `P(y) = \int phi(w) K(w - y) dw`.
///
/// Outside the mollifier support both have closed forms in the moments
/// `a = \int rho e^{r}` and `b = \int rho r e^{-r}`:
/// `K(s) = -sgn(s) a e^{-|s|}`, `P(y) = sgn(y) e^{-|y|} (|y| a + b)`.
#[derive(Clone, Debug)]
pub struct OrthogonalityKernel {
    n0: u32,
    a: f64,
    b: f64,
    gl: GaussLegendre,
}

impl OrthogonalityKernel {
    pub fn new(n0: u32) -> Result<Self> {
        if n0 == 0 {
            return domain("n0 must be positive");
        }
        let gl = GaussLegendre::new(GL_POINTS);
        let h = 1.0 / f64::from(n0);
        let rho = |r: f64| mollifier_density(n0, r);
        let a = gl.integrate_composite(-h, h, 4, |r| rho(r) * r.exp());
        let b = gl.integrate_composite(-h, h, 4, |r| rho(r) * r * (-r).exp());
        Ok(Self { n0, a, b, gl })
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    fn half_width(&self) -> f64 {
        1.0 / f64::from(self.n0)
    }

    /// `\int_{-h}^{h} rho(r) f(r) dr` with the panel split at the kink `r = k`.
    fn split_integral(&self, kink: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.half_width();
        let rho = |r: f64| mollifier_density(self.n0, r) * f(r);
        let k = kink.clamp(-h, h);
        let mut total = 0.0;
        if k > -h {
            total += self.gl.integrate_composite(-h, k, 2, rho);
        }
        if k < h {
            total += self.gl.integrate_composite(k, h, 2, rho);
        }
        total
    }

    /// `K(s)`.
    pub fn kernel(&self, s: f64) -> f64 {
        let h = self.half_width();
        if s >= h {
            -self.a * (-s).exp()
        } else if s <= -h {
            self.a * s.exp()
        } else {
            // phi'(s - r) = -sgn(s - r) e^{-|s - r|}
            self.split_integral(s, |r| {
                let d = s - r;
                -d.signum() * (-d.abs()).exp()
            })
        }
    }

    /// `P(y)`: odd, increasing near zero for admissible `n0`.
    pub fn pairing(&self, y: f64) -> f64 {
        let h = self.half_width();
        if y.abs() >= h {
            y.signum() * (-y.abs()).exp() * (y.abs() * self.a + self.b)
        } else {
            self.split_integral(-y, |r| {
                let d = y + r;
                d * (-d.abs()).exp()
            })
        }
    }
}

/// `\int u(x) K(x - shift) dx` by nodal quadrature on the grid of `u`.
pub fn orthogonality_residual(u: &GridField, shift: f64, n0: u32) -> Result<f64> {
    let kernel = OrthogonalityKernel::new(n0)?;
    grid_residual(u, shift, &kernel)
}

fn grid_residual(u: &GridField, shift: f64, kernel: &OrthogonalityKernel) -> Result<f64> {
    if !u.grid().contains(shift) {
        return domain(format!("shift {shift} outside the grid"));
    }
    if u.dx() * f64::from(kernel.n0) >= 1.0 {
        return Err(Error::Resolution {
            n: kernel.n0,
            dx: u.dx(),
        });
    }
    Ok(u.samples()
        .iter()
        .enumerate()
        .map(|(i, v)| v * kernel.kernel(u.x(i) - shift))
        .sum::<f64>()
        * u.dx())
}

/// Exact residual for `u = sum_i p_i phi(x - q_i)`: `sum_i p_i P(shift - q_i)`.
pub fn orthogonality_residual_atomic(s: &Particles, shift: f64, n0: u32) -> Result<f64> {
    let kernel = OrthogonalityKernel::new(n0)?;
    Ok(atomic_residual(s, shift, &kernel))
}

fn atomic_residual(s: &Particles, shift: f64, kernel: &OrthogonalityKernel) -> f64 {
    s.p()
        .iter()
        .zip(s.q())
        .map(|(p, q)| p * kernel.pairing(shift - q))
        .sum()
}

/// Bisection on `[guess - 1/2, guess + 1/2]` to `ROOT_TOL`, then one secant step.
fn locate_with(f: impl Fn(f64) -> f64, guess: f64) -> Result<f64> {
    let (mut lo, mut hi) = (guess - 0.5, guess + 0.5);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    if !(flo * fhi < 0.0) {
        return Err(Error::ModulationLoss { lo, hi });
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let secant = lo - flo * (hi - lo) / (fhi - flo);
    Ok(if (lo..=hi).contains(&secant) { secant } else { 0.5 * (lo + hi) })
}

pub fn locate(u: &GridField, guess: f64, n0: u32) -> Result<f64> {
    let kernel = OrthogonalityKernel::new(n0)?;
    grid_residual(u, guess, &kernel)?;
    locate_with(
        |x| grid_residual(u, x, &kernel).unwrap_or(f64::NAN),
        guess,
    )
}

pub fn locate_atomic(s: &Particles, guess: f64, n0: u32) -> Result<f64> {
    let kernel = OrthogonalityKernel::new(n0)?;
    locate_with(|x| atomic_residual(s, x, &kernel), guess)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModulationTrack {
    pub n0: u32,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub lambda: Vec<f64>,
    pub residual: Vec<f64>,
    /// Set when the track was truncated by a modulation loss.
    pub lost: Option<String>,
}

impl ModulationTrack {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV `t,x,xdot,lambda,residual`.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "# n0 = {}", self.n0);
        if let Some(msg) = &self.lost {
            let _ = writeln!(out, "# lost = {msg}");
        }
        out.push_str("t,x,xdot,lambda,residual\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[k], self.x[k], self.xdot[k], self.lambda[k], self.residual[k]
            );
        }
        out
    }
}

/// Locates the center at each stored step. Seeds are tried in order: the
/// previous root advanced by `lambda dt`, the previous root, the argmax node.
/// Atomic trajectories use the exact residual and the exact maximum of `u`.
pub fn track(traj: &Trajectory, n0: u32) -> Result<ModulationTrack> {
    let kernel = OrthogonalityKernel::new(n0)?;
    let first = traj.field(0);
    let mut guess = first.x(first.argmax());
    let mut out = ModulationTrack {
        n0,
        times: Vec::new(),
        x: Vec::new(),
        xdot: Vec::new(),
        lambda: Vec::new(),
        residual: Vec::new(),
        lost: None,
    };
    for k in 0..traj.len() {
        let u = traj.field(k);
        let predicted = match (out.x.last(), out.lambda.last()) {
            (Some(x), Some(l)) => x + l * (traj.time(k) - traj.time(k - 1)),
            _ => guess,
        };
        let locate_from = |g: f64| match traj.particles(k) {
            Some(s) => locate_with(|x| atomic_residual(s, x, &kernel), g)
                .map(|x| (x, atomic_residual(s, x, &kernel), s.max_u())),
            None => locate_with(|x| grid_residual(&u, x, &kernel).unwrap_or(f64::NAN), g)
                .and_then(|x| Ok((x, grid_residual(&u, x, &kernel)?, u.max()))),
        };
        let found = locate_from(predicted)
            .or_else(|_| locate_from(guess))
            .or_else(|_| locate_from(u.x(u.argmax())));
        match found {
            Ok((x, res, lambda)) => {
                out.times.push(traj.time(k));
                out.x.push(x);
                out.residual.push(res);
                out.lambda.push(lambda);
                guess = x;
            }
            Err(e) => {
                out.lost = Some(format!("t = {}: {e}", traj.time(k)));
                break;
            }
        }
    }
    out.xdot = finite_difference(&out.times, &out.x);
    Ok(out)
}

/// Centered differences in the interior, one-sided at the ends.
pub(crate) fn finite_difference(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| {
                let (a, b) = if k == 0 {
                    (0, 1)
                } else if k == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (k - 1, k + 1)
                };
                (v[b] - v[a]) / (t[b] - t[a])
            })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct N0Report {
    pub n0: u32,
    pub monotone: bool,
    pub min_slope: f64,
}

impl N0Report {
    pub fn admissible(&self) -> bool {
        self.monotone && self.min_slope >= slope_floor()
    }
}

/// Samples `P` at 200 points on `[-1/2, 1/2]`.
pub fn verify_n0(n0: u32) -> Result<N0Report> {
    let kernel = OrthogonalityKernel::new(n0)?;
    let m = 200;
    let ys: Vec<f64> = (0..m).map(|i| -0.5 + i as f64 / (m - 1) as f64).collect();
    let vals: Vec<f64> = ys.iter().map(|y| kernel.pairing(*y)).collect();
    let slopes: Vec<f64> = (1..m)
        .map(|i| (vals[i] - vals[i - 1]) / (ys[i] - ys[i - 1]))
        .collect();
    Ok(N0Report {
        n0,
        monotone: slopes.iter().all(|s| *s > 0.0),
        min_slope: slopes.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Smallest admissible `n0`, searching upward from `N0_SEARCH_START`.
pub fn default_n0() -> u32 {
    static N0: OnceLock<u32> = OnceLock::new();
    *N0.get_or_init(|| {
        (N0_SEARCH_START..)
            .find(|n| verify_n0(*n).is_ok_and(|r| r.admissible()))
            .expect("the pairing slope tends to (1 - |y|) e^{-|y|} as n0 grows")
    })
}

/// Grid argmax of `u` inside `[g - half_window, g + half_window]` for each guess;
/// on atomic steps the heaviest-`u` atom in the window.
pub fn windowed_peaks(traj: &Trajectory, k: usize, guesses: &[f64], half_window: f64) -> Vec<f64> {
    let u = traj.field(k);
    guesses
        .iter()
        .map(|g| {
            let inside = |x: f64| (x - g).abs() <= half_window;
            if let Some(s) = traj.particles(k) {
                let best = s
                    .q()
                    .iter()
                    .copied()
                    .filter(|x| inside(*x))
                    .map(|x| (x, s.u_at(x)))
                    .fold(None::<(f64, f64)>, |acc, c| match acc {
                        Some(a) if a.1 >= c.1 => Some(a),
                        _ => Some(c),
                    });
                if let Some((x, _)) = best {
                    return x;
                }
            }
            let mut best = (*g, f64::NEG_INFINITY);
            for i in 0..u.len() {
                if inside(u.x(i)) && u.samples()[i] > best.1 {
                    best = (u.x(i), u.samples()[i]);
                }
            }
            best.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::measures::{field_from_atoms_on, Atom};
    use crate::multipeakon::{evolve, PeakonState};

    fn peakon_field(c: f64, z: f64, dx: f64) -> GridField {
        let g = Grid::covering(z - 30.0, z + 30.0, dx).unwrap();
        field_from_atoms_on(&[Atom::new(z, 2.0 * c)], &g).unwrap()
    }

    #[test]
    fn kernel_is_odd_and_continuous_at_support_edge() {
        let k = OrthogonalityKernel::new(4).unwrap();
        for s in [0.05, 0.2, 0.7, 3.0] {
            assert!((k.kernel(s) + k.kernel(-s)).abs() < 1e-14);
            assert!((k.pairing(s) + k.pairing(-s)).abs() < 1e-14);
        }
        let h = 0.25;
        assert!((k.kernel(h - 1e-9) - k.kernel(h + 1e-9)).abs() < 1e-7);
        assert!((k.pairing(h - 1e-9) - k.pairing(h + 1e-9)).abs() < 1e-7);
        assert!(k.pairing(0.0).abs() < 1e-15);
    }

    #[test]
    fn pairing_tends_to_unmollified_limit() {
        // d/dy (y e^{-|y|}) = (1 - |y|) e^{-|y|}, equal to 1 at y = 0
        let k = OrthogonalityKernel::new(400).unwrap();
        let h = 1e-3;
        let slope = (k.pairing(h) - k.pairing(-h)) / (2.0 * h);
        assert!((slope - 1.0).abs() < 0.02, "{slope}");
        for y in [0.1, 0.3, 0.45] {
            assert!((k.pairing(y) - y * (-y).exp()).abs() < 1e-3);
        }
    }

    #[test]
    fn residual_vanishes_at_the_crest() {
        let z = 1.3;
        let u = peakon_field(1.2, z, 0.01);
        assert!(orthogonality_residual(&u, z, 4).unwrap().abs() < 1e-10);
        let below = orthogonality_residual(&u, z - 0.3, 4).unwrap();
        let above = orthogonality_residual(&u, z + 0.3, 4).unwrap();
        assert!(below < 0.0 && above > 0.0);
        let zero = u.scaled(0.0);
        assert_eq!(orthogonality_residual(&zero, 0.7, 4).unwrap(), 0.0);
        assert!(matches!(
            orthogonality_residual(&peakon_field(1.0, 0.0, 0.3), 0.0, 4),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn grid_and_atomic_residuals_agree() {
        let s = Particles::new(vec![1.0, 0.4], vec![0.0, 2.5]).unwrap();
        let g = Grid::covering(-30.0, 30.0, 0.002).unwrap();
        let u = s.field_on(&g).unwrap();
        for shift in [-0.4, 0.1, 2.0, 2.7] {
            let a = orthogonality_residual_atomic(&s, shift, 4).unwrap();
            let b = orthogonality_residual(&u, shift, 4).unwrap();
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn locate_recovers_the_crest() {
        let z = 0.5;
        let u = peakon_field(1.0, z, 0.01);
        assert!((locate(&u, z + 0.2, 4).unwrap() - z).abs() < 1e-9);
        let bump = GridField::from_fn(*u.grid(), |x| 0.05 * (-(x - z).powi(2) * 4.0).exp()).unwrap();
        let sum = u.with_samples(u.samples().iter().zip(bump.samples()).map(|(a, b)| a + b).collect()).unwrap();
        assert!((locate(&sum, z - 0.1, 4).unwrap() - z).abs() < 1e-9);
        assert!(matches!(locate(&u.scaled(0.0), z, 4), Err(Error::ModulationLoss { .. })));
    }

    #[test]
    fn n0_search() {
        let n0 = default_n0();
        assert!(n0 >= N0_SEARCH_START);
        let rep = verify_n0(n0).unwrap();
        assert!(rep.admissible(), "{rep:?}");
        assert!(rep.min_slope >= slope_floor());
    }

    #[test]
    fn exact_peakon_track() {
        let c = 1.5;
        let s = PeakonState::single(c, 0.25).unwrap();
        let states = evolve(&s, 4.0, 0.01).unwrap();
        let sub: Vec<PeakonState> = states.iter().step_by(20).cloned().collect();
        let traj = Trajectory::from_peakon_states(&sub, Grid::covering(-40.0, 50.0, 0.02).unwrap()).unwrap();
        let tr = track(&traj, default_n0()).unwrap();
        assert!(tr.lost.is_none());
        assert_eq!(tr.len(), traj.len());
        for k in 0..tr.len() {
            assert!((tr.x[k] - 0.25 - c * tr.times[k]).abs() < 1e-8);
            assert!((tr.xdot[k] - c).abs() < 1e-6);
            assert!((tr.lambda[k] - c).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_grid_snapshots_keep_the_track() {
        let c = 1.0;
        let grid = Grid::covering(-30.0, 50.0, 0.02).unwrap();
        let fields = (0..6)
            .map(|k| GridField::from_fn(grid, |x| c * (-(x - 4.0 * k as f64).abs()).exp()).unwrap())
            .collect();
        let times = (0..6).map(|k| 4.0 * k as f64).collect();
        let traj = Trajectory::from_fields(fields, times).unwrap();
        let tr = track(&traj, default_n0()).unwrap();
        assert!(tr.lost.is_none(), "{:?}", tr.lost);
        for k in 0..tr.len() {
            assert!((tr.x[k] - 4.0 * k as f64).abs() < 0.02, "{k}: {}", tr.x[k]);
        }
    }

    #[test]
    fn finite_differences() {
        let t = [0.0, 1.0, 3.0];
        let v = [0.0, 2.0, 6.0];
        assert_eq!(finite_difference(&t, &v), vec![2.0, 2.0, 2.0]);
    }
}
