//! Characteristics `q_t = u(t, q)`, their Jacobian, the momentum transport
//! identity along them, and the derivative jump `a(t)` at the rightmost crest.

use std::fmt::Write as _;

use crate::error::{domain, Error, Result};
use crate::grid::interpolate;
use crate::measures::GridField;
use crate::trajectory::Trajectory;

/// Jumps smaller than this fraction of `max|u|` are treated as lost.
pub const JUMP_THRESHOLD: f64 = 0.05;

/// RK4 substeps between consecutive stored times.
pub const SUBSTEPS: usize = 8;

/// Values along one characteristic at the stored times.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicSeries {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    /// `q_x = exp(\int u_x(s, q(s)) ds)`.
    pub qx: Vec<f64>,
}

/// Integrates from `x0` at the first stored time through every target time.
fn characteristic(traj: &Trajectory, x0: f64, targets: &[f64]) -> Result<CharacteristicSeries> {
    let grid = traj.grid();
    let t_start = traj.time(0);
    if !grid.contains(x0) {
        return Err(Error::DomainExit {
            last_time: t_start,
            position: x0,
        });
    }
    let mut q = x0;
    let mut log_jac = 0.0;
    let mut t = t_start;
    let mut out = CharacteristicSeries {
        times: Vec::with_capacity(targets.len()),
        q: Vec::with_capacity(targets.len()),
        qx: Vec::with_capacity(targets.len()),
    };
    let f = |t: f64, x: f64| traj.u_at_time(t, x);
    for &target in targets {
        if target < t - 1e-12 {
            return domain("target times must be increasing");
        }
        let span = target - t;
        if span > 0.0 {
            // subdivide at stored times so the piecewise-linear time
            // interpolation is integrated panel by panel
            let mut cuts: Vec<f64> = traj
                .times()
                .iter()
                .copied()
                .filter(|s| *s > t && *s < target)
                .collect();
            cuts.push(target);
            for end in cuts {
                let h = (end - t) / SUBSTEPS as f64;
                for _ in 0..SUBSTEPS {
                    let ux0 = traj.ux_at_time(t, q);
                    let k1 = f(t, q);
                    let k2 = f(t + 0.5 * h, q + 0.5 * h * k1);
                    let k3 = f(t + 0.5 * h, q + 0.5 * h * k2);
                    let k4 = f(t + h, q + h * k3);
                    let next = q + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    if !grid.contains(next) {
                        return Err(Error::DomainExit {
                            last_time: t,
                            position: next,
                        });
                    }
                    let ux1 = traj.ux_at_time(t + h, next);
                    log_jac += 0.5 * h * (ux0 + ux1);
                    q = next;
                    t += h;
                }
                t = end;
            }
        }
        out.times.push(target);
        out.q.push(q);
        out.qx.push(log_jac.exp());
    }
    Ok(out)
}

/// `q(t, x0)` at every stored time.
pub fn flow(traj: &Trajectory, x0: f64) -> Result<Vec<f64>> {
    Ok(characteristic(traj, x0, traj.times())?.q)
}

/// `q_x(t, x0)` at every stored time.
pub fn flow_jacobian(traj: &Trajectory, x0: f64) -> Result<Vec<f64>> {
    Ok(characteristic(traj, x0, traj.times())?.qx)
}

pub fn characteristic_series(traj: &Trajectory, x0: f64) -> Result<CharacteristicSeries> {
    characteristic(traj, x0, traj.times())
}

/// `|y(0, x0) - y(t, q(t, x0)) q_x(t, x0)^2| / max y(0)` with `y` sampled on the
/// grid and interpolated linearly in space and time.
pub fn transport_check(traj: &Trajectory, x0: f64, t: f64) -> Result<f64> {
    if t < traj.time(0) || t > traj.time(traj.len() - 1) {
        return domain(format!("time {t} outside the trajectory"));
    }
    let ch = characteristic(traj, x0, &[t])?;
    let (q, qx) = (ch.q[0], ch.qx[0]);
    let y0 = traj.sampled_momentum(0);
    let scale = y0.max();
    if scale <= 0.0 {
        return Ok(0.0);
    }
    let start = interpolate(y0.grid(), y0.samples(), x0);
    let y_at = |k: usize| {
        let y = traj.sampled_momentum(k);
        interpolate(y.grid(), y.samples(), q)
    };
    let later = if traj.len() == 1 {
        y_at(0)
    } else {
        let (k, w) = traj.bracket(t);
        (1.0 - w) * y_at(k) + w * y_at(k + 1)
    };
    Ok((start - later * qx * qx).abs() / scale)
}

/// Node indices `(left, right)` straddling `x`; a node hit exactly uses its
/// two neighbours.
fn straddle(u: &GridField, x: f64) -> Result<(usize, usize)> {
    let s = u.grid().coordinate(x);
    let n = u.len() as f64;
    if !(s >= 3.0 && s <= n - 4.0) {
        return domain(format!("x = {x} is within 3 nodes of the boundary"));
    }
    let r = s.round();
    if (s - r).abs() < 1e-9 {
        Ok((r as usize - 1, r as usize + 1))
    } else {
        Ok((s.floor() as usize, s.ceil() as usize))
    }
}

/// Backward slope at the node left of `x` minus forward slope at the node
/// right of `x`.
pub fn jump_at(u: &GridField, x: f64) -> Result<f64> {
    let (l, r) = straddle(u, x)?;
    let v = u.samples();
    let dx = u.dx();
    Ok((v[l] - v[l - 1]) / dx - (v[r + 1] - v[r]) / dx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpTrack {
    pub times: Vec<f64>,
    pub q_star: Vec<f64>,
    pub a: Vec<f64>,
    pub u_at: Vec<f64>,
    /// `|a' - (u^2 - u_x^2)(q*-)/2|`.
    pub ode_residual: Vec<f64>,
    /// `q*` minus the left edge of the momentum support.
    pub support_radius: Vec<f64>,
    pub lost: Option<String>,
}

impl JumpTrack {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `2 u(q*) - a`.
    pub fn saturation_gap(&self) -> Vec<f64> {
        self.u_at.iter().zip(&self.a).map(|(u, a)| 2.0 * u - a).collect()
    }

    /// Largest drop `max_{s <= t} (a(s) - a(t))`.
    pub fn worst_decrease(&self) -> f64 {
        let mut running = f64::NEG_INFINITY;
        let mut worst: f64 = 0.0;
        for a in &self.a {
            running = running.max(*a);
            worst = worst.max(running - a);
        }
        worst
    }

    /// CSV `t,q_star,a,u_at,ode_residual`.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        if let Some(msg) = &self.lost {
            let _ = writeln!(out, "# lost = {msg}");
        }
        out.push_str("t,q_star,a,u_at,ode_residual\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[k], self.q_star[k], self.a[k], self.u_at[k], self.ode_residual[k]
            );
        }
        out
    }
}

/// Three-point derivative, second order on non-uniform spacing.
fn derivative(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 3 {
        return match n {
            2 => vec![(v[1] - v[0]) / (t[1] - t[0]); 2],
            _ => vec![0.0; n],
        };
    }
    (0..n)
        .map(|k| {
            let c = k.clamp(1, n - 2);
            let (t0, t1, t2) = (t[c - 1], t[c], t[c + 1]);
            let x = t[k];
            let l0 = (2.0 * x - t1 - t2) / ((t0 - t1) * (t0 - t2));
            let l1 = (2.0 * x - t0 - t2) / ((t1 - t0) * (t1 - t2));
            let l2 = (2.0 * x - t0 - t1) / ((t2 - t0) * (t2 - t1));
            l0 * v[c - 1] + l1 * v[c] + l2 * v[c + 1]
        })
        .collect()
}

/// Follows the jump starting near `x_init`.
///
/// Atomic trajectories follow the rightmost atom with closed forms
/// (`a = 2 p`, one-sided slopes of the atomic sum) and ignore `x_init`.
/// Grid trajectories advance
/// the previous location along its characteristic, snap it to the local argmax
/// node and read `a` from [`jump_at`].
pub fn track_jump(traj: &Trajectory, x_init: f64) -> Result<JumpTrack> {
    let mut out = JumpTrack {
        times: Vec::new(),
        q_star: Vec::new(),
        a: Vec::new(),
        u_at: Vec::new(),
        ode_residual: Vec::new(),
        support_radius: Vec::new(),
        lost: None,
    };
    let mut rhs = Vec::new();
    if traj.is_atomic() {
        let first = traj.particles(0).expect("atomic trajectory");
        if first.is_empty() {
            return domain("no atoms to track");
        }
        let j = first.len() - 1;
        for k in 0..traj.len() {
            let s = traj.particles(k).expect("atomic trajectory");
            let q = s.q()[j];
            let a = 2.0 * s.p()[j];
            let u = s.u_at(q);
            let threshold = JUMP_THRESHOLD * s.max_u();
            if a < threshold {
                let err = Error::JumpLost { time: traj.time(k), a, threshold };
                if k == 0 {
                    return Err(err);
                }
                out.lost = Some(err.to_string());
                break;
            }
            let (ul, _) = s.slopes_at(q);
            out.times.push(traj.time(k));
            out.q_star.push(q);
            out.a.push(a);
            out.u_at.push(u);
            out.support_radius.push(q - s.q()[0]);
            rhs.push(0.5 * (u * u - ul * ul));
        }
    } else {
        let mut x = x_init;
        let dx = traj.grid().dx();
        for k in 0..traj.len() {
            let u = traj.field(k);
            if k > 0 {
                let prev = traj.time(k - 1);
                let ch = {
                    let seg = Trajectory::from_fields(
                        vec![traj.field(k - 1), u.clone()],
                        vec![prev, traj.time(k)],
                    )?;
                    characteristic(&seg, x, &[traj.time(k)])
                };
                match ch {
                    Ok(c) => x = c.q[0],
                    Err(e) => {
                        out.lost = Some(e.to_string());
                        break;
                    }
                }
            }
            let node = snap_to_argmax(&u, x, 3);
            x = u.x(node);
            let a = match jump_at(&u, x) {
                Ok(a) => a,
                Err(e) => {
                    if k == 0 {
                        return Err(e);
                    }
                    out.lost = Some(e.to_string());
                    break;
                }
            };
            let threshold = JUMP_THRESHOLD * u.max_abs();
            if a < threshold {
                let err = Error::JumpLost { time: traj.time(k), a, threshold };
                if k == 0 {
                    return Err(err);
                }
                out.lost = Some(err.to_string());
                break;
            }
            let v = u.samples();
            let ul = (v[node - 1] - v[node - 2]) / dx;
            let y = traj.sampled_momentum(k);
            let cutoff = 1e-8 * y.max();
            let left_edge = (0..y.len())
                .find(|i| y.samples()[*i] > cutoff)
                .map_or(x, |i| y.x(i));
            out.times.push(traj.time(k));
            out.q_star.push(x);
            out.a.push(a);
            out.u_at.push(v[node]);
            out.support_radius.push(x - left_edge);
            rhs.push(0.5 * (v[node] * v[node] - ul * ul));
        }
    }
    let da = derivative(&out.times, &out.a);
    out.ode_residual = da.iter().zip(&rhs).map(|(d, r)| (d - r).abs()).collect();
    Ok(out)
}

fn snap_to_argmax(u: &GridField, x: f64, reach: usize) -> usize {
    let c = u.grid().nearest(x);
    let lo = c.saturating_sub(reach);
    let hi = (c + reach).min(u.len() - 1);
    (lo..=hi)
        .max_by(|a, b| u.samples()[*a].total_cmp(&u.samples()[*b]))
        .unwrap_or(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::measures::{field_from_atoms_on, Atom};
    use crate::multipeakon::{evolve, PeakonState};

    fn atomic(s: &PeakonState, t: f64, dt: f64, stride: usize, lo: f64, hi: f64) -> Trajectory {
        let states = evolve(s, t, dt).unwrap();
        let sub: Vec<PeakonState> = states.iter().step_by(stride).cloned().collect();
        Trajectory::from_peakon_states(&sub, Grid::covering(lo, hi, 0.01).unwrap()).unwrap()
    }

    #[test]
    fn zero_trajectory_does_not_move() {
        let g = Grid::covering(-10.0, 10.0, 0.1).unwrap();
        let z = GridField::zeros(g).unwrap();
        let traj = Trajectory::from_fields(vec![z.clone(), z], vec![0.0, 1.0]).unwrap();
        assert_eq!(flow(&traj, 1.5).unwrap(), vec![1.5, 1.5]);
        assert_eq!(flow_jacobian(&traj, 1.5).unwrap(), vec![1.0, 1.0]);
        assert_eq!(transport_check(&traj, 1.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn crest_rides_at_speed_c() {
        let c = 1.3;
        let traj = atomic(&PeakonState::single(c, 0.0).unwrap(), 3.0, 0.01, 10, -30.0, 40.0);
        let q = flow(&traj, 0.0).unwrap();
        for (t, x) in traj.times().iter().zip(&q) {
            assert!((x - c * t).abs() < 1e-8);
        }
        let q = flow(&traj, 1.0).unwrap();
        for k in 1..q.len() {
            assert!(q[k] > q[k - 1]);
            assert!(q[k] - 1.0 < c * traj.time(k));
        }
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let s = PeakonState::new(vec![1.0, 0.6], vec![0.0, 3.0], 0.0).unwrap();
        let traj = atomic(&s, 2.0, 0.01, 5, -30.0, 40.0);
        let x0 = -1.7;
        let h = 0.02;
        let qx = flow_jacobian(&traj, x0).unwrap();
        let plus = flow(&traj, x0 + h).unwrap();
        let minus = flow(&traj, x0 - h).unwrap();
        let e = crate::multipeakon::exact_invariants(&s).1.sqrt();
        for k in 0..qx.len() {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            assert!((qx[k] - fd).abs() <= 1e-3 * fd, "{} vs {fd}", qx[k]);
            let t = traj.time(k);
            assert!(qx[k] <= (2.0 * e * t).exp() && qx[k] >= (-2.0 * e * t).exp());
        }
    }

    #[test]
    fn exit_is_reported() {
        let traj = atomic(&PeakonState::single(2.0, 0.0).unwrap(), 3.0, 0.01, 10, -5.0, 4.0);
        assert!(matches!(flow(&traj, 0.0), Err(Error::DomainExit { .. })));
    }

    #[test]
    fn jump_of_sampled_peakon_and_gaussian() {
        let g = Grid::covering(-20.0, 20.0, 0.01).unwrap();
        let c = 1.5;
        let u = field_from_atoms_on(&[Atom::new(0.0, 2.0 * c)], &g).unwrap();
        assert!((jump_at(&u, 0.0).unwrap() - 2.0 * c).abs() <= 10.0 * c * 0.01);
        let gauss = GridField::from_fn(g, |x| (-x * x).exp()).unwrap();
        for x in [-1.0, 0.0, 0.333] {
            assert!(jump_at(&gauss, x).unwrap().abs() <= 10.0 * 0.01 * 2.0);
        }
        assert!(jump_at(&u, -19.99).is_err());
        let two = field_from_atoms_on(&[Atom::new(-1.0, 1.0), Atom::new(2.0, 3.0)], &g).unwrap();
        assert!((jump_at(&two, 2.0).unwrap() - 3.0).abs() <= 10.0 * 3.0 * 0.01);
    }

    #[test]
    fn single_peakon_jump_is_constant() {
        let c = 0.8;
        let traj = atomic(&PeakonState::single(c, 0.0).unwrap(), 2.0, 0.01, 10, -30.0, 40.0);
        let jt = track_jump(&traj, 0.1).unwrap();
        assert!(jt.lost.is_none());
        for k in 0..jt.len() {
            assert!((jt.a[k] - 2.0 * c).abs() < 1e-12);
            assert!(jt.ode_residual[k] < 1e-8);
        }
        assert!(jt.to_csv(&[]).contains("t,q_star,a,u_at,ode_residual\n"));
    }

    #[test]
    fn rightmost_jump_obeys_its_ode() {
        let s = PeakonState::new(vec![1.0, 0.5], vec![0.0, 2.0], 0.0).unwrap();
        let worst = |stride: usize| {
            let traj = atomic(&s, 4.0, 0.001, stride, -30.0, 40.0);
            let jt = track_jump(&traj, 2.0).unwrap();
            assert!(jt.worst_decrease() <= 1e-12);
            jt.ode_residual.iter().copied().fold(0.0, f64::max)
        };
        let coarse = worst(100);
        let fine = worst(50);
        assert!(coarse / fine > 1.8, "{coarse} {fine}");
    }

    #[test]
    fn grid_mode_tracks_a_sampled_peakon() {
        let g = Grid::covering(-20.0, 30.0, 0.01).unwrap();
        let fields: Vec<GridField> = (0..41)
            .map(|k| field_from_atoms_on(&[Atom::new(0.05 * k as f64, 2.0)], &g).unwrap())
            .collect();
        let times = (0..41).map(|k| 0.05 * k as f64).collect();
        let traj = Trajectory::from_fields(fields, times).unwrap();
        let jt = track_jump(&traj, 0.0).unwrap();
        assert_eq!(jt.len(), 41, "{:?}", jt.lost);
        for k in 0..41 {
            assert!((jt.q_star[k] - 0.05 * k as f64).abs() < 0.011);
            assert!((jt.a[k] - 2.0).abs() < 0.1);
        }
    }
}
