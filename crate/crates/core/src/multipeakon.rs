//! Exact multipeakon dynamics `u = sum_i p_i exp(-|x - q_i|)`.
//!
//! The canonical system is
//! `q_i' = sum_j p_j exp(-|q_i - q_j|)`,
//! `p_i' = p_i sum_{j != i} p_j sgn(q_i - q_j) exp(-|q_i - q_j|)`,
//! generated by `H = 1/2 sum_{i,j} p_i p_j exp(-|q_i - q_j|)`.

use std::fmt::Write as _;

use crate::eigen::symmetric_eigenvalues;
use crate::error::{domain, Error, Result};
use crate::expsum::exp_sums;
use crate::grid::Grid;
use crate::measures::{field_from_atoms, field_from_atoms_on, Atom, GridField};

pub const MAX_PEAKONS: usize = 64;

/// Positions closer than this are a collision.
pub const COLLISION_GAP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PeakonState {
    p: Vec<f64>,
    q: Vec<f64>,
    time: f64,
}

impl PeakonState {
    pub fn new(p: Vec<f64>, q: Vec<f64>, time: f64) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: q.len(),
            });
        }
        if p.is_empty() || p.len() > MAX_PEAKONS {
            return domain(format!(
                "number of peakons must be in 1..={MAX_PEAKONS}, got {}",
                p.len()
            ));
        }
        if !time.is_finite() {
            return domain("state time must be finite");
        }
        for (i, v) in p.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::NonPositiveMomentum {
                    time,
                    index: i,
                    value: *v,
                });
            }
        }
        if q.iter().any(|v| !v.is_finite()) {
            return domain("positions must be finite");
        }
        check_ordering(&q, time)?;
        Ok(Self { p, q, time })
    }

    /// Sorts the `(p_i, q_i)` pairs by position first.
    pub fn from_unsorted(p: Vec<f64>, q: Vec<f64>, time: f64) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: q.len(),
            });
        }
        let mut pairs: Vec<(f64, f64)> = p.into_iter().zip(q).collect();
        pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (p, q) = pairs.into_iter().unzip();
        Self::new(p, q, time)
    }

    pub fn single(c: f64, q0: f64) -> Result<Self> {
        Self::new(vec![c], vec![q0], 0.0)
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Atoms of `y = sum_i 2 p_i delta_{q_i}`.
    pub fn atoms(&self) -> Vec<Atom> {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| Atom::new(*q, 2.0 * p))
            .collect()
    }

    pub fn field(&self, dx: f64) -> Result<GridField> {
        field_from_atoms(&self.atoms(), dx)
    }

    pub fn field_on(&self, grid: &Grid) -> Result<GridField> {
        field_from_atoms_on(&self.atoms(), grid)
    }

    pub fn u_at(&self, x: f64) -> f64 {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| p * (-(x - q).abs()).exp())
            .sum()
    }

    /// One-sided limits `(u_x(x-), u_x(x+))`.
    pub fn slopes_at(&self, x: f64) -> (f64, f64) {
        let mut left = 0.0;
        let mut right = 0.0;
        for (p, q) in self.p.iter().zip(&self.q) {
            let w = p * (-(x - q).abs()).exp();
            if *q < x {
                left -= w;
                right -= w;
            } else if *q > x {
                left += w;
                right += w;
            } else {
                left += w;
                right -= w;
            }
        }
        (left, right)
    }
}

fn check_ordering(q: &[f64], time: f64) -> Result<()> {
    for i in 1..q.len() {
        let gap = q[i] - q[i - 1];
        if !(gap >= COLLISION_GAP) {
            return Err(Error::Collision {
                time,
                i: i - 1,
                j: i,
                gap,
            });
        }
    }
    Ok(())
}

/// `H(p, q)`.
pub fn hamiltonian(s: &PeakonState) -> f64 {
    let sums = exp_sums(&s.q, &s.p, &s.q);
    0.5 * s
        .p
        .iter()
        .enumerate()
        .map(|(i, p)| p * sums.total(i))
        .sum::<f64>()
}

/// Canonical vector field on sorted slices in O(N).
pub(crate) fn vector_field(
    p: &[f64],
    q: &[f64],
    time: f64,
    dp: &mut [f64],
    dq: &mut [f64],
) -> Result<()> {
    check_ordering(q, time)?;
    let sums = exp_sums(q, p, q);
    for i in 0..p.len() {
        // the left sum holds the self term p_i
        let behind = sums.left[i] - p[i];
        dq[i] = sums.left[i] + sums.right[i];
        dp[i] = p[i] * (behind - sums.right[i]);
    }
    Ok(())
}

/// `(dp, dq)` at `s`.
pub fn rhs(s: &PeakonState) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut dp = vec![0.0; s.len()];
    let mut dq = vec![0.0; s.len()];
    vector_field(&s.p, &s.q, s.time, &mut dp, &mut dq)?;
    Ok((dp, dq))
}

/// One classical RK4 step of size `h` on raw slices.
pub(crate) fn rk4_step(p: &[f64], q: &[f64], time: f64, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = p.len();
    let mut k = [(); 4].map(|_| (vec![0.0; n], vec![0.0; n]));
    let mut pt = vec![0.0; n];
    let mut qt = vec![0.0; n];
    let stage = [0.0, 0.5, 0.5, 1.0];
    for s in 0..4 {
        if s == 0 {
            pt.copy_from_slice(p);
            qt.copy_from_slice(q);
        } else {
            let (kp, kq) = &k[s - 1];
            for i in 0..n {
                pt[i] = p[i] + stage[s] * h * kp[i];
                qt[i] = q[i] + stage[s] * h * kq[i];
            }
        }
        let (kp, kq) = &mut k[s];
        vector_field(&pt, &qt, time + stage[s] * h, kp, kq)?;
    }
    let combine = |x: &[f64], d: [&Vec<f64>; 4]| -> Vec<f64> {
        (0..n)
            .map(|i| x[i] + h / 6.0 * (d[0][i] + 2.0 * d[1][i] + 2.0 * d[2][i] + d[3][i]))
            .collect()
    };
    let pn = combine(p, [&k[0].0, &k[1].0, &k[2].0, &k[3].0]);
    let qn = combine(q, [&k[0].1, &k[1].1, &k[2].1, &k[3].1]);
    Ok((pn, qn))
}

fn advance(s: &PeakonState, h: f64) -> Result<PeakonState> {
    let (p, q) = rk4_step(&s.p, &s.q, s.time, h)?;
    let time = s.time + h;
    check_ordering(&q, time)?;
    if let Some(i) = p.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveMomentum {
            time,
            index: i,
            value: p[i],
        });
    }
    Ok(PeakonState { p, q, time })
}

fn step_count(t_final: f64, dt: f64, s0: &PeakonState) -> Result<usize> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return domain(format!("final time must be non-negative, got {t_final}"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return domain(format!("time step must be positive, got {dt}"));
    }
    let pmax = s0.p.iter().copied().fold(0.0, f64::max);
    if dt > 0.1 / pmax {
        return domain(format!("time step {dt} exceeds 0.1/max p = {}", 0.1 / pmax));
    }
    Ok((t_final / dt - 1e-9).ceil().max(0.0) as usize)
}

/// RK4 from `s0.time` over a span `t_final`, every step stored. The span is
/// split into `ceil(t_final/dt)` equal steps.
pub fn evolve(s0: &PeakonState, t_final: f64, dt: f64) -> Result<Vec<PeakonState>> {
    evolve_strided(s0, t_final, dt, 1)
}

/// As [`evolve`] but storing every `stride`-th step and always the last one.
pub fn evolve_strided(
    s0: &PeakonState,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<PeakonState>> {
    let steps = step_count(t_final, dt, s0)?;
    let stride = stride.max(1);
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let mut out = Vec::with_capacity(steps / stride + 2);
    out.push(s0.clone());
    let mut s = s0.clone();
    for k in 1..=steps {
        s = advance(&s, h)?;
        s.time = s0.time + k as f64 * h;
        if k % stride == 0 || k == steps {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Max-norm difference between one step of `dt` and two of `dt/2`.
pub fn step_halving_error(s: &PeakonState, dt: f64) -> Result<f64> {
    let full = advance(s, dt)?;
    let half = advance(&advance(s, 0.5 * dt)?, 0.5 * dt)?;
    Ok(full
        .p
        .iter()
        .chain(&full.q)
        .zip(half.p.iter().chain(&half.q))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Closed forms `M = 2 sum p_i` and `E = 4H`.
pub fn exact_invariants(s: &PeakonState) -> (f64, f64) {
    (2.0 * s.p.iter().sum::<f64>(), 4.0 * hamiltonian(s))
}

/// Eigenvalues of `A_ij = p_j exp(-|q_i - q_j|/2)`, ascending.
///
/// `A = K P` with `K` symmetric and `P = diag(p) > 0`, so `A` is similar to the
/// symmetric `P^{1/2} K P^{1/2}`, which is what gets diagonalized.
pub fn asymptotic_speeds(s: &PeakonState) -> Result<Vec<f64>> {
    let n = s.len();
    let root: Vec<f64> = s.p.iter().map(|v| v.sqrt()).collect();
    let sym: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| root[i] * root[j] * (-0.5 * (s.q[i] - s.q[j]).abs()).exp())
                .collect()
        })
        .collect();
    symmetric_eigenvalues(&sym)
}

/// CSV with header `t,p1..pN,q1..qN`.
pub fn trajectory_csv(states: &[PeakonState], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let n = states.first().map_or(0, PeakonState::len);
    out.push('t');
    for i in 1..=n {
        let _ = write!(out, ",p{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",q{i}");
    }
    out.push('\n');
    for s in states {
        let _ = write!(out, "{:.16e}", s.time);
        for v in s.p.iter().chain(&s.q) {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: f64) -> f64 {
        x.exp()
    }

    #[test]
    fn hamiltonian_examples() {
        let s = PeakonState::single(1.3, 0.0).unwrap();
        assert!((hamiltonian(&s) - 0.5 * 1.69).abs() < 1e-15);
        let s = PeakonState::new(vec![1.0, 1.0], vec![-1.0, 1.0], 0.0).unwrap();
        assert!((hamiltonian(&s) - (1.0 + e(-2.0))).abs() < 1e-15);
    }

    #[test]
    fn rhs_two_peakons() {
        let s = PeakonState::new(vec![1.0, 1.0], vec![-1.0, 1.0], 0.0).unwrap();
        let (dp, dq) = rhs(&s).unwrap();
        assert!((dq[0] - (1.0 + e(-2.0))).abs() < 1e-15);
        assert!((dp[0] + e(-2.0)).abs() < 1e-15);
        assert!((dp[1] - e(-2.0)).abs() < 1e-15);
    }

    #[test]
    fn single_peakon_moves_at_its_height() {
        let s = PeakonState::single(1.0, 0.0).unwrap();
        let (dp, dq) = rhs(&s).unwrap();
        assert_eq!((dp[0], dq[0]), (0.0, 1.0));
        let traj = evolve(&s, 5.0, 0.01).unwrap();
        let last = traj.last().unwrap();
        assert!((last.q()[0] - 5.0).abs() < 1e-10);
        assert!((last.time() - 5.0).abs() < 1e-12);
        assert_eq!(traj.len(), 501);
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(PeakonState::new(vec![1.0, -1.0], vec![0.0, 1.0], 0.0).is_err());
        assert!(matches!(
            PeakonState::new(vec![1.0, 1.0], vec![0.0, 0.0], 0.0),
            Err(Error::Collision { .. })
        ));
        assert!(PeakonState::new(vec![1.0, 1.0], vec![1.0, 0.0], 0.0).is_err());
        assert!(PeakonState::new(vec![], vec![], 0.0).is_err());
        assert!(PeakonState::new(vec![1.0; 65], (0..65).map(f64::from).collect(), 0.0).is_err());
        let s = PeakonState::from_unsorted(vec![1.0, 2.0], vec![5.0, 0.0], 0.0).unwrap();
        assert_eq!(s.p(), &[2.0, 1.0]);
        assert_eq!(s.q(), &[0.0, 5.0]);
    }

    #[test]
    fn time_step_bound_enforced() {
        let s = PeakonState::single(2.0, 0.0).unwrap();
        assert!(evolve(&s, 1.0, 0.06).is_err());
        assert!(evolve(&s, 1.0, 0.05).is_ok());
    }

    #[test]
    fn invariants_closed_form() {
        let s = PeakonState::single(1.5, 3.0).unwrap();
        let (m, en) = exact_invariants(&s);
        assert_eq!(m, 3.0);
        assert!((en - 2.0 * 2.25).abs() < 1e-14);
        let s = PeakonState::new(vec![1.0, 0.5], vec![0.0, 40.0], 0.0).unwrap();
        let (_, en) = exact_invariants(&s);
        assert!((en - 2.0 * 1.25).abs() < 1e-15);
    }

    #[test]
    fn speeds_examples() {
        let s = PeakonState::single(0.7, 0.0).unwrap();
        assert!((asymptotic_speeds(&s).unwrap()[0] - 0.7).abs() < 1e-15);
        let s = PeakonState::new(vec![2.0, 1.0], vec![0.0, 80.0], 0.0).unwrap();
        let v = asymptotic_speeds(&s).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
        let s = PeakonState::new(vec![1.0, 2.0], vec![0.0, 2.0], 0.0).unwrap();
        let v = asymptotic_speeds(&s).unwrap();
        let disc = (9.0 - 4.0 * (2.0 - 2.0 * e(-2.0))).sqrt();
        assert!((v[0] - 0.5 * (3.0 - disc)).abs() < 1e-12);
        assert!((v[1] - 0.5 * (3.0 + disc)).abs() < 1e-12);
    }

    #[test]
    fn slopes_at_peak() {
        let s = PeakonState::single(1.2, 0.5).unwrap();
        let (l, r) = s.slopes_at(0.5);
        assert!((l - 1.2).abs() < 1e-15 && (r + 1.2).abs() < 1e-15);
        let (l, r) = s.slopes_at(1.0);
        assert_eq!(l, r);
    }

    #[test]
    fn step_halving_error_is_small() {
        let s = PeakonState::new(vec![1.0, 2.0], vec![0.0, 1.0], 0.0).unwrap();
        let a = step_halving_error(&s, 0.02).unwrap();
        let b = step_halving_error(&s, 0.01).unwrap();
        assert!(a < 1e-8 && b < a / 16.0);
    }

    #[test]
    fn csv_layout() {
        let s = PeakonState::new(vec![1.0, 2.0], vec![0.0, 1.0], 0.0).unwrap();
        let text = trajectory_csv(&[s], &[]);
        assert!(text.starts_with("t,p1,p2,q1,q2\n"));
        assert_eq!(text.lines().count(), 2);
    }
}
