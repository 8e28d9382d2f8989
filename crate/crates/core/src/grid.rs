//! Uniform 1-D grid descriptor and the two-node difference stencils shared by
//! every module.

use crate::error::{domain, Result};

/// Uniform grid `x_i = origin + i * dx`, `i = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    origin: f64,
    dx: f64,
    len: usize,
}

impl Grid {
    pub fn new(origin: f64, dx: f64, len: usize) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return domain(format!("grid spacing must be positive and finite, got {dx}"));
        }
        if !origin.is_finite() {
            return domain("grid origin must be finite");
        }
        if len == 0 {
            return domain("grid must have at least one node");
        }
        Ok(Self { origin, dx, len })
    }

    /// Smallest grid aligned to integer multiples of `dx` that covers `[lo, hi]`.
    pub fn covering(lo: f64, hi: f64, dx: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return domain(format!("invalid interval [{lo}, {hi}]"));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return domain(format!("grid spacing must be positive and finite, got {dx}"));
        }
        let i0 = (lo / dx).floor() as i64;
        let i1 = (hi / dx).ceil() as i64;
        Self::new(i0 as f64 * dx, dx, (i1 - i0 + 1) as usize)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.dx
    }

    pub fn end(&self) -> f64 {
        self.x(self.len - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.x(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.origin && x <= self.end()
    }

    /// Fractional node coordinate of `x`.
    #[inline]
    pub fn coordinate(&self, x: f64) -> f64 {
        (x - self.origin) / self.dx
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let k = self.coordinate(x).round();
        k.clamp(0.0, (self.len - 1) as f64) as usize
    }
}

/// Backward slopes `(u_i - u_{i-1}) / dx` with a zero ghost node on the left.
pub fn backward_slopes(u: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len());
    let mut prev = 0.0;
    for &v in u {
        out.push((v - prev) / dx);
        prev = v;
    }
    out
}

/// Forward slopes `(u_{i+1} - u_i) / dx` with a zero ghost node on the right.
pub fn forward_slopes(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let next = if i + 1 < n { u[i + 1] } else { 0.0 };
            (next - u[i]) / dx
        })
        .collect()
}

/// Centered slopes with one-sided closure at the two ends.
pub fn centered_slopes(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut out = vec![0.0; n];
    out[0] = (u[1] - u[0]) / dx;
    out[n - 1] = (u[n - 1] - u[n - 2]) / dx;
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
    }
    out
}

/// Nodal estimate of `u_x^2` as the mean of the squared one-sided slopes.
///
/// Each cell slope enters twice with weight one half, so a kink sitting
/// between nodes contributes its two slopes without being averaged away.
pub fn squared_slopes(u: &[f64], dx: f64) -> Vec<f64> {
    let back = backward_slopes(u, dx);
    let fwd = forward_slopes(u, dx);
    back.iter()
        .zip(&fwd)
        .map(|(b, f)| 0.5 * (b * b + f * f))
        .collect()
}

/// Trapezoid quadrature of nodal values.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dx * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Linear interpolation of nodal values at `x`; zero outside the grid.
pub fn interpolate(grid: &Grid, values: &[f64], x: f64) -> f64 {
    let s = grid.coordinate(x);
    let last = (grid.len() - 1) as f64;
    if !(0.0..=last).contains(&s) {
        return 0.0;
    }
    let i = (s.floor() as usize).min(grid.len().saturating_sub(2));
    if grid.len() == 1 {
        return values[0];
    }
    let w = s - i as f64;
    (1.0 - w) * values[i] + w * values[i + 1]
}
