//! Closed-form kernels: the peakon profile, the Green function of `1 - d_xx`,
//! the compactly supported mollifier and the arctan-exponential weight.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use crate::expsum::exp_sums;
use crate::grid::Grid;
use crate::quadrature::GaussLegendre;

/// `c * exp(-|offset|)`.
#[inline]
pub fn peakon_profile(c: f64, offset: f64) -> f64 {
    c * (-offset.abs()).exp()
}

/// Slope of the peakon profile, `-c sgn(offset) exp(-|offset|)`, zero at the crest.
#[inline]
pub fn peakon_slope(c: f64, offset: f64) -> f64 {
    if offset == 0.0 {
        0.0
    } else {
        -c * offset.signum() * (-offset.abs()).exp()
    }
}

/// A single peakon `amplitude * exp(-|x - center|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakonProfile {
    pub amplitude: f64,
    pub center: f64,
}

impl PeakonProfile {
    pub fn new(amplitude: f64, center: f64) -> Self {
        Self { amplitude, center }
    }

    pub fn at(&self, x: f64) -> f64 {
        peakon_profile(self.amplitude, x - self.center)
    }

    /// The same profile after travelling for `t` at its own speed.
    pub fn translated(&self, t: f64) -> Self {
        Self::new(self.amplitude, self.center + self.amplitude * t)
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len()).map(|i| self.at(grid.x(i))).collect()
    }
}

/// Trapezoid quadrature of `(1/2) exp(-|x - x'|) * f(x')` at every node.
///
/// The kernel is integrated exactly node to node, so the sweep costs O(n)
/// and preserves positivity of `f`.
pub fn green_convolve(f: &[f64], dx: f64) -> Result<Vec<f64>> {
    let n = f.len();
    if n == 0 {
        return domain("green_convolve on an empty grid");
    }
    if !(dx.is_finite() && dx > 0.0) {
        return domain(format!("grid spacing must be positive, got {dx}"));
    }
    let decay = (-dx).exp();
    let weighted: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == n - 1 { 0.5 * v } else { *v })
        .collect();
    let mut left = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc = acc * decay + weighted[i];
        left[i] = acc;
    }
    let mut out = vec![0.0; n];
    acc = 0.0;
    for i in (0..n).rev() {
        acc = acc * decay + weighted[i];
        out[i] = 0.5 * dx * (left[i] + acc - weighted[i]);
    }
    Ok(out)
}

/// Exact `(1/2) exp(-|.|) * mu` on the grid nodes for an atomic measure
/// `mu = sum_i mass_i delta_{x_i}`.
pub fn green_convolve_atoms(atoms: &[(f64, f64)], grid: &Grid) -> Vec<f64> {
    let mut sorted: Vec<(f64, f64)> = atoms.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let positions: Vec<f64> = sorted.iter().map(|a| a.0).collect();
    let weights: Vec<f64> = sorted.iter().map(|a| 0.5 * a.1).collect();
    let sums = exp_sums(&positions, &weights, &grid.nodes());
    (0..grid.len()).map(|i| sums.total(i)).collect()
}

/// Squared effective spacing `(2 sinh(dx/2))^2` of the exponentially fitted
/// second difference. With it `(1 - D2)` annihilates sampled `exp(+-x)`.
#[inline]
pub fn fitted_spacing_sq(dx: f64) -> f64 {
    let s = 2.0 * (0.5 * dx).sinh();
    s * s
}

/// `(1 - D2) u` with homogeneous Dirichlet ghosts.
pub fn apply_helmholtz(u: &[f64], dx: f64) -> Vec<f64> {
    let h2 = fitted_spacing_sq(dx);
    let n = u.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { u[i - 1] } else { 0.0 };
            let r = if i + 1 < n { u[i + 1] } else { 0.0 };
            u[i] - (r - 2.0 * u[i] + l) / h2
        })
        .collect()
}

/// Solves `(1 - D2) u = f` with homogeneous Dirichlet closure (Thomas algorithm;
/// the matrix is strictly diagonally dominant).
pub fn helmholtz_solve(f: &[f64], dx: f64) -> Result<Vec<f64>> {
    let n = f.len();
    if n < 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: n,
        });
    }
    if !(dx.is_finite() && dx > 0.0) {
        return domain(format!("grid spacing must be positive, got {dx}"));
    }
    let h2 = fitted_spacing_sq(dx);
    let off = -1.0 / h2;
    let diag = 1.0 + 2.0 / h2;
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    c_prime[0] = off / diag;
    d_prime[0] = f[0] / diag;
    for i in 1..n {
        let m = diag - off * c_prime[i - 1];
        c_prime[i] = off / m;
        d_prime[i] = (f[i] - off * d_prime[i - 1]) / m;
    }
    let mut u = vec![0.0; n];
    u[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = d_prime[i] - c_prime[i] * u[i + 1];
    }
    Ok(u)
}

/// Unnormalized bump `exp(1/(x^2 - 1))` on `|x| < 1`, zero elsewhere.
#[inline]
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 / (x * x - 1.0)).exp()
    } else {
        0.0
    }
}

/// `\int_{-1}^{1} exp(1/(x^2-1)) dx`.
pub fn bump_integral() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| GaussLegendre::new(24).integrate_composite(-1.0, 1.0, 16, bump))
}

/// Continuum mollifier `rho_n(x) = n rho(n x) / \int rho`.
#[inline]
pub fn mollifier_density(n: u32, x: f64) -> f64 {
    let nf = f64::from(n);
    nf * bump(nf * x) / bump_integral()
}

/// Discrete mollifier `rho_n` sampled at the grid offsets inside `(-1/n, 1/n)`
/// and renormalized so the weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifierKernel {
    n: u32,
    dx: f64,
    weights: Vec<f64>,
}

impl MollifierKernel {
    pub fn new(n: u32, dx: f64) -> Result<Self> {
        if n == 0 {
            return domain("mollifier index must be positive");
        }
        if !(dx.is_finite() && dx > 0.0) {
            return domain(format!("grid spacing must be positive, got {dx}"));
        }
        let nf = f64::from(n);
        if dx * nf >= 1.0 {
            return Err(Error::Resolution { n, dx });
        }
        let mut half = (1.0 / (dx * nf)).ceil() as usize;
        while half as f64 * dx * nf >= 1.0 {
            half -= 1;
        }
        let one_side: Vec<f64> = (0..=half).map(|j| bump(j as f64 * dx * nf)).collect();
        let mut weights = Vec::with_capacity(2 * half + 1);
        weights.extend(one_side.iter().rev());
        weights.extend(&one_side[1..]);
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { n, dx, weights })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Weights for offsets `-half*dx ..= half*dx`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn half_width(&self) -> usize {
        self.weights.len() / 2
    }

    /// Discrete convolution with zero extension outside the grid.
    pub fn convolve(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len() as isize;
        let h = self.half_width() as isize;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (k, w) in self.weights.iter().enumerate() {
                    let j = i - (k as isize - h);
                    if (0..n).contains(&j) {
                        acc += w * u[j as usize];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Scale of the weight, fixed at 6.
pub const PSI_SCALE: f64 = 6.0;

/// `Psi(x) = (2/pi) arctan(exp(x/6))` and its first and third derivatives,
/// all in closed form.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeightProfile;

impl WeightProfile {
    pub fn scale(&self) -> f64 {
        PSI_SCALE
    }

    pub fn value(&self, x: f64) -> f64 {
        let s = x / PSI_SCALE;
        if s >= 0.0 {
            1.0 - 2.0 / PI * (-s).exp().atan()
        } else {
            2.0 / PI * s.exp().atan()
        }
    }

    pub fn first(&self, x: f64) -> f64 {
        sech(x / PSI_SCALE) / (PSI_SCALE * PI)
    }

    pub fn third(&self, x: f64) -> f64 {
        let s = x / PSI_SCALE;
        let t = s.tanh();
        sech(s) * (2.0 * t * t - 1.0) / (PSI_SCALE.powi(3) * PI)
    }
}

/// Evaluates `Psi`, `Psi'` or `Psi'''` (order 0, 1 or 3).
pub fn weight_psi(x: f64, order: u32) -> Result<f64> {
    let w = WeightProfile;
    match order {
        0 => Ok(w.value(x)),
        1 => Ok(w.first(x)),
        3 => Ok(w.third(x)),
        other => Err(Error::UnsupportedOrder(other)),
    }
}

#[inline]
fn sech(s: f64) -> f64 {
    let e = (-s.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peakon_profile_values() {
        assert_eq!(peakon_profile(1.0, 0.0), 1.0);
        assert!((peakon_profile(2.0, 2f64.ln()) - 1.0).abs() < 1e-15);
        for i in 0..50 {
            let x = 0.37 * i as f64;
            assert_eq!(peakon_profile(3.0, x), peakon_profile(3.0, -x));
        }
    }

    #[test]
    fn green_of_zero_is_zero() {
        let h = green_convolve(&[0.0; 40], 0.1).unwrap();
        assert!(h.iter().all(|v| *v == 0.0));
        assert!(green_convolve(&[], 0.1).is_err());
    }

    #[test]
    fn green_of_nodal_atom_is_exact_peakon() {
        let g = Grid::covering(-20.0, 20.0, 0.05).unwrap();
        let mut f = vec![0.0; g.len()];
        f[g.nearest(0.0)] = 2.0 / g.dx();
        let h = green_convolve(&f, g.dx()).unwrap();
        let err = (0..g.len())
            .map(|i| (h[i] - (-g.x(i).abs()).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn green_of_constant_is_one_in_interior() {
        let g = Grid::covering(-60.0, 60.0, 0.05).unwrap();
        let h = green_convolve(&vec![1.0; g.len()], g.dx()).unwrap();
        for i in 0..g.len() {
            if g.x(i).abs() < 20.0 {
                assert!((h[i] - 1.0).abs() < 1e-3, "{}", h[i]);
            }
        }
    }

    #[test]
    fn helmholtz_inverts_forward_operator() {
        let g = Grid::covering(-15.0, 15.0, 0.03).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        let f = apply_helmholtz(&u, g.dx());
        let back = helmholtz_solve(&f, g.dx()).unwrap();
        let err = u.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!(helmholtz_solve(&[1.0, 2.0], 0.1).is_err());
    }

    #[test]
    fn fitted_operator_annihilates_exponentials() {
        let dx = 0.1;
        let u: Vec<f64> = (0..30).map(|i| (-(i as f64) * dx).exp()).collect();
        let y = apply_helmholtz(&u, dx);
        assert!(y[1..29].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn helmholtz_and_green_agree_on_delta() {
        let g = Grid::covering(-30.0, 30.0, 0.04).unwrap();
        let mut f = vec![0.0; g.len()];
        f[g.nearest(0.0)] = 2.0 / g.dx();
        let a = green_convolve(&f, g.dx()).unwrap();
        let b = helmholtz_solve(&f, g.dx()).unwrap();
        let err = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err <= g.dx() * g.dx() / 10.0, "{err}");
    }

    #[test]
    fn mollifier_weights() {
        let k = MollifierKernel::new(10, 0.01).unwrap();
        let w = k.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|v| *v >= 0.0));
        for i in 0..w.len() {
            assert_eq!(w[i], w[w.len() - 1 - i]);
        }
        // offsets beyond 1/n are not represented at all
        assert!(k.half_width() as f64 * k.dx() < 0.1);
    }

    #[test]
    fn mollifier_needs_resolution() {
        assert!(matches!(
            MollifierKernel::new(10, 0.1),
            Err(Error::Resolution { .. })
        ));
        assert!(MollifierKernel::new(0, 0.01).is_err());
        assert!(MollifierKernel::new(9, 0.1).unwrap().weights().len() >= 3);
    }

    #[test]
    fn bump_vanishes_outside_unit_interval() {
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.5), 0.0);
        assert!(bump(0.999) >= 0.0);
        assert!((bump(0.0) - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn psi_basic_values() {
        let w = WeightProfile;
        assert!((w.value(0.0) - 0.5).abs() < 1e-16);
        assert!((w.first(0.0) - 1.0 / (6.0 * PI)).abs() < 1e-16);
        assert!(matches!(weight_psi(0.0, 2), Err(Error::UnsupportedOrder(2))));
        for i in 0..200 {
            let x = -50.0 + 0.5 * i as f64;
            assert!((w.value(-x) - (1.0 - w.value(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let w = WeightProfile;
        let h = 1e-4;
        for i in 0..40 {
            let x = -20.0 + i as f64;
            let d1 = (w.value(x + h) - w.value(x - h)) / (2.0 * h);
            assert!((d1 - w.first(x)).abs() < 1e-9);
            let d3 = (w.first(x + 10.0 * h) - 2.0 * w.first(x) + w.first(x - 10.0 * h))
                / (100.0 * h * h);
            assert!((d3 - w.third(x)).abs() < 1e-8);
        }
    }
}
