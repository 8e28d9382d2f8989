//! Sampled states `u`, their momentum density `y = u - u_xx`, and the
//! membership test for the cone `Y+ = { u : y >= 0 }`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{domain, Error, Result};
use crate::grid::{centered_slopes, Grid};
use crate::kernels::{apply_helmholtz, green_convolve_atoms};

/// Padding placed around atom positions when a grid is chosen automatically.
pub const ATOM_PADDING: f64 = 40.0;

/// Relative boundary level below which a field counts as decayed.
pub const DECAY_LEVEL: f64 = 1e-10;

/// Values of `u` on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    samples: Vec<f64>,
}

impl GridField {
    pub const MIN_NODES: usize = 16;

    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: samples.len(),
            });
        }
        if samples.len() < Self::MIN_NODES {
            return domain(format!(
                "a grid field needs at least {} nodes, got {}",
                Self::MIN_NODES,
                samples.len()
            ));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return domain(format!("sample {i} is not finite"));
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, samples)
    }

    pub fn zeros(grid: Grid) -> Result<Self> {
        Self::new(grid, vec![0.0; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.x(i)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First node attaining the maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.samples.iter().enumerate() {
            if *v > self.samples[best] {
                best = i;
            }
        }
        best
    }

    /// Both boundary samples are at most `DECAY_LEVEL * max|u|`.
    pub fn is_decayed(&self) -> bool {
        let level = DECAY_LEVEL * self.max_abs();
        self.samples[0].abs() <= level && self.samples[self.len() - 1].abs() <= level
    }

    /// Same grid, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, samples)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|v| k * v).collect(),
        }
    }

    /// Pointwise difference on a shared grid.
    pub fn minus(&self, other: &GridField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            grid: self.grid,
            samples,
        })
    }

    /// CSV text with header `x,u`, 17 significant digits per value.
    /// `comments` are emitted first, each prefixed with `# `.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::with_capacity(48 * self.len());
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str("x,u\n");
        for (i, v) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", self.grid.x(i), v);
        }
        out
    }

    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        fs::write(path, self.to_csv(comments))?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> std::result::Result<Self, String> {
        let mut xs = Vec::new();
        let mut us = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                if line != "x,u" {
                    return Err(format!("line {}: expected header `x,u`", lineno + 1));
                }
                header_seen = true;
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| format!("line {}: expected two columns", lineno + 1))?;
            let x: f64 = a
                .trim()
                .parse()
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
            let u: f64 = b
                .trim()
                .parse()
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
            xs.push(x);
            us.push(u);
        }
        if xs.len() < 2 {
            return Err("fewer than two data rows".into());
        }
        let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        for (i, x) in xs.iter().enumerate() {
            if (x - (xs[0] + i as f64 * dx)).abs() > 1e-9 * dx.max(1.0) {
                return Err(format!("node {i} is not on a uniform grid"));
            }
        }
        let grid = Grid::new(xs[0], dx, xs.len()).map_err(|e| e.to_string())?;
        Self::new(grid, us).map_err(|e| e.to_string())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }
}

/// Point mass `mass * delta_{position}` of the momentum density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

impl Atom {
    pub fn new(position: f64, mass: f64) -> Self {
        Self { position, mass }
    }
}

/// Momentum density `y = u - u_xx`, either a finite sum of atoms or sampled
/// on a grid.
#[derive(Clone, Debug, PartialEq)]
pub enum MomentumDensity {
    Atomic(Vec<Atom>),
    Sampled(GridField),
}

impl MomentumDensity {
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        validate_atoms(&atoms)?;
        Ok(Self::Atomic(atoms))
    }

    /// `M = \int y`.
    pub fn total_mass(&self) -> f64 {
        match self {
            Self::Atomic(atoms) => atoms.iter().map(|a| a.mass).sum(),
            Self::Sampled(y) => y.samples().iter().sum::<f64>() * y.dx(),
        }
    }

    /// `u = (1 - d_xx)^{-1} y` sampled on `grid`.
    pub fn velocity_on(&self, grid: &Grid) -> Result<GridField> {
        match self {
            Self::Atomic(atoms) => field_from_atoms_on(atoms, grid),
            Self::Sampled(y) => {
                if y.grid() != grid {
                    return Err(Error::DimensionMismatch {
                        expected: grid.len(),
                        found: y.len(),
                    });
                }
                GridField::new(
                    *grid,
                    crate::kernels::helmholtz_solve(y.samples(), grid.dx())?,
                )
            }
        }
    }
}

fn validate_atoms(atoms: &[Atom]) -> Result<()> {
    for (i, a) in atoms.iter().enumerate() {
        if !a.position.is_finite() {
            return domain(format!("atom {i} has a non-finite position"));
        }
        if !(a.mass.is_finite() && a.mass > 0.0) {
            return domain(format!("atom {i} has non-positive mass {}", a.mass));
        }
    }
    Ok(())
}

/// Samples `u(x) = sum_i (mass_i / 2) exp(-|x - x_i|)` on a grid aligned to
/// multiples of `dx` covering every atom with `ATOM_PADDING` on each side.
pub fn field_from_atoms(atoms: &[Atom], dx: f64) -> Result<GridField> {
    validate_atoms(atoms)?;
    let (lo, hi) = if atoms.is_empty() {
        (0.0, 0.0)
    } else {
        atoms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), a| {
            (l.min(a.position), h.max(a.position))
        })
    };
    let grid = Grid::covering(lo - ATOM_PADDING, hi + ATOM_PADDING, dx)?;
    field_from_atoms_on(atoms, &grid)
}

/// Exact evaluation of the atomic sum on a given grid.
pub fn field_from_atoms_on(atoms: &[Atom], grid: &Grid) -> Result<GridField> {
    validate_atoms(atoms)?;
    let pairs: Vec<(f64, f64)> = atoms.iter().map(|a| (a.position, a.mass)).collect();
    GridField::new(*grid, green_convolve_atoms(&pairs, grid))
}

/// `y = u - D2 u` with the same closure as [`crate::kernels::helmholtz_solve`].
pub fn momentum_of_field(u: &GridField) -> MomentumDensity {
    let y = apply_helmholtz(u.samples(), u.dx());
    MomentumDensity::Sampled(GridField {
        grid: *u.grid(),
        samples: y,
    })
}

/// Outcome of the `Y+` membership test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YPlusReport {
    pub is_nonnegative: bool,
    /// `max(0, -min y)`.
    pub worst_violation: f64,
    /// Tolerance used for sampled densities (zero for atomic ones).
    pub tolerance: f64,
}

/// Sampled tolerance `1e-8 * max(1, max y)`.
pub fn yplus_tolerance(y: &GridField) -> f64 {
    1e-8 * y.max().max(1.0)
}

pub fn check_yplus(y: &MomentumDensity) -> YPlusReport {
    match y {
        MomentumDensity::Atomic(atoms) => {
            let min = atoms.iter().map(|a| a.mass).fold(f64::INFINITY, f64::min);
            let worst = if min.is_finite() { (-min).max(0.0) } else { 0.0 };
            YPlusReport {
                is_nonnegative: atoms.iter().all(|a| a.mass > 0.0),
                worst_violation: worst,
                tolerance: 0.0,
            }
        }
        MomentumDensity::Sampled(field) => {
            let tol = yplus_tolerance(field);
            let min = field.samples().iter().copied().fold(f64::INFINITY, f64::min);
            YPlusReport {
                is_nonnegative: min >= -tol,
                worst_violation: (-min).max(0.0),
                tolerance: tol,
            }
        }
    }
}

/// Discrete `H^1` norm `sqrt(sum (u^2 + u_x^2) dx)` over the whole grid or over
/// the nodes `x >= half_line_start`. `u_x` is centered with one-sided ends.
pub fn h1_norm(u: &GridField, half_line_start: Option<f64>) -> Result<f64> {
    let start = match half_line_start {
        None => 0,
        Some(x0) => {
            if !u.grid().contains(x0) {
                return domain(format!(
                    "half line start {x0} outside grid [{}, {}]",
                    u.grid().origin(),
                    u.grid().end()
                ));
            }
            u.grid().coordinate(x0).ceil() as usize
        }
    };
    let ux = centered_slopes(u.samples(), u.dx());
    let sum: f64 = (start..u.len())
        .map(|i| u.samples()[i].powi(2) + ux[i].powi(2))
        .sum();
    Ok((sum * u.dx()).sqrt())
}

/// `<y, u>` by nodal quadrature.
pub fn pairing(y: &GridField, u: &GridField) -> f64 {
    y.samples()
        .iter()
        .zip(u.samples())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * u.dx()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, dx: f64) -> Grid {
        Grid::covering(lo, hi, dx).unwrap()
    }

    #[test]
    fn unit_peakon_from_single_atom() {
        let u = field_from_atoms(&[Atom::new(0.0, 2.0)], 0.05).unwrap();
        for i in 0..u.len() {
            assert!((u.samples()[i] - (-u.x(i).abs()).exp()).abs() < 1e-14);
        }
        assert!(u.is_decayed());
    }

    #[test]
    fn two_atoms_midpoint_value() {
        let atoms = [Atom::new(-1.0, 2.0), Atom::new(1.0, 2.0)];
        let u = field_from_atoms(&atoms, 0.01).unwrap();
        let k = u.grid().nearest(0.0);
        assert_eq!(u.x(k), 0.0);
        assert!((u.samples()[k] - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn empty_atoms_give_zero_field() {
        let u = field_from_atoms(&[], 0.1).unwrap();
        assert!(u.samples().iter().all(|v| *v == 0.0));
        assert!(field_from_atoms(&[Atom::new(0.0, -1.0)], 0.1).is_err());
    }

    #[test]
    fn momentum_round_trips_helmholtz() {
        let g = grid(-20.0, 20.0, 0.02);
        let f: Vec<f64> = g.nodes().iter().map(|x| (-(x - 1.0).powi(2)).exp() * 3.0).collect();
        let u = GridField::new(g, crate::kernels::helmholtz_solve(&f, g.dx()).unwrap()).unwrap();
        let MomentumDensity::Sampled(y) = momentum_of_field(&u) else {
            unreachable!()
        };
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in y.samples().iter().zip(&f) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn gaussian_is_not_in_yplus() {
        let u = GridField::from_fn(grid(-10.0, 10.0, 0.01), |x| (-x * x).exp()).unwrap();
        let rep = check_yplus(&momentum_of_field(&u));
        assert!(!rep.is_nonnegative);
        // y = (3 - 4x^2) e^{-x^2}; most negative at x^2 = 7/4
        let expected = 4.0 * (-1.75f64).exp();
        assert!((rep.worst_violation - expected).abs() < 1e-3);
    }

    #[test]
    fn sampled_multipeakon_is_in_yplus() {
        let atoms = [Atom::new(-2.013, 1.0), Atom::new(0.5, 3.0), Atom::new(4.2717, 0.4)];
        let u = field_from_atoms(&atoms, 0.02).unwrap();
        let rep = check_yplus(&momentum_of_field(&u));
        assert!(rep.is_nonnegative, "{rep:?}");
        let atomic = check_yplus(&MomentumDensity::atomic(atoms.to_vec()).unwrap());
        assert!(atomic.is_nonnegative && atomic.worst_violation == 0.0);
    }

    #[test]
    fn h1_norm_of_peakon() {
        let c = 1.7;
        let dx = 0.005;
        let u = field_from_atoms(&[Atom::new(0.0, 2.0 * c)], dx).unwrap();
        let n = h1_norm(&u, None).unwrap();
        let exact = (2.0 * c * c).sqrt();
        assert!((n - exact).abs() <= 2.0 * dx * exact, "{n} vs {exact}");
        assert_eq!(h1_norm(&u.scaled(0.0), None).unwrap(), 0.0);
        assert!(h1_norm(&u, Some(39.0)).unwrap() < 1e-8);
        assert!(h1_norm(&u, Some(1e3)).is_err());
    }

    #[test]
    fn energy_identity_for_yplus_fields() {
        let dx = 0.01;
        let atoms = [Atom::new(-1.0, 1.0), Atom::new(2.0, 2.0)];
        let u = field_from_atoms(&atoms, dx).unwrap();
        let MomentumDensity::Sampled(y) = momentum_of_field(&u) else {
            unreachable!()
        };
        let e = h1_norm(&u, None).unwrap().powi(2);
        let pair = pairing(&y, &u);
        assert!((e - pair).abs() <= 5.0 * dx * pair);
    }

    #[test]
    fn csv_round_trip() {
        let u = field_from_atoms(&[Atom::new(0.3, 1.0)], 0.25).unwrap();
        let text = u.to_csv(&["kind = test".to_string()]);
        assert!(text.starts_with("# kind = test\nx,u\n"));
        let back = GridField::from_csv(&text).unwrap();
        assert_eq!(back.len(), u.len());
        for (a, b) in back.samples().iter().zip(u.samples()) {
            assert_eq!(a, b);
        }
    }
}
