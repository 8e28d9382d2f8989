//! Stored solution histories: grid snapshots at increasing times, optionally
//! backed by the atoms that generated them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{domain, Error, Result};
use crate::grid::{centered_slopes, interpolate, Grid};
use crate::measures::{field_from_atoms_on, momentum_of_field, Atom, GridField, MomentumDensity};
use crate::multipeakon::PeakonState;

/// Uncapped multipeakon data `u = sum_i p_i exp(-|x - q_i|)`, positions
/// non-decreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct Particles {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl Particles {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: q.len(),
            });
        }
        if p.iter().chain(&q).any(|v| !v.is_finite()) {
            return domain("particle data must be finite");
        }
        if q.windows(2).any(|w| w[1] < w[0]) {
            return domain("particle positions must be sorted");
        }
        Ok(Self { p, q })
    }

    pub(crate) fn from_raw(p: Vec<f64>, q: Vec<f64>) -> Self {
        Self { p, q }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn atoms(&self) -> Vec<Atom> {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| Atom::new(*q, 2.0 * p))
            .collect()
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
        let (mut left, mut right) = (0.0, 0.0);
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

    /// `max u`, attained at an atom.
    pub fn max_u(&self) -> f64 {
        self.q.iter().map(|q| self.u_at(*q)).fold(0.0, f64::max)
    }

    pub fn field_on(&self, grid: &Grid) -> Result<GridField> {
        field_from_atoms_on(&self.atoms(), grid)
    }

    /// `(1 - w) self + w other`, atom by atom.
    pub fn lerp(&self, other: &Particles, w: f64) -> Particles {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
        };
        Particles {
            p: mix(&self.p, &other.p),
            q: mix(&self.q, &other.q),
        }
    }
}

impl From<&PeakonState> for Particles {
    fn from(s: &PeakonState) -> Self {
        Self {
            p: s.p().to_vec(),
            q: s.q().to_vec(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Grid,
    times: Vec<f64>,
    snapshots: Vec<Vec<f64>>,
    particles: Option<Vec<Particles>>,
    warnings: Vec<String>,
}

impl Trajectory {
    pub fn from_fields(fields: Vec<GridField>, times: Vec<f64>) -> Result<Self> {
        if fields.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: fields.len(),
            });
        }
        let Some(first) = fields.first() else {
            return domain("a trajectory needs at least one snapshot");
        };
        let grid = *first.grid();
        if fields.iter().any(|f| *f.grid() != grid) {
            return domain("all snapshots must share one grid");
        }
        check_times(&times)?;
        Ok(Self {
            grid,
            times,
            snapshots: fields.into_iter().map(GridField::into_samples).collect(),
            particles: None,
            warnings: Vec::new(),
        })
    }

    /// Snapshots are exact evaluations of the atomic sums on `grid`.
    pub fn from_particles(grid: Grid, times: Vec<f64>, particles: Vec<Particles>) -> Result<Self> {
        if particles.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: particles.len(),
            });
        }
        if particles.is_empty() {
            return domain("a trajectory needs at least one snapshot");
        }
        check_times(&times)?;
        let snapshots = particles
            .iter()
            .map(|s| s.field_on(&grid).map(GridField::into_samples))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            times,
            snapshots,
            particles: Some(particles),
            warnings: Vec::new(),
        })
    }

    pub fn from_peakon_states(states: &[PeakonState], grid: Grid) -> Result<Self> {
        let times = states.iter().map(PeakonState::time).collect();
        let particles = states.iter().map(Particles::from).collect();
        Self::from_particles(grid, times, particles)
    }

    pub(crate) fn push_warning(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn samples(&self, k: usize) -> &[f64] {
        &self.snapshots[k]
    }

    pub fn field(&self, k: usize) -> GridField {
        GridField::new(self.grid, self.snapshots[k].clone())
            .expect("snapshots are validated on construction")
    }

    pub fn is_atomic(&self) -> bool {
        self.particles.is_some()
    }

    pub fn particles(&self, k: usize) -> Option<&Particles> {
        self.particles.as_ref().map(|p| &p[k])
    }

    /// Atomic momentum when atoms are known, otherwise the sampled density.
    pub fn momentum(&self, k: usize) -> MomentumDensity {
        match self.particles(k) {
            Some(s) => MomentumDensity::Atomic(s.atoms()),
            None => momentum_of_field(&self.field(k)),
        }
    }

    /// Grid-sampled `y` regardless of representation.
    pub fn sampled_momentum(&self, k: usize) -> GridField {
        match momentum_of_field(&self.field(k)) {
            MomentumDensity::Sampled(y) => y,
            MomentumDensity::Atomic(_) => unreachable!("momentum_of_field always samples"),
        }
    }

    /// Snapshot index and weight for linear interpolation in time; clamped.
    pub fn bracket(&self, t: f64) -> (usize, f64) {
        let n = self.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 2, 1.0);
        }
        let k = self.times.partition_point(|s| *s <= t) - 1;
        let k = k.min(n - 2);
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (k, w)
    }

    /// Atoms interpolated linearly in time.
    pub fn particles_at_time(&self, t: f64) -> Option<Particles> {
        let all = self.particles.as_ref()?;
        if all.len() == 1 {
            return Some(all[0].clone());
        }
        let (k, w) = self.bracket(t);
        if all[k].len() != all[k + 1].len() {
            return Some(if w < 0.5 { all[k].clone() } else { all[k + 1].clone() });
        }
        Some(all[k].lerp(&all[k + 1], w))
    }

    /// `u(t, x)`: atomic sums when available, otherwise bilinear in (t, x).
    pub fn u_at_time(&self, t: f64, x: f64) -> f64 {
        if let Some(s) = self.particles_at_time(t) {
            return s.u_at(x);
        }
        if self.len() == 1 {
            return interpolate(&self.grid, &self.snapshots[0], x);
        }
        let (k, w) = self.bracket(t);
        (1.0 - w) * interpolate(&self.grid, &self.snapshots[k], x)
            + w * interpolate(&self.grid, &self.snapshots[k + 1], x)
    }

    /// `u_x(t, x)`: mean of one-sided limits for atoms, interpolated centered
    /// slopes on the grid.
    pub fn ux_at_time(&self, t: f64, x: f64) -> f64 {
        if let Some(s) = self.particles_at_time(t) {
            let (l, r) = s.slopes_at(x);
            return 0.5 * (l + r);
        }
        let slope = |k: usize| {
            interpolate(
                &self.grid,
                &centered_slopes(&self.snapshots[k], self.grid.dx()),
                x,
            )
        };
        if self.len() == 1 {
            return slope(0);
        }
        let (k, w) = self.bracket(t);
        (1.0 - w) * slope(k) + w * slope(k + 1)
    }

    /// One CSV per stored step plus `index.csv` (`step,t,file`).
    pub fn write_dir(&self, dir: &Path, comments: &[String]) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.len() + 1);
        let mut index = String::new();
        for c in comments {
            let _ = writeln!(index, "# {c}");
        }
        index.push_str("step,t,file\n");
        for k in 0..self.len() {
            let name = format!("snapshot_{k:05}.csv");
            let mut header = comments.to_vec();
            header.push(format!("t = {:.16e}", self.times[k]));
            let path = dir.join(&name);
            self.field(k).write_csv(&path, &header)?;
            let _ = writeln!(index, "{k},{:.16e},{name}", self.times[k]);
            written.push(path);
        }
        let path = dir.join("index.csv");
        fs::write(&path, index)?;
        written.push(path);
        Ok(written)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let index_path = dir.join("index.csv");
        let text = fs::read_to_string(&index_path)?;
        let parse_err = |message: String| Error::Parse {
            path: index_path.clone(),
            message,
        };
        let mut times = Vec::new();
        let mut fields = Vec::new();
        let mut header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header {
                if line != "step,t,file" {
                    return Err(parse_err(format!("line {}: bad header", lineno + 1)));
                }
                header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(parse_err(format!("line {}: expected 3 columns", lineno + 1)));
            }
            let t: f64 = cols[1]
                .parse()
                .map_err(|e| parse_err(format!("line {}: {e}", lineno + 1)))?;
            times.push(t);
            fields.push(GridField::read_csv(&dir.join(cols[2]))?);
        }
        Self::from_fields(fields, times)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return domain("snapshot times must be finite and strictly increasing");
    }
    Ok(())
}
