//! `key = value` scenario files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field_solver::default_mollifier_index;
use crate::modulation::default_n0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    SinglePeakon,
    PerturbedPeakon,
    MultipeakonExact,
    PeakonTrain,
    MonotonicityAudit,
    LiouvilleProbe,
    EigenSpeedCheck,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::SinglePeakon,
        ScenarioKind::PerturbedPeakon,
        ScenarioKind::MultipeakonExact,
        ScenarioKind::PeakonTrain,
        ScenarioKind::MonotonicityAudit,
        ScenarioKind::LiouvilleProbe,
        ScenarioKind::EigenSpeedCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SinglePeakon => "single_peakon",
            ScenarioKind::PerturbedPeakon => "perturbed_peakon",
            ScenarioKind::MultipeakonExact => "multipeakon_exact",
            ScenarioKind::PeakonTrain => "peakon_train",
            ScenarioKind::MonotonicityAudit => "monotonicity_audit",
            ScenarioKind::LiouvilleProbe => "liouville_probe",
            ScenarioKind::EigenSpeedCheck => "eigen_speed_check",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::SinglePeakon => &["c", "dx", "T"],
            ScenarioKind::PerturbedPeakon | ScenarioKind::LiouvilleProbe => {
                &["c", "theta", "perturbation", "dx", "T"]
            }
            ScenarioKind::MonotonicityAudit => &["c", "perturbation", "dx", "T"],
            ScenarioKind::MultipeakonExact | ScenarioKind::EigenSpeedCheck => &["p", "q", "T"],
            ScenarioKind::PeakonTrain => &["p", "dx", "T"],
        }
    }

    /// Kinds that start from a perturbed peakon.
    pub fn is_perturbed(self) -> bool {
        matches!(
            self,
            ScenarioKind::PerturbedPeakon | ScenarioKind::LiouvilleProbe | ScenarioKind::MonotonicityAudit
        )
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scenario kind `{s}`"))
    }
}

const KEYS: [&str; 21] = [
    "kind",
    "c",
    "theta",
    "perturbation",
    "N",
    "p",
    "q",
    "dx",
    "dt",
    "T",
    "L",
    "R",
    "gamma",
    "n",
    "n0",
    "seed",
    "stride",
    "cfl",
    "z_fraction",
    "output",
    "snapshot_stride",
];

/// Validated scenario. Optional fields left `None` take the documented
/// defaults through the accessor methods.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub c: Option<f64>,
    pub theta: Option<f64>,
    /// Initial H^1 distance from the peakon, as a fraction of `c`.
    pub perturbation: Option<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: f64,
    pub spacing: Option<f64>,
    pub r: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Mollifier index; `0` disables mollification.
    pub n: Option<u32>,
    pub n0: Option<u32>,
    pub seed: u64,
    pub stride: Option<usize>,
    pub cfl: f64,
    pub z_fraction: f64,
    pub output: Option<PathBuf>,
    pub snapshot_stride: Option<usize>,
}

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_SPACING: f64 = 20.0;
pub const DEFAULT_R: [f64; 3] = [5.0, 10.0, 15.0];
pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_Z_FRACTION: f64 = 0.5;
/// Stored steps between written snapshots default to a tenth of the run.
pub const DEFAULT_SNAPSHOTS: usize = 10;

struct Entry {
    line: usize,
    value: String,
}

fn config_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        line,
        message: message.into(),
    })
}

fn number(line: usize, key: &str, text: &str) -> Result<f64> {
    let v: f64 = match text.trim().parse() {
        Ok(v) => v,
        Err(_) => return config_err(line, format!("`{key}`: `{}` is not a number", text.trim())),
    };
    if !v.is_finite() {
        return config_err(line, format!("`{key}`: value {v} is not finite"));
    }
    Ok(v)
}

fn list(line: usize, key: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|s| number(line, key, s)).collect()
}

fn count(line: usize, key: &str, text: &str) -> Result<u64> {
    let v = number(line, key, text)?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return config_err(line, format!("`{key}` must be a non-negative integer, got {v}"));
    }
    Ok(v as u64)
}

impl ScenarioConfig {
    /// Parses and validates a scenario file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&'static str, Entry> = BTreeMap::new();
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return config_err(line, format!("expected `key = value`, found `{content}`"));
            };
            let key = key.trim();
            let Some(known) = KEYS.iter().find(|k| **k == key) else {
                return config_err(line, format!("unknown key `{key}`"));
            };
            if let Some(prev) = entries.get(known) {
                return config_err(line, format!("duplicate key `{key}` (first set on line {})", prev.line));
            }
            entries.insert(
                known,
                Entry {
                    line,
                    value: value.trim().to_string(),
                },
            );
        }
        let Some(kind_entry) = entries.get("kind") else {
            return config_err(last_line.max(1), "missing required key `kind`");
        };
        let kind_line = kind_entry.line;
        let kind: ScenarioKind = match kind_entry.value.parse() {
            Ok(k) => k,
            Err(msg) => return config_err(kind_line, msg),
        };
        for key in kind.required() {
            if !entries.contains_key(key) {
                return config_err(kind_line, format!("missing required key `{key}` for kind {kind}"));
            }
        }
        let real = |key: &str| -> Result<Option<(usize, f64)>> {
            entries
                .get(key)
                .map(|e| number(e.line, key, &e.value).map(|v| (e.line, v)))
                .transpose()
        };
        let reals = |key: &str| -> Result<Option<(usize, Vec<f64>)>> {
            entries
                .get(key)
                .map(|e| list(e.line, key, &e.value).map(|v| (e.line, v)))
                .transpose()
        };
        let int = |key: &str| -> Result<Option<(usize, u64)>> {
            entries
                .get(key)
                .map(|e| count(e.line, key, &e.value).map(|v| (e.line, v)))
                .transpose()
        };
        let positive = |key: &str, v: Option<(usize, f64)>| -> Result<Option<f64>> {
            match v {
                Some((line, x)) if x <= 0.0 => config_err(line, format!("`{key}` must be positive, got {x}")),
                other => Ok(other.map(|(_, x)| x)),
            }
        };

        let c = positive("c", real("c")?)?;
        let theta_entry = real("theta")?;
        if let (Some((line, theta)), Some(c)) = (theta_entry, c) {
            if kind.is_perturbed() && !(theta > 0.0 && theta < c) {
                return config_err(
                    line,
                    format!("asymptotic stability needs 0 < theta < c, got theta = {theta}, c = {c}"),
                );
            }
        }
        let perturbation = positive("perturbation", real("perturbation")?)?;
        let (p, p_line) = match reals("p")? {
            Some((line, v)) => (v, line),
            None => (Vec::new(), 0),
        };
        if let Some(bad) = p.iter().find(|v| **v <= 0.0) {
            return config_err(p_line, format!("peakon amplitudes must be positive, got {bad}"));
        }
        let q = reals("q")?.map(|(_, v)| v).unwrap_or_default();
        if !q.is_empty() && q.len() != p.len() {
            return config_err(
                entries["q"].line,
                format!("`q` has {} entries but `p` has {}", q.len(), p.len()),
            );
        }
        if let Some((line, n)) = int("N")? {
            if !p.is_empty() && n as usize != p.len() {
                return config_err(line, format!("`N = {n}` but `p` has {} entries", p.len()));
            }
        }
        if kind == ScenarioKind::PeakonTrain && p.windows(2).any(|w| w[1] <= w[0]) {
            return config_err(p_line, "peakon_train needs speeds strictly increasing left to right");
        }
        let r = match reals("R")? {
            Some((line, v)) => {
                if v.iter().any(|x| *x <= 0.0) {
                    return config_err(line, "`R` entries must be positive");
                }
                v
            }
            None => DEFAULT_R.to_vec(),
        };
        let gamma = match reals("gamma")? {
            Some((line, v)) => {
                if v.iter().any(|x| *x < 0.0) {
                    return config_err(line, "`gamma` entries must be non-negative");
                }
                v
            }
            None => match c {
                Some(c) => vec![0.0, 0.5 * c],
                None => vec![0.0],
            },
        };
        let z_fraction = match real("z_fraction")? {
            Some((line, z)) if !(z > 0.0 && z < 1.0) => {
                return config_err(line, format!("`z_fraction` must lie in (0, 1), got {z}"))
            }
            Some((_, z)) => z,
            None => DEFAULT_Z_FRACTION,
        };
        let t_final = positive("T", real("T")?)?.expect("T is required for every kind");
        let positive_count = |key: &str| -> Result<Option<usize>> {
            match int(key)? {
                Some((line, 0)) => config_err(line, format!("`{key}` must be at least 1")),
                other => Ok(other.map(|(_, v)| v as usize)),
            }
        };
        Ok(Self {
            kind,
            c,
            theta: theta_entry.map(|(_, v)| v),
            perturbation,
            p,
            q,
            dx: positive("dx", real("dx")?)?,
            dt: positive("dt", real("dt")?)?,
            t_final,
            spacing: positive("L", real("L")?)?,
            r,
            gamma,
            n: int("n")?.map(|(_, v)| v as u32),
            n0: match int("n0")? {
                Some((line, v)) if v < 1 => return config_err(line, "`n0` must be at least 1"),
                other => other.map(|(_, v)| v as u32),
            },
            seed: int("seed")?.map_or(0, |(_, v)| v),
            stride: positive_count("stride")?,
            cfl: positive("cfl", real("cfl")?)?.unwrap_or(DEFAULT_CFL),
            z_fraction,
            output: entries.get("output").map(|e| PathBuf::from(&e.value)),
            snapshot_stride: positive_count("snapshot_stride")?,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(DEFAULT_DT)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing.unwrap_or(DEFAULT_SPACING)
    }

    pub fn n0(&self) -> u32 {
        self.n0.unwrap_or_else(default_n0)
    }

    /// Configured mollifier, or the default for `dx` on mollified kinds.
    pub fn mollifier(&self) -> Result<Option<u32>> {
        match (self.n, self.dx) {
            (Some(0), _) => Ok(None),
            (Some(n), _) => Ok(Some(n)),
            (None, Some(dx)) if matches!(self.kind, ScenarioKind::SinglePeakon | ScenarioKind::PeakonTrain) => {
                default_mollifier_index(dx).map(Some)
            }
            _ => Ok(None),
        }
    }

    /// Every parameter after defaults, one `key = value` per line, in a fixed
    /// order. Embedded in every output file.
    pub fn header_lines(&self) -> Vec<String> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut out = vec![format!("kind = {}", self.kind)];
        let mut opt = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push(format!("{key} = {v}"));
            }
        };
        opt("c", self.c.map(|v| v.to_string()));
        opt("theta", self.theta.map(|v| v.to_string()));
        opt("perturbation", self.perturbation.map(|v| v.to_string()));
        opt("N", (!self.p.is_empty()).then(|| self.p.len().to_string()));
        opt("p", (!self.p.is_empty()).then(|| join(&self.p)));
        opt("q", (!self.q.is_empty()).then(|| join(&self.q)));
        opt("dx", self.dx.map(|v| v.to_string()));
        opt("dt", Some(self.dt().to_string()));
        opt("T", Some(self.t_final.to_string()));
        opt("L", Some(self.spacing().to_string()));
        opt("R", Some(join(&self.r)));
        opt("gamma", Some(join(&self.gamma)));
        opt(
            "n",
            Some(match self.mollifier() {
                Ok(Some(n)) => n.to_string(),
                Ok(None) => "0".to_string(),
                Err(e) => format!("invalid ({e})"),
            }),
        );
        opt("n0", Some(self.n0().to_string()));
        opt("seed", Some(self.seed.to_string()));
        opt("stride", Some(self.stride.map_or("auto".into(), |s| s.to_string())));
        opt("cfl", Some(self.cfl.to_string()));
        opt("z_fraction", Some(self.z_fraction.to_string()));
        opt("output", self.output.as_ref().map(|p| p.display().to_string()));
        opt(
            "snapshot_stride",
            Some(self.snapshot_stride.map_or("auto".into(), |s| s.to_string())),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(err: Error) -> usize {
        match err {
            Error::Config { line, .. } => line,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_single_peakon() {
        let cfg = ScenarioConfig::parse("kind = single_peakon\nc = 1\ndx = 0.02\nT = 10\n").unwrap();
        assert_eq!(cfg.kind, ScenarioKind::SinglePeakon);
        assert_eq!(cfg.c, Some(1.0));
        assert_eq!(cfg.mollifier().unwrap(), Some(25));
        assert_eq!(cfg.cfl, DEFAULT_CFL);
        assert_eq!(cfg.r, DEFAULT_R.to_vec());
        assert_eq!(cfg.gamma, vec![0.0, 0.5]);
        assert_eq!(cfg.seed, 0);
        assert!(cfg.header_lines().iter().any(|l| l == "n = 25"));
    }

    #[test]
    fn theta_must_stay_below_c() {
        let text = "kind = perturbed_peakon\nc = 1\ntheta = 2\nperturbation = 0.05\ndx = 0.02\nT = 40\n";
        let err = ScenarioConfig::parse(text).unwrap_err();
        assert!(err.to_string().contains("theta"));
        assert_eq!(line_of(err), 3);
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = "kind = single_peakon\n# comment\nc = 1\nunknown_key = 3\ndx = 0.02\nT = 1\n";
        assert_eq!(line_of(ScenarioConfig::parse(text).unwrap_err()), 4);
    }

    #[test]
    fn rejects_bad_values() {
        let base = "kind = single_peakon\nc = 1\ndx = 0.02\n";
        assert_eq!(line_of(ScenarioConfig::parse(&format!("{base}T = nan\n")).unwrap_err()), 4);
        assert_eq!(line_of(ScenarioConfig::parse(&format!("{base}T = inf\n")).unwrap_err()), 4);
        assert_eq!(line_of(ScenarioConfig::parse(base).unwrap_err()), 1);
        let dup = format!("{base}T = 1\nc = 2\n");
        assert_eq!(line_of(ScenarioConfig::parse(&dup).unwrap_err()), 5);
        let neg = "kind = multipeakon_exact\np = 1, -2\nq = 0, 1\nT = 1\n";
        assert_eq!(line_of(ScenarioConfig::parse(neg).unwrap_err()), 2);
        let kind = "kind = nope\n";
        assert_eq!(line_of(ScenarioConfig::parse(kind).unwrap_err()), 1);
    }

    #[test]
    fn lists_and_comments() {
        let text = "kind = eigen_speed_check # trailing\np = 1, 2\nq = 5, 0\nT = 60\nN = 2\n";
        let cfg = ScenarioConfig::parse(text).unwrap();
        assert_eq!(cfg.p, vec![1.0, 2.0]);
        assert_eq!(cfg.q, vec![5.0, 0.0]);
        assert_eq!(cfg.dt(), DEFAULT_DT);
        assert!(ScenarioConfig::parse("kind = eigen_speed_check\np = 1, 2\nq = 5\nT = 1\n").is_err());
        assert!(ScenarioConfig::parse("kind = peakon_train\np = 2, 1\ndx = 0.02\nT = 1\n").is_err());
    }
}
