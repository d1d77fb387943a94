//! Line-oriented run configuration: `section.key = value`, `#` comments.
//!
//! ```text
//! grid.n_cells = 64, 64        # one entry per axis
//! grid.length = 4, 4
//! params.chi = 1
//! params.xi = 2
//! params.delta = 1
//! params.K = 1
//! params.gamma = 1
//! params.alpha = 0.5
//! params.l = 1
//! params.n = 2                 # optional, defaults to the grid dimension
//! initial.u.profile = gaussian-bump   # constant | cosine-bump | gaussian-bump
//! initial.u.base = 1                  # optional, default 0
//! initial.u.amplitude = 2
//! initial.u.center = 2, 2             # optional, default domain center
//! initial.u.width = 0.5               # required for bumps
//! initial.v.profile = constant
//! initial.v.amplitude = 1
//! run.t_end = 5
//! run.output_interval = 0.1
//! run.dt_safety = 0.4                 # optional
//! run.positivity = clip               # optional: clip | upwind
//! run.blowup_factor = 1000            # optional
//! run.p_diag = 2                      # optional
//! run.elliptic_tol = 1e-10            # optional
//! run.elliptic_max_iter = 40960       # optional
//! output.snapshot_every = 0           # optional, records between snapshots
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::elliptic::SolverOptions;
use crate::grid::{GridError, GridSpec, ScalarField};
use crate::kinetics::ModelParams;
use crate::stepper::{default_p_diag, PositivityMode, RunConfig, StepError};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("line {line}: bad value for `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("invalid grid: {0}")]
    Grid(#[from] GridError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

const KNOWN_KEYS: &[&str] = &[
    "grid.dim",
    "grid.n_cells",
    "grid.length",
    "params.chi",
    "params.xi",
    "params.delta",
    "params.K",
    "params.gamma",
    "params.alpha",
    "params.l",
    "params.n",
    "run.t_end",
    "run.output_interval",
    "run.dt_safety",
    "run.positivity",
    "run.blowup_factor",
    "run.p_diag",
    "run.elliptic_tol",
    "run.elliptic_max_iter",
    "output.snapshot_every",
];

const PROFILE_KEYS: &[&str] = &["profile", "base", "amplitude", "center", "width"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Constant,
    CosineBump,
    GaussianBump,
}

impl FromStr for ProfileKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(Self::Constant),
            "cosine-bump" => Ok(Self::CosineBump),
            "gaussian-bump" => Ok(Self::GaussianBump),
            other => Err(format!(
                "unknown profile `{other}` (expected constant, cosine-bump or gaussian-bump)"
            )),
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Constant => "constant",
            Self::CosineBump => "cosine-bump",
            Self::GaussianBump => "gaussian-bump",
        })
    }
}

/// Analytic initial profile `base + amplitude * shape(|x - center|)`.
///
/// `constant` has shape 1; `cosine-bump` is `(1 + cos(pi r / width)) / 2`
/// inside radius `width` and 0 outside; `gaussian-bump` is
/// `exp(-r^2 / (2 width^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub kind: ProfileKind,
    pub base: f64,
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl Profile {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            kind: ProfileKind::Constant,
            base: 0.0,
            amplitude: value,
            center: vec![0.0; dim],
            width: 1.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt();
        let shape = match self.kind {
            ProfileKind::Constant => 1.0,
            ProfileKind::CosineBump if r < self.width => 0.5 * (1.0 + (PI * r / self.width).cos()),
            ProfileKind::CosineBump => 0.0,
            ProfileKind::GaussianBump => (-r * r / (2.0 * self.width * self.width)).exp(),
        };
        self.base + self.amplitude * shape
    }

    pub fn sample(&self, grid: &GridSpec) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_cells: Vec<usize>,
    pub length: Vec<f64>,
    pub params: ModelParams,
    pub u0: Profile,
    pub v0: Profile,
    pub t_end: f64,
    pub output_interval: f64,
    pub dt_safety: f64,
    pub positivity: PositivityMode,
    pub blowup_factor: f64,
    pub p_diag: f64,
    pub elliptic_tol: f64,
    pub elliptic_max_iter: Option<usize>,
    pub snapshot_every: usize,
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.0.get(key)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|e| {
                e.value.parse::<T>().map_err(|err| ConfigError::Value {
                    line: e.line,
                    key: key.to_string(),
                    msg: err.to_string(),
                })
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(e) = self.raw(key) else {
            return Ok(None);
        };
        e.value
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>().map_err(|err| ConfigError::Value {
                    line: e.line,
                    key: key.to_string(),
                    msg: err.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn require_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.list(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() || !key.contains('.') {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        }
        let known = KNOWN_KEYS.contains(&key)
            || ["initial.u.", "initial.v."].iter().any(|prefix| {
                key.strip_prefix(prefix)
                    .is_some_and(|rest| PROFILE_KEYS.contains(&rest))
            });
        if !known {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        let entry = Entry {
            line,
            value: value.to_string(),
        };
        if map.insert(key.to_string(), entry).is_some() {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
    }
    Ok(Entries(map))
}

fn parse_positivity(s: &str) -> Result<PositivityMode, String> {
    match s {
        "clip" => Ok(PositivityMode::Clip),
        "upwind" => Ok(PositivityMode::Upwind),
        other => Err(format!("unknown positivity mode `{other}` (expected clip or upwind)")),
    }
}

fn parse_profile(e: &Entries, field: &str, length: &[f64]) -> Result<Profile, ConfigError> {
    let key = |k: &str| format!("initial.{field}.{k}");
    let kind: ProfileKind = e.require(&key("profile"))?;
    let amplitude: f64 = e.require(&key("amplitude"))?;
    let base: f64 = e.get(&key("base"))?.unwrap_or(0.0);
    let center: Vec<f64> = e
        .list(&key("center"))?
        .unwrap_or_else(|| length.iter().map(|l| l / 2.0).collect());
    if center.len() != length.len() {
        return Err(ConfigError::Invalid(format!(
            "`{}` needs {} entries",
            key("center"),
            length.len()
        )));
    }
    let width: f64 = match kind {
        ProfileKind::Constant => e.get(&key("width"))?.unwrap_or(1.0),
        _ => e.require(&key("width"))?,
    };
    if !(width > 0.0) {
        return Err(ConfigError::Invalid(format!("`{}` must be positive", key("width"))));
    }
    Ok(Profile {
        kind,
        base,
        amplitude,
        center,
        width,
    })
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let e = tokenize(text)?;
        let n_cells: Vec<usize> = e.require_list("grid.n_cells")?;
        let dim = n_cells.len();
        if let Some(d) = e.get::<usize>("grid.dim")? {
            if d != dim {
                return Err(ConfigError::Invalid(format!(
                    "grid.dim = {d} but grid.n_cells has {dim} entries"
                )));
            }
        }
        let mut length: Vec<f64> = e.require_list("grid.length")?;
        if length.len() == 1 && dim == 2 {
            length.push(length[0]);
        }
        GridSpec::new(&n_cells, &length)?;

        let params = ModelParams {
            chi: e.require("params.chi")?,
            xi: e.require("params.xi")?,
            delta: e.require("params.delta")?,
            k: e.require("params.K")?,
            gamma: e.require("params.gamma")?,
            alpha: e.require("params.alpha")?,
            l: e.require("params.l")?,
            n: e.get("params.n")?.unwrap_or(dim as u32),
        };
        params
            .validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;

        let config = Self {
            u0: parse_profile(&e, "u", &length)?,
            v0: parse_profile(&e, "v", &length)?,
            t_end: e.require("run.t_end")?,
            output_interval: e.require("run.output_interval")?,
            dt_safety: e.get("run.dt_safety")?.unwrap_or(0.4),
            positivity: match e.raw("run.positivity") {
                None => PositivityMode::Clip,
                Some(entry) => parse_positivity(&entry.value).map_err(|msg| ConfigError::Value {
                    line: entry.line,
                    key: "run.positivity".into(),
                    msg,
                })?,
            },
            blowup_factor: e.get("run.blowup_factor")?.unwrap_or(1e3),
            p_diag: e.get("run.p_diag")?.unwrap_or(default_p_diag(params.n)),
            elliptic_tol: e.get("run.elliptic_tol")?.unwrap_or(1e-10),
            elliptic_max_iter: e.get("run.elliptic_max_iter")?,
            snapshot_every: e.get("output.snapshot_every")?.unwrap_or(0),
            n_cells,
            length,
            params,
        };
        config.build()?;
        Ok(config)
    }

    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        Ok(GridSpec::new(&self.n_cells, &self.length)?)
    }

    /// Samples the initial profiles and assembles a validated [`RunConfig`].
    pub fn build(&self) -> Result<RunConfig, ConfigError> {
        let grid = self.grid()?;
        let u0 = self.u0.sample(&grid);
        let v0 = self.v0.sample(&grid);
        let mut rc = RunConfig::new(self.params, u0, v0, self.t_end);
        rc.output_interval = self.output_interval;
        rc.dt_safety = self.dt_safety;
        rc.positivity = self.positivity;
        rc.blowup_factor = self.blowup_factor;
        rc.p_diag = self.p_diag;
        rc.elliptic = SolverOptions {
            tol: self.elliptic_tol,
            max_iter: self.elliptic_max_iter,
        };
        rc.validate().map_err(|err| match err {
            StepError::Config(msg) => ConfigError::Invalid(msg),
            other => ConfigError::Invalid(other.to_string()),
        })?;
        Ok(rc)
    }

    /// Canonical text form; parsing it yields `self` again.
    pub fn to_text(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let cells: Vec<String> = self.n_cells.iter().map(usize::to_string).collect();
        let p = &self.params;
        let _ = writeln!(s, "grid.n_cells = {}", cells.join(", "));
        let _ = writeln!(s, "grid.length = {}", list(&self.length));
        for (k, v) in [
            ("chi", p.chi),
            ("xi", p.xi),
            ("delta", p.delta),
            ("K", p.k),
            ("gamma", p.gamma),
            ("alpha", p.alpha),
            ("l", p.l),
        ] {
            let _ = writeln!(s, "params.{k} = {v}");
        }
        let _ = writeln!(s, "params.n = {}", p.n);
        for (name, prof) in [("u", &self.u0), ("v", &self.v0)] {
            let _ = writeln!(s, "initial.{name}.profile = {}", prof.kind);
            let _ = writeln!(s, "initial.{name}.base = {}", prof.base);
            let _ = writeln!(s, "initial.{name}.amplitude = {}", prof.amplitude);
            let _ = writeln!(s, "initial.{name}.center = {}", list(&prof.center));
            let _ = writeln!(s, "initial.{name}.width = {}", prof.width);
        }
        let _ = writeln!(s, "run.t_end = {}", self.t_end);
        let _ = writeln!(s, "run.output_interval = {}", self.output_interval);
        let _ = writeln!(s, "run.dt_safety = {}", self.dt_safety);
        let mode = match self.positivity {
            PositivityMode::Clip => "clip",
            PositivityMode::Upwind => "upwind",
        };
        let _ = writeln!(s, "run.positivity = {mode}");
        let _ = writeln!(s, "run.blowup_factor = {}", self.blowup_factor);
        let _ = writeln!(s, "run.p_diag = {}", self.p_diag);
        let _ = writeln!(s, "run.elliptic_tol = {}", self.elliptic_tol);
        if let Some(m) = self.elliptic_max_iter {
            let _ = writeln!(s, "run.elliptic_max_iter = {m}");
        }
        let _ = writeln!(s, "output.snapshot_every = {}", self.snapshot_every);
        s
    }

    /// `(key, value)` pairs echoed into output headers.
    pub fn metadata(&self) -> Vec<(String, String)> {
        self.to_text()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }
}
