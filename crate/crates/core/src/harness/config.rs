//! Flat `key = value` experiment configuration with `--key value` overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stochgen::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Uniqueness,
    Counterexample,
    Reflect,
    Tails,
    Excursions,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Uniqueness,
        Experiment::Counterexample,
        Experiment::Reflect,
        Experiment::Tails,
        Experiment::Excursions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Uniqueness => "uniqueness",
            Experiment::Counterexample => "counterexample",
            Experiment::Reflect => "reflect",
            Experiment::Tails => "tails",
            Experiment::Excursions => "excursions",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Every knob of every experiment. Fields an experiment does not read are
/// still echoed in its report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub replicas: u64,
    pub grid: GridSpec,
    pub kappa: f64,
    pub lambda_list: Vec<f64>,
    pub mesh_list: Vec<f64>,
    pub beta_exponent: f64,
    pub x_levels: Vec<f64>,
    pub output_dir: PathBuf,
    /// Local-time level at which excursion counting stops.
    pub epsilon: f64,
    /// Longest simulated horizon (tail checks, excursion search).
    pub horizon: f64,
}

pub const KEYS: [&str; 13] = [
    "experiment",
    "seed",
    "replicas",
    "t_end",
    "n_steps",
    "kappa",
    "lambda_list",
    "mesh_list",
    "beta_exponent",
    "x_levels",
    "output_dir",
    "epsilon",
    "horizon",
];

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

impl ExperimentConfig {
    /// The settings used by the acceptance suite.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            seed: 0,
            replicas: 100,
            grid: GridSpec {
                t_end: 1.0,
                n_steps: 1024,
            },
            kappa: 12.0,
            lambda_list: vec![0.0, 1.0],
            mesh_list: Vec::new(),
            beta_exponent: 0.75,
            x_levels: vec![2.0, 4.0, 6.0],
            output_dir: PathBuf::from(format!("out/{experiment}")),
            epsilon: 1.0,
            horizon: 100.0,
        };
        match experiment {
            Experiment::Uniqueness => Self {
                replicas: 200,
                mesh_list: dyadic(10, 14),
                ..base
            },
            Experiment::Counterexample => Self {
                replicas: 100,
                mesh_list: dyadic(14, 16),
                ..base
            },
            Experiment::Reflect => Self {
                replicas: 1000,
                grid: GridSpec {
                    t_end: 1.0,
                    n_steps: 10_000,
                },
                ..base
            },
            Experiment::Tails => Self {
                replicas: 100_000,
                ..base
            },
            Experiment::Excursions => Self {
                replicas: 200,
                grid: GridSpec {
                    t_end: 4.0,
                    n_steps: 1024,
                },
                mesh_list: dyadic(14, 16),
                horizon: 256.0,
                ..base
            },
        }
    }

    /// Parses a configuration file; the `experiment` key is required.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let experiment = pairs
            .iter()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| Error::Config("missing key \"experiment\"".into()))?
            .1
            .parse()?;
        let mut cfg = Self::defaults(experiment);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Defaults for `experiment` updated by a configuration file, which may
    /// omit the `experiment` key but must not contradict it.
    pub fn load(experiment: Experiment, text: &str) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("key {key:?}: {what} (got {value:?})"));
        if value.contains(['\n', '\r']) {
            return Err(bad("line breaks are not allowed"));
        }
        match key {
            "experiment" => {
                let e: Experiment = value.parse()?;
                if e != self.experiment {
                    return Err(Error::Config(format!(
                        "experiment {e} conflicts with the selected experiment {}",
                        self.experiment
                    )));
                }
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| bad("expected an unsigned integer"))?
            }
            "replicas" => {
                self.replicas = value
                    .parse()
                    .map_err(|_| bad("expected an unsigned integer"))?
            }
            "t_end" => {
                self.grid.t_end = parse_real(value).ok_or_else(|| bad("expected a real number"))?
            }
            "n_steps" => {
                self.grid.n_steps = value
                    .parse()
                    .map_err(|_| bad("expected an unsigned integer"))?
            }
            "kappa" => {
                self.kappa = parse_real(value).ok_or_else(|| bad("expected a real number"))?
            }
            "lambda_list" => {
                self.lambda_list =
                    parse_list(value).ok_or_else(|| bad("expected a comma-separated list"))?
            }
            "mesh_list" => {
                self.mesh_list =
                    parse_list(value).ok_or_else(|| bad("expected a comma-separated list"))?
            }
            "beta_exponent" => {
                self.beta_exponent =
                    parse_real(value).ok_or_else(|| bad("expected a real number"))?
            }
            "x_levels" => {
                self.x_levels =
                    parse_list(value).ok_or_else(|| bad("expected a comma-separated list"))?
            }
            "output_dir" => {
                if value.is_empty() {
                    return Err(bad("expected a path"));
                }
                self.output_dir = PathBuf::from(value)
            }
            "epsilon" => {
                self.epsilon = parse_real(value).ok_or_else(|| bad("expected a real number"))?
            }
            "horizon" => {
                self.horizon = parse_real(value).ok_or_else(|| bad("expected a real number"))?
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `--key value` / `--key=value` pairs. Dashes in keys stand for
    /// underscores and `--out` is short for `--output_dir`.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, args: &[S]) -> Result<()> {
        let mut it = args.iter().map(AsRef::as_ref);
        while let Some(arg) = it.next() {
            let flag = arg
                .strip_prefix("--")
                .ok_or_else(|| Error::Config(format!("expected --key, found {arg:?}")))?;
            let (key, value) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| Error::Config(format!("missing value for --{flag}")))?;
                    (flag.to_string(), v.to_string())
                }
            };
            let key = key.replace('-', "_");
            let key = if key == "out" {
                "output_dir".to_string()
            } else {
                key
            };
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.replicas < 1 {
            return fail("replicas must be >= 1".into());
        }
        if !(self.grid.t_end > 0.0 && self.grid.t_end.is_finite()) {
            return fail(format!(
                "t_end must be positive and finite, got {}",
                self.grid.t_end
            ));
        }
        if self.grid.n_steps < 2 {
            return fail(format!("n_steps must be >= 2, got {}", self.grid.n_steps));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return fail(format!(
                "kappa must be a finite number >= 0, got {}",
                self.kappa
            ));
        }
        if self.mesh_list.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return fail("mesh_list entries must be positive".into());
        }
        if self.mesh_list.windows(2).any(|w| !(w[1] < w[0])) {
            return fail("mesh_list must be strictly decreasing".into());
        }
        if self.lambda_list.iter().any(|l| !l.is_finite()) {
            return fail("lambda_list entries must be finite".into());
        }
        if self.x_levels.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return fail("x_levels entries must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return fail(format!("horizon must be positive, got {}", self.horizon));
        }
        let needs_meshes = |cfg: &Self| {
            if cfg.mesh_list.is_empty() {
                return fail(format!("{} needs a non-empty mesh_list", cfg.experiment));
            }
            if cfg.mesh_list[0] > cfg.grid.t_end {
                return fail(format!(
                    "mesh {} exceeds t_end {}",
                    cfg.mesh_list[0], cfg.grid.t_end
                ));
            }
            Ok(())
        };
        match self.experiment {
            Experiment::Uniqueness => {
                needs_meshes(self)?;
                if self.lambda_list.is_empty() {
                    return fail("uniqueness needs a non-empty lambda_list".into());
                }
            }
            Experiment::Counterexample => {
                needs_meshes(self)?;
                let finest = *self.mesh_list.last().unwrap();
                for &m in &self.mesh_list {
                    let ratio = m / finest;
                    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                        return fail(format!(
                            "mesh {m} is not a multiple of the finest mesh {finest}"
                        ));
                    }
                }
            }
            Experiment::Reflect => {}
            Experiment::Tails => {
                if !(self.beta_exponent > 0.5 && self.beta_exponent < 1.0) {
                    return fail(format!(
                        "beta_exponent must lie in (1/2, 1), got {}",
                        self.beta_exponent
                    ));
                }
                if self.x_levels.is_empty() {
                    return fail("tails needs a non-empty x_levels".into());
                }
            }
            Experiment::Excursions => {
                needs_meshes(self)?;
                if self.horizon < self.grid.t_end {
                    return fail(format!(
                        "horizon {} is shorter than t_end {}",
                        self.horizon, self.grid.t_end
                    ));
                }
            }
        }
        Ok(())
    }

    /// The configuration as a file that [`ExperimentConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        format!(
            "experiment = {}\nseed = {}\nreplicas = {}\nt_end = {}\nn_steps = {}\nkappa = {}\nlambda_list = {}\n\
             mesh_list = {}\nbeta_exponent = {}\nx_levels = {}\noutput_dir = {}\nepsilon = {}\nhorizon = {}\n",
            self.experiment,
            self.seed,
            self.replicas,
            self.grid.t_end,
            self.grid.n_steps,
            self.kappa,
            list(&self.lambda_list),
            list(&self.mesh_list),
            self.beta_exponent,
            list(&self.x_levels),
            self.output_dir.display(),
            self.epsilon,
            self.horizon,
        )
    }
}

/// Splits a configuration text into `(key, value)` pairs. Blank lines and
/// lines starting with `#` are skipped; a key may appear only once.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key {k:?}", no + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::Config(format!(
                "line {}: duplicate key {k:?}",
                no + 1
            )));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// A decimal number or a power `b^e`, e.g. `2^-10`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let x = match s.split_once('^') {
        Some((b, e)) => b
            .trim()
            .parse::<f64>()
            .ok()?
            .powf(e.trim().parse::<f64>().ok()?),
        None => s.parse::<f64>().ok()?,
    };
    x.is_finite().then_some(x)
}

/// Comma-separated reals; the empty string is the empty list.
pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(parse_real).collect()
}
