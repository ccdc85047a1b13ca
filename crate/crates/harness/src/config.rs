//! Run settings: built-in defaults, then a `key=value` file, then command-line
//! flags, each layer overriding the previous one.

use crate::cases::{CaseName, ParamOverrides};
use crate::study::{gauge_name, parse_gauge, SolverKind};
use crate::HarnessError;
use spb_core::fespace::PressureGauge;
use std::path::PathBuf;
use std::str::FromStr;

/// Keys accepted in config files; flags use the same names.
pub const KEYS: [&str; 16] = [
    "case", "mu", "gamma", "beta", "eps", "k0", "k1", "degree", "levels", "theta", "max-dofs", "out-dir", "solver",
    "gauge", "seed", "threads",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: CaseName,
    /// One value per series; `converge` accepts several.
    pub mu: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub eps: Option<f64>,
    pub k0: Option<f64>,
    pub k1: Option<f64>,
    pub degree: usize,
    pub levels: Option<usize>,
    pub theta: f64,
    pub max_dofs: Option<usize>,
    pub out_dir: PathBuf,
    pub solver: SolverKind,
    /// `None` keeps the case's own gauge.
    pub gauge: Option<PressureGauge>,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: CaseName::ConvergenceSquare,
            mu: None,
            gamma: None,
            beta: None,
            eps: None,
            k0: None,
            k1: None,
            degree: 1,
            levels: None,
            theta: 0.5,
            max_dofs: None,
            out_dir: PathBuf::from("out"),
            solver: SolverKind::Newton,
            gauge: None,
            seed: 0,
            threads: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value.trim().parse().map_err(|_| HarnessError::Usage(format!("invalid value `{value}` for `{key}`")))
}

impl RunConfig {
    /// Sets one setting from its textual form. `max_dofs` and `out_dir` are
    /// accepted as spellings of `max-dofs` and `out-dir`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let v = value.trim();
        match key.trim().replace('_', "-").as_str() {
            "case" => self.case = v.parse()?,
            "mu" => {
                let list = v.split(',').map(|s| parse(key, s)).collect::<Result<Vec<f64>, _>>()?;
                self.mu = Some(list);
            }
            "gamma" => self.gamma = Some(parse(key, v)?),
            "beta" => self.beta = Some(parse(key, v)?),
            "eps" => self.eps = Some(parse(key, v)?),
            "k0" => self.k0 = Some(parse(key, v)?),
            "k1" => self.k1 = Some(parse(key, v)?),
            "degree" => self.degree = parse(key, v)?,
            "levels" => self.levels = Some(parse(key, v)?),
            "theta" => self.theta = parse(key, v)?,
            "max-dofs" => self.max_dofs = Some(parse(key, v)?),
            "out-dir" => self.out_dir = PathBuf::from(v),
            "solver" => self.solver = v.parse()?,
            "gauge" => self.gauge = Some(parse_gauge(v)?),
            "seed" => self.seed = parse(key, v)?,
            "threads" => self.threads = Some(parse(key, v)?),
            _ => return Err(HarnessError::Usage(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Applies a config file: one `key=value` per line, `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), HarnessError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("config line {}: expected key=value", n + 1)))?;
            self.set(k, v).map_err(|e| HarnessError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn overrides(&self, mu: Option<f64>) -> ParamOverrides {
        ParamOverrides { mu, gamma: self.gamma, beta: self.beta, eps: self.eps, k0: self.k0, k1: self.k1 }
    }

    /// Values of μ to run: the configured list, or the case default.
    pub fn mu_values(&self) -> Vec<Option<f64>> {
        match &self.mu {
            Some(list) => list.iter().map(|&m| Some(m)).collect(),
            None => vec![None],
        }
    }

    /// Settings as `key=value` pairs for run metadata. Thread count is left
    /// out so that outputs do not depend on it.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "default".to_string(), |v| v.to_string());
        let mut m = vec![
            ("case".to_string(), self.case.to_string()),
            (
                "mu".to_string(),
                self.mu.as_ref().map_or_else(
                    || "default".to_string(),
                    |l| l.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
                ),
            ),
        ];
        for (k, v) in [("gamma", self.gamma), ("beta", self.beta), ("eps", self.eps), ("k0", self.k0), ("k1", self.k1)] {
            m.push((k.to_string(), opt(v)));
        }
        m.push(("degree".into(), self.degree.to_string()));
        m.push(("levels".into(), self.levels.map_or_else(|| "default".into(), |l| l.to_string())));
        m.push(("theta".into(), self.theta.to_string()));
        m.push(("max-dofs".into(), self.max_dofs.map_or_else(|| "default".into(), |l| l.to_string())));
        m.push(("solver".into(), self.solver.to_string()));
        m.push(("gauge".into(), self.gauge.map_or("default", gauge_name).to_string()));
        m.push(("seed".into(), self.seed.to_string()));
        m
    }
}
