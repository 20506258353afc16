use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::learners::{AlgorithmKind, Overrides};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Quadratic,
    Portfolio,
    MatrixCompletion,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 3] = [
        ExperimentKind::Quadratic,
        ExperimentKind::Portfolio,
        ExperimentKind::MatrixCompletion,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Quadratic => "quadratic",
            ExperimentKind::Portfolio => "portfolio",
            ExperimentKind::MatrixCompletion => "matrix_completion",
        }
    }

    /// Default problem size: `n = 10` quadratic, 100 stocks, `20 × 20` matrices.
    pub fn default_n(&self) -> usize {
        match self {
            ExperimentKind::Quadratic => 10,
            ExperimentKind::Portfolio => 100,
            ExperimentKind::MatrixCompletion => 20,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "quadratic" => Ok(ExperimentKind::Quadratic),
            "portfolio" => Ok(ExperimentKind::Portfolio),
            "matrix_completion" | "matrix" => Ok(ExperimentKind::MatrixCompletion),
            other => Err(Error::Config(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub algorithms: Vec<AlgorithmKind>,
    pub n: usize,
    /// Rows of the quadratic experiment's constraint matrix.
    pub m: usize,
    /// Rank parameter and nuclear-norm radius of the matrix experiment.
    pub k: usize,
    /// Horizon `T`.
    pub t: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    pub anytime: bool,
    /// Price table for the portfolio experiment; synthetic ratios when absent.
    pub prices: Option<PathBuf>,
    /// Sample count for the `M`, `G` estimates.
    pub bound_samples: usize,
    pub check_feasibility: bool,
    pub overrides: Overrides,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            algorithms: AlgorithmKind::ALL.to_vec(),
            n: experiment.default_n(),
            m: 5,
            k: 18,
            t: 10_000,
            repetitions: 50,
            base_seed: 0,
            anytime: false,
            prices: None,
            bound_samples: 10_000,
            check_feasibility: true,
            overrides: Overrides::default(),
            out: PathBuf::from("results"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.t == 0 {
            return fail("t must be at least 1".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms selected".into());
        }
        if self.bound_samples == 0 {
            return fail("bound_samples must be at least 1".into());
        }
        if self.experiment == ExperimentKind::MatrixCompletion && (self.k == 0 || self.k > self.n) {
            return fail(format!(
                "matrix completion needs 1 ≤ k ≤ n (k = {}, n = {})",
                self.k, self.n
            ));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.algorithms.iter().find(|a| !seen.insert(**a)) {
            return fail(format!("algorithm {dup} listed twice"));
        }
        Ok(())
    }

    /// Reads a flat `key = value` file. Keys mirror the field names; the
    /// schedule overrides (`c`, `eta`, `delta`, `sigma_exponent`, `fkm_eta`,
    /// `fkm_delta`, `noise_std`) sit at top level too.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.into_config()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::new(ExperimentKind::Quadratic)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AlgorithmList {
    Csv(String),
    List(Vec<String>),
}

impl AlgorithmList {
    fn parse(self) -> Result<Vec<AlgorithmKind>> {
        let names = match self {
            AlgorithmList::Csv(s) => s.split(',').map(str::to_string).collect(),
            AlgorithmList::List(v) => v,
        };
        names
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse())
            .collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    algorithms: Option<AlgorithmList>,
    n: Option<usize>,
    m: Option<usize>,
    k: Option<usize>,
    t: Option<usize>,
    repetitions: Option<usize>,
    base_seed: Option<u64>,
    anytime: Option<bool>,
    prices: Option<PathBuf>,
    bound_samples: Option<usize>,
    check_feasibility: Option<bool>,
    out: Option<PathBuf>,
    c: Option<f64>,
    eta: Option<f64>,
    delta: Option<f64>,
    sigma_exponent: Option<f64>,
    fkm_eta: Option<f64>,
    fkm_delta: Option<f64>,
    noise_std: Option<f64>,
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        let experiment = match &self.experiment {
            Some(s) => s.parse()?,
            None => ExperimentKind::Quadratic,
        };
        let mut cfg = ExperimentConfig::new(experiment);
        if let Some(a) = self.algorithms {
            cfg.algorithms = a.parse()?;
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        set!(
            n,
            m,
            k,
            t,
            repetitions,
            base_seed,
            anytime,
            bound_samples,
            check_feasibility,
            out
        );
        cfg.prices = self.prices;
        cfg.overrides = Overrides {
            c: self.c,
            eta: self.eta,
            delta: self.delta,
            sigma_exponent: self.sigma_exponent,
            fkm_eta: self.fkm_eta,
            fkm_delta: self.fkm_delta,
            noise_std: self.noise_std,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
