//! Run configuration: command-line flags, TOML config files and presets
//! all resolve to a [`RunConfig`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use odefilter_core::{NoiseModel, PriorSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid {what} '{input}': {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

fn parse_err(what: &'static str, input: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        what,
        input: input.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(what: &'static str, s: &str) -> Result<f64, ConfigError> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| parse_err(what, s, e.to_string()))
}

/// Noise exponent: a number, `inf`, or `q` (the prior order of the run).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Value(f64),
    Infinite,
    PriorOrder,
}

impl Exponent {
    pub fn resolve(&self, q: usize) -> f64 {
        match *self {
            Exponent::Value(p) => p,
            Exponent::Infinite => f64::INFINITY,
            Exponent::PriorOrder => q as f64,
        }
    }
}

/// `zero`, `const:R` or `power:P:K` with `R = K·h^P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseSpec {
    Zero,
    Const(f64),
    Power { p: Exponent, k: f64 },
}

impl NoiseSpec {
    pub fn model(&self, q: usize) -> NoiseModel<f64> {
        match *self {
            NoiseSpec::Zero => NoiseModel::Zero,
            NoiseSpec::Const(r) => NoiseModel::Constant { r },
            NoiseSpec::Power { p, k } => NoiseModel::power_law(k, p.resolve(q)),
        }
    }

    /// `(p, K_R)` columns for output; `p = inf` when `R ≡ 0`.
    pub fn columns(&self, q: usize) -> (f64, f64) {
        match *self {
            NoiseSpec::Zero => (f64::INFINITY, 0.0),
            NoiseSpec::Const(r) => (0.0, r),
            NoiseSpec::Power { p, k } => (p.resolve(q), k),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Zero => write!(f, "zero"),
            NoiseSpec::Const(r) => write!(f, "const:{r:?}"),
            NoiseSpec::Power { p, k } => {
                let p = match p {
                    Exponent::Value(v) => format!("{v:?}"),
                    Exponent::Infinite => "inf".into(),
                    Exponent::PriorOrder => "q".into(),
                };
                write!(f, "power:{p}:{k:?}")
            }
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        const WHAT: &str = "noise spec";
        let parts: Vec<&str> = s.trim().split(':').collect();
        let spec = match parts.as_slice() {
            ["zero"] => NoiseSpec::Zero,
            ["const", r] => NoiseSpec::Const(parse_f64(WHAT, r)?),
            ["power", p, k] => {
                let p = match p.trim() {
                    "inf" | "infinity" => Exponent::Infinite,
                    "q" => Exponent::PriorOrder,
                    v => Exponent::Value(parse_f64(WHAT, v)?),
                };
                NoiseSpec::Power {
                    p,
                    k: parse_f64(WHAT, k)?,
                }
            }
            _ => return Err(parse_err(WHAT, s, "expected zero, const:R or power:P:K")),
        };
        match spec {
            NoiseSpec::Const(r) if !(r >= 0.0 && r.is_finite()) => {
                Err(parse_err(WHAT, s, "R must be finite and non-negative"))
            }
            NoiseSpec::Power { k, .. } if !(k >= 0.0 && k.is_finite()) => {
                Err(parse_err(WHAT, s, "K must be finite and non-negative"))
            }
            NoiseSpec::Power {
                p: Exponent::Value(p),
                ..
            } if !(p >= 0.0) => Err(parse_err(WHAT, s, "P must be non-negative")),
            spec => Ok(spec),
        }
    }
}

impl TryFrom<String> for NoiseSpec {
    type Error = ConfigError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<NoiseSpec> for String {
    fn from(n: NoiseSpec) -> String {
        n.to_string()
    }
}

/// Geometric step-size grid `h_k = h0 / factor^k`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct HGrid {
    pub h0: f64,
    pub factor: f64,
    pub count: usize,
}

impl HGrid {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.h0 / self.factor.powi(k as i32))
            .collect()
    }
}

impl fmt::Display for HGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.h0, self.factor, self.count)
    }
}

impl FromStr for HGrid {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        const WHAT: &str = "h-grid";
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [h0, factor, count] = parts.as_slice() else {
            return Err(parse_err(WHAT, s, "expected H0:FACTOR:COUNT"));
        };
        let grid = HGrid {
            h0: parse_f64(WHAT, h0)?,
            factor: parse_f64(WHAT, factor)?,
            count: count
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| parse_err(WHAT, s, e.to_string()))?,
        };
        if !(grid.h0 > 0.0 && grid.h0.is_finite()) {
            return Err(parse_err(WHAT, s, "H0 must be positive"));
        }
        if !(grid.factor > 1.0 && grid.factor.is_finite()) {
            return Err(parse_err(WHAT, s, "FACTOR must exceed 1"));
        }
        if grid.count == 0 {
            return Err(parse_err(WHAT, s, "the grid is empty"));
        }
        Ok(grid)
    }
}

impl TryFrom<String> for HGrid {
    type Error = ConfigError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<HGrid> for String {
    fn from(g: HGrid) -> String {
        g.to_string()
    }
}

/// `exact` or `perturbed:K0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "String")]
pub enum InitSpec {
    #[default]
    Exact,
    Perturbed(f64),
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Exact => write!(f, "exact"),
            InitSpec::Perturbed(k0) => write!(f, "perturbed:{k0:?}"),
        }
    }
}

impl FromStr for InitSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().split_once(':') {
            None if s.trim() == "exact" => Ok(InitSpec::Exact),
            Some(("perturbed", k0)) => {
                let k0 = parse_f64("init mode", k0)?;
                if !(k0 >= 0.0 && k0.is_finite()) {
                    return Err(parse_err(
                        "init mode",
                        s,
                        "K0 must be finite and non-negative",
                    ));
                }
                Ok(InitSpec::Perturbed(k0))
            }
            _ => Err(parse_err("init mode", s, "expected exact or perturbed:K0")),
        }
    }
}

impl TryFrom<String> for InitSpec {
    type Error = ConfigError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<InitSpec> for String {
    fn from(i: InitSpec) -> String {
        i.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PriorChoice {
    #[default]
    Ibm,
    Ioup,
}

/// Fully resolved configuration of one experiment series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: String,
    pub q: Vec<usize>,
    pub prior: PriorChoice,
    pub theta: f64,
    pub sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_grid: Option<HGrid>,
    pub noise: Vec<NoiseSpec>,
    pub init: InitSpec,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "logistic".into(),
            q: vec![1],
            prior: PriorChoice::Ibm,
            theta: 0.0,
            sigma: 1.0,
            h: None,
            h_grid: None,
            noise: vec![NoiseSpec::Zero],
            init: InitSpec::Exact,
            seed: 0,
            horizon: None,
            out: None,
            svg: None,
        }
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configurations serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let overrides: ConfigArgs =
            toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        overrides.apply(RunConfig::default())
    }

    pub fn prior_spec(&self, q: usize) -> odefilter_core::Result<PriorSpec<f64>> {
        match self.prior {
            PriorChoice::Ibm => PriorSpec::ibm(q, self.sigma),
            PriorChoice::Ioup => PriorSpec::ioup(q, self.theta, self.sigma),
        }
    }

    pub fn init_mode(&self) -> odefilter_core::InitMode {
        match self.init {
            InitSpec::Exact => odefilter_core::InitMode::Exact,
            InitSpec::Perturbed(k0) => odefilter_core::InitMode::Perturbed {
                k0,
                seed: self.seed,
            },
        }
    }

    /// Step sizes of the run: the grid if given, else the single step.
    pub fn step_sizes(&self) -> Vec<f64> {
        match (&self.h_grid, self.h) {
            (Some(g), _) => g.values(),
            (None, Some(h)) => vec![h],
            (None, None) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.q.is_empty() {
            return Err(ConfigError::Invalid("at least one q is required".into()));
        }
        if let Some(q) = self
            .q
            .iter()
            .find(|q| !(1..=odefilter_core::problems::MAX_DERIVATIVE_ORDER).contains(*q))
        {
            return Err(ConfigError::Invalid(format!(
                "q = {q} is outside 1..={}",
                odefilter_core::problems::MAX_DERIVATIVE_ORDER
            )));
        }
        if self.noise.is_empty() {
            return Err(ConfigError::Invalid(
                "at least one noise spec is required".into(),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "theta must be non-negative, got {}",
                self.theta
            )));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ConfigError::Invalid(format!("h must be positive, got {h}")));
            }
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "horizon must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Optional overrides, shared by the command line and config files.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct ConfigArgs {
    /// Problem name: logistic, linear, riccati or constant.
    #[arg(long)]
    pub problem: Option<String>,
    /// Prior order(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub prior: Option<PriorChoice>,
    /// Drift of the IOUP prior.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Diffusion scale of the prior.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Single step size.
    #[arg(long)]
    pub h: Option<f64>,
    /// Geometric step grid H0:FACTOR:COUNT, giving h = H0/FACTOR^k.
    #[arg(long = "h-grid")]
    pub h_grid: Option<HGrid>,
    /// Measurement noise spec(s): zero, const:R or power:P:K (P may be inf or q).
    #[arg(long, value_delimiter = ',')]
    pub noise: Option<Vec<NoiseSpec>>,
    /// Initialization: exact or perturbed:K0.
    #[arg(long)]
    pub init: Option<InitSpec>,
    /// Seed for perturbed initialization.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Final time, overriding the problem default.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG chart output path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

impl ConfigArgs {
    /// Overwrites the fields of `base` that are set here.
    pub fn apply(self, mut base: RunConfig) -> Result<RunConfig, ConfigError> {
        if let Some(v) = self.problem {
            base.problem = v;
        }
        if let Some(v) = self.q {
            base.q = v;
        }
        if let Some(v) = self.prior {
            base.prior = v;
        }
        if let Some(v) = self.theta {
            base.theta = v;
        }
        if let Some(v) = self.sigma {
            base.sigma = v;
        }
        if let Some(v) = self.h {
            base.h = Some(v);
            base.h_grid = None;
        }
        if let Some(v) = self.h_grid {
            base.h_grid = Some(v);
        }
        if let Some(v) = self.noise {
            base.noise = v;
        }
        if let Some(v) = self.init {
            base.init = v;
        }
        if let Some(v) = self.seed {
            base.seed = v;
        }
        if let Some(v) = self.horizon {
            base.horizon = Some(v);
        }
        if let Some(v) = self.out {
            base.out = Some(v);
        }
        if let Some(v) = self.svg {
            base.svg = Some(v);
        }
        base.validate()?;
        Ok(base)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Fields set in `over` take precedence over those set in `self`.
    pub fn merge(self, over: ConfigArgs) -> ConfigArgs {
        ConfigArgs {
            problem: over.problem.or(self.problem),
            q: over.q.or(self.q),
            prior: over.prior.or(self.prior),
            theta: over.theta.or(self.theta),
            sigma: over.sigma.or(self.sigma),
            h: over.h.or(self.h),
            h_grid: over
                .h_grid
                .or(if over.h.is_some() { None } else { self.h_grid }),
            noise: over.noise.or(self.noise),
            init: over.init.or(self.init),
            seed: over.seed.or(self.seed),
            horizon: over.horizon.or(self.horizon),
            out: over.out.or(self.out),
            svg: over.svg.or(self.svg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_specs_parse() {
        assert_eq!("zero".parse::<NoiseSpec>().unwrap(), NoiseSpec::Zero);
        assert_eq!(
            "const:0.5".parse::<NoiseSpec>().unwrap(),
            NoiseSpec::Const(0.5)
        );
        assert_eq!(
            "power:q:1".parse::<NoiseSpec>().unwrap(),
            NoiseSpec::Power {
                p: Exponent::PriorOrder,
                k: 1.0
            }
        );
        let inf: NoiseSpec = "power:inf:3".parse().unwrap();
        assert_eq!(inf.model(1).evaluate(0.1), 0.0);
        assert_eq!(
            "power:0.5:3.73e3"
                .parse::<NoiseSpec>()
                .unwrap()
                .model(1)
                .evaluate(0.25),
            3.73e3 * 0.5
        );
        for bad in [
            "",
            "const",
            "const:-1",
            "power:1",
            "power:x:1",
            "power:1:-2",
            "loud",
        ] {
            assert!(bad.parse::<NoiseSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn noise_specs_round_trip_through_strings() {
        for s in [
            "zero",
            "const:0.25",
            "power:q:1.0",
            "power:inf:2.0",
            "power:0.5:3730.0",
        ] {
            let spec: NoiseSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<NoiseSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn h_grids() {
        let g: HGrid = "0.1:2:6".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[5], 0.1 / 32.0);
        assert!("0.1:2:0".parse::<HGrid>().is_err());
        assert!("0.1:1:4".parse::<HGrid>().is_err());
        assert!("-1:2:4".parse::<HGrid>().is_err());
        assert!("0.1:2".parse::<HGrid>().is_err());
    }

    #[test]
    fn init_specs() {
        assert_eq!("exact".parse::<InitSpec>().unwrap(), InitSpec::Exact);
        assert_eq!(
            "perturbed:0.5".parse::<InitSpec>().unwrap(),
            InitSpec::Perturbed(0.5)
        );
        assert!("perturbed".parse::<InitSpec>().is_err());
        assert!("perturbed:-1".parse::<InitSpec>().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig {
            problem: "linear".into(),
            q: vec![1, 2, 4],
            prior: PriorChoice::Ioup,
            theta: 0.5,
            sigma: 50.0,
            h: None,
            h_grid: Some("0.5:2:8".parse().unwrap()),
            noise: vec![
                NoiseSpec::Zero,
                "power:q:1".parse().unwrap(),
                "const:0.1".parse().unwrap(),
            ],
            init: InitSpec::Perturbed(0.25),
            seed: 42,
            horizon: Some(2.0),
            out: Some("out.csv".into()),
            svg: None,
        };
        let text = cfg.to_toml();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(
            RunConfig::from_toml(&RunConfig::default().to_toml()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigArgs::from_toml("problem = \"riccati\"\nsigma = 3.0\nh = 0.1\n").unwrap();
        let flags = ConfigArgs {
            sigma: Some(5.0),
            h_grid: Some("0.1:2:4".parse().unwrap()),
            ..Default::default()
        };
        let cfg = file.merge(flags).apply(RunConfig::default()).unwrap();
        assert_eq!(cfg.problem, "riccati");
        assert_eq!(cfg.sigma, 5.0);
        assert_eq!(cfg.step_sizes().len(), 4);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::from_toml("colour = 3").is_err());
        assert!(RunConfig::from_toml("noise = [\"loud\"]").is_err());
        assert!(RunConfig::from_toml("sigma = -1.0").is_err());
        assert!(RunConfig::from_toml("q = [0]").is_err());
    }
}
