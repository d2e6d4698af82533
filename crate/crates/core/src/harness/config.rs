use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orlicz::YoungFunction;
use crate::stochastic::{feedback_integral, DiagonalModel, StepIntegrand, WienerIncrements};

/// Below this many replicas a run is a smoke pass: assertions become warnings.
pub const SMOKE_REPLICAS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    MomentGrowth,
    TailBound,
    AxiomGauss,
    SolutionMapContinuity,
    RefinementStability,
    LevyModulus,
    DetconvRatio,
    EmbeddingChecks,
    ConditionalIncrement,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::MomentGrowth,
        ExperimentId::TailBound,
        ExperimentId::AxiomGauss,
        ExperimentId::SolutionMapContinuity,
        ExperimentId::RefinementStability,
        ExperimentId::LevyModulus,
        ExperimentId::DetconvRatio,
        ExperimentId::EmbeddingChecks,
        ExperimentId::ConditionalIncrement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::MomentGrowth => "moment_growth",
            ExperimentId::TailBound => "tail_bound",
            ExperimentId::AxiomGauss => "axiom_gauss",
            ExperimentId::SolutionMapContinuity => "solution_map_continuity",
            ExperimentId::RefinementStability => "refinement_stability",
            ExperimentId::LevyModulus => "levy_modulus",
            ExperimentId::DetconvRatio => "detconv_ratio",
            ExperimentId::EmbeddingChecks => "embedding_checks",
            ExperimentId::ConditionalIncrement => "conditional_increment",
        }
    }

    /// Default tolerances, overridable through `tol.<name>` keys.
    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            ExperimentId::MomentGrowth => &[("flatness", 1.5), ("band", 1.5), ("sweep_drift", 0.10), ("refit", 0.20)],
            ExperimentId::TailBound => &[
                ("r_squared", 0.95),
                ("halving", 0.25),
                ("refit", 0.20),
                ("window_lo", 1e-3),
                ("window_hi", 0.5),
            ],
            ExperimentId::AxiomGauss => &[("factor", 10.0), ("consistency", 1e-10)],
            ExperimentId::SolutionMapContinuity => &[
                ("halving", 0.30),
                ("inversions", 1.0),
                ("quantile_slack", 0.20),
                ("refit", 0.20),
                ("se_multiple", 3.0),
            ],
            ExperimentId::RefinementStability => &[
                ("drift", 0.15),
                ("holder_lo", 0.7),
                ("holder_hi", 1.3),
                ("besov_lo", 0.6),
                ("besov_hi", 1.5),
            ],
            ExperimentId::LevyModulus => &[
                ("band_lo", 0.85),
                ("band_hi", 1.3),
                ("coverage", 0.95),
                ("min_replicas", 200.0),
            ],
            ExperimentId::DetconvRatio => &[("drift", 0.20), ("spread", 10.0)],
            ExperimentId::EmbeddingChecks => &[("grr_slack", 1e-12), ("refit", 0.20), ("drift", 0.20)],
            ExperimentId::ConditionalIncrement => &[("se_multiple", 3.0), ("refit", 0.20)],
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| {
            let known: Vec<&str> = Self::ALL.iter().map(|id| id.as_str()).collect();
            Error::Config(format!(
                "unknown experiment `{s}`; expected one of {}",
                known.join(", ")
            ))
        })
    }
}

/// Deterministic integrands, each with Hilbert-Schmidt size `scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrandPreset {
    /// `scale / sqrt(d) * Id`.
    Constant,
    /// The constant preset on `[0, 1/2)`, zero afterwards.
    Indicator,
    /// `diag(1/k)` normalised to Frobenius norm `scale`.
    Decay,
    /// Adapted `sigma(||M(t_i)||) Id / sqrt(d)` with `sigma(r) = scale / (1 + r)`.
    Feedback,
    Zero,
}

impl IntegrandPreset {
    fn as_str(self) -> &'static str {
        match self {
            IntegrandPreset::Constant => "constant",
            IntegrandPreset::Indicator => "indicator",
            IntegrandPreset::Decay => "decay",
            IntegrandPreset::Feedback => "feedback",
            IntegrandPreset::Zero => "zero",
        }
    }

    /// Deterministic preset on a `2^j` grid over `[0, 1]`, with Hilbert-Schmidt
    /// size `scale` wherever it is switched on.
    pub fn integrand(self, scale: f64, j: u32, d: usize, m: usize) -> Result<StepIntegrand> {
        let r = d.min(m);
        let flat = vec![scale / (r as f64).sqrt(); r];
        let diag = |weights: Vec<f64>, profile: fn(f64) -> f64| {
            StepIntegrand::from_fn(0.0, 1.0, j, d, m, |t, k, l| {
                if k == l && k < r {
                    weights[k] * profile(t)
                } else {
                    0.0
                }
            })
        };
        match self {
            IntegrandPreset::Constant => diag(flat, |_| 1.0),
            IntegrandPreset::Indicator => diag(flat, |t| if t < 0.5 { 1.0 } else { 0.0 }),
            IntegrandPreset::Decay => {
                let norm = (1..=r).map(|k| (k as f64).powi(-2)).sum::<f64>().sqrt();
                diag((1..=r).map(|k| scale / (k as f64 * norm)).collect(), |_| 1.0)
            }
            IntegrandPreset::Zero => StepIntegrand::zeros(0.0, 1.0, j, d, m),
            IntegrandPreset::Feedback => Err(Error::Config(
                "the feedback preset is generated on-line and has no fixed step representation".into(),
            )),
        }
    }

    /// The integrand seen along one noise realisation. Only the feedback
    /// preset depends on `increments`; it needs `d = m`.
    pub fn realize(self, scale: f64, d: usize, increments: &WienerIncrements) -> Result<StepIntegrand> {
        let m = increments.noise_dim();
        if self != IntegrandPreset::Feedback {
            let j = increments.cells().trailing_zeros();
            return self.integrand(scale, j, d, m);
        }
        if d != m {
            return Err(Error::Config(format!(
                "the feedback preset needs d = m, got d = {d}, m = {m}"
            )));
        }
        let root = (d as f64).sqrt();
        Ok(feedback_integral(increments, |r| scale / ((1.0 + r) * root))?.0)
    }
}

impl fmt::Display for IntegrandPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntegrandPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "constant" => IntegrandPreset::Constant,
            "indicator" => IntegrandPreset::Indicator,
            "decay" => IntegrandPreset::Decay,
            "feedback" => IntegrandPreset::Feedback,
            "zero" => IntegrandPreset::Zero,
            other => return Err(Error::Config(format!("unknown integrand preset `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenPreset {
    /// `(pi k)^2`, `k = 1..=d`.
    Heat,
    Zero,
    /// Every mode at the same rate.
    Uniform(f64),
}

impl EigenPreset {
    pub fn model(self, d: usize) -> Result<DiagonalModel> {
        match self {
            EigenPreset::Heat => DiagonalModel::heat(d),
            EigenPreset::Zero => DiagonalModel::zero(d),
            EigenPreset::Uniform(l) => DiagonalModel::new(vec![l; d]),
        }
    }
}

impl fmt::Display for EigenPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigenPreset::Heat => f.write_str("heat"),
            EigenPreset::Zero => f.write_str("zero"),
            EigenPreset::Uniform(l) => write!(f, "uniform:{l}"),
        }
    }
}

impl FromStr for EigenPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "heat" => Ok(EigenPreset::Heat),
            "zero" => Ok(EigenPreset::Zero),
            other => match other.strip_prefix("uniform:").map(|v| v.trim().parse::<f64>()) {
                Some(Ok(l)) if l.is_finite() && l >= 0.0 => Ok(EigenPreset::Uniform(l)),
                _ => Err(Error::Config(format!("unknown eigenvalue preset `{other}`"))),
            },
        }
    }
}

/// Resolved settings of one experiment run.
///
/// The text form is one `key = value` per line, `#` comments, lists
/// comma-separated. Keys: `experiment`, `J`, `J_sweep`, `d`, `m`, `replicas`,
/// `p_grid`, `q`, `alpha`, `alpha_grid`, `young`, `young_grid`, `integrand`,
/// `scale`, `eigenvalues`, `kappa_grid`, `rungs`, `eps_points`, `seed`,
/// `out_dir` and `tol.<name>` for the experiment's declared tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub j: u32,
    pub j_sweep: Vec<u32>,
    pub d: usize,
    pub m: usize,
    pub replicas: usize,
    pub p_grid: Vec<f64>,
    pub q: f64,
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
    pub young: YoungFunction,
    pub young_grid: Vec<YoungFunction>,
    pub integrand: IntegrandPreset,
    pub scale: f64,
    pub eigenvalues: EigenPreset,
    pub kappa_grid: Vec<f64>,
    pub rungs: u32,
    pub eps_points: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub tolerances: BTreeMap<String, f64>,
}

const KEYS: [&str; 20] = [
    "experiment",
    "J",
    "J_sweep",
    "d",
    "m",
    "replicas",
    "p_grid",
    "q",
    "alpha",
    "alpha_grid",
    "young",
    "young_grid",
    "integrand",
    "scale",
    "eigenvalues",
    "kappa_grid",
    "rungs",
    "eps_points",
    "seed",
    "out_dir",
];

pub const DEFAULT_SEED: u64 = 0x5EED_2024;

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    match value.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        v => parse_value(key, v),
    }
}

fn parse_list<T>(key: &str, value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(s).map_err(|_| Error::Config(format!("bad list item `{s}` for `{key}`"))))
        .collect()
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentId) -> Self {
        let mut c = Self {
            experiment,
            j: 10,
            j_sweep: Vec::new(),
            d: 1,
            m: 1,
            replicas: 10_000,
            p_grid: vec![2.0],
            q: f64::INFINITY,
            alpha: 0.5,
            alpha_grid: vec![0.5],
            young: YoungFunction::PHI2,
            young_grid: vec![YoungFunction::PHI2],
            integrand: IntegrandPreset::Constant,
            scale: 1.0,
            eigenvalues: EigenPreset::Zero,
            kappa_grid: vec![1.0],
            rungs: 6,
            eps_points: 20,
            seed: DEFAULT_SEED,
            out_dir: None,
            tolerances: experiment
                .default_tolerances()
                .iter()
                .map(|&(k, v)| (k.to_string(), v))
                .collect(),
        };
        match experiment {
            ExperimentId::MomentGrowth => {
                c.j_sweep = vec![8, 10, 12];
                c.p_grid = vec![1.0, 2.0, 4.0, 8.0];
            }
            ExperimentId::TailBound => c.eigenvalues = EigenPreset::Heat,
            ExperimentId::AxiomGauss => {
                c.p_grid = vec![1.0, 2.0, 4.0, 8.0];
                c.kappa_grid = vec![0.25, 1.0, 4.0];
            }
            ExperimentId::SolutionMapContinuity => {
                c.d = 32;
                c.m = 32;
                c.replicas = 1000;
                c.eigenvalues = EigenPreset::Heat;
                c.integrand = IntegrandPreset::Decay;
            }
            ExperimentId::RefinementStability => {
                c.j = 14;
                c.j_sweep = (8..=14).collect();
                c.replicas = 2000;
            }
            ExperimentId::LevyModulus => c.j = 16,
            ExperimentId::DetconvRatio => {
                c.j_sweep = vec![8, 10, 12];
                c.d = 8;
                c.m = 8;
                c.replicas = 100;
                c.alpha_grid = vec![0.25, 0.5];
                c.young_grid = vec![YoungFunction::Power(2.0), YoungFunction::PHI2];
                c.eigenvalues = EigenPreset::Heat;
            }
            ExperimentId::EmbeddingChecks => c.replicas = 200,
            ExperimentId::ConditionalIncrement => c.p_grid = vec![2.0, 4.0],
        }
        c
    }

    /// Splits config text into `(line, key, value)` triples.
    pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            pairs.push((n + 1, key.trim().to_string(), value.trim().to_string()));
        }
        Ok(pairs)
    }

    /// Builds a config from text; `fallback` names the experiment when the
    /// text has no `experiment` key.
    pub fn from_text(text: &str, fallback: Option<ExperimentId>) -> Result<Self> {
        let pairs = Self::parse_pairs(text)?;
        let named = pairs
            .iter()
            .find(|(_, k, _)| k == "experiment")
            .map(|(_, _, v)| v.parse::<ExperimentId>())
            .transpose()?;
        let id = match (named, fallback) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!("config is for `{a}` but `{b}` was requested")));
            }
            (Some(id), _) | (None, Some(id)) => id,
            (None, None) => return Err(Error::Config("no experiment given".into())),
        };
        let mut config = Self::defaults(id);
        for (line, key, value) in pairs.iter().filter(|(_, k, _)| k != "experiment") {
            config.set(key, value).map_err(|e| Error::Parse {
                line: *line,
                message: e.to_string(),
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(name) = key.strip_prefix("tol.") {
            let slot = self
                .tolerances
                .get_mut(name)
                .ok_or_else(|| Error::Config(format!("`{}` declares no tolerance `{name}`", self.experiment)))?;
            *slot = parse_f64(key, value)?;
            return Ok(());
        }
        match key {
            "experiment" => {
                let id: ExperimentId = value.parse()?;
                if id != self.experiment {
                    return Err(Error::Config("the experiment id cannot be overridden".into()));
                }
            }
            "J" => self.j = parse_value(key, value)?,
            "J_sweep" => self.j_sweep = parse_list(key, value, |s| parse_value(key, s))?,
            "d" => self.d = parse_value(key, value)?,
            "m" => self.m = parse_value(key, value)?,
            "replicas" => self.replicas = parse_value(key, value)?,
            "p_grid" => self.p_grid = parse_list(key, value, |s| parse_f64(key, s))?,
            "q" => self.q = parse_f64(key, value)?,
            "alpha" => self.alpha = parse_f64(key, value)?,
            "alpha_grid" => self.alpha_grid = parse_list(key, value, |s| parse_f64(key, s))?,
            "young" => self.young = value.parse()?,
            "young_grid" => self.young_grid = parse_list(key, value, |s| s.parse())?,
            "integrand" => self.integrand = value.parse()?,
            "scale" => self.scale = parse_f64(key, value)?,
            "eigenvalues" => self.eigenvalues = value.parse()?,
            "kappa_grid" => self.kappa_grid = parse_list(key, value, |s| parse_f64(key, s))?,
            "rungs" => self.rungs = parse_value(key, value)?,
            "eps_points" => self.eps_points = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value.trim())),
            other => {
                return Err(Error::Config(format!(
                    "unknown key `{other}`; known keys are {} and tol.<name>",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replicas == 0 {
            return bad("replicas must be positive".into());
        }
        if !(1..=20).contains(&self.j) {
            return bad(format!("J must lie in 1..=20, got {}", self.j));
        }
        if self.j_sweep.iter().any(|j| !(1..=20).contains(j)) {
            return bad("J_sweep entries must lie in 1..=20".into());
        }
        if self.d == 0 || self.m == 0 {
            return bad("d and m must be positive".into());
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return bad(format!("scale must be finite and >= 0, got {}", self.scale));
        }
        if !(self.q >= 2.0) {
            return bad(format!("q must be >= 2, got {}", self.q));
        }
        for &a in std::iter::once(&self.alpha).chain(&self.alpha_grid) {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("alpha must lie in (0, 1), got {a}"));
            }
        }
        if self.p_grid.iter().any(|p| !(p.is_finite() && *p >= 1.0)) {
            return bad("p_grid entries must be finite and >= 1".into());
        }
        if self.kappa_grid.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return bad("kappa_grid entries must be positive".into());
        }
        for y in std::iter::once(&self.young).chain(&self.young_grid) {
            y.validate()?;
        }
        if self.tolerances.values().any(|v| v.is_nan()) {
            return bad("tolerances must be numbers".into());
        }
        let tied = matches!(self.experiment, ExperimentId::MomentGrowth | ExperimentId::TailBound);
        if tied && (self.alpha - (0.5 - 1.0 / self.q)).abs() > 1e-12 {
            return bad(format!(
                "{} ties alpha = 1/2 - 1/q; got alpha = {} with q = {}",
                self.experiment,
                self.alpha,
                fmt_f64(self.q)
            ));
        }
        if self.experiment == ExperimentId::MomentGrowth
            && self.p_grid.iter().any(|p| ![1.0, 2.0, 4.0, 8.0].contains(p))
        {
            return bad("moment_growth takes p in {1, 2, 4, 8}".into());
        }
        let needs_sweep = matches!(
            self.experiment,
            ExperimentId::RefinementStability | ExperimentId::DetconvRatio
        );
        if needs_sweep && self.j_sweep.len() < 2 {
            return bad(format!("{} needs at least two J_sweep entries", self.experiment));
        }
        if self.experiment == ExperimentId::TailBound && self.eps_points < 3 {
            return bad("eps_points must be >= 3".into());
        }
        Ok(())
    }

    /// Assertions are downgraded to warnings below [`SMOKE_REPLICAS`].
    pub fn smoke(&self) -> bool {
        self.replicas < SMOKE_REPLICAS
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    /// The resolved configuration, in schema order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("experiment", self.experiment.to_string()),
            ("J", self.j.to_string()),
            ("J_sweep", join(&self.j_sweep)),
            ("d", self.d.to_string()),
            ("m", self.m.to_string()),
            ("replicas", self.replicas.to_string()),
            ("p_grid", join(&self.p_grid)),
            ("q", fmt_f64(self.q)),
            ("alpha", self.alpha.to_string()),
            ("alpha_grid", join(&self.alpha_grid)),
            ("young", self.young.to_string()),
            ("young_grid", join(&self.young_grid)),
            ("integrand", self.integrand.to_string()),
            ("scale", self.scale.to_string()),
            ("eigenvalues", self.eigenvalues.to_string()),
            ("kappa_grid", join(&self.kappa_grid)),
            ("rungs", self.rungs.to_string()),
            ("eps_points", self.eps_points.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect::<Vec<_>>();
        if let Some(dir) = &self.out_dir {
            out.push(("out_dir".into(), dir.display().to_string()));
        }
        out.extend(self.tolerances.iter().map(|(k, v)| (format!("tol.{k}"), fmt_f64(*v))));
        out
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
