//! JSON model configuration and the built-in presets.
//!
//! A configuration describes a state space, regularly varying innovations,
//! one model (finite linear process, AR(1) recursion or lagged innovations
//! in a weighted sequence space), an optional output transform, and
//! Monte Carlo and path settings.

use serde::{Deserialize, Serialize};

use crate::banach::{NormSpec, Operator, Space};
use crate::error::{Error, Result};
use crate::mc::Rng;
use crate::rv::{RegVarDist, SpectralSampler};
use crate::simulate::{simulate_ar1, simulate_linear, simulate_sequence_space, Path, PathConfig};
use crate::spectral::{
    Ar1Sampler, LinearProcessSampler, OperatorFamily, TransformedSampler, WindowSampler,
    DEFAULT_MAX_TRIALS,
};

/// Value of the `schema` field understood by this version.
pub const SCHEMA: &str = "heavytail/1";

/// Built-in configurations, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("iid", include_str!("../presets/iid.json")),
    ("ma2", include_str!("../presets/ma2.json")),
    ("ma3_positive", include_str!("../presets/ma3_positive.json")),
    ("ar1_scalar", include_str!("../presets/ar1_scalar.json")),
    ("seqspace", include_str!("../presets/seqspace.json")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// A norm, with weighted `l_1` weights given explicitly or as `ratio^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormConfig {
    Max,
    Lp {
        p: f64,
    },
    WeightedL1 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio: Option<f64>,
    },
}

impl NormConfig {
    pub fn space(&self, dim: usize) -> Result<Space> {
        match self {
            NormConfig::Max => Space::new(dim, NormSpec::Max),
            NormConfig::Lp { p } => Space::lp(dim, *p),
            NormConfig::WeightedL1 { weights, ratio } => match (weights, ratio) {
                (Some(w), None) => {
                    if w.len() != dim {
                        return Err(Error::Config(format!(
                            "{} weights for dimension {dim}",
                            w.len()
                        )));
                    }
                    Space::weighted_l1(w.clone())
                }
                (None, Some(r)) => Space::geometric_l1(dim, *r),
                _ => Err(Error::Config(
                    "weighted_l1 needs exactly one of `weights` and `ratio`".into(),
                )),
            },
        }
    }

    /// Weight carried by coordinates beyond `dim` when the weights are geometric.
    fn dropped_weight(&self, dim: usize) -> f64 {
        match self {
            NormConfig::WeightedL1 { ratio: Some(r), .. } if *r < 1.0 => {
                r.powi(dim as i32) / (1.0 - r)
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralConfig {
    /// Real innovations: `+1` with probability `p`.
    Rademacher {
        p: f64,
    },
    SphereUniform,
    Atomic {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationConfig {
    pub spectral: SpectralConfig,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    /// Innovation dimension when it differs from the state dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Innovation norm when it differs from the state norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormConfig>,
}

fn default_horizon() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `X_t = sum_n T_n Z_{t-n}`, `n = start, start + 1, ...`.
    Linear {
        #[serde(default)]
        start: i64,
        operators: Vec<Operator>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    /// `X_t = T X_{t-1} + Z_t`; powers up to `horizon` enter the spectral law.
    Ar1 {
        operator: Operator,
        #[serde(default = "default_horizon")]
        horizon: usize,
    },
    /// `X_t = (ζ_t, ζ_{t-1}, ...)` in the weighted sequence space.
    SequenceSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub operator: Operator,
    pub dim: usize,
    pub norm: NormConfig,
}

fn default_trials() -> u64 {
    DEFAULT_MAX_TRIALS
}

fn default_big_jump() -> usize {
    10_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_samples: usize,
    #[serde(default = "default_trials")]
    pub max_rejection_trials: u64,
    /// Draws for the single-big-jump checks.
    #[serde(default = "default_big_jump")]
    pub big_jump_samples: usize,
}

fn default_truncation() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    pub length: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub schema: String,
    pub alpha: f64,
    pub norm: NormConfig,
    pub dim: usize,
    pub innovation: InnovationConfig,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformConfig>,
    pub mc: McConfig,
    pub path: PathSection,
    pub seed: u64,
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map(|i| i + 1)
}

impl ModelConfig {
    /// Parses and validates a configuration document. Errors carry the line
    /// of the offending key where it can be located.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()
            .map_err(|(key, err)| match key_line(text, key) {
                Some(line) => Error::Config(format!("line {line} (`{key}`): {}", strip(err))),
                None => Error::Config(format!("`{key}`: {}", strip(err))),
            })?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Checks everything `build` needs, naming the responsible key.
    fn validate(&self) -> std::result::Result<(), (&'static str, Error)> {
        if self.schema != SCHEMA {
            return Err((
                "schema",
                Error::Config(format!(
                    "unsupported schema `{}`, expected `{SCHEMA}`",
                    self.schema
                )),
            ));
        }
        self.build().map(|_| ()).map_err(|e| (self.blame(&e), e))
    }

    fn blame(&self, e: &Error) -> &'static str {
        let msg = e.to_string();
        if msg.contains("tail index") {
            "alpha"
        } else if msg.contains("weights") || msg.contains("norm") || msg.contains("exponent p") {
            "norm"
        } else if msg.contains("innovation")
            || msg.contains("Rademacher")
            || msg.contains("atom")
            || msg.contains("scale")
        {
            "innovation"
        } else if msg.contains("transform") {
            "transform"
        } else if msg.contains("trials") || msg.contains("samples") {
            "mc"
        } else {
            "model"
        }
    }

    pub fn state_space(&self) -> Result<Space> {
        if self.dim == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        self.norm.space(self.dim)
    }

    fn innovation_space(&self, state: &Space) -> Result<Space> {
        let dim = match (&self.innovation.spectral, &self.model) {
            (SpectralConfig::Rademacher { .. }, _) | (_, ModelSpec::SequenceSpace) => 1,
            (SpectralConfig::Atomic { points, .. }, _) if self.innovation.dim.is_none() => {
                points.first().map(Vec::len).unwrap_or(self.dim)
            }
            _ => self.innovation.dim.unwrap_or(self.dim),
        };
        if let Some(d) = self.innovation.dim {
            if d != dim {
                return Err(Error::Config(format!(
                    "innovation dimension {d} conflicts with the model ({dim})"
                )));
            }
        }
        match &self.innovation.norm {
            Some(n) => n.space(dim),
            None if dim == state.dim() => Ok(state.clone()),
            None if dim == 1 => Ok(Space::real()),
            None => Err(Error::Config(
                "innovation dimension differs from the state: give `innovation.norm`".into(),
            )),
        }
    }

    /// Resolves the configuration into concrete objects.
    pub fn build(&self) -> Result<Model> {
        crate::rv::check_alpha(self.alpha)?;
        let state = self.state_space()?;
        let ispace = self.innovation_space(&state)?;
        let angle = match &self.innovation.spectral {
            SpectralConfig::Rademacher { p } => SpectralSampler::rademacher(*p)?,
            SpectralConfig::SphereUniform => SpectralSampler::sphere_uniform(ispace.clone()),
            SpectralConfig::Atomic { points, weights } => {
                SpectralSampler::atomic(ispace.clone(), points.clone(), weights.clone())?
            }
        };
        let innov = RegVarDist::new(self.alpha, self.innovation.scale, angle)?;
        let kind = match &self.model {
            ModelSpec::Linear {
                start,
                operators,
                delta,
            } => {
                let delta = delta.unwrap_or_else(|| OperatorFamily::default_delta(self.alpha));
                ModelKind::Linear(OperatorFamily::new(
                    *start,
                    operators.clone(),
                    ispace,
                    state.clone(),
                    self.alpha,
                    delta,
                )?)
            }
            ModelSpec::Ar1 { operator, horizon } => {
                if ispace.dim() != state.dim() {
                    return Err(Error::Config(
                        "AR(1) innovations must live in the state space".into(),
                    ));
                }
                if operator.output_dim(state.dim())? != state.dim() {
                    return Err(Error::Structural(
                        "AR(1) operator must map the state space to itself".into(),
                    ));
                }
                ModelKind::Ar1 {
                    op: operator.clone(),
                    horizon: *horizon,
                }
            }
            ModelSpec::SequenceSpace => {
                if !matches!(self.norm, NormConfig::WeightedL1 { .. }) {
                    return Err(Error::Config(
                        "the sequence-space model needs a weighted_l1 norm".into(),
                    ));
                }
                ModelKind::SequenceSpace(OperatorFamily::sequence_space(state.clone(), self.alpha)?)
            }
        };
        let transform = match &self.transform {
            Some(t) => {
                let codomain = t.norm.space(t.dim)?;
                if t.operator.output_dim(state.dim())? != t.dim {
                    return Err(Error::Config(
                        "transform operator does not map into its declared dimension".into(),
                    ));
                }
                Some((t.operator.clone(), codomain))
            }
            None => None,
        };
        if self.mc.max_rejection_trials == 0 {
            return Err(Error::Config(
                "max_rejection_trials must be positive".into(),
            ));
        }
        Ok(Model {
            config: self.clone(),
            state,
            innov,
            kind,
            transform,
        })
    }

    /// The same configuration at another tail index.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut c = self.clone();
        c.alpha = alpha;
        if let ModelSpec::Linear { delta, .. } = &mut c.model {
            if delta.is_some_and(|d| d >= alpha.min(1.0)) {
                *delta = None;
            }
        }
        c
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) | Error::Domain(m) | Error::Structural(m) => m,
        other => other.to_string(),
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Linear(OperatorFamily),
    Ar1 { op: Operator, horizon: usize },
    SequenceSpace(OperatorFamily),
}

/// A validated configuration with its spaces, innovations and operators.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub state: Space,
    pub innov: RegVarDist,
    pub kind: ModelKind,
    pub transform: Option<(Operator, Space)>,
}

/// The window sampler for a model before any output transform, with the
/// series constants it mixes over.
pub enum BaseSampler {
    Linear(LinearProcessSampler),
    Ar1(Ar1Sampler),
}

impl BaseSampler {
    pub fn as_window_sampler(&self) -> &dyn WindowSampler {
        match self {
            BaseSampler::Linear(s) => s,
            BaseSampler::Ar1(s) => s,
        }
    }

    pub fn constants(&self) -> &crate::spectral::SeriesConstants {
        match self {
            BaseSampler::Linear(s) => s.constants(),
            BaseSampler::Ar1(s) => s.constants(),
        }
    }
}

impl Model {
    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn n_samples(&self) -> usize {
        self.config.mc.n_samples
    }

    pub fn base_sampler(&self, rng: &mut Rng) -> Result<BaseSampler> {
        let n_mc = self.config.mc.n_samples.max(1);
        let trials = self.config.mc.max_rejection_trials;
        Ok(match &self.kind {
            ModelKind::Linear(fam) | ModelKind::SequenceSpace(fam) => BaseSampler::Linear(
                LinearProcessSampler::build(fam.clone(), self.innov.clone(), n_mc, trials, rng)?,
            ),
            ModelKind::Ar1 { op, horizon } => BaseSampler::Ar1(Ar1Sampler::new(
                op.clone(),
                self.innov.clone(),
                self.state.clone(),
                *horizon,
                n_mc,
                trials,
                rng,
            )?),
        })
    }

    /// Spectral-window sampler of the observed series (after the transform).
    pub fn window_sampler(&self, rng: &mut Rng) -> Result<Box<dyn WindowSampler>> {
        let base: Box<dyn WindowSampler> = match self.base_sampler(rng)? {
            BaseSampler::Linear(s) => Box::new(s),
            BaseSampler::Ar1(s) => Box::new(s),
        };
        match &self.transform {
            Some((op, codomain)) => Ok(Box::new(TransformedSampler::new(
                base,
                op.clone(),
                codomain.clone(),
                self.config.mc.max_rejection_trials,
            )?)),
            None => Ok(base),
        }
    }

    /// Space in which the observed series lives.
    pub fn observed_space(&self) -> &Space {
        match &self.transform {
            Some((_, s)) => s,
            None => &self.state,
        }
    }

    /// The operator family `{T_n}` of the series representation; AR(1)
    /// models use `{T^n}` up to the horizon.
    pub fn family(&self) -> Result<OperatorFamily> {
        match &self.kind {
            ModelKind::Linear(f) | ModelKind::SequenceSpace(f) => Ok(f.clone()),
            ModelKind::Ar1 { op, horizon } => {
                let ops = (0..=*horizon).map(|n| op.power(n)).collect();
                OperatorFamily::new(
                    0,
                    ops,
                    self.state.clone(),
                    self.state.clone(),
                    self.alpha(),
                    OperatorFamily::default_delta(self.alpha()),
                )
            }
        }
    }

    pub fn path_config(&self) -> PathConfig {
        PathConfig {
            length: self.config.path.length,
            burn_in: self.config.path.burn_in,
            truncation: self.config.path.truncation,
            seed: self.config.seed,
        }
    }

    /// Simulates the observed series.
    pub fn simulate(&self, cfg: &PathConfig) -> Result<Path> {
        let mut path = match &self.kind {
            ModelKind::Linear(fam) => simulate_linear(fam, &self.innov, cfg)?,
            ModelKind::Ar1 { op, horizon } => {
                simulate_ar1(op, &self.state, &self.innov, cfg, *horizon)?
            }
            ModelKind::SequenceSpace(_) => {
                let mut p = simulate_sequence_space(&self.state, &self.innov, cfg)?;
                p.meta.truncation_bound = self.config.norm.dropped_weight(self.config.dim);
                p
            }
        };
        if let Some((op, codomain)) = &self.transform {
            let d = codomain.dim();
            let mut values = Vec::with_capacity(path.len() * d);
            for x in path.rows() {
                values.extend(op.apply_unchecked(x));
            }
            path.values = values;
            path.dim = d;
            path.meta.dim = d;
        }
        Ok(path)
    }
}
