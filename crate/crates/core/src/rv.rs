//! Regularly varying laws built by polar decomposition.
//!
//! Every law here is exactly `scale * Y * Θ` with `Y ~ Pareto(alpha)` and an
//! independent angle `Θ` drawn from a spectral measure on the unit sphere, so
//! `Pr(||X|| > u) = (u / scale)^(-alpha)` for every `u >= scale`.

use crate::banach::{Operator, OperatorNormBound, Space};
use crate::error::{Error, Result};
use crate::mc::{uniform, Rng};
use crate::spectral;

/// Atoms whose norm deviates from one by more than this are rejected.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Inverse-CDF Pareto transform `(1 - u)^(-1/alpha)` of a uniform `u` in `[0, 1)`.
#[inline]
pub fn pareto_from_uniform(alpha: f64, u: f64) -> f64 {
    (1.0 - u).powf(-1.0 / alpha)
}

/// A Pareto(alpha) draw: `Pr(Y > y) = y^(-alpha)` for `y >= 1`.
pub fn pareto_sample(alpha: f64, rng: &mut Rng) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(pareto_from_uniform(alpha, uniform(rng)))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!(
            "tail index must be positive, got {alpha}"
        )));
    }
    Ok(())
}

/// Rejection-sampled image of a spectral measure under an operator.
#[derive(Debug, Clone)]
pub struct Pushforward {
    pub base: SpectralSampler,
    pub op: Operator,
    pub alpha: f64,
    pub bound: OperatorNormBound,
    pub codomain: Space,
    pub max_trials: u64,
}

/// A probability measure on the unit sphere of some [`Space`].
#[derive(Debug, Clone)]
pub enum SpectralSampler {
    /// `+1` with probability `p`, `-1` otherwise, on the real line.
    Rademacher {
        p: f64,
    },
    /// Gaussian direction projected onto the sphere of the given norm.
    SphereUniform {
        space: Space,
    },
    /// Finitely many unit vectors with probabilities.
    Atomic {
        space: Space,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        cumulative: Vec<f64>,
    },
    Pushforward(Box<Pushforward>),
}

impl SpectralSampler {
    pub fn rademacher(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!(
                "Rademacher probability {p} outside [0, 1]"
            )));
        }
        Ok(SpectralSampler::Rademacher { p })
    }

    pub fn sphere_uniform(space: Space) -> Self {
        SpectralSampler::SphereUniform { space }
    }

    pub fn atomic(space: Space, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Structural(format!(
                "{} atoms with {} weights",
                points.len(),
                weights.len()
            )));
        }
        for p in &points {
            let r = space.norm(p)?;
            if (r - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::Domain(format!("atom {p:?} has norm {r}, not 1")));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("atom weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("atom weights sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Ok(SpectralSampler::Atomic {
            space,
            points,
            weights,
            cumulative,
        })
    }

    /// `λ_A`, the spectral measure of `A X` when `X` has spectral measure `base`.
    pub fn pushforward(
        base: SpectralSampler,
        op: Operator,
        codomain: Space,
        alpha: f64,
        max_trials: u64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let bound = op.norm_bound(&base.space(), &codomain)?;
        Ok(SpectralSampler::Pushforward(Box::new(Pushforward {
            base,
            op,
            alpha,
            bound,
            codomain,
            max_trials,
        })))
    }

    /// The space whose unit sphere carries the measure.
    pub fn space(&self) -> Space {
        match self {
            SpectralSampler::Rademacher { .. } => Space::real(),
            SpectralSampler::SphereUniform { space } | SpectralSampler::Atomic { space, .. } => {
                space.clone()
            }
            SpectralSampler::Pushforward(p) => p.codomain.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpectralSampler::Rademacher { .. } => 1,
            SpectralSampler::SphereUniform { space } | SpectralSampler::Atomic { space, .. } => {
                space.dim()
            }
            SpectralSampler::Pushforward(p) => p.codomain.dim(),
        }
    }

    /// Atoms and probabilities, when the measure is finitely supported and known
    /// in closed form.
    pub fn atoms(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        match self {
            SpectralSampler::Rademacher { p } => {
                Some((vec![vec![1.0], vec![-1.0]], vec![*p, 1.0 - p]))
            }
            SpectralSampler::Atomic {
                points, weights, ..
            } => Some((points.clone(), weights.clone())),
            _ => None,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            SpectralSampler::Rademacher { p } => {
                Ok(vec![if uniform(rng) < *p { 1.0 } else { -1.0 }])
            }
            SpectralSampler::SphereUniform { space } => Ok(space.sample_sphere(rng)),
            SpectralSampler::Atomic {
                points, cumulative, ..
            } => {
                let u = uniform(rng);
                let k = cumulative
                    .partition_point(|c| *c <= u)
                    .min(points.len() - 1);
                Ok(points[k].clone())
            }
            SpectralSampler::Pushforward(p) => spectral::pushforward_spectral_sample(
                &p.op,
                &p.base,
                p.alpha,
                &p.codomain,
                p.bound,
                p.max_trials,
                rng,
            )
            .map(|(theta, _)| theta),
        }
    }
}

/// `X = scale * Y * Θ`, `Y ~ Pareto(alpha)` independent of `Θ ~ angle`.
#[derive(Debug, Clone)]
pub struct RegVarDist {
    alpha: f64,
    scale: f64,
    angle: SpectralSampler,
}

impl RegVarDist {
    pub fn new(alpha: f64, scale: f64, angle: SpectralSampler) -> Result<Self> {
        check_alpha(alpha)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Domain(format!(
                "scale must be positive, got {scale}"
            )));
        }
        Ok(RegVarDist {
            alpha,
            scale,
            angle,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn angle(&self) -> &SpectralSampler {
        &self.angle
    }

    pub fn space(&self) -> Space {
        self.angle.space()
    }

    pub fn dim(&self) -> usize {
        self.angle.dim()
    }

    pub fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        let r = self.scale * pareto_from_uniform(self.alpha, uniform(rng));
        let theta = self.angle.sample(rng)?;
        Ok(theta.into_iter().map(|x| r * x).collect())
    }

    /// A draw from the law of `X` given `||X|| > u`: radius `u * Pareto(alpha)`
    /// and an independent angle.
    pub fn sample_exceedance(&self, u: f64, rng: &mut Rng) -> Result<Vec<f64>> {
        if !(u >= self.scale) {
            return Err(Error::Domain(format!(
                "exceedance threshold {u} below the scale {}",
                self.scale
            )));
        }
        let r = u * pareto_from_uniform(self.alpha, uniform(rng));
        let theta = self.angle.sample(rng)?;
        Ok(theta.into_iter().map(|x| r * x).collect())
    }

    /// `V(x) = Pr(||X|| > x)`.
    pub fn tail_prob(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "tail probability at non-positive {x}"
            )));
        }
        Ok(if x >= self.scale {
            (x / self.scale).powf(-self.alpha)
        } else {
            1.0
        })
    }

    /// Threshold with `V(x) = q`.
    pub fn tail_quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Domain(format!("tail level {q} outside (0, 1]")));
        }
        Ok(self.scale * q.powf(-1.0 / self.alpha))
    }
}
