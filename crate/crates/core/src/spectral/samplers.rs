//! Rejection samplers for spectral measures and spectral processes.

use crate::banach::{Operator, OperatorNormBound, Space};
use crate::error::{Error, Result};
use crate::mc::{uniform, Rng};
use crate::rv::{pareto_sample, RegVarDist, SpectralSampler};

use super::family::{pushforward_constant, series_constants, OperatorFamily, SeriesConstants};
use super::window::{SpectralWindow, TailWindow, WindowSampler};

/// Default cap on rejection trials per draw.
pub const DEFAULT_MAX_TRIALS: u64 = 1_000_000;

/// Cluster draws give up once acceptance falls below this rate.
pub const MIN_CLUSTER_ACCEPTANCE: f64 = 1e-6;

#[inline]
fn accept(u: f64, r: f64, bound: f64, alpha: f64) -> bool {
    r > 0.0 && u * bound.powf(alpha) <= r.powf(alpha)
}

fn exhausted(what: &str, trials: u64) -> Error {
    Error::Sampling {
        message: format!(
            "{what}: no acceptance after {trials} trials, acceptance rate below {:.3e}",
            1.0 / trials.max(1) as f64
        ),
        trials,
        accepted: 0,
    }
}

/// One draw from `λ_A` by rejection against `bound >= ess sup ||A Θ||`.
/// Returns the draw and the number of trials used.
pub fn pushforward_spectral_sample(
    op: &Operator,
    base: &SpectralSampler,
    alpha: f64,
    codomain: &Space,
    bound: OperatorNormBound,
    max_trials: u64,
    rng: &mut Rng,
) -> Result<(Vec<f64>, u64)> {
    if !(bound.value > 0.0) {
        return Err(Error::Domain(
            "operator annihilates the sphere: λ({Aθ ≠ 0}) = 0".into(),
        ));
    }
    for trial in 1..=max_trials {
        let theta = base.sample(rng)?;
        let u = uniform(rng);
        let image = op.apply_unchecked(&theta);
        let r = codomain.norm_of(&image);
        if accept(u, r, bound.value, alpha) {
            return Ok((image.into_iter().map(|x| x / r).collect(), trial));
        }
    }
    Err(exhausted("pushforward sampler", max_trials))
}

fn categorical(cumulative: &[f64], rng: &mut Rng) -> usize {
    let u = uniform(rng) * cumulative.last().copied().unwrap_or(1.0);
    cumulative
        .partition_point(|c| *c <= u)
        .min(cumulative.len() - 1)
}

/// Spectral process of the linear process `X_t = sum_i T_i Z_{t-i}`, drawn as
/// the mixture `sum_n p_n κ_n`.
#[derive(Debug, Clone)]
pub struct LinearProcessSampler {
    fam: OperatorFamily,
    base: RegVarDist,
    consts: SeriesConstants,
    cumulative: Vec<f64>,
    max_trials: u64,
}

impl LinearProcessSampler {
    pub fn new(
        fam: OperatorFamily,
        base: RegVarDist,
        consts: SeriesConstants,
        max_trials: u64,
    ) -> Result<Self> {
        if consts.c.len() != fam.len() || consts.start != fam.start() {
            return Err(Error::Structural(
                "series constants do not match the family".into(),
            ));
        }
        if base.dim() != fam.domain().dim() {
            return Err(Error::Structural(
                "innovation dimension does not match the family".into(),
            ));
        }
        let cumulative = consts.cumulative();
        Ok(LinearProcessSampler {
            fam,
            base,
            consts,
            cumulative,
            max_trials,
        })
    }

    /// Computes the constants with `n_mc` angle draws where no closed form exists.
    pub fn build(
        fam: OperatorFamily,
        base: RegVarDist,
        n_mc: usize,
        max_trials: u64,
        rng: &mut Rng,
    ) -> Result<Self> {
        let consts = series_constants(&fam, &base, n_mc, rng)?;
        Self::new(fam, base, consts, max_trials)
    }

    pub fn family(&self) -> &OperatorFamily {
        &self.fam
    }

    pub fn constants(&self) -> &SeriesConstants {
        &self.consts
    }

    pub fn innovations(&self) -> &RegVarDist {
        &self.base
    }
}

impl WindowSampler for LinearProcessSampler {
    fn alpha(&self) -> f64 {
        self.fam.alpha()
    }

    fn space(&self) -> &Space {
        self.fam.codomain()
    }

    fn extent(&self) -> usize {
        self.fam.span()
    }

    fn sample(&self, back: usize, fwd: usize, rng: &mut Rng) -> Result<SpectralWindow> {
        let k = categorical(&self.cumulative, rng);
        let n = self.fam.start() + k as i64;
        let op = &self.fam.ops()[k];
        let bound = self.fam.bounds()[k].value;
        let alpha = self.fam.alpha();
        let codomain = self.fam.codomain();
        for trial in 1..=self.max_trials {
            let theta = self.base.angle().sample(rng)?;
            let u = uniform(rng);
            let r = codomain.norm_of(&op.apply_unchecked(&theta));
            if !accept(u, r, bound, alpha) {
                continue;
            }
            let values = (-(back as i64)..=fwd as i64)
                .map(|t| match self.fam.get(n + t) {
                    Some(tn) => tn
                        .apply_unchecked(&theta)
                        .into_iter()
                        .map(|x| x / r)
                        .collect(),
                    None => vec![0.0; codomain.dim()],
                })
                .collect();
            return Ok(SpectralWindow {
                back,
                fwd,
                values,
                origin: n,
                trials: trial,
            });
        }
        Err(exhausted(
            "linear-process spectral sampler",
            self.max_trials,
        ))
    }
}

/// Spectral process of the AR(1) recursion `X_t = T X_{t-1} + Z_t`.
#[derive(Debug, Clone)]
pub struct Ar1Sampler {
    op: Operator,
    base: RegVarDist,
    space: Space,
    powers: Vec<Operator>,
    power_bounds: Vec<OperatorNormBound>,
    consts: SeriesConstants,
    cumulative: Vec<f64>,
    contraction_power: usize,
    tail_bound: f64,
    max_trials: u64,
}

impl Ar1Sampler {
    /// Builds `T^n` and `c_n = E ||T^n Θ||^alpha` for `0 <= n <= horizon`.
    ///
    /// Fails unless some `||T^m|| < 1` with `m <= horizon`.
    pub fn new(
        op: Operator,
        base: RegVarDist,
        space: Space,
        horizon: usize,
        n_mc: usize,
        max_trials: u64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if base.dim() != space.dim() {
            return Err(Error::Structural(
                "AR(1) innovations must live in the state space".into(),
            ));
        }
        if op.output_dim(space.dim())? != space.dim() {
            return Err(Error::Structural(
                "AR(1) operator must map the state space to itself".into(),
            ));
        }
        let alpha = base.alpha();
        let mut powers = Vec::with_capacity(horizon + 1);
        let mut power_bounds = Vec::with_capacity(horizon + 1);
        let mut c = Vec::with_capacity(horizon + 1);
        let mut se = Vec::with_capacity(horizon + 1);
        let mut contraction = None;
        for n in 0..=horizon {
            let p = op.power(n);
            let b = p.norm_bound(&space, &space)?;
            if contraction.is_none() && n >= 1 && b.value < 1.0 {
                contraction = Some(n);
            }
            let (cn, sn) = pushforward_constant(&p, &base, &space, n_mc, rng)?;
            c.push(cn);
            se.push(sn);
            power_bounds.push(b);
            powers.push(p);
        }
        let m = contraction.ok_or_else(|| {
            Error::Config(format!(
                "no power T^m with m <= {horizon} has norm below one; the AR(1) recursion is not verifiably contracting"
            ))
        })?;
        let rho = power_bounds[m].value;
        let lead = power_bounds[..m]
            .iter()
            .map(|b| b.value)
            .fold(0.0, f64::max);
        let blocks = ((horizon + 1) / m) as i32;
        let tail_bound =
            lead.powf(alpha) * m as f64 * rho.powf(alpha).powi(blocks) / (1.0 - rho.powf(alpha));
        let consts = SeriesConstants::from_c(0, c, se)?;
        let cumulative = consts.cumulative();
        Ok(Ar1Sampler {
            op,
            base,
            space,
            powers,
            power_bounds,
            consts,
            cumulative,
            contraction_power: m,
            tail_bound,
            max_trials,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn innovations(&self) -> &RegVarDist {
        &self.base
    }

    pub fn constants(&self) -> &SeriesConstants {
        &self.consts
    }

    pub fn horizon(&self) -> usize {
        self.powers.len() - 1
    }

    /// Smallest `m >= 1` found with `||T^m|| < 1`.
    pub fn contraction_power(&self) -> usize {
        self.contraction_power
    }

    /// Upper bound on `sum_{n > horizon} c_n` dropped by the truncation.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn power_bounds(&self) -> &[OperatorNormBound] {
        &self.power_bounds
    }

    /// The family `{T^n}_{0 <= n <= horizon}` as a linear process.
    pub fn as_family(&self) -> Result<OperatorFamily> {
        let alpha = self.base.alpha();
        OperatorFamily::new(
            0,
            self.powers.clone(),
            self.space.clone(),
            self.space.clone(),
            alpha,
            OperatorFamily::default_delta(alpha),
        )
    }
}

impl WindowSampler for Ar1Sampler {
    fn alpha(&self) -> f64 {
        self.base.alpha()
    }

    fn space(&self) -> &Space {
        &self.space
    }

    fn extent(&self) -> usize {
        self.horizon()
    }

    fn sample(&self, back: usize, fwd: usize, rng: &mut Rng) -> Result<SpectralWindow> {
        let n = categorical(&self.cumulative, rng);
        let alpha = self.alpha();
        let bound = self.power_bounds[n].value;
        for trial in 1..=self.max_trials {
            let theta = self.base.angle().sample(rng)?;
            let u = uniform(rng);
            let r = self.space.norm_of(&self.powers[n].apply_unchecked(&theta));
            if !accept(u, r, bound, alpha) {
                continue;
            }
            // Θ_{-N} = Θ^Z / ||T^N Θ^Z||, then Θ_{t+1} = T Θ_t
            let first = -(n as i64);
            let lo = -(back as i64);
            let mut values = Vec::with_capacity(back + fwd + 1);
            for _ in lo..first.min(fwd as i64 + 1) {
                values.push(vec![0.0; self.space.dim()]);
            }
            let mut cur: Vec<f64> = theta.iter().map(|x| x / r).collect();
            for t in first..=fwd as i64 {
                if t > first {
                    cur = self.op.apply_unchecked(&cur);
                }
                if t >= lo {
                    values.push(cur.clone());
                }
            }
            return Ok(SpectralWindow {
                back,
                fwd,
                values,
                origin: n as i64,
                trials: trial,
            });
        }
        Err(exhausted("AR(1) spectral sampler", self.max_trials))
    }
}

/// Spectral process of `(A X_t)` given a sampler for that of `(X_t)`.
pub struct TransformedSampler {
    inner: Box<dyn WindowSampler>,
    op: Operator,
    codomain: Space,
    bound: OperatorNormBound,
    max_trials: u64,
}

impl TransformedSampler {
    pub fn new(
        inner: Box<dyn WindowSampler>,
        op: Operator,
        codomain: Space,
        max_trials: u64,
    ) -> Result<Self> {
        let bound = op.norm_bound(inner.space(), &codomain)?;
        Self::with_bound(inner, op, codomain, bound, max_trials)
    }

    pub fn with_bound(
        inner: Box<dyn WindowSampler>,
        op: Operator,
        codomain: Space,
        bound: OperatorNormBound,
        max_trials: u64,
    ) -> Result<Self> {
        if op.output_dim(inner.space().dim())? != codomain.dim() {
            return Err(Error::Structural("transform codomain mismatch".into()));
        }
        if !(bound.value > 0.0) {
            return Err(Error::Domain("transform annihilates Θ_0".into()));
        }
        Ok(TransformedSampler {
            inner,
            op,
            codomain,
            bound,
            max_trials,
        })
    }
}

impl WindowSampler for TransformedSampler {
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn space(&self) -> &Space {
        &self.codomain
    }

    fn extent(&self) -> usize {
        self.inner.extent()
    }

    fn sample(&self, back: usize, fwd: usize, rng: &mut Rng) -> Result<SpectralWindow> {
        let alpha = self.alpha();
        let mut spent = 0;
        for _ in 0..self.max_trials {
            let w = self.inner.sample(back, fwd, rng)?;
            spent += w.trials;
            let u = uniform(rng);
            let r = self.codomain.norm_of(&self.op.apply_unchecked(w.theta0()));
            if !accept(u, r, self.bound.value, alpha) {
                continue;
            }
            let values = w
                .values
                .iter()
                .map(|v| {
                    self.op
                        .apply_unchecked(v)
                        .into_iter()
                        .map(|x| x / r)
                        .collect()
                })
                .collect();
            return Ok(SpectralWindow {
                back,
                fwd,
                values,
                origin: w.origin,
                trials: spent,
            });
        }
        Err(exhausted(
            "transformed-series spectral sampler",
            self.max_trials,
        ))
    }
}

/// Attaches an independent Pareto radius to a spectral window.
pub fn tail_window_sample(
    sampler: &dyn WindowSampler,
    back: usize,
    fwd: usize,
    rng: &mut Rng,
) -> Result<TailWindow> {
    let window = sampler.sample(back, fwd, rng)?;
    let radius = pareto_sample(sampler.alpha(), rng)?;
    Ok(TailWindow { radius, window })
}

/// A tail window conditioned on `sup_{-back <= t <= -1} ||Y_t|| <= 1`.
/// Returns the draw and the number of tail windows generated.
pub fn cluster_window_sample(
    sampler: &dyn WindowSampler,
    back: usize,
    fwd: usize,
    rng: &mut Rng,
) -> Result<(TailWindow, u64)> {
    if back < sampler.extent() {
        return Err(Error::Config(format!(
            "lookback {back} does not cover the process extent {}",
            sampler.extent()
        )));
    }
    let space = sampler.space();
    let max_trials = (1.0 / MIN_CLUSTER_ACCEPTANCE) as u64;
    for trial in 1..=max_trials {
        let tw = tail_window_sample(sampler, back, fwd, rng)?;
        let quiet_past = tw.window.values[..back]
            .iter()
            .all(|v| tw.radius * space.norm_of(v) <= 1.0);
        if quiet_past {
            return Ok((tw, trial));
        }
    }
    Err(exhausted("cluster sampler", max_trials))
}
