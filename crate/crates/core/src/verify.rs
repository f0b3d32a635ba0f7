//! Verification suites: Monte Carlo and empirical checks of a configured
//! model against exact identities and closed forms.

use std::str::FromStr;

use crate::banach::Operator;
use crate::config::{BaseSampler, Model, ModelKind};
use crate::error::{Error, Result};
use crate::estimate::{
    big_jump_check_paired, blocks_extremal_index, collect_exceedances, empirical_quantile,
    empirical_spectral_stat, empirical_tail_dependence, spectral_stat_sweep, TailDepMode,
};
use crate::mc::{par_chunks, stream_rng, Rng};
use crate::report::{Check, Environment, ToleranceRule, VerificationReport};
use crate::rv::SpectralSampler;
use crate::spectral::{
    limit_measure_mass, pushforward_spectral_sample, time_change, window_expectation, window_mean,
    NormRect, OperatorFamily, WindowFn, WindowSampler,
};
use crate::summaries::{
    extremal_index, isometry_norm_extremal_index, joint_survival_limit, ma_real_specials,
    tail_dependence, ExtremalMode, LinearFunctional, Pairing,
};

/// Draws behind each pushforward total-variation check.
pub const TV_SAMPLES: usize = 1_000_000;

/// Largest total-variation distance accepted for a pushforward sampler.
pub const TV_LIMIT: f64 = 0.01;

/// Exceedance level of the empirical checks.
pub const EMPIRICAL_LEVEL: f64 = 0.999;

/// Lower levels whose largest drift from the main level sizes the
/// finite-threshold bias allowance.
pub const SWEEP_LEVELS: [f64; 2] = [0.99, 0.995];

/// Tail level `V(x)` of the first big-jump threshold.
pub const BIG_JUMP_LEVEL: f64 = 1e-4;

/// Mixture components below this weight do not count towards the effective
/// memory used to size blocks.
const EXTENT_WEIGHT: f64 = 1e-3;

/// Pushforward checks are run for at most this many family members.
const TV_MEMBERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    TimeChange,
    Mixture,
    BigJump,
    EmpiricalVsClosed,
    LimitMeasure,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::TimeChange,
        Suite::Mixture,
        Suite::BigJump,
        Suite::EmpiricalVsClosed,
        Suite::LimitMeasure,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::TimeChange => "time-change",
            Suite::Mixture => "mixture",
            Suite::BigJump => "big-jump",
            Suite::EmpiricalVsClosed => "empirical-vs-closed",
            Suite::LimitMeasure => "limit-measure",
            Suite::All => "all",
        }
    }

    fn stream(&self) -> u64 {
        match self {
            Suite::TimeChange => 1,
            Suite::Mixture => 2,
            Suite::BigJump => 3,
            Suite::EmpiricalVsClosed => 4,
            Suite::LimitMeasure => 5,
            Suite::All => 0,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .chain([Suite::All])
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

/// Runs a suite with generators derived from the model seed. Each suite has
/// its own stream, so `all` reproduces the individual suites.
pub fn run_suite(model: &Model, suite: Suite) -> Result<VerificationReport> {
    let suites: Vec<Suite> = match suite {
        Suite::All => Suite::ALL.to_vec(),
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in suites {
        let mut rng = stream_rng(model.seed(), s.stream());
        let mut part = match s {
            Suite::TimeChange => time_change_suite(model, &mut rng)?,
            Suite::Mixture => mixture_suite(model, &mut rng)?,
            Suite::BigJump => big_jump_suite(model, &mut rng)?,
            Suite::EmpiricalVsClosed => empirical_suite(model, &mut rng)?,
            Suite::LimitMeasure => limit_measure_suite(model, &mut rng)?,
            Suite::All => unreachable!(),
        };
        checks.append(&mut part);
    }
    Ok(VerificationReport::new(
        suite.name(),
        Environment::new(model.seed()),
        checks,
    ))
}

const SIGMA3: ToleranceRule = ToleranceRule::Sigma { k: 3.0 };

pub fn time_change_suite(model: &Model, rng: &mut Rng) -> Result<Vec<Check>> {
    let sampler = model.window_sampler(rng)?;
    let sampler = sampler.as_ref();
    let space = sampler.space().clone();
    let alpha = sampler.alpha();
    let n = model.n_samples();
    let t = 1;
    let mut checks = Vec::new();
    for s in [1usize, 2] {
        let last = s + t;
        let lead = |w: &[Vec<f64>]| space.norm_of(&w[0]).powf(alpha).min(1.0);
        let with_end = |w: &[Vec<f64>]| lead(w) * space.norm_of(&w[last]).min(1.0);
        let gated = |w: &[Vec<f64>]| {
            if space.norm_of(&w[0]) > 0.2 {
                space.norm_of(&w[last]).min(1.0)
            } else {
                0.0
            }
        };
        let fs: [(&str, &WindowFn); 3] = [
            ("lead_min", &lead),
            ("lead_min_times_end", &with_end),
            ("gated_end", &gated),
        ];
        for (name, f) in fs {
            let tc = time_change(sampler, s, t, f, n, rng)?;
            checks.push(Check::agree(
                format!("time-change/s={s}/t={t}/{name}"),
                tc.lhs,
                tc.rhs,
                3.0,
            ));
        }
        let past = |w: &[Vec<f64>]| if space.norm_of(&w[0]) > 0.0 { 1.0 } else { 0.0 };
        let lhs = window_expectation(sampler, s, 0, &past, n, rng)?;
        let fwd = |w: &[Vec<f64>]| space.norm_of(&w[s]).powf(alpha);
        let rhs = window_mean(sampler, 0, s, &fwd, n, rng)?;
        checks.push(Check::agree(
            format!("time-change/s={s}/past-nonzero-vs-forward-mass"),
            lhs,
            rhs,
            3.0,
        ));
    }
    Ok(checks)
}

/// Exact tilted law of `A Θ / ||A Θ||` for atomic `Θ`: distinct images and weights.
fn exact_tilt(
    op: &Operator,
    atoms: &(Vec<Vec<f64>>, Vec<f64>),
    model: &Model,
    codomain: &crate::banach::Space,
) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let alpha = model.alpha();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (theta, w) in atoms.0.iter().zip(&atoms.1) {
        let y = op.apply_unchecked(theta);
        let r = codomain.norm_of(&y);
        if r == 0.0 || *w == 0.0 {
            continue;
        }
        let img: Vec<f64> = y.iter().map(|v| v / r).collect();
        let mass = w * r.powf(alpha);
        match images.iter().position(|i| same_point(i, &img)) {
            Some(k) => weights[k] += mass,
            None => {
                images.push(img);
                weights.push(mass);
            }
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    Some((images, weights.into_iter().map(|w| w / total).collect()))
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
}

pub fn mixture_suite(model: &Model, rng: &mut Rng) -> Result<Vec<Check>> {
    let base = model.base_sampler(rng)?;
    let sampler = base.as_window_sampler();
    let consts = base.constants().clone();
    let n = model.n_samples();
    let k = consts.p.len();
    let start = consts.start;
    let parts = par_chunks(n, rng, |r, m| -> Result<Vec<u64>> {
        let mut counts = vec![0u64; k];
        for _ in 0..m {
            let w = sampler.sample(0, 0, r)?;
            counts[(w.origin - start) as usize] += 1;
        }
        Ok(counts)
    });
    let mut counts = vec![0u64; k];
    for p in parts.into_iter().collect::<Result<Vec<_>>>()? {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    let p_se = consts.p_stderr();
    let mut checks = Vec::new();
    for j in 0..k {
        let p = consts.p[j];
        if p * (n as f64) < 1.0 {
            continue;
        }
        let freq = counts[j] as f64 / n.max(1) as f64;
        let se = (p * (1.0 - p) / n as f64 + p_se[j] * p_se[j]).sqrt();
        checks.push(Check::new(
            format!("mixture/origin-frequency/n={}", start + j as i64),
            freq,
            p,
            se,
            SIGMA3,
        ));
    }

    if let Some(atoms) = model.innov.angle().atoms() {
        let fam = model.family()?;
        let codomain = fam.codomain().clone();
        let mut members: Vec<usize> = (0..fam.len())
            .filter(|&j| consts.p[j] >= EXTENT_WEIGHT)
            .collect();
        members.truncate(TV_MEMBERS);
        let angle = model.innov.angle().clone();
        for j in members {
            let op = &fam.ops()[j];
            let Some((images, exact)) = exact_tilt(op, &atoms, model, &codomain) else {
                continue;
            };
            let bound = fam.bounds()[j];
            let trials = model.config.mc.max_rejection_trials;
            let alpha = model.alpha();
            let parts = par_chunks(TV_SAMPLES, rng, |r, m| -> Result<Vec<u64>> {
                let mut hits = vec![0u64; images.len() + 1];
                for _ in 0..m {
                    let (v, _) = pushforward_spectral_sample(
                        op, &angle, alpha, &codomain, bound, trials, r,
                    )?;
                    let slot = images
                        .iter()
                        .position(|i| same_point(i, &v))
                        .unwrap_or(images.len());
                    hits[slot] += 1;
                }
                Ok(hits)
            });
            let mut hits = vec![0u64; images.len() + 1];
            for p in parts.into_iter().collect::<Result<Vec<_>>>()? {
                for (h, v) in hits.iter_mut().zip(p) {
                    *h += v;
                }
            }
            let total = TV_SAMPLES as f64;
            let tv = 0.5
                * (exact
                    .iter()
                    .zip(&hits)
                    .map(|(e, h)| (*h as f64 / total - e).abs())
                    .sum::<f64>()
                    + hits[images.len()] as f64 / total);
            checks.push(Check::new(
                format!("mixture/pushforward-tv/n={}", fam.start() + j as i64),
                tv,
                TV_LIMIT,
                0.0,
                ToleranceRule::StrictLess,
            ));
        }
    }
    Ok(checks)
}

/// Family members that carry a visible share of `sum_n ||T_n||^alpha`.
fn significant_family(model: &Model) -> Result<OperatorFamily> {
    let fam = model.family()?;
    let alpha = model.alpha();
    let pow: Vec<f64> = fam.bounds().iter().map(|b| b.value.powf(alpha)).collect();
    let total: f64 = pow.iter().sum();
    let keep = pow
        .iter()
        .rposition(|p| *p > 1e-9 * total)
        .map_or(1, |i| i + 1);
    if keep == fam.len() {
        return Ok(fam);
    }
    OperatorFamily::new(
        fam.start(),
        fam.ops()[..keep].to_vec(),
        fam.domain().clone(),
        fam.codomain().clone(),
        alpha,
        fam.delta(),
    )
}

pub fn big_jump_suite(model: &Model, rng: &mut Rng) -> Result<Vec<Check>> {
    let fam = significant_family(model)?;
    let x = model.innov.tail_quantile(BIG_JUMP_LEVEL)?;
    let n = model.config.mc.big_jump_samples;
    let r = big_jump_check_paired(&fam, &model.innov, &[x, 10.0 * x], n, rng)?;
    let rel = ToleranceRule::Relative { tol: 0.1 };
    let mut checks = vec![
        Check::new(
            "big-jump/norm-of-sum-ratio",
            r[0].ratio_sum_norm.value,
            r[0].target,
            r[0].ratio_sum_norm.stderr,
            rel,
        ),
        Check::new(
            "big-jump/sum-of-norms-ratio",
            r[0].ratio_norm_sum.value,
            r[0].target,
            r[0].ratio_norm_sum.stderr,
            rel,
        ),
    ];
    let (d1, d10) = (r[0].discrepancy, r[1].discrepancy);
    if d1.value == 0.0 {
        checks.push(Check::new(
            "big-jump/discrepancy-vanishes",
            d10.value,
            0.0,
            d10.stderr,
            ToleranceRule::Absolute { tol: 0.0 },
        ));
    } else {
        checks.push(Check::new(
            "big-jump/discrepancy-decreases",
            d10.value,
            d1.value,
            d10.stderr.hypot(d1.stderr),
            ToleranceRule::StrictLess,
        ));
    }
    Ok(checks)
}

/// `(a_n, p)` when the observed series is a real moving average with
/// Rademacher innovations.
fn real_ma(model: &Model) -> Option<(Vec<f64>, f64)> {
    if model.transform.is_some() || model.state.dim() != 1 {
        return None;
    }
    let SpectralSampler::Rademacher { p } = model.innov.angle() else {
        return None;
    };
    let fam = match &model.kind {
        ModelKind::Linear(f) => f.clone(),
        ModelKind::Ar1 { .. } => model.family().ok()?,
        ModelKind::SequenceSpace(_) => return None,
    };
    let a = fam
        .ops()
        .iter()
        .map(|op| match op {
            Operator::Scalar { a } => Some(*a),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()?;
    Some((a, *p))
}

/// Lags across which mixture components of visible weight reach.
fn effective_extent(base: &BaseSampler) -> usize {
    let p = &base.constants().p;
    let first = p.iter().position(|v| *v >= EXTENT_WEIGHT).unwrap_or(0);
    let last = p.iter().rposition(|v| *v >= EXTENT_WEIGHT).unwrap_or(0);
    last - first
}

pub fn empirical_suite(model: &Model, rng: &mut Rng) -> Result<Vec<Check>> {
    let sampler = model.window_sampler(rng)?;
    let sampler = sampler.as_ref();
    let base = model.base_sampler(rng)?;
    let space = model.observed_space().clone();
    let alpha = model.alpha();
    let n = model.n_samples();
    let path = model.simulate(&model.path_config())?;
    let norms = path.norms(&space);
    let u = empirical_quantile(&norms, EMPIRICAL_LEVEL)?;
    let abs = ToleranceRule::Absolute { tol: 0.05 };
    let mut checks = Vec::new();

    // tail dependence at lag one
    match real_ma(model).and_then(|(a, p)| ma_real_specials(&a, alpha, p).ok().map(|m| (m, a))) {
        Some((m, _)) if m.prob_theta0_plus > 0.0 => {
            let mode = TailDepMode::Functional(LinearFunctional::coordinate(1, 0));
            let emp = empirical_tail_dependence(&path, &space, u, 1, &mode)?;
            checks.push(Check::new(
                "empirical/tail-dependence/lag=1/closed-form",
                emp.value,
                m.tail_dep(1)?,
                emp.stderr,
                abs,
            ));
        }
        _ => {
            let emp = empirical_tail_dependence(&path, &space, u, 1, &TailDepMode::Norm)?;
            let target = tail_dependence(sampler, 1, &Pairing::Norm(1.0), n, rng)?;
            checks.push(Check::new(
                "empirical/tail-dependence/lag=1/norm",
                emp.value,
                target.value,
                emp.stderr,
                abs,
            ));
        }
    }

    // blocks extremal index of the norms
    let block = 50.max(2 * effective_extent(&base));
    let emp = blocks_extremal_index(&norms, u, block)?;
    let closed = match (&model.transform, model.family()?.isometry_norms()) {
        (None, Some(norms)) => Some(isometry_norm_extremal_index(&norms, alpha)?),
        _ => None,
    };
    let target = match closed {
        Some(v) => v,
        None => extremal_index(sampler, &ExtremalMode::Norm, sampler.extent(), n, rng)?.value,
    };
    checks.push(Check::new(
        format!("empirical/blocks-extremal-index/block={block}"),
        emp.value,
        target,
        emp.stderr,
        abs,
    ));

    // conditional spectral statistic E min(||Θ_1||^alpha, 1)
    let f = |w: &[Vec<f64>]| space.norm_of(&w[1]).powf(alpha).min(1.0);
    let emp = empirical_spectral_stat(&collect_exceedances(&path, &space, u, 0, 1), &f)?;
    let bias = spectral_stat_sweep(&path, &space, &SWEEP_LEVELS, 0, 1, &f)?
        .iter()
        .map(|e| (e.value - emp.value).abs())
        .fold(0.0, f64::max);
    let target = window_mean(sampler, 0, 1, &f, n, rng)?;
    checks.push(Check::new(
        "empirical/spectral-stat/min-forward-mass",
        emp.value,
        target.value,
        emp.stderr.hypot(target.stderr),
        ToleranceRule::SigmaPlusBias { k: 3.0, bias },
    ));
    Ok(checks)
}

pub fn limit_measure_suite(model: &Model, rng: &mut Rng) -> Result<Vec<Check>> {
    let sampler = model.window_sampler(rng)?;
    let sampler: &dyn WindowSampler = sampler.as_ref();
    let alpha = model.alpha();
    let n = model.n_samples();
    let mut checks = Vec::new();
    for r in [1.0f64, 2.0, 4.0] {
        let est = limit_measure_mass(sampler, &NormRect::new(vec![Some(r)])?, n, rng)?;
        checks.push(Check::new(
            format!("limit-measure/k=1/r={r}"),
            est.value,
            r.powf(-alpha),
            est.stderr,
            SIGMA3,
        ));
    }
    let a = limit_measure_mass(sampler, &NormRect::all_above(2, 1.0)?, n, rng)?;
    let b = limit_measure_mass(sampler, &NormRect::all_above(2, 2.0)?, n, rng)?;
    let scale = 2f64.powf(-alpha);
    checks.push(Check::new(
        "limit-measure/k=2/homogeneity",
        b.value,
        scale * a.value,
        b.stderr.hypot(scale * a.stderr),
        SIGMA3,
    ));
    let js = joint_survival_limit(
        sampler,
        &[(0, Pairing::Norm(1.0)), (1, Pairing::Norm(1.0))],
        n,
        rng,
    )?;
    checks.push(Check::agree(
        "limit-measure/k=2/joint-survival",
        a,
        js.estimate(),
        3.0,
    ));
    Ok(checks)
}
