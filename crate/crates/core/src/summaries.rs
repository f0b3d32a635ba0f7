//! Limit functionals of the spectral process: joint survival limits, tail
//! dependence, extremograms, extremal indices, and closed forms for real
//! moving averages.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::banach::Space;
use crate::error::{Error, Result};
use crate::mc::{merge_means, merge_pairs, par_chunks, Estimate, MeanAcc, PairAcc, Rng};
use crate::spectral::{tail_window_sample, WindowSampler};

/// `x -> sum_i b_i x_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFunctional {
    pub coeffs: Vec<f64>,
    pub label: String,
}

impl LinearFunctional {
    pub fn new(coeffs: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(
                "functional coefficients must be finite".into(),
            ));
        }
        Ok(LinearFunctional {
            coeffs,
            label: label.into(),
        })
    }

    /// The coordinate functional `x -> x_index`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        let mut coeffs = vec![0.0; dim];
        coeffs[index] = 1.0;
        LinearFunctional {
            coeffs,
            label: format!("e{index}"),
        }
    }

    #[inline]
    pub fn apply(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(b, v)| b * v).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    fn check_dim(&self, space: &Space) -> Result<()> {
        if self.coeffs.len() != space.dim() {
            return Err(Error::Structural(format!(
                "functional has {} coefficients for a space of dimension {}",
                self.coeffs.len(),
                space.dim()
            )));
        }
        Ok(())
    }
}

/// How a coordinate of the window enters a joint survival limit.
#[derive(Debug, Clone, PartialEq)]
pub enum Pairing {
    /// `(b* θ)_+`
    Dual(LinearFunctional),
    /// `b ||θ||` with `b > 0`
    Norm(f64),
}

impl Pairing {
    fn check(&self, space: &Space) -> Result<()> {
        match self {
            Pairing::Dual(b) => {
                b.check_dim(space)?;
                if b.is_zero() {
                    return Err(Error::Domain("functional must be nonzero".into()));
                }
            }
            Pairing::Norm(w) => {
                if !(*w > 0.0 && w.is_finite()) {
                    return Err(Error::Domain(format!("norm weight {w} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// `(b* θ)_+^alpha` or `b^alpha ||θ||^alpha`.
    #[inline]
    fn power(&self, space: &Space, theta: &[f64], alpha: f64) -> f64 {
        match self {
            Pairing::Dual(b) => b.apply(theta).max(0.0).powf(alpha),
            Pairing::Norm(w) => (w * space.norm_of(theta)).powf(alpha),
        }
    }

    fn describe(&self) -> Value {
        match self {
            Pairing::Dual(b) => json!({"dual": b.coeffs}),
            Pairing::Norm(w) => json!({"norm": w}),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    MonteCarlo,
}

/// A limit functional with its provenance. `stderr` is zero exactly for
/// closed forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitFunctionalResult {
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
    pub n_samples: u64,
    pub inputs: Value,
}

impl LimitFunctionalResult {
    pub fn closed_form(value: f64, inputs: Value) -> Self {
        LimitFunctionalResult {
            value,
            stderr: 0.0,
            method: Method::ClosedForm,
            n_samples: 0,
            inputs,
        }
    }

    pub fn monte_carlo(est: Estimate, inputs: Value) -> Self {
        LimitFunctionalResult {
            value: est.value,
            stderr: est.stderr,
            method: Method::MonteCarlo,
            n_samples: est.n,
            inputs,
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.value,
            stderr: self.stderr,
            n: self.n_samples,
        }
    }
}

fn window_extent(lags: impl Iterator<Item = i64> + Clone) -> (usize, usize) {
    let back = lags.clone().map(|l| (-l).max(0)).max().unwrap_or(0) as usize;
    let fwd = lags.map(|l| l.max(0)).max().unwrap_or(0) as usize;
    (back, fwd)
}

fn mean_over_windows(
    sampler: &dyn WindowSampler,
    back: usize,
    fwd: usize,
    n: usize,
    rng: &mut Rng,
    f: impl Fn(&[Vec<f64>]) -> f64 + Sync,
) -> Result<Estimate> {
    let parts = par_chunks(n, rng, |r, k| -> Result<MeanAcc> {
        let mut acc = MeanAcc::default();
        for _ in 0..k {
            acc.push(f(&sampler.sample(back, fwd, r)?.values));
        }
        Ok(acc)
    });
    Ok(Estimate::from_acc(&merge_means(
        &parts.into_iter().collect::<Result<Vec<_>>>()?,
    )))
}

fn ratio_over_windows(
    sampler: &dyn WindowSampler,
    back: usize,
    fwd: usize,
    n: usize,
    rng: &mut Rng,
    f: impl Fn(&[Vec<f64>]) -> (f64, f64) + Sync,
) -> Result<PairAcc> {
    let parts = par_chunks(n, rng, |r, k| -> Result<PairAcc> {
        let mut acc = PairAcc::default();
        for _ in 0..k {
            let (x, y) = f(&sampler.sample(back, fwd, r)?.values);
            acc.push(x, y);
        }
        Ok(acc)
    });
    Ok(merge_pairs(&parts.into_iter().collect::<Result<Vec<_>>>()?))
}

fn checked_ratio(acc: &PairAcc, what: &str) -> Result<Estimate> {
    if !(acc.mean_y() > 3.0 * acc.stderr_y()) {
        return Err(Error::Estimation(format!(
            "undefined coefficient: {what} denominator {:.3e} is within 3 SE ({:.3e}) of zero",
            acc.mean_y(),
            acc.stderr_y()
        )));
    }
    Ok(Estimate::from_ratio(acc))
}

/// `E[min_{i in I} p_i(Θ_i)]` where each `p_i` is a [`Pairing`] raised to
/// the tail index. `I` must contain 0.
pub fn joint_survival_limit(
    sampler: &dyn WindowSampler,
    terms: &[(i64, Pairing)],
    n: usize,
    rng: &mut Rng,
) -> Result<LimitFunctionalResult> {
    if !terms.iter().any(|(i, _)| *i == 0) {
        return Err(Error::Domain("the index set must contain 0".into()));
    }
    let space = sampler.space();
    for (_, p) in terms {
        p.check(space)?;
    }
    let alpha = sampler.alpha();
    let (back, fwd) = window_extent(terms.iter().map(|(i, _)| *i));
    let est = mean_over_windows(sampler, back, fwd, n, rng, |w| {
        terms
            .iter()
            .map(|(i, p)| p.power(space, &w[(*i + back as i64) as usize], alpha))
            .fold(f64::INFINITY, f64::min)
    })?;
    let inputs = json!({
        "index_set": terms.iter().map(|(i, _)| i).collect::<Vec<_>>(),
        "pairings": terms.iter().map(|(_, p)| p.describe()).collect::<Vec<_>>(),
    });
    Ok(LimitFunctionalResult::monte_carlo(est, inputs))
}

/// Upper tail dependence between `b* X_0` and `b* X_h`, or between the norms
/// when `pairing` is [`Pairing::Norm`].
pub fn tail_dependence(
    sampler: &dyn WindowSampler,
    h: i64,
    pairing: &Pairing,
    n: usize,
    rng: &mut Rng,
) -> Result<LimitFunctionalResult> {
    let space = sampler.space();
    pairing.check(space)?;
    let alpha = sampler.alpha();
    let (back, fwd) = window_extent([0, h].into_iter());
    let at_h = (h + back as i64) as usize;
    let inputs = json!({"lag": h, "pairing": pairing.describe()});
    match pairing {
        Pairing::Norm(_) => {
            let est = mean_over_windows(sampler, back, fwd, n, rng, |w| {
                space.norm_of(&w[at_h]).powf(alpha).min(1.0)
            })?;
            Ok(LimitFunctionalResult::monte_carlo(est, inputs))
        }
        Pairing::Dual(b) => {
            let acc = ratio_over_windows(sampler, back, fwd, n, rng, |w| {
                let y = b.apply(&w[back]).max(0.0).powf(alpha);
                let x = y.min(b.apply(&w[at_h]).max(0.0).powf(alpha));
                (x, y)
            })?;
            Ok(LimitFunctionalResult::monte_carlo(
                checked_ratio(&acc, "tail dependence")?,
                inputs,
            ))
        }
    }
}

/// Comparison used by an [`EventSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Gt,
    Ge,
}

/// An event `{||x|| > z}` or `{b* x > z}`, parsed from `norm>z` or
/// `dual[b_1,...,b_d]>z` (`>=` also accepted).
#[derive(Debug, Clone, PartialEq)]
pub enum EventSpec {
    Norm {
        cmp: Cmp,
        threshold: f64,
    },
    Halfspace {
        coeffs: Vec<f64>,
        cmp: Cmp,
        threshold: f64,
    },
}

impl EventSpec {
    pub fn contains(&self, space: &Space, x: &[f64]) -> bool {
        let (v, cmp, z) = match self {
            EventSpec::Norm { cmp, threshold } => (space.norm_of(x), *cmp, *threshold),
            EventSpec::Halfspace {
                coeffs,
                cmp,
                threshold,
            } => (
                coeffs.iter().zip(x).map(|(b, v)| b * v).sum(),
                *cmp,
                *threshold,
            ),
        };
        match cmp {
            Cmp::Gt => v > z,
            Cmp::Ge => v >= z,
        }
    }

    /// Whether the event lies inside `{||x|| > 1}` (or its closure for `>=`
    /// at the boundary, which carries no mass under the tail measure).
    pub fn bounded_away(&self, space: &Space) -> Result<bool> {
        match self {
            EventSpec::Norm { threshold, .. } => Ok(*threshold >= 1.0),
            EventSpec::Halfspace {
                coeffs, threshold, ..
            } => {
                if coeffs.len() != space.dim() {
                    return Err(Error::Structural(format!(
                        "event has {} coefficients for a space of dimension {}",
                        coeffs.len(),
                        space.dim()
                    )));
                }
                // b* x > z forces ||x|| > z / ||b||_*
                let dual = space.dual_norm(coeffs)?;
                Ok(dual > 0.0 && *threshold >= dual)
            }
        }
    }
}

fn parse_number(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        message: format!("{what}: `{}` is not a number", s.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: 1,
            message: format!("{what} must be finite"),
        });
    }
    Ok(v)
}

impl FromStr for EventSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let err = |m: String| Error::Parse {
            line: 1,
            message: m,
        };
        let (lhs, cmp, rhs) = if let Some(i) = s.find(">=") {
            (&s[..i], Cmp::Ge, &s[i + 2..])
        } else if let Some(i) = s.find('>') {
            (&s[..i], Cmp::Gt, &s[i + 1..])
        } else {
            return Err(err(format!("event `{s}` has no `>` comparison")));
        };
        let threshold = parse_number(rhs, "event threshold")?;
        let lhs = lhs.trim();
        if lhs == "norm" {
            return Ok(EventSpec::Norm { cmp, threshold });
        }
        let inner = lhs
            .strip_prefix("dual")
            .map(str::trim_start)
            .and_then(|r| r.strip_prefix('['))
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| {
                err(format!(
                    "event left side `{lhs}` is neither `norm` nor `dual[...]`"
                ))
            })?;
        let coeffs = inner
            .split(',')
            .map(|c| parse_number(c, "functional coefficient"))
            .collect::<Result<Vec<_>>>()?;
        Ok(EventSpec::Halfspace {
            coeffs,
            cmp,
            threshold,
        })
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (cmp, z) = match self {
            EventSpec::Norm { cmp, threshold } | EventSpec::Halfspace { cmp, threshold, .. } => {
                (cmp, threshold)
            }
        };
        match self {
            EventSpec::Norm { .. } => write!(f, "norm")?,
            EventSpec::Halfspace { coeffs, .. } => {
                let parts: Vec<String> = coeffs.iter().map(|c| format!("{c:?}")).collect();
                write!(f, "dual[{}]", parts.join(","))?
            }
        }
        let op = match cmp {
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        };
        write!(f, "{op}{z:?}")
    }
}

/// `Pr(Y_0 in A, Y_h in B)` over tail windows, for `A` inside `{||x|| > 1}`.
pub fn extremogram_limit(
    sampler: &dyn WindowSampler,
    a: &EventSpec,
    b: &EventSpec,
    h: i64,
    n: usize,
    rng: &mut Rng,
) -> Result<LimitFunctionalResult> {
    let space = sampler.space();
    if !a.bounded_away(space)? {
        return Err(Error::Domain(format!(
            "event `{a}` is not bounded away from the origin"
        )));
    }
    b.bounded_away(space)?;
    let (back, fwd) = window_extent([0, h].into_iter());
    let parts = par_chunks(n, rng, |r, k| -> Result<MeanAcc> {
        let mut acc = MeanAcc::default();
        for _ in 0..k {
            let tw = tail_window_sample(sampler, back, fwd, r)?;
            let hit = a.contains(space, &tw.y(0)) && b.contains(space, &tw.y(h));
            acc.push(if hit { 1.0 } else { 0.0 });
        }
        Ok(acc)
    });
    let est = Estimate::from_acc(&merge_means(
        &parts.into_iter().collect::<Result<Vec<_>>>()?,
    ));
    let inputs = json!({"a": a.to_string(), "b": b.to_string(), "lag": h});
    Ok(LimitFunctionalResult::monte_carlo(est, inputs))
}

/// Which extremal index.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtremalMode {
    /// Of the real series `b* X_t`.
    Functional(LinearFunctional),
    /// Of the norms `||X_t||`.
    Norm,
}

/// Extremal index from the sup-difference form over `t <= m_horizon`.
pub fn extremal_index(
    sampler: &dyn WindowSampler,
    mode: &ExtremalMode,
    m_horizon: usize,
    n: usize,
    rng: &mut Rng,
) -> Result<LimitFunctionalResult> {
    if m_horizon < sampler.extent() {
        return Err(Error::Config(format!(
            "horizon {m_horizon} is shorter than the forward extent {} of the process",
            sampler.extent()
        )));
    }
    let space = sampler.space();
    let alpha = sampler.alpha();
    match mode {
        ExtremalMode::Norm => {
            let est = mean_over_windows(sampler, 0, m_horizon, n, rng, |w| {
                let later = w[1..]
                    .iter()
                    .map(|v| space.norm_of(v).powf(alpha))
                    .fold(0.0, f64::max);
                let now = space.norm_of(&w[0]).powf(alpha);
                now.max(later) - later
            })?;
            let inputs = json!({"mode": "norm", "horizon": m_horizon});
            Ok(LimitFunctionalResult::monte_carlo(est, inputs))
        }
        ExtremalMode::Functional(b) => {
            Pairing::Dual(b.clone()).check(space)?;
            let acc = ratio_over_windows(sampler, 0, m_horizon, n, rng, |w| {
                let pos = |v: &[f64]| b.apply(v).max(0.0).powf(alpha);
                let later = w[1..].iter().map(|v| pos(v)).fold(0.0, f64::max);
                let now = pos(&w[0]);
                (now.max(later) - later, now)
            })?;
            let est = checked_ratio(&acc, "extremal index")?;
            let inputs = json!({"mode": "functional", "dual": b.coeffs, "horizon": m_horizon});
            Ok(LimitFunctionalResult::monte_carlo(est, inputs))
        }
    }
}

/// Extremal index of `||X_t||` for an isometry family with norms `||T_n||`.
pub fn isometry_norm_extremal_index(norms: &[f64], alpha: f64) -> Result<f64> {
    let pow: Vec<f64> = norms.iter().map(|v| v.powf(alpha)).collect();
    let total: f64 = pow.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("undefined: all operator norms vanish".into()));
    }
    Ok(pow.iter().copied().fold(0.0, f64::max) / total)
}

/// Closed forms for a real moving average `X_t = sum_n a_n Z_{t-n}` with
/// `Pr(Θ^Z = +1) = p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaSpecials {
    pub a: Vec<f64>,
    pub alpha: f64,
    pub p: f64,
    pub prob_theta0_plus: f64,
    /// `None` when the positive-part denominator vanishes.
    pub theta_plus: Option<f64>,
}

impl MaSpecials {
    fn sums(&self, f: impl Fn(usize) -> (f64, f64)) -> f64 {
        let q = 1.0 - self.p;
        let (mut sp, mut sm) = (0.0, 0.0);
        for n in 0..self.a.len() {
            let (x, y) = f(n);
            sp += x;
            sm += y;
        }
        self.p * sp + q * sm
    }

    fn plus_minus(&self, n: i64) -> (f64, f64) {
        if n < 0 || n as usize >= self.a.len() {
            return (0.0, 0.0);
        }
        let a = self.a[n as usize];
        (a.max(0.0).powf(self.alpha), (-a).max(0.0).powf(self.alpha))
    }

    fn denominator(&self) -> f64 {
        self.sums(|n| self.plus_minus(n as i64))
    }

    /// Upper tail dependence between `X_0` and `X_h`, `h >= 0`.
    pub fn tail_dep(&self, h: i64) -> Result<f64> {
        let den = self.denominator();
        if !(den > 0.0) {
            return Err(Error::Domain(
                "undefined tail dependence: Pr(Θ_0 = +1) = 0".into(),
            ));
        }
        let h = h.abs();
        let num = self.sums(|n| {
            let (p0, m0) = self.plus_minus(n as i64);
            let (ph, mh) = self.plus_minus(n as i64 + h);
            (p0.min(ph), m0.min(mh))
        });
        // indices outside the support contribute min(., 0) = 0
        Ok(num / den)
    }
}

pub fn ma_real_specials(a: &[f64], alpha: f64, p: f64) -> Result<MaSpecials> {
    crate::rv::check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    let total: f64 = a.iter().map(|x| x.abs().powf(alpha)).sum();
    if !(total > 0.0) {
        return Err(Error::Domain("undefined: every coefficient is zero".into()));
    }
    let mut out = MaSpecials {
        a: a.to_vec(),
        alpha,
        p,
        prob_theta0_plus: 0.0,
        theta_plus: None,
    };
    let den = out.denominator();
    out.prob_theta0_plus = den / total;
    if den > 0.0 {
        let q = 1.0 - p;
        let sup_p = a.iter().map(|x| x.max(0.0).powf(alpha)).fold(0.0, f64::max);
        let sup_m = a
            .iter()
            .map(|x| (-x).max(0.0).powf(alpha))
            .fold(0.0, f64::max);
        out.theta_plus = Some((p * sup_p + q * sup_m) / den);
    }
    Ok(out)
}

/// Both sides of `sum_n min(a_n, sup_{t>=1} a_{n+t}) = sum_n a_n - sup_n a_n`
/// for a finite nonnegative sequence.
pub fn seq_identity_check(a: &[f64]) -> (f64, f64) {
    let mut suffix = vec![0.0f64; a.len() + 1];
    for n in (0..a.len()).rev() {
        suffix[n] = suffix[n + 1].max(a[n]);
    }
    let lhs = (0..a.len()).map(|n| a[n].min(suffix[n + 1])).sum();
    let total: f64 = a.iter().sum();
    let sup = a.iter().copied().fold(0.0, f64::max);
    (lhs, total - sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::rng_from_seed;
    use crate::rv::{RegVarDist, SpectralSampler};
    use crate::spectral::{LinearProcessSampler, OperatorFamily, DEFAULT_MAX_TRIALS};

    fn ma_p(coeffs: &[f64], alpha: f64, p: f64) -> LinearProcessSampler {
        let fam = OperatorFamily::scalar_ma(coeffs, alpha).unwrap();
        let base = RegVarDist::new(alpha, 1.0, SpectralSampler::rademacher(p).unwrap()).unwrap();
        LinearProcessSampler::build(fam, base, 0, DEFAULT_MAX_TRIALS, &mut rng_from_seed(1))
            .unwrap()
    }

    fn ma(coeffs: &[f64], alpha: f64) -> LinearProcessSampler {
        ma_p(coeffs, alpha, 1.0)
    }

    fn id() -> Pairing {
        Pairing::Dual(LinearFunctional::coordinate(1, 0))
    }

    fn within(r: &LimitFunctionalResult, target: f64, k: f64) {
        assert!(
            (r.value - target).abs() <= k * r.stderr.max(1e-12),
            "{} vs {target} (se {})",
            r.value,
            r.stderr
        );
    }

    #[test]
    fn joint_survival_examples() {
        let mut rng = rng_from_seed(2);
        let r = joint_survival_limit(&ma(&[1.0], 1.0), &[(0, id())], 1000, &mut rng).unwrap();
        assert_eq!(r.value, 1.0);
        let r = joint_survival_limit(&ma(&[1.0], 1.0), &[(0, id()), (1, id())], 1000, &mut rng)
            .unwrap();
        assert_eq!(r.value, 0.0);
        let r = joint_survival_limit(
            &ma(&[1.0, 1.0], 1.0),
            &[(0, id()), (1, id())],
            40_000,
            &mut rng,
        )
        .unwrap();
        within(&r, 0.5, 4.0);
        let err = joint_survival_limit(&ma(&[1.0], 1.0), &[(1, id())], 10, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn joint_survival_is_shift_consistent() {
        // conditioning at 0 versus at 1 of the same pair of times
        let s = ma_p(&[1.0, -0.6, 0.8], 1.5, 0.7);
        let mut rng = rng_from_seed(3);
        let at0 = joint_survival_limit(&s, &[(0, id()), (2, id())], 80_000, &mut rng).unwrap();
        let at2 = joint_survival_limit(&s, &[(-2, id()), (0, id())], 80_000, &mut rng).unwrap();
        assert!((at0.value - at2.value).abs() < 3.0 * at0.stderr.hypot(at2.stderr));
        let n0 = joint_survival_limit(
            &s,
            &[(0, Pairing::Norm(1.0)), (1, Pairing::Norm(2.0))],
            80_000,
            &mut rng,
        )
        .unwrap();
        let n1 = joint_survival_limit(
            &s,
            &[(-1, Pairing::Norm(1.0)), (0, Pairing::Norm(2.0))],
            80_000,
            &mut rng,
        )
        .unwrap();
        assert!((n0.value - n1.value).abs() < 3.0 * n0.stderr.hypot(n1.stderr));
    }

    #[test]
    fn tail_dependence_examples() {
        let mut rng = rng_from_seed(4);
        let r = tail_dependence(&ma(&[1.0], 1.0), 2, &id(), 1000, &mut rng).unwrap();
        assert_eq!(r.value, 0.0);
        let r = tail_dependence(&ma_p(&[1.0, 0.4], 1.0, 0.5), 0, &id(), 1000, &mut rng).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = tail_dependence(&ma(&[1.0, 1.0], 1.0), 1, &id(), 40_000, &mut rng).unwrap();
        within(&r, 0.5, 4.0);
    }

    #[test]
    fn tail_dependence_matches_closed_form_and_is_symmetric() {
        let a = [1.0, -0.5, 0.7];
        let s = ma_p(&a, 1.2, 0.6);
        let exact = ma_real_specials(&a, 1.2, 0.6).unwrap();
        let mut rng = rng_from_seed(5);
        for h in [1, 2] {
            let fwd = tail_dependence(&s, h, &id(), 100_000, &mut rng).unwrap();
            let bwd = tail_dependence(&s, -h, &id(), 100_000, &mut rng).unwrap();
            within(&fwd, exact.tail_dep(h).unwrap(), 4.0);
            assert!(
                (fwd.value - bwd.value).abs() <= 3.0 * fwd.stderr.hypot(bwd.stderr),
                "{fwd:?} {bwd:?} {}",
                exact.tail_dep(h).unwrap()
            );
        }
    }

    #[test]
    fn undefined_tail_dependence_is_an_error() {
        // negative innovations only: b* Θ_0 is never positive
        let s = ma_p(&[1.0], 1.0, 0.0);
        let err = tail_dependence(&s, 1, &id(), 1000, &mut rng_from_seed(6)).unwrap_err();
        assert!(matches!(err, Error::Estimation(_)));
    }

    #[test]
    fn extremogram_examples() {
        let above: EventSpec = "dual[1]>1".parse().unwrap();
        let mut rng = rng_from_seed(7);
        let r = extremogram_limit(&ma(&[1.0], 1.0), &above, &above, 1, 1000, &mut rng).unwrap();
        assert_eq!(r.value, 0.0);
        let norm: EventSpec = "norm>1".parse().unwrap();
        let r = extremogram_limit(&ma(&[1.0, 0.3], 1.0), &norm, &norm, 0, 1000, &mut rng).unwrap();
        assert_eq!(r.value, 1.0);
        let r =
            extremogram_limit(&ma(&[1.0, 1.0], 1.0), &above, &above, 1, 40_000, &mut rng).unwrap();
        within(&r, 0.5, 4.0);
        let inner: EventSpec = "norm>0.5".parse().unwrap();
        let err = extremogram_limit(&ma(&[1.0], 1.0), &inner, &norm, 1, 10, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn event_specs_round_trip() {
        for s in ["norm>1.5", "dual[1.0,-0.5]>=2.0", "norm>=1.0"] {
            let e: EventSpec = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
            assert_eq!(e.to_string().parse::<EventSpec>().unwrap(), e);
        }
        for bad in [
            "",
            "norm",
            "norm>",
            "norm>x",
            "dual>1",
            "dual[1,]>1",
            "foo>1",
            "norm>inf",
        ] {
            assert!(bad.parse::<EventSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn extremal_index_examples() {
        let mut rng = rng_from_seed(8);
        let r = extremal_index(&ma(&[1.0], 2.0), &ExtremalMode::Norm, 1, 1000, &mut rng).unwrap();
        assert_eq!(r.value, 1.0);
        let r = extremal_index(
            &ma_p(&[1.0, 1.0], 2.0, 0.5),
            &ExtremalMode::Norm,
            1,
            40_000,
            &mut rng,
        )
        .unwrap();
        within(&r, 0.5, 4.0);
        let b = ExtremalMode::Functional(LinearFunctional::coordinate(1, 0));
        let r = extremal_index(&ma(&[1.0, 0.8, 0.6], 2.0), &b, 2, 100_000, &mut rng).unwrap();
        within(&r, 0.5, 4.0);
        let err = extremal_index(&ma(&[1.0, 0.8, 0.6], 2.0), &b, 1, 10, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn extremal_index_agrees_with_closed_form() {
        let a = [0.5, 1.0, 0.9, 0.2];
        let s = ma(&a, 1.0);
        let exact = ma_real_specials(&a, 1.0, 1.0).unwrap().theta_plus.unwrap();
        let b = ExtremalMode::Functional(LinearFunctional::coordinate(1, 0));
        let r = extremal_index(&s, &b, 3, 100_000, &mut rng_from_seed(9)).unwrap();
        assert!((0.0..=1.0).contains(&r.value));
        within(&r, exact, 3.0);
        let iso = isometry_norm_extremal_index(&a, 1.0).unwrap();
        assert!((iso - 1.0 / 2.6).abs() < 1e-15);
    }

    #[test]
    fn ma_specials_examples() {
        let m = ma_real_specials(&[1.0], 1.7, 0.3).unwrap();
        assert!((m.prob_theta0_plus - 0.3).abs() < 1e-15);
        assert_eq!(m.theta_plus, Some(1.0));
        let m = ma_real_specials(&[1.0, -1.0], 1.0, 1.0).unwrap();
        assert_eq!(m.prob_theta0_plus, 0.5);
        assert_eq!(m.theta_plus, Some(1.0));
        let m = ma_real_specials(&[1.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(m.theta_plus, Some(0.5));
        assert_eq!(m.tail_dep(1).unwrap(), 0.5);
        assert!(ma_real_specials(&[0.0, 0.0], 1.0, 0.5).is_err());
        let neg = ma_real_specials(&[1.0], 1.0, 0.0).unwrap();
        assert_eq!(neg.theta_plus, None);
        assert!(neg.tail_dep(1).is_err());
    }

    #[test]
    fn seq_identity_examples() {
        assert_eq!(seq_identity_check(&[1.0]), (0.0, 0.0));
        assert_eq!(seq_identity_check(&[1.0, 1.0]), (1.0, 1.0));
        assert_eq!(seq_identity_check(&[3.0, 1.0, 2.0]), (3.0, 3.0));
        assert_eq!(seq_identity_check(&[]), (0.0, 0.0));
    }
}
