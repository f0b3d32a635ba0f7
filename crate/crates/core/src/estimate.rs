//! Empirical counterparts of the limit functionals, computed from a sample
//! path: conditional-on-exceedance statistics, tail dependence, extremal
//! index estimators, the Hill estimator and single-big-jump checks.

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::banach::Space;
use crate::error::{Error, Result};
use crate::mc::{par_chunks, rng_from_seed, Estimate, Rng};
use crate::rv::RegVarDist;
use crate::simulate::Path;
use crate::spectral::{series_constants, OperatorFamily, WindowFn};
use crate::summaries::LinearFunctional;

/// Bootstrap replicates behind every block-bootstrap standard error.
pub const BOOTSTRAP_REPLICATES: usize = 200;

const BOOTSTRAP_SEED: u64 = 0x626f_6f74;

/// Default quantile level of the exceedance threshold.
pub const DEFAULT_LEVEL: f64 = 0.999;

/// Windows around the times where `||X_t|| > u`, each divided by the anchor norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceSet {
    pub threshold: f64,
    pub back: usize,
    pub fwd: usize,
    /// Row indices of the anchors, increasing.
    pub anchors: Vec<usize>,
    pub windows: Vec<Vec<Vec<f64>>>,
}

impl ExceedanceSet {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// An estimate from data, with the threshold it was computed at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub value: f64,
    pub stderr: f64,
    pub n_effective: usize,
    pub threshold: f64,
    pub method: String,
}

impl EstimateResult {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.value,
            stderr: self.stderr,
            n: self.n_effective as u64,
        }
    }
}

/// Empirical quantile of the values at `level` (lower order statistic).
pub fn empirical_quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Estimation("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::Domain(format!(
            "quantile level {level} outside [0, 1]"
        )));
    }
    let mut v = values.to_vec();
    let k = ((level * v.len() as f64).floor() as usize).min(v.len() - 1);
    let (_, q, _) = v.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*q)
}

/// Every time with a full window on `[-back, fwd]` and `||X_t|| > u`.
pub fn collect_exceedances(
    path: &Path,
    space: &Space,
    u: f64,
    back: usize,
    fwd: usize,
) -> ExceedanceSet {
    let n = path.len();
    let mut anchors = Vec::new();
    let mut windows = Vec::new();
    if n > back + fwd {
        for k in back..n - fwd {
            let r = space.norm_of(path.row(k));
            if r > u {
                anchors.push(k);
                windows.push(
                    (k - back..=k + fwd)
                        .map(|j| path.row(j).iter().map(|x| x / r).collect())
                        .collect(),
                );
            }
        }
    }
    ExceedanceSet {
        threshold: u,
        back,
        fwd,
        anchors,
        windows,
    }
}

/// Standard error of `sum x / sum y` from resampling blocks with replacement.
fn block_bootstrap_ratio_se(blocks: &[(f64, f64)]) -> f64 {
    if blocks.len() < 2 {
        return 0.0;
    }
    let mut rng = rng_from_seed(BOOTSTRAP_SEED);
    let seeds: Vec<u64> = (0..BOOTSTRAP_REPLICATES).map(|_| rng.random()).collect();
    let reps: Vec<f64> = seeds
        .par_iter()
        .map(|&s| {
            let mut r = rng_from_seed(s);
            let (mut x, mut y) = (0.0, 0.0);
            for _ in 0..blocks.len() {
                let b = blocks[r.random_range(0..blocks.len())];
                x += b.0;
                y += b.1;
            }
            x / y
        })
        .collect();
    let m = reps.iter().sum::<f64>() / reps.len() as f64;
    let var = reps.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps.len() - 1) as f64;
    var.sqrt()
}

/// Groups `(time, x, y)` into consecutive time blocks and drops empty ones.
fn time_blocks(items: impl Iterator<Item = (usize, f64, f64)>, block: usize) -> Vec<(f64, f64)> {
    let mut out: Vec<(usize, f64, f64)> = Vec::new();
    for (t, x, y) in items {
        let b = t / block;
        match out.last_mut() {
            Some(last) if last.0 == b => {
                last.1 += x;
                last.2 += y;
            }
            _ => out.push((b, x, y)),
        }
    }
    out.into_iter().map(|(_, x, y)| (x, y)).collect()
}

/// Mean of `f` over the normalized exceedance windows, with a block
/// bootstrap standard error (blocks twice the window width).
pub fn empirical_spectral_stat(exc: &ExceedanceSet, f: &WindowFn) -> Result<EstimateResult> {
    if exc.is_empty() {
        return Err(Error::Estimation(format!(
            "no exceedances above {}",
            exc.threshold
        )));
    }
    let vals: Vec<f64> = exc.windows.par_iter().map(|w| f(w)).collect();
    let value = vals.iter().sum::<f64>() / vals.len() as f64;
    let block = 2 * (exc.back + exc.fwd + 1);
    let blocks = time_blocks(
        exc.anchors.iter().zip(&vals).map(|(&t, &v)| (t, v, 1.0)),
        block,
    );
    Ok(EstimateResult {
        value,
        stderr: block_bootstrap_ratio_se(&blocks),
        n_effective: exc.len(),
        threshold: exc.threshold,
        method: format!("exceedance mean, block bootstrap (block {block})"),
    })
}

/// `empirical_spectral_stat` over a sweep of quantile levels.
pub fn spectral_stat_sweep(
    path: &Path,
    space: &Space,
    levels: &[f64],
    back: usize,
    fwd: usize,
    f: &WindowFn,
) -> Result<Vec<EstimateResult>> {
    let norms = path.norms(space);
    levels
        .iter()
        .map(|&q| {
            let u = empirical_quantile(&norms, q)?;
            empirical_spectral_stat(&collect_exceedances(path, space, u, back, fwd), f)
        })
        .collect()
}

/// Whether tail dependence is measured on norms or on a functional.
#[derive(Debug, Clone, PartialEq)]
pub enum TailDepMode {
    Norm,
    Functional(LinearFunctional),
}

/// `#{t : s(X_t) > u, s(X_{t+h}) > u} / #{t : s(X_t) > u}` with `s` the norm or
/// the functional.
pub fn empirical_tail_dependence(
    path: &Path,
    space: &Space,
    u: f64,
    h: i64,
    mode: &TailDepMode,
) -> Result<EstimateResult> {
    let score: Vec<f64> = match mode {
        TailDepMode::Norm => path.norms(space),
        TailDepMode::Functional(b) => {
            if b.coeffs.len() != path.dim {
                return Err(Error::Structural(
                    "functional dimension does not match the path".into(),
                ));
            }
            path.rows().map(|x| b.apply(x)).collect()
        }
    };
    let n = score.len() as i64;
    let (lo, hi) = ((-h).max(0), n - h.max(0));
    let items = (lo..hi).filter(|&t| score[t as usize] > u).map(|t| {
        let joint = score[(t + h) as usize] > u;
        (t as usize, if joint { 1.0 } else { 0.0 }, 1.0)
    });
    let items: Vec<(usize, f64, f64)> = items.collect();
    if items.is_empty() {
        return Err(Error::Estimation(format!("no exceedances above {u}")));
    }
    let x: f64 = items.iter().map(|i| i.1).sum();
    let count = items.len();
    let block = 2 * (h.unsigned_abs() as usize + 1);
    let blocks = time_blocks(items.into_iter(), block);
    Ok(EstimateResult {
        value: x / count as f64,
        stderr: block_bootstrap_ratio_se(&blocks),
        n_effective: count,
        threshold: u,
        method: format!("joint / marginal exceedance count, block bootstrap (block {block})"),
    })
}

/// Blocks estimator `#{blocks with an exceedance} / #{exceedances}`.
pub fn blocks_extremal_index(norms: &[f64], u: f64, block_len: usize) -> Result<EstimateResult> {
    if block_len == 0 || block_len > norms.len() {
        return Err(Error::Estimation(format!(
            "block length {block_len} for a path of length {}",
            norms.len()
        )));
    }
    let blocks: Vec<(f64, f64)> = norms
        .chunks_exact(block_len)
        .map(|b| b.iter().filter(|v| **v > u).count())
        .filter(|&c| c > 0)
        .map(|c| (1.0, c as f64))
        .collect();
    if blocks.is_empty() {
        return Err(Error::Estimation(format!("no exceedances above {u}")));
    }
    let hit: f64 = blocks.iter().map(|b| b.0).sum();
    let count: f64 = blocks.iter().map(|b| b.1).sum();
    Ok(EstimateResult {
        value: hit / count,
        stderr: block_bootstrap_ratio_se(&blocks),
        n_effective: count as usize,
        threshold: u,
        method: format!("blocks estimator (block {block_len}), bootstrap over nonempty blocks"),
    })
}

/// Runs estimator: the share of exceedances followed by `run` consecutive
/// non-exceedances.
pub fn runs_extremal_index(norms: &[f64], u: f64, run: usize) -> Result<EstimateResult> {
    if run == 0 {
        return Err(Error::Estimation("runs parameter must be positive".into()));
    }
    let n = norms.len();
    let items: Vec<(usize, f64, f64)> = (0..n.saturating_sub(run))
        .filter(|&t| norms[t] > u)
        .map(|t| {
            let ends = norms[t + 1..=t + run].iter().all(|v| *v <= u);
            (t, if ends { 1.0 } else { 0.0 }, 1.0)
        })
        .collect();
    if items.is_empty() {
        return Err(Error::Estimation(format!("no exceedances above {u}")));
    }
    let x: f64 = items.iter().map(|i| i.1).sum();
    let count = items.len();
    let blocks = time_blocks(items.into_iter(), 2 * (run + 1));
    Ok(EstimateResult {
        value: x / count as f64,
        stderr: block_bootstrap_ratio_se(&blocks),
        n_effective: count,
        threshold: u,
        method: format!("runs estimator (run {run})"),
    })
}

/// Hill estimator of the tail index from the `k` largest values, with the
/// asymptotic standard error `alpha / sqrt(k)`.
pub fn hill_alpha(norms: &[f64], k: usize) -> Result<EstimateResult> {
    let n = norms.len();
    if k == 0 || k * 10 >= n {
        return Err(Error::Estimation(format!(
            "Hill needs 1 <= k < n / 10, got k = {k}, n = {n}"
        )));
    }
    let mut v = norms.to_vec();
    // v[..k] are the k largest, v[k] the (k+1)-th
    v.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let floor = v[k];
    if !(floor > 0.0) {
        return Err(Error::Estimation(
            "Hill threshold order statistic is not positive".into(),
        ));
    }
    let lf = floor.ln();
    let h = v[..k].iter().map(|x| x.ln() - lf).sum::<f64>() / k as f64;
    if !(h > 0.0) {
        return Err(Error::Estimation(
            "top order statistics are tied; Hill estimate undefined".into(),
        ));
    }
    let alpha = 1.0 / h;
    Ok(EstimateResult {
        value: alpha,
        stderr: alpha / (k as f64).sqrt(),
        n_effective: k,
        threshold: floor,
        method: "Hill".into(),
    })
}

/// Single-big-jump diagnostics of `S = sum_i T_i Z_i` at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigJump {
    pub x: f64,
    /// `V(x) = Pr(||Z|| > x)`.
    pub v_x: f64,
    /// `Pr(||S|| > x) / V(x)`.
    pub ratio_sum_norm: Estimate,
    /// `Pr(sum_i ||T_i Z_i|| > x) / V(x)`.
    pub ratio_norm_sum: Estimate,
    /// `E|1(||S|| > x) - sum_i 1(||T_i Z_i|| > x)| / V(x)`.
    pub discrepancy: Estimate,
    /// `sum_i c_i`.
    pub target: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct JumpAcc {
    n: u64,
    s: [f64; 3],
    ss: [f64; 3],
}

impl JumpAcc {
    fn push(&mut self, v: [f64; 3]) {
        self.n += 1;
        for (i, x) in v.into_iter().enumerate() {
            self.s[i] += x;
            self.ss[i] += x * x;
        }
    }

    fn merge(&mut self, o: &JumpAcc) {
        self.n += o.n;
        for i in 0..3 {
            self.s[i] += o.s[i];
            self.ss[i] += o.ss[i];
        }
    }

    fn estimate(&self, i: usize, scale: f64) -> Estimate {
        let acc = crate::mc::MeanAcc {
            n: self.n,
            sum: self.s[i],
            sum_sq: self.ss[i],
        };
        Estimate {
            value: acc.mean() / scale,
            stderr: acc.stderr() / scale,
            n: self.n,
        }
    }
}

/// Big-jump diagnostics at several thresholds from one set of draws.
pub fn big_jump_check_paired(
    fam: &OperatorFamily,
    innov: &RegVarDist,
    xs: &[f64],
    n_mc: usize,
    rng: &mut Rng,
) -> Result<Vec<BigJump>> {
    let v: Vec<f64> = xs
        .iter()
        .map(|&x| innov.tail_prob(x))
        .collect::<Result<_>>()?;
    if v.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::Domain(
            "innovation tail vanishes at the threshold".into(),
        ));
    }
    if let Some(x) = xs.iter().find(|&&x| x < innov.scale()) {
        return Err(Error::Domain(format!(
            "threshold {x} below the innovation scale"
        )));
    }
    let target = series_constants(fam, innov, 100_000, rng)?.c_total;
    let codomain = fam.codomain();
    let dout = codomain.dim();
    let parts = par_chunks(n_mc, rng, |r, k| -> Result<Vec<JumpAcc>> {
        let mut accs = vec![JumpAcc::default(); xs.len()];
        let mut terms = vec![0.0; fam.len()];
        let mut sum = vec![0.0; dout];
        for _ in 0..k {
            sum.iter_mut().for_each(|s| *s = 0.0);
            for (j, op) in fam.ops().iter().enumerate() {
                let y = op.apply_unchecked(&innov.sample(r)?);
                terms[j] = codomain.norm_of(&y);
                for (s, v) in sum.iter_mut().zip(&y) {
                    *s += v;
                }
            }
            let s_norm = codomain.norm_of(&sum);
            let norm_sum: f64 = terms.iter().sum();
            for (acc, &x) in accs.iter_mut().zip(xs) {
                let big = terms.iter().filter(|t| **t > x).count() as f64;
                let a = if s_norm > x { 1.0 } else { 0.0 };
                let b = if norm_sum > x { 1.0 } else { 0.0 };
                acc.push([a, b, (a - big).abs()]);
            }
        }
        Ok(accs)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let mut total = vec![JumpAcc::default(); xs.len()];
    for p in &parts {
        for (t, a) in total.iter_mut().zip(p) {
            t.merge(a);
        }
    }
    Ok(total
        .iter()
        .zip(xs.iter().zip(&v))
        .map(|(acc, (&x, &vx))| BigJump {
            x,
            v_x: vx,
            ratio_sum_norm: acc.estimate(0, vx),
            ratio_norm_sum: acc.estimate(1, vx),
            discrepancy: acc.estimate(2, vx),
            target,
        })
        .collect())
}

pub fn big_jump_check(
    fam: &OperatorFamily,
    innov: &RegVarDist,
    x: f64,
    n_mc: usize,
    rng: &mut Rng,
) -> Result<BigJump> {
    Ok(big_jump_check_paired(fam, innov, &[x], n_mc, rng)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banach::Operator;
    use crate::rv::SpectralSampler;
    use crate::simulate::{simulate_ar1, simulate_linear, PathConfig};

    fn pareto(alpha: f64, p: f64) -> RegVarDist {
        RegVarDist::new(alpha, 1.0, SpectralSampler::rademacher(p).unwrap()).unwrap()
    }

    fn ma_path(a: &[f64], alpha: f64, p: f64, length: usize, seed: u64) -> Path {
        let fam = OperatorFamily::scalar_ma(a, alpha).unwrap();
        let cfg = PathConfig {
            length,
            burn_in: 0,
            truncation: a.len(),
            seed,
        };
        simulate_linear(&fam, &pareto(alpha, p), &cfg).unwrap()
    }

    fn near(r: &EstimateResult, target: f64, k: f64) {
        assert!(
            (r.value - target).abs() <= k * r.stderr,
            "{} vs {target} (se {})",
            r.value,
            r.stderr
        );
    }

    #[test]
    fn exceedance_extremes() {
        let s = Space::real();
        let path = ma_path(&[1.0], 1.0, 0.5, 1000, 1);
        let all = collect_exceedances(&path, &s, 0.0, 2, 3);
        assert_eq!(all.anchors, (2..997).collect::<Vec<_>>());
        let none = collect_exceedances(&path, &s, f64::INFINITY, 2, 3);
        assert!(none.is_empty());
        let f = |_: &[Vec<f64>]| 1.0;
        assert!(matches!(
            empirical_spectral_stat(&none, &f),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn exceedance_count_is_binomial() {
        let s = Space::real();
        let path = ma_path(&[1.0], 1.0, 1.0, 1_000_000, 2);
        let u = empirical_quantile(&path.norms(&s), 0.999).unwrap();
        let exc = collect_exceedances(&path, &s, u, 1, 1);
        assert!((exc.len() as f64 - 1000.0).abs() < 3.0 * 1000f64.sqrt());
        for w in &exc.windows {
            assert!((w[1][0].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_spectral_stats_are_one() {
        let s = Space::real();
        let path = ma_path(&[1.0, -0.4], 1.3, 0.5, 100_000, 3);
        let exc = collect_exceedances(&path, &s, 20.0, 1, 1);
        let one = |_: &[Vec<f64>]| 1.0;
        let norm0 = |w: &[Vec<f64>]| w[1][0].abs();
        let a = empirical_spectral_stat(&exc, &one).unwrap();
        let b = empirical_spectral_stat(&exc, &norm0).unwrap();
        assert_eq!(a.value, 1.0);
        assert_eq!(a.stderr, 0.0);
        assert!((b.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn higher_thresholds_select_subsets() {
        let s = Space::real();
        let path = ma_path(&[1.0, 0.5], 1.0, 0.5, 50_000, 4);
        let low = collect_exceedances(&path, &s, 10.0, 1, 1);
        let high = collect_exceedances(&path, &s, 40.0, 1, 1);
        assert!(high
            .anchors
            .iter()
            .all(|a| low.anchors.binary_search(a).is_ok()));
        assert!(high.len() < low.len());
    }

    #[test]
    fn ma2_spectral_stat_matches_sampler_value() {
        let s = Space::real();
        let path = ma_path(&[1.0, 1.0], 1.0, 1.0, 2_000_000, 5);
        let u = empirical_quantile(&path.norms(&s), 0.999).unwrap();
        let exc = collect_exceedances(&path, &s, u, 0, 1);
        let f = |w: &[Vec<f64>]| w[1][0].abs().min(1.0);
        let r = empirical_spectral_stat(&exc, &f).unwrap();
        near(&r, 0.5, 4.0);
        let sweep = spectral_stat_sweep(&path, &s, &[0.99, 0.999], 0, 1, &f).unwrap();
        assert_eq!(sweep.len(), 2);
        assert_eq!(sweep[1], r);
    }

    #[test]
    fn tail_dependence_examples() {
        let s = Space::real();
        let iid = ma_path(&[1.0], 1.0, 1.0, 1_000_000, 6);
        let u = empirical_quantile(&iid.norms(&s), 0.999).unwrap();
        let r = empirical_tail_dependence(&iid, &s, u, 1, &TailDepMode::Norm).unwrap();
        assert!(r.value <= 3.0 * r.stderr.max(1.0 / r.n_effective as f64));
        let r = empirical_tail_dependence(&iid, &s, u, 0, &TailDepMode::Norm).unwrap();
        assert_eq!(r.value, 1.0);
        let ma2 = ma_path(&[1.0, 1.0], 1.0, 1.0, 2_000_000, 7);
        let u = empirical_quantile(&ma2.norms(&s), 0.999).unwrap();
        let b = TailDepMode::Functional(LinearFunctional::coordinate(1, 0));
        let r = empirical_tail_dependence(&ma2, &s, u, 1, &b).unwrap();
        assert!((r.value - 0.5).abs() < 0.05 && (r.value - 0.5).abs() < 4.0 * r.stderr.max(0.01));
    }

    #[test]
    fn blocks_estimator_examples() {
        let s = Space::real();
        let iid = ma_path(&[1.0], 1.0, 1.0, 1_000_000, 8);
        let n = iid.norms(&s);
        let u = empirical_quantile(&n, 0.9999).unwrap();
        let r = blocks_extremal_index(&n, u, 10).unwrap();
        assert!((r.value - 1.0).abs() <= 3.0 * r.stderr.max(0.01));
        let ma2 = ma_path(&[1.0, 1.0], 2.0, 0.5, 1_000_000, 9);
        let n = ma2.norms(&s);
        let u = empirical_quantile(&n, 0.999).unwrap();
        let r = blocks_extremal_index(&n, u, 50).unwrap();
        assert!((r.value - 0.5).abs() < 0.05, "{r:?}");
        let runs = runs_extremal_index(&n, u, 1).unwrap();
        assert!((runs.value - 0.5).abs() < 0.05, "{runs:?}");
        assert!(blocks_extremal_index(&n, f64::INFINITY, 50).is_err());
        assert!(blocks_extremal_index(&n, u, 0).is_err());
    }

    #[test]
    fn ar1_blocks_estimator_is_one_half() {
        let cfg = PathConfig {
            length: 1_000_000,
            burn_in: 0,
            truncation: 64,
            seed: 10,
        };
        let s = Space::real();
        let path = simulate_ar1(&Operator::scalar(0.5), &s, &pareto(1.0, 1.0), &cfg, 8).unwrap();
        let n = path.norms(&s);
        let u = empirical_quantile(&n, 0.999).unwrap();
        let r = blocks_extremal_index(&n, u, 50).unwrap();
        assert!((r.value - 0.5).abs() < 0.05, "{r:?}");
    }

    #[test]
    fn hill_examples() {
        let s = Space::real();
        let path = ma_path(&[1.0], 2.0, 0.5, 1_000_000, 11);
        let n = path.norms(&s);
        let r = hill_alpha(&n, 10_000).unwrap();
        assert!((r.value - 2.0).abs() < 3.0 * 0.02, "{r:?}");
        let scaled: Vec<f64> = n.iter().map(|x| 7.5 * x).collect();
        let r2 = hill_alpha(&scaled, 10_000).unwrap();
        assert!((r.value - r2.value).abs() < 1e-9);
        let mut top = n.clone();
        top.sort_by(|a, b| b.total_cmp(a));
        let r1 = hill_alpha(&n, 1).unwrap();
        assert!((r1.value - 1.0 / (top[0].ln() - top[1].ln())).abs() < 1e-12);
        assert!(hill_alpha(&n, 100_000).is_err());
        assert!(hill_alpha(&vec![3.0; 1000], 10).is_err());
        assert!(hill_alpha(&vec![0.0; 1000], 10).is_err());
    }

    /// `Pr(Z_1 + Z_2 > x)` for iid Pareto(1), `x >= 2`.
    fn pareto1_pair_tail(x: f64) -> f64 {
        let g = 1.0 - 1.0 / (x - 1.0);
        1.0 - (g - g / x - 2.0 * (x - 1.0).ln() / (x * x))
    }

    #[test]
    fn pareto_pair_oracle_matches_quadrature() {
        let x: f64 = 30.0;
        // Pr(Z1 + Z2 <= x) = ∫_1^{x-1} (1 - 1/(x - z)) z^{-2} dz by Simpson
        let m = 200_000;
        let h = (x - 2.0) / m as f64;
        let f = |z: f64| (1.0 - 1.0 / (x - z)) / (z * z);
        let mut acc = f(1.0) + f(x - 1.0);
        for i in 1..m {
            acc += f(1.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let cdf = acc * h / 3.0;
        assert!((1.0 - cdf - pareto1_pair_tail(x)).abs() < 1e-9);
    }

    #[test]
    fn big_jump_examples() {
        let mut rng = rng_from_seed(12);
        let id = OperatorFamily::scalar_ma(&[1.0], 1.0).unwrap();
        let r = big_jump_check(&id, &pareto(1.0, 1.0), 50.0, 400_000, &mut rng).unwrap();
        assert_eq!(r.target, 1.0);
        assert!((r.ratio_sum_norm.value - 1.0).abs() < 3.0 * r.ratio_sum_norm.stderr);
        assert_eq!(r.ratio_sum_norm, r.ratio_norm_sum);
        assert_eq!(r.discrepancy.value, 0.0);

        let ma2 = OperatorFamily::scalar_ma(&[1.0, 1.0], 1.0).unwrap();
        let x = 100.0;
        let r = big_jump_check(&ma2, &pareto(1.0, 1.0), x, 1_000_000, &mut rng).unwrap();
        let exact = pareto1_pair_tail(x) / 0.01;
        assert!((r.ratio_sum_norm.value - exact).abs() < 3.0 * r.ratio_sum_norm.stderr);
        assert_eq!(r.target, 2.0);

        let fam = OperatorFamily::scalar_ma(&[1.0, 0.5], 2.0).unwrap();
        let z = pareto(2.0, 1.0);
        let x1 = z.tail_quantile(1e-3).unwrap();
        let pair = big_jump_check_paired(&fam, &z, &[x1, 10.0 * x1], 1_000_000, &mut rng).unwrap();
        assert!((pair[0].target - 1.25).abs() < 1e-15);
        assert!(pair[1].discrepancy.value < pair[0].discrepancy.value);
        assert!(big_jump_check(&fam, &z, 0.5, 10, &mut rng).is_err());
    }
}
