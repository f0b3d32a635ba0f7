//! Monte Carlo functionals of spectral windows: expectations, the time-change
//! identity and the limit measures of finite-dimensional blocks.

use crate::error::{Error, Result};
use crate::mc::{merge_means, par_chunks, Estimate, MeanAcc, Rng};

use super::window::WindowSampler;

/// A functional of a window, given its slots in time order.
pub type WindowFn<'a> = dyn Fn(&[Vec<f64>]) -> f64 + Sync + 'a;

/// Number of sampled windows probed by the contract check.
const CONTRACT_PROBES: usize = 16;

/// Draws `n` windows on `[-back, fwd]` and averages `f` over them.
pub fn window_mean(
    sampler: &dyn WindowSampler,
    back: usize,
    fwd: usize,
    f: &WindowFn,
    n: usize,
    rng: &mut Rng,
) -> Result<Estimate> {
    let parts = par_chunks(n, rng, |r, k| -> Result<MeanAcc> {
        let mut acc = MeanAcc::default();
        for _ in 0..k {
            let w = sampler.sample(back, fwd, r)?;
            acc.push(f(&w.values));
        }
        Ok(acc)
    });
    let acc = merge_means(&parts.into_iter().collect::<Result<Vec<_>>>()?);
    Ok(Estimate::from_acc(&acc))
}

/// `E f(Θ_{-s}, ..., Θ_t)`.
pub fn window_expectation(
    sampler: &dyn WindowSampler,
    s: usize,
    t: usize,
    f: &WindowFn,
    n: usize,
    rng: &mut Rng,
) -> Result<Estimate> {
    window_mean(sampler, s, t, f, n, rng)
}

/// Fails if `f` does not vanish on windows whose leading slot is zero.
fn check_time_change_contract(
    sampler: &dyn WindowSampler,
    s: usize,
    t: usize,
    f: &WindowFn,
    rng: &mut Rng,
) -> Result<()> {
    let dim = sampler.space().dim();
    let zero = vec![vec![0.0; dim]; s + t + 1];
    let mut probes = vec![zero];
    for _ in 0..CONTRACT_PROBES {
        let mut w = sampler.sample(s, t, rng)?.values;
        w[0] = vec![0.0; dim];
        probes.push(w);
    }
    for w in &probes {
        let v = f(w);
        if v != 0.0 {
            return Err(Error::Contract(format!(
                "test function is {v} on a window whose leading slot is zero; it must vanish there"
            )));
        }
    }
    Ok(())
}

/// Both sides of the time-change identity for a functional on `[-s, t]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TimeChange {
    pub lhs: Estimate,
    pub rhs: Estimate,
}

impl TimeChange {
    pub fn difference(&self) -> f64 {
        self.lhs.value - self.rhs.value
    }

    pub fn combined_stderr(&self) -> f64 {
        self.lhs.stderr.hypot(self.rhs.stderr)
    }
}

/// Right-hand side: `E[f(Θ_0/||Θ_s||, ..., Θ_{t+s}/||Θ_s||) ||Θ_s||^alpha]`,
/// with the integrand read as zero where `Θ_s = 0`.
pub fn time_change_rhs(
    sampler: &dyn WindowSampler,
    s: usize,
    t: usize,
    f: &WindowFn,
    n: usize,
    rng: &mut Rng,
) -> Result<Estimate> {
    check_time_change_contract(sampler, s, t, f, rng)?;
    let space = sampler.space();
    let alpha = sampler.alpha();
    let g = |w: &[Vec<f64>]| {
        let r = space.norm_of(&w[s]);
        if r == 0.0 {
            return 0.0;
        }
        let scaled: Vec<Vec<f64>> = w
            .iter()
            .map(|v| v.iter().map(|x| x / r).collect())
            .collect();
        f(&scaled) * r.powf(alpha)
    };
    window_mean(sampler, 0, s + t, &g, n, rng)
}

/// Both sides from independent draws.
pub fn time_change(
    sampler: &dyn WindowSampler,
    s: usize,
    t: usize,
    f: &WindowFn,
    n: usize,
    rng: &mut Rng,
) -> Result<TimeChange> {
    let rhs = time_change_rhs(sampler, s, t, f, n, rng)?;
    let lhs = window_expectation(sampler, s, t, f, n, rng)?;
    Ok(TimeChange { lhs, rhs })
}

/// `{x in E^k : ||x_i|| > z_i for every constrained i}`, coordinates
/// numbered from one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRect {
    pub thresholds: Vec<Option<f64>>,
}

impl NormRect {
    pub fn new(thresholds: Vec<Option<f64>>) -> Result<Self> {
        if thresholds.iter().all(Option::is_none) {
            return Err(Error::Domain(
                "rectangle touches the origin: no coordinate is constrained".into(),
            ));
        }
        if let Some(z) = thresholds
            .iter()
            .flatten()
            .find(|z| !(**z > 0.0 && z.is_finite()))
        {
            return Err(Error::Domain(format!(
                "rectangle threshold {z} must be positive and finite"
            )));
        }
        Ok(NormRect { thresholds })
    }

    /// Every coordinate above `z`.
    pub fn all_above(k: usize, z: f64) -> Result<Self> {
        Self::new(vec![Some(z); k])
    }

    pub fn k(&self) -> usize {
        self.thresholds.len()
    }
}

/// One window's contribution to `μ_k(rect)`, decomposing by the position `j`
/// of the first nonzero coordinate. `w` covers lags `-(k-1)..=k-1`.
fn limit_measure_term(
    rect: &NormRect,
    w: &[Vec<f64>],
    norm: impl Fn(&[f64]) -> f64,
    alpha: f64,
) -> f64 {
    let k = rect.k();
    let center = k - 1;
    let mut total = 0.0;
    for j in 1..=k {
        if rect.thresholds[..j - 1].iter().any(Option::is_some) {
            break;
        }
        // earlier coordinates sit at lags -(j-1)..=-1 and must be zero
        if (1..j).any(|l| norm(&w[center - l]) > 0.0) {
            continue;
        }
        let mut r_lo: f64 = 0.0;
        for (i, z) in rect.thresholds.iter().enumerate().skip(j - 1) {
            if let Some(z) = z {
                let lag = i + 1 - j;
                let m = norm(&w[center + lag]);
                r_lo = if m > 0.0 {
                    r_lo.max(z / m)
                } else {
                    f64::INFINITY
                };
            }
        }
        if r_lo.is_finite() {
            total += r_lo.powf(-alpha);
        }
    }
    total
}

/// `μ_k(rect)`, the tail measure of `(X_1, ..., X_k)` normalized so that
/// `μ_1({||x|| > 1}) = 1`.
pub fn limit_measure_mass(
    sampler: &dyn WindowSampler,
    rect: &NormRect,
    n: usize,
    rng: &mut Rng,
) -> Result<Estimate> {
    let k = rect.k();
    let space = sampler.space();
    let alpha = sampler.alpha();
    let f = |w: &[Vec<f64>]| limit_measure_term(rect, w, |v| space.norm_of(v), alpha);
    window_mean(sampler, k - 1, k - 1, &f, n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::rng_from_seed;
    use crate::rv::{RegVarDist, SpectralSampler};
    use crate::spectral::{LinearProcessSampler, OperatorFamily, DEFAULT_MAX_TRIALS};

    fn ma(coeffs: &[f64], alpha: f64) -> LinearProcessSampler {
        let fam = OperatorFamily::scalar_ma(coeffs, alpha).unwrap();
        let base = RegVarDist::new(alpha, 1.0, SpectralSampler::rademacher(1.0).unwrap()).unwrap();
        let mut rng = rng_from_seed(1);
        LinearProcessSampler::build(fam, base, 0, DEFAULT_MAX_TRIALS, &mut rng).unwrap()
    }

    fn lead_min(alpha: f64) -> impl Fn(&[Vec<f64>]) -> f64 + Sync {
        move |w: &[Vec<f64>]| w[0][0].abs().powf(alpha).min(1.0)
    }

    #[test]
    fn iid_rhs_vanishes() {
        let mut rng = rng_from_seed(2);
        let f = lead_min(1.0);
        let est = time_change_rhs(&ma(&[1.0], 1.0), 1, 0, &f, 10_000, &mut rng).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn zero_shift_reduces_to_plain_expectation() {
        let sampler = ma(&[1.0, 0.6], 1.0);
        let f = |w: &[Vec<f64>]| w[0][0].abs() * w[1][0].abs().min(1.0);
        let rhs = time_change_rhs(&sampler, 0, 1, &f, 40_000, &mut rng_from_seed(3)).unwrap();
        let lhs = window_expectation(&sampler, 0, 1, &f, 40_000, &mut rng_from_seed(13)).unwrap();
        assert!((lhs.value - rhs.value).abs() < 4.0 * lhs.stderr.hypot(rhs.stderr));
    }

    #[test]
    fn ma2_degenerate_past_identity() {
        let sampler = ma(&[1.0, 1.0], 1.0);
        let f = |w: &[Vec<f64>]| if w[0][0] != 0.0 { 1.0 } else { 0.0 };
        let tc = time_change(&sampler, 1, 0, &f, 100_000, &mut rng_from_seed(4)).unwrap();
        assert!((tc.rhs.value - 0.5).abs() < 3.0 * tc.rhs.stderr.max(1e-3));
        assert!((tc.lhs.value - 0.5).abs() < 4.0 * tc.lhs.stderr);
        assert!(tc.difference().abs() < 4.0 * tc.combined_stderr());
    }

    #[test]
    fn time_change_holds_for_ma3() {
        let sampler = ma(&[1.0, 0.8, 0.6], 2.0);
        let f = |w: &[Vec<f64>]| w[0][0].abs().powi(2).min(1.0) * w[1][0].abs().min(1.0);
        let tc = time_change(&sampler, 2, 1, &f, 100_000, &mut rng_from_seed(5)).unwrap();
        assert!(tc.difference().abs() < 4.0 * tc.combined_stderr(), "{tc:?}");
    }

    #[test]
    fn contract_violation_is_reported() {
        let f = |_: &[Vec<f64>]| 1.0;
        let err = time_change_rhs(&ma(&[1.0, 1.0], 1.0), 1, 0, &f, 100, &mut rng_from_seed(6))
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn one_dimensional_mass_is_power_law() {
        let sampler = ma(&[1.0, 0.5], 1.5);
        for r in [1.0, 2.0, 4.0] {
            let rect = NormRect::new(vec![Some(r)]).unwrap();
            let est = limit_measure_mass(&sampler, &rect, 1000, &mut rng_from_seed(7)).unwrap();
            assert!((est.value - r.powf(-1.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn iid_has_no_joint_exceedances() {
        let rect = NormRect::all_above(2, 1.0).unwrap();
        let est = limit_measure_mass(&ma(&[1.0], 1.0), &rect, 1000, &mut rng_from_seed(8)).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn ma2_joint_mass_is_one_half() {
        let rect = NormRect::all_above(2, 1.0).unwrap();
        let est = limit_measure_mass(&ma(&[1.0, 1.0], 1.0), &rect, 50_000, &mut rng_from_seed(9))
            .unwrap();
        assert!((est.value - 0.5).abs() < 4.0 * est.stderr);
    }

    #[test]
    fn single_coordinate_marginals_are_stationary() {
        // only x_2 constrained: the j = 1 and j = 2 terms add up to one
        let sampler = ma(&[1.0, -0.7, 0.4], 1.0);
        let rect = NormRect::new(vec![None, Some(1.0)]).unwrap();
        let est = limit_measure_mass(&sampler, &rect, 50_000, &mut rng_from_seed(10)).unwrap();
        assert!(
            (est.value - 1.0).abs() < 4.0 * est.stderr.max(1e-3),
            "{est:?}"
        );
    }

    #[test]
    fn limit_measure_is_homogeneous() {
        let sampler = ma(&[1.0, 0.8, 0.6], 1.0);
        let rect = NormRect::new(vec![Some(1.0), Some(0.5), None]).unwrap();
        let scaled = NormRect::new(vec![Some(2.0), Some(1.0), None]).unwrap();
        let a = limit_measure_mass(&sampler, &rect, 50_000, &mut rng_from_seed(11)).unwrap();
        let b = limit_measure_mass(&sampler, &scaled, 50_000, &mut rng_from_seed(12)).unwrap();
        let diff = b.value - 0.5 * a.value;
        assert!(
            diff.abs() < 3.0 * b.stderr.hypot(0.5 * a.stderr),
            "{a:?} {b:?}"
        );
    }

    #[test]
    fn rectangles_must_avoid_the_origin() {
        assert!(matches!(
            NormRect::new(vec![None, None]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            NormRect::new(vec![Some(0.0)]),
            Err(Error::Domain(_))
        ));
    }
}
