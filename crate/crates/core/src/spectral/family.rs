//! Operator families `{T_n}` and the series constants `c_n`, `p_n`.

use serde::Serialize;

use crate::banach::{Operator, OperatorNormBound, Space};
use crate::error::{Error, Result};
use crate::mc::{merge_means, par_chunks, MeanAcc, Rng};
use crate::rv::{check_alpha, RegVarDist};

/// Operators `T_n`, `n` in `[start, start + len)`, mapping the innovation space
/// into the state space. Indices outside the window act as zero.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    start: i64,
    ops: Vec<Operator>,
    domain: Space,
    codomain: Space,
    alpha: f64,
    delta: f64,
    bounds: Vec<OperatorNormBound>,
}

impl OperatorFamily {
    pub fn new(
        start: i64,
        ops: Vec<Operator>,
        domain: Space,
        codomain: Space,
        alpha: f64,
        delta: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if ops.is_empty() {
            return Err(Error::Config("operator family is empty".into()));
        }
        if !(delta > 0.0 && delta < alpha.min(1.0)) {
            return Err(Error::Config(format!(
                "summability exponent delta = {delta} must lie in (0, min(alpha, 1))"
            )));
        }
        let bounds = ops
            .iter()
            .map(|op| op.norm_bound(&domain, &codomain))
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorFamily {
            start,
            ops,
            domain,
            codomain,
            alpha,
            delta,
            bounds,
        })
    }

    /// Default summability exponent `min(alpha, 1) / 2`.
    pub fn default_delta(alpha: f64) -> f64 {
        alpha.min(1.0) / 2.0
    }

    /// Real moving average `X_t = sum_n a_n Z_{t-n}` on the line.
    pub fn scalar_ma(coeffs: &[f64], alpha: f64) -> Result<Self> {
        let ops = coeffs.iter().map(|&a| Operator::scalar(a)).collect();
        OperatorFamily::new(
            0,
            ops,
            Space::real(),
            Space::real(),
            alpha,
            Self::default_delta(alpha),
        )
    }

    /// Lagged-innovation process `X_t = (ζ_t, ζ_{t-1}, ...)` in a weighted
    /// sequence space, written with the embeddings `I_n z = z e_n`.
    pub fn sequence_space(space: Space, alpha: f64) -> Result<Self> {
        let d = space.dim();
        let ops = (0..d)
            .map(|index| Operator::Embedding { index, dim: d })
            .collect();
        OperatorFamily::new(
            0,
            ops,
            Space::real(),
            space,
            alpha,
            Self::default_delta(alpha),
        )
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last index of the window.
    pub fn end(&self) -> i64 {
        self.start + self.ops.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `end - start`: the largest lag at which two members can both act.
    pub fn span(&self) -> usize {
        self.ops.len() - 1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn codomain(&self) -> &Space {
        &self.codomain
    }

    pub fn ops(&self) -> &[Operator] {
        &self.ops
    }

    pub fn bounds(&self) -> &[OperatorNormBound] {
        &self.bounds
    }

    pub fn get(&self, n: i64) -> Option<&Operator> {
        let k = n - self.start;
        if k < 0 {
            None
        } else {
            self.ops.get(k as usize)
        }
    }

    pub fn bound(&self, n: i64) -> Option<OperatorNormBound> {
        let k = n - self.start;
        if k < 0 {
            None
        } else {
            self.bounds.get(k as usize).copied()
        }
    }

    /// `sum_n ||T_n||^delta` over the window.
    pub fn resnick_sum(&self) -> f64 {
        self.bounds.iter().map(|b| b.value.powf(self.delta)).sum()
    }

    /// `Some(||T_n||)` for every member when each `T_n / ||T_n||` is an isometry.
    pub fn isometry_norms(&self) -> Option<Vec<f64>> {
        self.ops
            .iter()
            .map(|op| op.isometry_factor(&self.domain, &self.codomain))
            .collect()
    }

    /// The same operators with a different tail index.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let delta = if self.delta < alpha.min(1.0) {
            self.delta
        } else {
            Self::default_delta(alpha)
        };
        OperatorFamily::new(
            self.start,
            self.ops.clone(),
            self.domain.clone(),
            self.codomain.clone(),
            alpha,
            delta,
        )
    }
}

/// `c_n = E ||T_n Θ||^alpha` and the mixture weights `p_n = c_n / sum_k c_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesConstants {
    pub start: i64,
    pub c: Vec<f64>,
    pub p: Vec<f64>,
    pub c_total: f64,
    pub mc_stderr: Vec<f64>,
}

impl SeriesConstants {
    pub fn from_c(start: i64, c: Vec<f64>, mc_stderr: Vec<f64>) -> Result<Self> {
        let c_total: f64 = c.iter().sum();
        if !(c_total > 0.0) {
            return Err(Error::Domain(
                "degenerate family: every c_n vanishes, so the sum has no regularly varying tail"
                    .into(),
            ));
        }
        let p = c.iter().map(|v| v / c_total).collect();
        Ok(SeriesConstants {
            start,
            c,
            p,
            c_total,
            mc_stderr,
        })
    }

    pub fn p_at(&self, n: i64) -> f64 {
        let k = n - self.start;
        if k < 0 {
            0.0
        } else {
            self.p.get(k as usize).copied().unwrap_or(0.0)
        }
    }

    /// Standard error of `p_n` induced by Monte Carlo error in the `c`'s
    /// (first-order, treating the `c_k` errors as independent).
    pub fn p_stderr(&self) -> Vec<f64> {
        let s = self.c_total;
        self.c
            .iter()
            .enumerate()
            .map(|(n, &cn)| {
                let var: f64 = self
                    .mc_stderr
                    .iter()
                    .enumerate()
                    .map(|(k, se)| {
                        let d = if k == n {
                            (s - cn) / (s * s)
                        } else {
                            -cn / (s * s)
                        };
                        d * d * se * se
                    })
                    .sum();
                var.sqrt()
            })
            .collect()
    }

    /// Cumulative weights for inverse-CDF sampling of the mixture index.
    pub(crate) fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.p
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }
}

/// Exact value of `E ||A Θ||^alpha` when available: isometry multiples and
/// finitely supported spectral measures.
fn exact_pushforward_constant(op: &Operator, base: &RegVarDist, codomain: &Space) -> Option<f64> {
    let alpha = base.alpha();
    if let Some(k) = op.isometry_factor(&base.space(), codomain) {
        return Some(k.powf(alpha));
    }
    let (points, weights) = base.angle().atoms()?;
    Some(
        points
            .iter()
            .zip(&weights)
            .map(|(theta, w)| w * codomain.norm_of(&op.apply_unchecked(theta)).powf(alpha))
            .sum(),
    )
}

/// `E ||A Θ||^alpha` for `Θ` drawn from the spectral measure of `base`,
/// returned with its Monte Carlo standard error (zero when exact).
pub fn pushforward_constant(
    op: &Operator,
    base: &RegVarDist,
    codomain: &Space,
    n_mc: usize,
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    let out = op.output_dim(base.dim())?;
    if out != codomain.dim() {
        return Err(Error::Structural("operator codomain mismatch".into()));
    }
    if let Some(c) = exact_pushforward_constant(op, base, codomain) {
        return Ok((c, 0.0));
    }
    let alpha = base.alpha();
    let parts = par_chunks(n_mc, rng, |r, k| -> Result<MeanAcc> {
        let mut acc = MeanAcc::default();
        for _ in 0..k {
            let theta = base.angle().sample(r)?;
            acc.push(codomain.norm_of(&op.apply_unchecked(&theta)).powf(alpha));
        }
        Ok(acc)
    });
    let acc = merge_means(&parts.into_iter().collect::<Result<Vec<_>>>()?);
    Ok((acc.mean(), acc.stderr()))
}

/// The constants of an operator family. Members without a closed form share
/// one set of angle draws.
pub fn series_constants(
    fam: &OperatorFamily,
    base: &RegVarDist,
    n_mc: usize,
    rng: &mut Rng,
) -> Result<SeriesConstants> {
    if base.dim() != fam.domain().dim() {
        return Err(Error::Structural(format!(
            "innovations of dimension {} for a family acting on dimension {}",
            base.dim(),
            fam.domain().dim()
        )));
    }
    if (base.alpha() - fam.alpha()).abs() > 0.0 {
        return Err(Error::Config(
            "innovation and family tail indices differ".into(),
        ));
    }
    let codomain = fam.codomain();
    let exact: Vec<Option<f64>> = fam
        .ops()
        .iter()
        .map(|op| exact_pushforward_constant(op, base, codomain))
        .collect();
    let open: Vec<usize> = (0..fam.len()).filter(|&k| exact[k].is_none()).collect();
    let mut c: Vec<f64> = exact.iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut se = vec![0.0; fam.len()];
    if !open.is_empty() {
        let alpha = fam.alpha();
        let parts = par_chunks(n_mc, rng, |r, k| -> Result<Vec<MeanAcc>> {
            let mut accs = vec![MeanAcc::default(); open.len()];
            for _ in 0..k {
                let theta = base.angle().sample(r)?;
                for (acc, &j) in accs.iter_mut().zip(&open) {
                    let v = fam.ops()[j].apply_unchecked(&theta);
                    acc.push(codomain.norm_of(&v).powf(alpha));
                }
            }
            Ok(accs)
        });
        let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
        for (slot, &j) in open.iter().enumerate() {
            let column: Vec<MeanAcc> = parts.iter().map(|p| p[slot]).collect();
            let acc = merge_means(&column);
            c[j] = acc.mean();
            se[j] = acc.stderr();
        }
    }
    SeriesConstants::from_c(fam.start(), c, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::rng_from_seed;
    use crate::rv::SpectralSampler;

    fn positive(alpha: f64) -> RegVarDist {
        RegVarDist::new(alpha, 1.0, SpectralSampler::rademacher(1.0).unwrap()).unwrap()
    }

    #[test]
    fn pushforward_constant_examples() {
        let mut rng = rng_from_seed(1);
        let s = Space::real();
        let (c, se) =
            pushforward_constant(&Operator::scalar(2.0), &positive(1.0), &s, 10, &mut rng).unwrap();
        assert_eq!((c, se), (2.0, 0.0));

        let m2 = Space::max(2);
        let atom = SpectralSampler::atomic(m2.clone(), vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        let base = RegVarDist::new(1.7, 1.0, atom).unwrap();
        let a = Operator::Diagonal {
            entries: vec![0.0, 1.0],
        };
        assert_eq!(
            pushforward_constant(&a, &base, &m2, 10, &mut rng)
                .unwrap()
                .0,
            0.0
        );

        // mean of ||A θ||^2 over the atoms (1,0) and (0,1): (1 + 0) / 2
        let two = SpectralSampler::atomic(
            m2.clone(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let base = RegVarDist::new(2.0, 1.0, two).unwrap();
        let a = Operator::Diagonal {
            entries: vec![1.0, 0.0],
        };
        assert_eq!(
            pushforward_constant(&a, &base, &m2, 10, &mut rng).unwrap(),
            (0.5, 0.0)
        );
    }

    #[test]
    fn monte_carlo_constant_is_unbiased() {
        // Θ = g / max|g_i| for Gaussian g, A = diag(1, 0), alpha = 1, so the
        // constant is E min(|g1| / |g2|, 1). The ratio |g1|/|g2| has density
        // 2 / (π (1 + r^2)), which gives 1/2 + ln 2 / π.
        let m2 = Space::max(2);
        let base = RegVarDist::new(1.0, 1.0, SpectralSampler::sphere_uniform(m2.clone())).unwrap();
        let a = Operator::Diagonal {
            entries: vec![1.0, 0.0],
        };
        let mut rng = rng_from_seed(2);
        let (c, se) = pushforward_constant(&a, &base, &m2, 400_000, &mut rng).unwrap();
        let oracle = 0.5 + std::f64::consts::LN_2 / std::f64::consts::PI;
        assert!(se > 0.0);
        assert!((c - oracle).abs() <= 3.0 * se, "{c} vs {oracle} (se {se})");
    }

    #[test]
    fn series_constants_examples() {
        let mut rng = rng_from_seed(3);
        let fam = OperatorFamily::scalar_ma(&[1.0, 0.5], 1.0).unwrap();
        let k = series_constants(&fam, &positive(1.0), 100, &mut rng).unwrap();
        assert_eq!(k.c, vec![1.0, 0.5]);
        assert!((k.p[0] - 2.0 / 3.0).abs() < 1e-15 && (k.p[1] - 1.0 / 3.0).abs() < 1e-15);

        let fam = OperatorFamily::scalar_ma(&[3.0], 1.0).unwrap();
        assert_eq!(
            series_constants(&fam, &positive(1.0), 100, &mut rng)
                .unwrap()
                .p,
            vec![1.0]
        );

        let fam = OperatorFamily::scalar_ma(&[1.0, 1.0], 2.0).unwrap();
        assert_eq!(
            series_constants(&fam, &positive(2.0), 100, &mut rng)
                .unwrap()
                .p,
            vec![0.5, 0.5]
        );

        let fam = OperatorFamily::scalar_ma(&[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            series_constants(&fam, &positive(1.0), 100, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn family_validation() {
        assert!(OperatorFamily::new(0, vec![], Space::real(), Space::real(), 1.0, 0.5).is_err());
        assert!(OperatorFamily::new(
            0,
            vec![Operator::identity()],
            Space::real(),
            Space::real(),
            1.0,
            1.0
        )
        .is_err());
        let fam = OperatorFamily::new(
            -1,
            vec![Operator::scalar(0.5), Operator::identity()],
            Space::real(),
            Space::real(),
            2.0,
            0.5,
        )
        .unwrap();
        assert_eq!(fam.end(), 0);
        assert!(fam.get(-2).is_none());
        assert_eq!(fam.get(0), Some(&Operator::identity()));
        assert!((fam.resnick_sum() - (0.5f64.sqrt() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn sequence_space_constants_are_weights() {
        let space = Space::geometric_l1(6, 0.9).unwrap();
        let fam = OperatorFamily::sequence_space(space, 2.0).unwrap();
        let base = RegVarDist::new(2.0, 1.0, SpectralSampler::rademacher(0.5).unwrap()).unwrap();
        let k = series_constants(&fam, &base, 10, &mut rng_from_seed(4)).unwrap();
        for (n, c) in k.c.iter().enumerate() {
            assert!((c - 0.81f64.powi(n as i32)).abs() < 1e-14);
        }
    }
}
