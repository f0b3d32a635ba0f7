//! Sample paths of linear processes, AR(1) recursions and the lagged
//! innovation process in a weighted sequence space.
//!
//! Innovations are indexed by absolute time: `Z_τ` is the same value in every
//! representation of a model, so a series and a recursion driven by one seed
//! agree path by path.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banach::{Operator, Space};
use crate::error::{Error, Result};
use crate::mc::{stream_rng, Rng};
use crate::rv::RegVarDist;
use crate::spectral::OperatorFamily;

/// Innovations per generator stream.
pub const INNOVATION_BLOCK: i64 = 4096;

/// Relative size of `||T^n||` at which an AR(1) burn-in counts as mixed.
pub const MIXING_TOLERANCE: f64 = 1e-16;

/// A source of iid innovations.
pub trait InnovationSource: Sync {
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut Rng, out: &mut [f64]) -> Result<()>;
}

impl InnovationSource for RegVarDist {
    fn dim(&self) -> usize {
        RegVarDist::dim(self)
    }

    fn draw(&self, rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&self.sample(rng)?);
        Ok(())
    }
}

/// Every innovation equal to a fixed vector, for testing recursions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantInnovations(pub Vec<f64>);

impl InnovationSource for ConstantInnovations {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn draw(&self, _: &mut Rng, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&self.0);
        Ok(())
    }
}

/// `Z_lo, ..., Z_hi` (inclusive) flattened, from the stream keyed by `seed`.
pub fn innovations(source: &dyn InnovationSource, seed: u64, lo: i64, hi: i64) -> Result<Vec<f64>> {
    let d = source.dim();
    if hi < lo {
        return Ok(Vec::new());
    }
    let first = lo.div_euclid(INNOVATION_BLOCK);
    let last = hi.div_euclid(INNOVATION_BLOCK);
    let parts = (first..=last)
        .into_par_iter()
        .map(|b| -> Result<Vec<f64>> {
            let start = b * INNOVATION_BLOCK;
            let from = lo.max(start);
            let to = hi.min(start + INNOVATION_BLOCK - 1);
            let mut rng = stream_rng(seed, b as u64);
            let mut z = vec![0.0; d];
            let mut out = Vec::with_capacity((to - from + 1) as usize * d);
            for tau in start..=to {
                source.draw(&mut rng, &mut z)?;
                if tau >= from {
                    out.extend_from_slice(&z);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.concat())
}

/// Length and seeding of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathConfig {
    pub length: usize,
    pub burn_in: usize,
    /// Series horizon `M`: terms `T_i` with `|i| > M` are dropped.
    pub truncation: usize,
    pub seed: u64,
}

/// What produced a path and how far it is from the exact process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub model: String,
    pub length: usize,
    pub dim: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub truncation: usize,
    /// Linear processes: `sum_{|i| > M} ||T_i||^delta` over dropped terms.
    /// AR(1): bound on the deviation from the series truncated at `M`.
    pub truncation_bound: f64,
    /// AR(1) only: steps after which `||T^n||` falls below the mixing tolerance.
    pub mixing_length: Option<usize>,
}

/// `X_1, ..., X_L` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub dim: usize,
    pub values: Vec<f64>,
    pub meta: PathMeta,
}

impl Path {
    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `X_{k+1}`: rows are numbered from zero.
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim.max(1))
    }

    pub fn norms(&self, space: &Space) -> Vec<f64> {
        self.values
            .par_chunks_exact(self.dim.max(1))
            .map(|x| space.norm_of(x))
            .collect()
    }
}

fn check_dims(fam_in: usize, source: &dyn InnovationSource) -> Result<()> {
    if fam_in != source.dim() {
        return Err(Error::Structural(format!(
            "innovations of dimension {} for operators acting on dimension {fam_in}",
            source.dim()
        )));
    }
    Ok(())
}

/// `X_t = sum_{|i| <= M} T_i Z_{t-i}`.
pub fn simulate_linear(
    fam: &OperatorFamily,
    source: &dyn InnovationSource,
    cfg: &PathConfig,
) -> Result<Path> {
    check_dims(fam.domain().dim(), source)?;
    let m = cfg.truncation as i64;
    let kept: Vec<(i64, &Operator)> = (fam.start()..=fam.end())
        .filter(|i| i.abs() <= m)
        .map(|i| (i, fam.get(i).expect("index inside family")))
        .collect();
    if kept.is_empty() {
        return Err(Error::Config(format!(
            "truncation {m} drops every operator of the family"
        )));
    }
    let dropped: f64 = (fam.start()..=fam.end())
        .filter(|i| i.abs() > m)
        .map(|i| {
            fam.bound(i)
                .expect("index inside family")
                .value
                .powf(fam.delta())
        })
        .sum();
    let din = source.dim();
    let dout = fam.codomain().dim();
    let len = cfg.length as i64;
    let imin = kept.first().map(|k| k.0).unwrap_or(0);
    let imax = kept.last().map(|k| k.0).unwrap_or(0);
    let lo = 1 - imax;
    let hi = len - imin;
    let z = innovations(source, cfg.seed, lo, hi)?;
    let mut values = vec![0.0; cfg.length * dout];
    let all_scalar = kept
        .iter()
        .all(|(_, op)| matches!(op, Operator::Scalar { .. }))
        && din == dout;
    values.par_chunks_mut(dout).enumerate().for_each(|(k, x)| {
        let t = k as i64 + 1;
        for (i, op) in &kept {
            let at = ((t - i - lo) as usize) * din;
            let zt = &z[at..at + din];
            if all_scalar {
                let Operator::Scalar { a } = op else {
                    unreachable!()
                };
                for (xv, zv) in x.iter_mut().zip(zt) {
                    *xv += a * zv;
                }
            } else {
                for (xv, v) in x.iter_mut().zip(op.apply_unchecked(zt)) {
                    *xv += v;
                }
            }
        }
    });
    Ok(Path {
        dim: dout,
        values,
        meta: PathMeta {
            model: "linear".into(),
            length: cfg.length,
            dim: dout,
            seed: cfg.seed,
            burn_in: cfg.burn_in.max(cfg.truncation),
            truncation: cfg.truncation,
            truncation_bound: dropped,
            mixing_length: None,
        },
    })
}

/// Contraction data of an AR(1) operator: the first `m <= horizon` with
/// `rho = ||T^m|| < 1`.
fn contraction(op: &Operator, space: &Space, horizon: usize) -> Result<(usize, f64)> {
    for m in 1..=horizon.max(1) {
        let b = op.power(m).norm_bound(space, space)?.value;
        if b < 1.0 {
            return Ok((m, b));
        }
    }
    Err(Error::Config(format!(
        "no power T^m with m <= {horizon} has norm below one; the AR(1) recursion is not verifiably contracting"
    )))
}

/// Steps after which `||T^n|| <= tolerance` is guaranteed from `||T^m|| = rho`.
fn mixing_length(op: &Operator, space: &Space, m: usize, rho: f64) -> Result<usize> {
    if rho == 0.0 {
        return Ok(m);
    }
    let lead = (0..m)
        .map(|k| op.power(k).norm_bound(space, space).map(|b| b.value))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0, f64::max);
    let blocks = ((MIXING_TOLERANCE / lead).ln() / rho.ln()).ceil().max(1.0);
    Ok(m * blocks as usize + m)
}

/// `X_t = T X_{t-1} + Z_t` from a zero state, with burn-in at least the
/// mixing length and the truncation horizon.
pub fn simulate_ar1(
    op: &Operator,
    space: &Space,
    source: &dyn InnovationSource,
    cfg: &PathConfig,
    horizon: usize,
) -> Result<Path> {
    check_dims(space.dim(), source)?;
    if op.output_dim(space.dim())? != space.dim() {
        return Err(Error::Structural(
            "AR(1) operator must map the state space to itself".into(),
        ));
    }
    let (m, rho) = contraction(op, space, horizon)?;
    let mix = mixing_length(op, space, m, rho)?;
    let burn = cfg.burn_in.max(mix).max(cfg.truncation);
    let d = space.dim();
    let lo = 1 - burn as i64;
    let z = innovations(source, cfg.seed, lo, cfg.length as i64)?;
    let steps = burn + cfg.length;
    let mut state = vec![0.0; d];
    let mut values = Vec::with_capacity(cfg.length * d);
    // largest state norm among the times entering the truncation remainder
    let tail_last = steps.saturating_sub(cfg.truncation + 1);
    let mut max_state: f64 = 0.0;
    for k in 0..steps {
        let zt = &z[k * d..(k + 1) * d];
        let next = op.apply_unchecked(&state);
        for ((s, n), zv) in state.iter_mut().zip(next).zip(zt) {
            *s = n + zv;
        }
        if k < tail_last {
            max_state = max_state.max(space.norm_of(&state));
        }
        if k >= burn {
            values.extend_from_slice(&state);
        }
    }
    let tail_op = op.power(cfg.truncation + 1).norm_bound(space, space)?.value;
    Ok(Path {
        dim: d,
        values,
        meta: PathMeta {
            model: "ar1".into(),
            length: cfg.length,
            dim: d,
            seed: cfg.seed,
            burn_in: burn,
            truncation: cfg.truncation,
            truncation_bound: tail_op * max_state,
            mixing_length: Some(mix),
        },
    })
}

/// `X_t = (ζ_t, ζ_{t-1}, ..., ζ_{t-d+1})` for real innovations `ζ`. The
/// space is exactly `d`-dimensional, so the reported truncation bound is
/// zero; callers truncating an infinite sequence record the dropped weight.
pub fn simulate_sequence_space(
    space: &Space,
    source: &dyn InnovationSource,
    cfg: &PathConfig,
) -> Result<Path> {
    check_dims(1, source)?;
    let d = space.dim();
    let lo = 1 - (d as i64 - 1);
    let z = innovations(source, cfg.seed, lo, cfg.length as i64)?;
    let mut values = vec![0.0; cfg.length * d];
    values.par_chunks_mut(d).enumerate().for_each(|(k, x)| {
        // ζ_{t-n} sits at offset t - n - lo with t = k + 1
        let top = k + d - 1;
        for (n, xv) in x.iter_mut().enumerate() {
            *xv = z[top - n];
        }
    });
    Ok(Path {
        dim: d,
        values,
        meta: PathMeta {
            model: "sequence_space".into(),
            length: cfg.length,
            dim: d,
            seed: cfg.seed,
            burn_in: cfg.burn_in.max(d - 1),
            truncation: d - 1,
            truncation_bound: 0.0,
            mixing_length: None,
        },
    })
}

/// Writes `t,x0,...` rows with shortest round-trip float formatting.
pub fn write_path_csv(path: &Path, out: &mut impl Write) -> Result<()> {
    let mut header = String::from("t");
    for j in 0..path.dim {
        header.push_str(&format!(",x{j}"));
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for (k, x) in path.rows().enumerate() {
        line.clear();
        line.push_str(&(k + 1).to_string());
        for v in x {
            line.push(',');
            line.push_str(&format!("{v:?}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Reads a path written by [`write_path_csv`]. Times must run 1, 2, ...
pub fn read_path_csv(input: impl BufRead) -> Result<Path> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty input, expected a `t,x0,...` header".into(),
            })
        }
    };
    let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if cols.len() < 2
        || cols[0] != "t"
        || cols[1..]
            .iter()
            .enumerate()
            .any(|(j, c)| *c != format!("x{j}"))
    {
        return Err(Error::Parse {
            line: 1,
            message: format!("bad header `{header}`, expected `t,x0,...`"),
        });
    }
    let dim = cols.len() - 1;
    let mut values = Vec::new();
    let mut count = 0usize;
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t = fields.next().unwrap_or("");
        if t.parse::<usize>().ok() != Some(count + 1) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("time index `{t}`, expected {}", count + 1),
            });
        }
        let mut n = 0;
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("`{f}` is not a number"),
            })?;
            values.push(v);
            n += 1;
        }
        if n != dim {
            return Err(Error::Parse {
                line: lineno,
                message: format!("{n} coordinates, expected {dim}"),
            });
        }
        count += 1;
    }
    Ok(Path {
        dim,
        values,
        meta: PathMeta {
            model: "csv".into(),
            length: count,
            dim,
            seed: 0,
            burn_in: 0,
            truncation: 0,
            truncation_bound: 0.0,
            mixing_length: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::MeanAcc;
    use crate::rv::SpectralSampler;

    fn pareto(alpha: f64, p: f64) -> RegVarDist {
        RegVarDist::new(alpha, 1.0, SpectralSampler::rademacher(p).unwrap()).unwrap()
    }

    fn cfg(length: usize, seed: u64) -> PathConfig {
        PathConfig {
            length,
            burn_in: 0,
            truncation: 16,
            seed,
        }
    }

    #[test]
    fn innovation_stream_is_indexed_by_time() {
        let z = pareto(1.0, 0.5);
        let all = innovations(&z, 3, -5000, 9000).unwrap();
        let part = innovations(&z, 3, 4000, 4200).unwrap();
        assert_eq!(&all[9000..=9200], part.as_slice());
        assert_eq!(innovations(&z, 3, 2, 1).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn identity_family_is_iid_innovations() {
        let z = pareto(1.5, 0.5);
        let fam = OperatorFamily::scalar_ma(&[1.0], 1.5).unwrap();
        let path = simulate_linear(&fam, &z, &cfg(100, 4)).unwrap();
        assert_eq!(path.len(), 100);
        assert_eq!(path.values, innovations(&z, 4, 1, 100).unwrap());
        assert_eq!(path.meta.truncation_bound, 0.0);
    }

    #[test]
    fn ma2_replays_and_sums_neighbours() {
        let z = pareto(1.0, 1.0);
        let fam = OperatorFamily::scalar_ma(&[1.0, 1.0], 1.0).unwrap();
        let a = simulate_linear(&fam, &z, &cfg(500, 5)).unwrap();
        let b = simulate_linear(&fam, &z, &cfg(500, 5)).unwrap();
        assert_eq!(a, b);
        let zs = innovations(&z, 5, 0, 500).unwrap();
        for t in 1..=500usize {
            assert_eq!(a.row(t - 1)[0], zs[t] + zs[t - 1]);
        }
    }

    #[test]
    fn dropped_terms_are_reported() {
        let z = pareto(1.0, 1.0);
        let fam = OperatorFamily::scalar_ma(&[1.0, 0.5, 0.25], 1.0).unwrap();
        let mut c = cfg(10, 6);
        c.truncation = 1;
        let path = simulate_linear(&fam, &z, &c).unwrap();
        assert!((path.meta.truncation_bound - 0.25f64.powf(0.5)).abs() < 1e-15);
    }

    #[test]
    fn linear_tail_ratio_matches_series_constant() {
        // Pr(|X| > x) / V(x) -> sum |a_n|^alpha = 1.64 at a high quantile
        let alpha = 1.0;
        let z = pareto(alpha, 1.0);
        let fam = OperatorFamily::scalar_ma(&[1.0, 0.8], alpha).unwrap();
        let path = simulate_linear(&fam, &z, &cfg(2_000_000, 7)).unwrap();
        let x = z.tail_quantile(1e-4).unwrap();
        let hits = path.values.iter().filter(|v| v.abs() > x).count() as f64;
        let ratio = hits / path.len() as f64 / 1e-4;
        assert!((ratio / 1.8 - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn zero_ar1_is_iid() {
        let z = pareto(2.0, 0.5);
        let s = Space::real();
        let path = simulate_ar1(&Operator::scalar(0.0), &s, &z, &cfg(200, 8), 8).unwrap();
        assert_eq!(path.values, innovations(&z, 8, 1, 200).unwrap());
    }

    #[test]
    fn constant_innovations_reach_the_fixed_point() {
        let s = Space::real();
        let mut c = cfg(5, 9);
        c.truncation = 0;
        let path = simulate_ar1(
            &Operator::scalar(0.5),
            &s,
            &ConstantInnovations(vec![1.0]),
            &c,
            8,
        )
        .unwrap();
        for v in &path.values {
            assert!((v - 2.0).abs() < 1e-15);
        }
        assert!(path.meta.mixing_length.unwrap() >= 53);
    }

    #[test]
    fn ar1_tail_ratio_is_geometric_sum() {
        let z = pareto(1.0, 1.0);
        let path = simulate_ar1(
            &Operator::scalar(0.5),
            &Space::real(),
            &z,
            &cfg(2_000_000, 10),
            8,
        )
        .unwrap();
        let x = z.tail_quantile(1e-4).unwrap();
        let hits = path.values.iter().filter(|v| v.abs() > x).count() as f64;
        let ratio = hits / path.len() as f64 / 1e-4;
        assert!((ratio / 2.0 - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn non_contracting_ar1_is_rejected() {
        let err = simulate_ar1(
            &Operator::scalar(1.0),
            &Space::real(),
            &pareto(1.0, 1.0),
            &cfg(5, 1),
            8,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn ar1_matches_truncated_series() {
        let s = Space::max(2);
        let t = Operator::dense(2, 2, vec![0.5, 0.3, -0.2, 0.4]).unwrap();
        let angle = SpectralSampler::sphere_uniform(s.clone());
        let z = RegVarDist::new(1.5, 1.0, angle).unwrap();
        for trunc in [3, 10, 40] {
            let c = PathConfig {
                length: 3000,
                burn_in: 0,
                truncation: trunc,
                seed: 11,
            };
            let ar = simulate_ar1(&t, &s, &z, &c, 16).unwrap();
            let ops: Vec<Operator> = (0..=trunc).map(|n| t.power(n)).collect();
            let fam = OperatorFamily::new(0, ops, s.clone(), s.clone(), 1.5, 0.5).unwrap();
            let lin = simulate_linear(&fam, &z, &c).unwrap();
            let scale = ar.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tol = ar.meta.truncation_bound + 1e-12 * (1.0 + scale);
            let dev = ar
                .values
                .iter()
                .zip(&lin.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(dev <= tol, "truncation {trunc}: {dev} > {tol}");
        }
    }

    #[test]
    fn sequence_space_shifts_coordinates() {
        let s = Space::geometric_l1(4, 0.9).unwrap();
        let z = pareto(1.0, 0.5);
        let path = simulate_sequence_space(&s, &z, &cfg(300, 12)).unwrap();
        let zs = innovations(&z, 12, 1, 300).unwrap();
        for k in 0..300 {
            assert_eq!(path.row(k)[0], zs[k]);
        }
        for k in 1..300 {
            for n in 1..4 {
                assert_eq!(path.row(k)[n], path.row(k - 1)[n - 1]);
            }
        }
        let x = path.row(10);
        let direct: f64 = x
            .iter()
            .enumerate()
            .map(|(n, v)| 0.9f64.powi(n as i32) * v.abs())
            .sum();
        assert!((s.norm_of(x) - direct).abs() < 1e-12);
        let one = simulate_sequence_space(&Space::geometric_l1(1, 0.9).unwrap(), &z, &cfg(50, 12))
            .unwrap();
        assert_eq!(one.values, innovations(&z, 12, 1, 50).unwrap());
    }

    #[test]
    fn halves_of_a_path_agree() {
        let z = pareto(1.0, 0.5);
        let fam = OperatorFamily::scalar_ma(&[1.0, -0.6, 0.3], 1.0).unwrap();
        let path = simulate_linear(&fam, &z, &cfg(200_000, 13)).unwrap();
        let half = |r: std::ops::Range<usize>| {
            let mut acc = MeanAcc::default();
            for k in r {
                acc.push(path.row(k)[0].abs().min(5.0));
            }
            acc
        };
        let (a, b) = (half(0..100_000), half(100_000..200_000));
        assert!((a.mean() - b.mean()).abs() < 3.0 * a.stderr().hypot(b.stderr()));
    }

    #[test]
    fn csv_round_trips_exactly() {
        let z = RegVarDist::new(
            0.7,
            2.5,
            SpectralSampler::sphere_uniform(Space::lp(3, 1.5).unwrap()),
        )
        .unwrap();
        let fam = OperatorFamily::new(
            0,
            vec![
                Operator::identity(),
                Operator::Diagonal {
                    entries: vec![0.1, -3.0, 1e-7],
                },
            ],
            Space::lp(3, 1.5).unwrap(),
            Space::lp(3, 1.5).unwrap(),
            0.7,
            0.3,
        )
        .unwrap();
        let path = simulate_linear(&fam, &z, &cfg(50, 14)).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&path, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x0,x1,x2\n1,"));
        let back = read_path_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values, path.values);
        assert_eq!(back.dim, 3);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let cases = [
            ("", 1),
            ("t,y0\n", 1),
            ("t,x0\n1,0.5\n3,1.0\n", 3),
            ("t,x0\n1,abc\n", 2),
            ("t,x0,x1\n1,1.0\n", 2),
        ];
        for (text, line) in cases {
            match read_path_csv(text.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert_eq!(read_path_csv("t,x0\n".as_bytes()).unwrap().len(), 0);
    }
}
