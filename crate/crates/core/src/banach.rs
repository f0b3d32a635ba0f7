//! Finite-dimensional normed spaces and bounded linear operators.
//!
//! A [`Space`] is `R^d` equipped with one of three norms: the max norm, an
//! `l_p` norm or a weighted `l_1` norm `sum_i w_i |x_i|` with `w_0 = 1`. The
//! weighted norm realizes a truncated weighted sequence space; the shift
//! operator on it drops whatever is pushed past the last coordinate.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{rng_from_seed, Rng};

/// Safety multiplier applied to sampled operator-norm estimates.
pub const SAMPLED_BOUND_INFLATION: f64 = 1.05;

/// Number of sphere points used for sampled operator-norm estimates.
pub const SAMPLED_BOUND_POINTS: usize = 100_000;

/// Max-norm domains up to this dimension get exact norms by vertex enumeration.
const VERTEX_ENUMERATION_MAX_DIM: usize = 14;

/// The norm on a coordinate space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    Max,
    Lp { p: f64 },
    WeightedL1 { weights: Vec<f64> },
}

impl NormSpec {
    fn eval(&self, v: &[f64]) -> f64 {
        match self {
            NormSpec::Max => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormSpec::Lp { p } => {
                if *p == 1.0 {
                    v.iter().map(|x| x.abs()).sum()
                } else if *p == 2.0 {
                    v.iter().map(|x| x * x).sum::<f64>().sqrt()
                } else {
                    v.iter()
                        .map(|x| x.abs().powf(*p))
                        .sum::<f64>()
                        .powf(1.0 / p)
                }
            }
            NormSpec::WeightedL1 { weights } => {
                weights.iter().zip(v).map(|(w, x)| w * x.abs()).sum()
            }
        }
    }

    /// Norm of the `j`-th unit vector.
    fn unit_norm(&self, j: usize) -> f64 {
        match self {
            NormSpec::WeightedL1 { weights } => weights[j],
            _ => 1.0,
        }
    }

    /// Unit ball is the convex hull of the scaled unit vectors.
    fn is_l1_type(&self) -> bool {
        match self {
            NormSpec::WeightedL1 { .. } => true,
            NormSpec::Lp { p } => *p == 1.0,
            NormSpec::Max => false,
        }
    }

    fn restrict(&self, coords: &[usize]) -> NormSpec {
        match self {
            NormSpec::WeightedL1 { weights } => NormSpec::WeightedL1 {
                weights: coords.iter().map(|&j| weights[j]).collect(),
            },
            other => other.clone(),
        }
    }
}

/// `R^d` with a norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Space {
    dim: usize,
    norm: NormSpec,
}

impl Space {
    pub fn new(dim: usize, norm: NormSpec) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("space dimension must be positive".into()));
        }
        match &norm {
            NormSpec::Max => {}
            NormSpec::Lp { p } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::Domain(format!(
                        "l_p norm needs 1 <= p < inf, got {p}"
                    )));
                }
            }
            NormSpec::WeightedL1 { weights } => {
                if weights.len() != dim {
                    return Err(Error::Structural(format!(
                        "{} weights for a space of dimension {dim}",
                        weights.len()
                    )));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::Domain("weights must be finite and positive".into()));
                }
                if weights[0] != 1.0 {
                    return Err(Error::Domain(format!(
                        "weighted l1 norm requires w_0 = 1, got {}",
                        weights[0]
                    )));
                }
            }
        }
        Ok(Space { dim, norm })
    }

    pub fn max(dim: usize) -> Self {
        Space::new(dim, NormSpec::Max).expect("positive dimension")
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        Space::new(dim, NormSpec::Lp { p })
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        Space::new(weights.len(), NormSpec::WeightedL1 { weights })
    }

    /// Weighted `l_1` space with geometric weights `w_n = ratio^n`.
    pub fn geometric_l1(dim: usize, ratio: f64) -> Result<Self> {
        Space::weighted_l1((0..dim).map(|n| ratio.powi(n as i32)).collect())
    }

    /// The real line with absolute value.
    pub fn real() -> Self {
        Space::max(1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_spec(&self) -> &NormSpec {
        &self.norm
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Structural(format!(
                "vector of length {} in a space of dimension {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        Ok(self.norm.eval(v))
    }

    /// Norm without the length check; callers guarantee `v.len() == dim`.
    #[inline]
    pub fn norm_of(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        self.norm.eval(v)
    }

    /// Angular part `v / ||v||`.
    pub fn project_sphere(&self, v: &[f64]) -> Result<Vec<f64>> {
        let r = self.norm(v)?;
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Domain(
                "cannot project the zero vector onto the sphere".into(),
            ));
        }
        Ok(v.iter().map(|x| x / r).collect())
    }

    /// Norm of the linear functional `x -> sum_i b_i x_i` in the dual space.
    pub fn dual_norm(&self, b: &[f64]) -> Result<f64> {
        self.check(b)?;
        Ok(match &self.norm {
            NormSpec::Max => b.iter().map(|x| x.abs()).sum(),
            NormSpec::Lp { p } if *p == 1.0 => b.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormSpec::Lp { p } => {
                let q = p / (p - 1.0);
                b.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
            }
            NormSpec::WeightedL1 { weights } => b
                .iter()
                .zip(weights)
                .fold(0.0, |m, (x, w)| m.max(x.abs() / w)),
        })
    }

    /// A point of the unit sphere: a standard Gaussian vector projected radially.
    ///
    /// The induced law on the sphere depends on the norm.
    pub fn sample_sphere(&self, rng: &mut Rng) -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
            let r = self.norm.eval(&g);
            if r > 0.0 {
                return g.into_iter().map(|x| x / r).collect();
            }
        }
    }

    /// Sum of the tail weights `sum_{n >= from} w_n`; the truncation proxy
    /// reported for the weighted sequence space.
    pub fn weight_tail(&self, from: usize) -> f64 {
        match &self.norm {
            NormSpec::WeightedL1 { weights } => weights.iter().skip(from).sum(),
            _ => 0.0,
        }
    }
}

/// A bounded linear operator between coordinate spaces.
///
/// `Composition { ops: [A, B, C] }` is `A ∘ B ∘ C`: `C` acts first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operator {
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Scalar {
        a: f64,
    },
    Diagonal {
        entries: Vec<f64>,
    },
    ShiftPower {
        m: usize,
    },
    Embedding {
        index: usize,
        dim: usize,
    },
    Composition {
        ops: Vec<Operator>,
    },
}

/// An upper bound on an operator norm, flagged when it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormBound {
    pub value: f64,
    pub exact: bool,
}

impl OperatorNormBound {
    pub fn exact(value: f64) -> Self {
        OperatorNormBound { value, exact: true }
    }
}

impl Operator {
    pub fn identity() -> Self {
        Operator::Scalar { a: 1.0 }
    }

    pub fn scalar(a: f64) -> Self {
        Operator::Scalar { a }
    }

    /// Row-major dense matrix.
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::Structural(format!(
                "dense operator {rows}x{cols} with {} entries",
                data.len()
            )));
        }
        Ok(Operator::Dense { rows, cols, data })
    }

    /// Dimension of the image of a vector of length `input_dim`.
    pub fn output_dim(&self, input_dim: usize) -> Result<usize> {
        match self {
            Operator::Dense { rows, cols, data } => {
                if data.len() != rows * cols {
                    return Err(Error::Structural("dense operator data length".into()));
                }
                if *cols != input_dim {
                    return Err(Error::Structural(format!(
                        "dense operator with {cols} columns applied in dimension {input_dim}"
                    )));
                }
                Ok(*rows)
            }
            Operator::Scalar { .. } | Operator::ShiftPower { .. } => Ok(input_dim),
            Operator::Diagonal { entries } => {
                if entries.len() != input_dim {
                    return Err(Error::Structural(format!(
                        "diagonal operator of size {} applied in dimension {input_dim}",
                        entries.len()
                    )));
                }
                Ok(input_dim)
            }
            Operator::Embedding { index, dim } => {
                if input_dim != 1 {
                    return Err(Error::Structural(format!(
                        "embedding acts on the real line, got dimension {input_dim}"
                    )));
                }
                if index >= dim {
                    return Err(Error::Structural(format!(
                        "embedding index {index} outside dimension {dim}"
                    )));
                }
                Ok(*dim)
            }
            Operator::Composition { ops } => ops
                .iter()
                .rev()
                .try_fold(input_dim, |d, op| op.output_dim(d)),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.output_dim(v.len())?;
        Ok(self.apply_unchecked(v))
    }

    /// Application without dimension checks; callers validated the operator
    /// for `v.len()` beforehand.
    pub fn apply_unchecked(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Operator::Dense { rows, cols, data } => (0..*rows)
                .map(|i| {
                    data[i * cols..(i + 1) * cols]
                        .iter()
                        .zip(v)
                        .map(|(a, x)| a * x)
                        .sum()
                })
                .collect(),
            Operator::Scalar { a } => v.iter().map(|x| a * x).collect(),
            Operator::Diagonal { entries } => entries.iter().zip(v).map(|(a, x)| a * x).collect(),
            Operator::ShiftPower { m } => {
                let d = v.len();
                let mut out = vec![0.0; d];
                if *m < d {
                    out[*m..].copy_from_slice(&v[..d - m]);
                }
                out
            }
            Operator::Embedding { index, dim } => {
                let mut out = vec![0.0; *dim];
                out[*index] = v[0];
                out
            }
            Operator::Composition { ops } => {
                let mut cur = v.to_vec();
                for op in ops.iter().rev() {
                    cur = op.apply_unchecked(&cur);
                }
                cur
            }
        }
    }

    /// `n`-fold composition; `power(0)` is the identity.
    pub fn power(&self, n: usize) -> Operator {
        match (self, n) {
            (_, 0) => Operator::identity(),
            (_, 1) => self.clone(),
            (Operator::Scalar { a }, _) => Operator::Scalar {
                a: a.powi(n as i32),
            },
            (Operator::Diagonal { entries }, _) => Operator::Diagonal {
                entries: entries.iter().map(|a| a.powi(n as i32)).collect(),
            },
            (Operator::ShiftPower { m }, _) => Operator::ShiftPower { m: m * n },
            (Operator::Dense { rows, cols, data }, _) if rows == cols => {
                let d = *rows;
                let mut acc = identity_matrix(d);
                for _ in 0..n {
                    acc = matmul(data, &acc, d);
                }
                Operator::Dense {
                    rows: d,
                    cols: d,
                    data: acc,
                }
            }
            _ => Operator::Composition {
                ops: vec![self.clone(); n],
            },
        }
    }

    /// Column-major materialization for input dimension `input_dim`.
    fn columns(&self, input_dim: usize) -> Result<Vec<Vec<f64>>> {
        self.output_dim(input_dim)?;
        Ok((0..input_dim)
            .map(|j| {
                let mut e = vec![0.0; input_dim];
                e[j] = 1.0;
                self.apply_unchecked(&e)
            })
            .collect())
    }

    /// `Some(c)` when `||A x|| = c ||x||` for every `x`.
    pub fn isometry_factor(&self, domain: &Space, codomain: &Space) -> Option<f64> {
        let out = self.output_dim(domain.dim()).ok()?;
        if out != codomain.dim() {
            return None;
        }
        if domain.dim() == 1 {
            // every norm on the line is |x| times the norm of 1, and ours give 1
            let image = self.apply_unchecked(&[1.0]);
            return Some(codomain.norm_of(&image) / domain.norm_of(&[1.0]));
        }
        match self {
            Operator::Scalar { a } if domain == codomain => Some(a.abs()),
            Operator::Diagonal { entries } if domain == codomain => {
                let first = entries.first()?.abs();
                entries.iter().all(|e| e.abs() == first).then_some(first)
            }
            _ => None,
        }
    }

    /// Operator norm `sup_{||x|| = 1} ||A x||`, exact when a closed form or a
    /// finite extreme-point search applies, otherwise an inflated sampled maximum.
    pub fn norm_bound(&self, domain: &Space, codomain: &Space) -> Result<OperatorNormBound> {
        let out = self.output_dim(domain.dim())?;
        if out != codomain.dim() {
            return Err(Error::Structural(format!(
                "operator maps into dimension {out}, codomain has dimension {}",
                codomain.dim()
            )));
        }
        if let Some(c) = self.isometry_factor(domain, codomain) {
            return Ok(OperatorNormBound::exact(c));
        }
        let cols = self.columns(domain.dim())?;
        Ok(columns_norm_bound(&cols, domain.norm_spec(), codomain))
    }

    /// Norm of the restriction of the operator to the coordinate subspace
    /// spanned by `subspace`.
    pub fn restricted_norm_bound(
        &self,
        subspace: &[usize],
        domain: &Space,
        codomain: &Space,
    ) -> Result<OperatorNormBound> {
        if subspace.is_empty() {
            return Err(Error::Domain("restriction to an empty subspace".into()));
        }
        let mut coords = subspace.to_vec();
        coords.sort_unstable();
        coords.dedup();
        if let Some(&j) = coords.last() {
            if j >= domain.dim() {
                return Err(Error::Structural(format!(
                    "subspace coordinate {j} outside dimension {}",
                    domain.dim()
                )));
            }
        }
        if coords.len() == domain.dim() {
            return self.norm_bound(domain, codomain);
        }
        let out = self.output_dim(domain.dim())?;
        if out != codomain.dim() {
            return Err(Error::Structural("operator codomain mismatch".into()));
        }
        let all = self.columns(domain.dim())?;
        let cols: Vec<Vec<f64>> = coords.iter().map(|&j| all[j].clone()).collect();
        Ok(columns_norm_bound(
            &cols,
            &domain.norm_spec().restrict(&coords),
            codomain,
        ))
    }
}

/// Norm of the matrix with the given columns from `(R^k, dom)` into `codomain`.
fn columns_norm_bound(cols: &[Vec<f64>], dom: &NormSpec, codomain: &Space) -> OperatorNormBound {
    let k = cols.len();
    let rows = codomain.dim();
    if dom.is_l1_type() {
        let v = (0..k)
            .map(|j| codomain.norm_of(&cols[j]) / dom.unit_norm(j))
            .fold(0.0, f64::max);
        return OperatorNormBound::exact(v);
    }
    let nonzero_off_diagonal = (0..k).any(|j| (0..rows).any(|i| i != j && cols[j][i] != 0.0));
    if !nonzero_off_diagonal && k == rows && dom == codomain.norm_spec() {
        let v = (0..k).map(|j| cols[j][j].abs()).fold(0.0, f64::max);
        return OperatorNormBound::exact(v);
    }
    if matches!(dom, NormSpec::Max) {
        if matches!(codomain.norm_spec(), NormSpec::Max) {
            let v = (0..rows)
                .map(|i| cols.iter().map(|c| c[i].abs()).sum::<f64>())
                .fold(0.0, f64::max);
            return OperatorNormBound::exact(v);
        }
        if k <= VERTEX_ENUMERATION_MAX_DIM {
            let mut best = 0.0f64;
            let mut image = vec![0.0; rows];
            for mask in 0u32..(1u32 << k) {
                image.iter_mut().for_each(|y| *y = 0.0);
                for (j, c) in cols.iter().enumerate() {
                    let s = if mask & (1 << j) != 0 { -1.0 } else { 1.0 };
                    for (y, a) in image.iter_mut().zip(c) {
                        *y += s * a;
                    }
                }
                best = best.max(codomain.norm_of(&image));
            }
            return OperatorNormBound::exact(best);
        }
    }
    sampled_bound(cols, dom, codomain)
}

fn sampled_bound(cols: &[Vec<f64>], dom: &NormSpec, codomain: &Space) -> OperatorNormBound {
    let k = cols.len();
    let mut rng = rng_from_seed(0x0b0d_5eed);
    let mut image = vec![0.0; codomain.dim()];
    let mut eval = |x: &[f64]| {
        image.iter_mut().for_each(|y| *y = 0.0);
        for (xj, c) in x.iter().zip(cols) {
            for (y, a) in image.iter_mut().zip(c) {
                *y += xj * a;
            }
        }
        codomain.norm_of(&image)
    };
    let mut best = 0.0f64;
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0 / dom.unit_norm(j);
        best = best.max(eval(&e));
    }
    for _ in 0..SAMPLED_BOUND_POINTS {
        let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = dom.eval(&g);
        if r > 0.0 {
            let x: Vec<f64> = g.iter().map(|v| v / r).collect();
            best = best.max(eval(&x));
        }
    }
    OperatorNormBound {
        value: SAMPLED_BOUND_INFLATION * best,
        exact: false,
    }
}

fn identity_matrix(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}
