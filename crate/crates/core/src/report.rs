//! Verification reports: named checks with explicit tolerance rules.

use serde::Serialize;

use crate::mc::{Estimate, CHUNK};
use crate::simulate::INNOVATION_BLOCK;

/// Slack for arithmetic round-off in otherwise exact comparisons.
const ROUNDOFF: f64 = 1e-12;

/// How a check decides pass or fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ToleranceRule {
    /// `|estimate - target| <= k * stderr`
    Sigma { k: f64 },
    /// `|estimate - target| <= k * stderr + bias`, with `bias` an empirical
    /// allowance for finite-threshold effects.
    SigmaPlusBias { k: f64, bias: f64 },
    /// `|estimate - target| <= tol`
    Absolute { tol: f64 },
    /// `|estimate - target| <= tol * |target|`
    Relative { tol: f64 },
    /// `estimate < target`
    StrictLess,
}

impl ToleranceRule {
    pub fn passes(&self, estimate: f64, target: f64, stderr: f64) -> bool {
        let d = (estimate - target).abs();
        let slack = ROUNDOFF * (1.0 + target.abs());
        match *self {
            ToleranceRule::Sigma { k } => d <= k * stderr + slack,
            ToleranceRule::SigmaPlusBias { k, bias } => d <= k * stderr + bias + slack,
            ToleranceRule::Absolute { tol } => d <= tol,
            ToleranceRule::Relative { tol } => d <= tol * target.abs(),
            ToleranceRule::StrictLess => estimate < target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub target: f64,
    pub stderr: f64,
    pub tolerance: ToleranceRule,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        estimate: f64,
        target: f64,
        stderr: f64,
        tolerance: ToleranceRule,
    ) -> Self {
        let pass = tolerance.passes(estimate, target, stderr);
        Check {
            name: name.into(),
            estimate,
            target,
            stderr,
            tolerance,
            pass,
        }
    }

    /// Two independent estimates of the same quantity, `k` combined SE apart at most.
    pub fn agree(name: impl Into<String>, a: Estimate, b: Estimate, k: f64) -> Self {
        Check::new(
            name,
            a.value,
            b.value,
            a.stderr.hypot(b.stderr),
            ToleranceRule::Sigma { k },
        )
    }
}

/// Deterministic description of how a run was executed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Runtime {
    pub workers: usize,
    pub chunk_size: usize,
    pub innovation_block: i64,
}

impl Runtime {
    pub fn current() -> Self {
        Runtime {
            workers: rayon::current_num_threads(),
            chunk_size: CHUNK,
            innovation_block: INNOVATION_BLOCK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub seed: u64,
    pub version: String,
    pub runtime: Runtime,
}

impl Environment {
    pub fn new(seed: u64) -> Self {
        Environment {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            runtime: Runtime::current(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub environment: Environment,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>, environment: Environment, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport {
            suite: suite.into(),
            environment,
            checks,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
