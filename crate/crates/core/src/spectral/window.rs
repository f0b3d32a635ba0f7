//! Finite stretches of spectral and tail processes.

use crate::banach::Space;
use crate::error::Result;
use crate::mc::Rng;

/// `(Θ_{-back}, ..., Θ_fwd)` from one draw of a spectral process.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWindow {
    pub back: usize,
    pub fwd: usize,
    /// Slots in time order, `values[0]` is `Θ_{-back}`.
    pub values: Vec<Vec<f64>>,
    /// Mixture component that produced the draw.
    pub origin: i64,
    /// Rejection trials spent on this draw.
    pub trials: u64,
}

impl SpectralWindow {
    /// `Θ_u` for `-back <= u <= fwd`.
    pub fn at(&self, u: i64) -> &[f64] {
        let k = u + self.back as i64;
        assert!(
            k >= 0 && (k as usize) < self.values.len(),
            "offset {u} outside window [-{}, {}]",
            self.back,
            self.fwd
        );
        &self.values[k as usize]
    }

    pub fn theta0(&self) -> &[f64] {
        &self.values[self.back]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `Y_t = Y Θ_t` with `Y ~ Pareto(alpha)` independent of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct TailWindow {
    pub radius: f64,
    pub window: SpectralWindow,
}

impl TailWindow {
    pub fn y(&self, u: i64) -> Vec<f64> {
        self.window.at(u).iter().map(|x| self.radius * x).collect()
    }
}

/// Anything that draws windows of a spectral process.
pub trait WindowSampler: Send + Sync {
    fn alpha(&self) -> f64;

    /// The state space the process lives in.
    fn space(&self) -> &Space;

    /// Largest lag `|t|` at which `Θ_t` can be nonzero; for processes with
    /// infinite memory, the truncation horizon.
    fn extent(&self) -> usize;

    fn sample(&self, back: usize, fwd: usize, rng: &mut Rng) -> Result<SpectralWindow>;
}
