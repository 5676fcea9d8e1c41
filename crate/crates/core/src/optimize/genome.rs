use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controller::NetworkParams;
use crate::error::{Error, Result};
use crate::oscillator::OscillatorParams;

pub const GENOME_LEN: usize = 10;

pub const GENOME_NAMES: [&str; GENOME_LEN] = [
    "tau1", "tau2", "alpha", "beta", "gamma", "c", "w11", "w12", "b1", "b2",
];

/// Per-variable closed intervals `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// The same interval in every dimension.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    /// Initialization intervals for the gait genome, in [`GENOME_NAMES`]
    /// order.
    pub fn gait() -> Self {
        Self {
            lower: vec![0.0, 0.0, -5.0, -5.0, -5.0, 2.0, -4.0, -5.0, -95.0, -125.0],
            upper: vec![25.0, 25.0, 5.0, 5.0, 5.0, 4.0, 1.0, 0.0, 20.0, -5.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::invalid(format!(
                "bounds need matching non-empty lower/upper, got {} and {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "bound {i} must satisfy lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// True when every interval of `self` lies inside the matching interval
    /// of `outer`.
    pub fn within(&self, outer: &SearchBounds) -> bool {
        self.dim() == outer.dim()
            && (0..self.dim()).all(|i| self.lower[i] >= outer.lower[i] && self.upper[i] <= outer.upper[i])
    }

    pub fn sample_component<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        let v = self.lower[i] + rng.random::<f64>() * self.range(i);
        v.min(self.upper[i])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim()).map(|i| self.sample_component(i, rng)).collect()
    }

    pub fn clip(&self, i: usize, v: f64) -> f64 {
        v.clamp(self.lower[i], self.upper[i])
    }
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self::gait()
    }
}

/// Oscillator and network parameters as one 10-vector:
/// `(tau1, tau2, alpha, beta, gamma, c, w11, w12, b1, b2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub tau1: f64,
    pub tau2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
    pub w11: f64,
    pub w12: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Genome {
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let a: [f64; GENOME_LEN] = v
            .try_into()
            .map_err(|_| Error::invalid(format!("genome needs {GENOME_LEN} values, got {}", v.len())))?;
        Ok(Self::from_array(a))
    }

    pub fn from_array(a: [f64; GENOME_LEN]) -> Self {
        Self {
            tau1: a[0],
            tau2: a[1],
            alpha: a[2],
            beta: a[3],
            gamma: a[4],
            c: a[5],
            w11: a[6],
            w12: a[7],
            b1: a[8],
            b2: a[9],
        }
    }

    pub fn to_array(&self) -> [f64; GENOME_LEN] {
        [
            self.tau1, self.tau2, self.alpha, self.beta, self.gamma, self.c, self.w11, self.w12,
            self.b1, self.b2,
        ]
    }

    pub fn check(&self, bounds: &SearchBounds) -> Result<()> {
        let v = self.to_array();
        if bounds.dim() != GENOME_LEN {
            return Err(Error::invalid(format!(
                "gait genome bounds need {GENOME_LEN} entries, got {}",
                bounds.dim()
            )));
        }
        for i in 0..GENOME_LEN {
            if !(v[i] >= bounds.lower()[i] && v[i] <= bounds.upper()[i]) {
                return Err(Error::invalid(format!(
                    "genome {} = {} outside [{}, {}]",
                    GENOME_NAMES[i],
                    v[i],
                    bounds.lower()[i],
                    bounds.upper()[i]
                )));
            }
        }
        Ok(())
    }

    pub fn oscillator(&self) -> OscillatorParams {
        OscillatorParams {
            tau1: self.tau1,
            tau2: self.tau2,
            beta: self.beta,
            gamma: self.gamma,
            alpha: self.alpha,
            c: self.c,
        }
    }

    pub fn network(&self) -> NetworkParams {
        NetworkParams {
            w11: self.w11,
            w12: self.w12,
            b1: self.b1,
            b2: self.b2,
        }
    }

    pub fn from_parts(osc: &OscillatorParams, net: &NetworkParams) -> Self {
        Self {
            tau1: osc.tau1,
            tau2: osc.tau2,
            alpha: osc.alpha,
            beta: osc.beta,
            gamma: osc.gamma,
            c: osc.c,
            w11: net.w11,
            w12: net.w12,
            b1: net.b1,
            b2: net.b2,
        }
    }
}
