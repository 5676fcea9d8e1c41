use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SearchBounds;
use crate::error::{Error, Result};

/// Classic minimisation test functions. [`Benchmark::fitness`] returns the
/// negated value for use with the maximising optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    /// `sum x_i^2`, minimum 0 at the origin.
    Sphere,
    /// `sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`, minimum 0 at all ones.
    Rosenbrock,
    /// `10 n + sum x_i^2 - 10 cos(2 pi x_i)`, minimum 0 at the origin.
    Rastrigin,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Sphere, Benchmark::Rosenbrock, Benchmark::Rastrigin];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::Rastrigin => "rastrigin",
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Sphere => x.iter().map(|v| v * v).sum(),
            Benchmark::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Benchmark::Rastrigin => {
                10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
            }
        }
    }

    pub fn fitness(self, x: &[f64]) -> f64 {
        -self.value(x)
    }

    /// Conventional search box for `dim` dimensions.
    pub fn default_bounds(self, dim: usize) -> Result<SearchBounds> {
        match self {
            Benchmark::Sphere => SearchBounds::uniform(dim, -5.0, 5.0),
            Benchmark::Rosenbrock => SearchBounds::uniform(dim, -2.048, 2.048),
            Benchmark::Rastrigin => SearchBounds::uniform(dim, -5.12, 5.12),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown benchmark function '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optima_are_zero() {
        assert_eq!(Benchmark::Sphere.value(&[0.0; 10]), 0.0);
        assert_eq!(Benchmark::Rosenbrock.value(&[1.0; 10]), 0.0);
        assert_eq!(Benchmark::Rastrigin.value(&[0.0; 10]), 0.0);
        assert_eq!(Benchmark::Sphere.fitness(&[1.0, 2.0]), -5.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("Sphere".parse::<Benchmark>().unwrap(), Benchmark::Sphere);
        assert!("ackley".parse::<Benchmark>().is_err());
    }
}
