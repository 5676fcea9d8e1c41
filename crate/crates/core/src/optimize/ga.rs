//! Generational real-valued GA used as the comparison baseline.
//!
//! Tournament selection, uniform crossover, Gaussian mutation clipped to the
//! bounds and an elite of one. Every generation evaluates the whole
//! population, elite included, so a run costs exactly
//! `population * generations` evaluations.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::history::{finite_mean, HistoryKind, HistoryRow, OptimizeResult};
use super::{rng_from_seed, sanitize, SearchBounds};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    /// Per-gene probability of inheriting from the second parent.
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    /// Mutation standard deviation as a fraction of each variable's range.
    pub mutation_sigma: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 200,
            generations: 10,
            crossover_rate: 0.5,
            mutation_rate: 0.1,
            tournament_size: 3,
            mutation_sigma: 0.05,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::invalid(format!("population must be at least 2, got {}", self.population)));
        }
        if self.generations < 1 {
            return Err(Error::invalid("generations must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::invalid(format!("crossover rate must lie in [0, 1], got {}", self.crossover_rate)));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::invalid(format!("mutation rate must lie in [0, 1], got {}", self.mutation_rate)));
        }
        if self.tournament_size < 1 {
            return Err(Error::invalid("tournament size must be at least 1"));
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            return Err(Error::invalid(format!("mutation sigma must be non-negative, got {}", self.mutation_sigma)));
        }
        Ok(())
    }

    pub fn budget(&self) -> usize {
        self.population * self.generations
    }
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let i = rng.random_range(0..fitness.len());
        if fitness[i] > fitness[best] {
            best = i;
        }
    }
    best
}

pub fn ga_optimize<F, P>(
    mut objective: F,
    bounds: &SearchBounds,
    params: &GaParams,
    mut progress: P,
) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&HistoryRow),
{
    params.validate()?;
    bounds.validate()?;
    let mut rng = rng_from_seed(params.seed);
    let dim = bounds.dim();

    let mut population: Vec<Vec<f64>> = (0..params.population).map(|_| bounds.sample(&mut rng)).collect();
    let mut fitness = vec![f64::NEG_INFINITY; params.population];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut history = Vec::with_capacity(params.generations);
    let mut evaluations = 0;

    for generation in 1..=params.generations {
        if generation > 1 {
            let elite = (0..population.len())
                .fold(0, |b, i| if fitness[i] > fitness[b] { i } else { b });
            let mut next = Vec::with_capacity(params.population);
            next.push(population[elite].clone());
            while next.len() < params.population {
                let a = tournament(&fitness, params.tournament_size, &mut rng);
                let b = tournament(&fitness, params.tournament_size, &mut rng);
                let mut child: Vec<f64> = (0..dim)
                    .map(|i| {
                        if rng.random::<f64>() < params.crossover_rate {
                            population[b][i]
                        } else {
                            population[a][i]
                        }
                    })
                    .collect();
                for (i, gene) in child.iter_mut().enumerate() {
                    if rng.random::<f64>() < params.mutation_rate {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *gene = bounds.clip(i, *gene + z * params.mutation_sigma * bounds.range(i));
                    }
                }
                next.push(child);
            }
            population = next;
        }

        for (i, individual) in population.iter().enumerate() {
            let f = sanitize(objective(individual));
            evaluations += 1;
            fitness[i] = f;
            if best.as_ref().is_none_or(|b| f > b.1) {
                best = Some((individual.clone(), f));
            }
        }

        let row = HistoryRow {
            index: generation,
            best_fitness: best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1),
            mean_fitness: finite_mean(fitness.iter().copied()),
        };
        progress(&row);
        history.push(row);
    }

    let (best, best_fitness) = best.unwrap_or_else(|| (population[0].clone(), f64::NEG_INFINITY));
    Ok(OptimizeResult {
        best,
        best_fitness,
        history,
        evaluations,
        kind: HistoryKind::Generation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::Benchmark;

    #[test]
    fn single_generation_is_random_init() {
        let b = SearchBounds::uniform(5, -5.0, 5.0).unwrap();
        let params = GaParams {
            population: 30,
            generations: 1,
            crossover_rate: 0.0,
            mutation_rate: 0.0,
            seed: 11,
            ..Default::default()
        };
        let r = ga_optimize(|x| Benchmark::Sphere.fitness(x), &b, &params, |_| {}).unwrap();
        let mut rng = rng_from_seed(11);
        let best = (0..30)
            .map(|_| Benchmark::Sphere.fitness(&b.sample(&mut rng)))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.best_fitness, best);
        assert_eq!(r.evaluations, 30);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn offspring_respect_bounds() {
        let b = SearchBounds::new(vec![0.0, -1.0, 10.0], vec![0.001, 1.0, 10.5]).unwrap();
        let params = GaParams {
            population: 20,
            generations: 15,
            mutation_rate: 1.0,
            mutation_sigma: 3.0,
            seed: 5,
            ..Default::default()
        };
        ga_optimize(
            |x| {
                assert!(b.contains(x), "{x:?}");
                -x[1].abs()
            },
            &b,
            &params,
            |_| {},
        )
        .unwrap();
    }

    #[test]
    fn invalid_params() {
        let b = SearchBounds::uniform(2, 0.0, 1.0).unwrap();
        for p in [
            GaParams { population: 1, ..Default::default() },
            GaParams { generations: 0, ..Default::default() },
            GaParams { mutation_rate: 2.0, ..Default::default() },
            GaParams { tournament_size: 0, ..Default::default() },
        ] {
            assert!(ga_optimize(|_| 0.0, &b, &p, |_| {}).is_err());
        }
    }
}
