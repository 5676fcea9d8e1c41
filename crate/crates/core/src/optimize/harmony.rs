//! Harmony search.
//!
//! A memory of `hms` solution vectors is initialised uniformly inside the
//! bounds. Each improvisation builds a new vector component by component:
//! with probability `hmcr` the value is copied from a random memory row and
//! then, with probability `par`, pitch-adjusted; otherwise it is drawn
//! uniformly from the bounds. The candidate replaces the worst row when it
//! is strictly better. The run stops after `ni` improvisations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::history::{finite_mean, HistoryKind, HistoryRow, OptimizeResult};
use super::{rng_from_seed, sanitize, SearchBounds};
use crate::error::{Error, Result};

/// How a memory-drawn component is pitch-adjusted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PitchMode {
    /// Replace with a fresh uniform draw over the whole interval.
    #[default]
    Full,
    /// Move by `U(-1, 1) * fraction * (upper - lower)`, clipped to bounds.
    Bandwidth { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HsParams {
    pub hms: usize,
    pub hmcr: f64,
    pub par: f64,
    pub ni: usize,
    pub seed: u64,
    pub pitch: PitchMode,
}

impl Default for HsParams {
    fn default() -> Self {
        Self {
            hms: 10,
            hmcr: 0.9,
            par: 0.3,
            ni: 750,
            seed: 0,
            pitch: PitchMode::Full,
        }
    }
}

impl HsParams {
    pub fn validate(&self) -> Result<()> {
        if self.hms < 2 {
            return Err(Error::invalid(format!("hms must be at least 2, got {}", self.hms)));
        }
        if !(0.0..=1.0).contains(&self.hmcr) {
            return Err(Error::invalid(format!("hmcr must lie in [0, 1], got {}", self.hmcr)));
        }
        if !(0.0..=1.0).contains(&self.par) {
            return Err(Error::invalid(format!("par must lie in [0, 1], got {}", self.par)));
        }
        if let PitchMode::Bandwidth { fraction } = self.pitch {
            if !(fraction.is_finite() && fraction > 0.0) {
                return Err(Error::invalid(format!("pitch bandwidth must be positive, got {fraction}")));
            }
        }
        Ok(())
    }

    /// Objective evaluations a run performs.
    pub fn budget(&self) -> usize {
        self.hms + self.ni
    }
}

/// Harmony memory: `hms` vectors with their fitness (maximised).
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonyMemory {
    vectors: Vec<Vec<f64>>,
    fitness: Vec<f64>,
    worst: usize,
}

impl HarmonyMemory {
    /// Builds a memory from explicit rows and fitness values.
    pub fn from_rows(vectors: Vec<Vec<f64>>, fitness: Vec<f64>) -> Result<Self> {
        if vectors.len() < 2 || vectors.len() != fitness.len() {
            return Err(Error::invalid(format!(
                "harmony memory needs at least 2 rows and one fitness per row, got {} rows and {} values",
                vectors.len(),
                fitness.len()
            )));
        }
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("harmony memory rows differ in length"));
        }
        let mut hm = Self {
            vectors,
            fitness: fitness.into_iter().map(sanitize).collect(),
            worst: 0,
        };
        hm.recompute_worst();
        Ok(hm)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    /// Row with the lowest fitness, lowest index on ties.
    pub fn worst_index(&self) -> usize {
        self.worst
    }

    /// Row with the highest fitness, lowest index on ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, f) in self.fitness.iter().enumerate() {
            if *f > self.fitness[best] {
                best = i;
            }
        }
        best
    }

    pub fn set_fitness(&mut self, row: usize, fitness: f64) {
        self.fitness[row] = sanitize(fitness);
        self.recompute_worst();
    }

    pub fn mean_fitness(&self) -> f64 {
        finite_mean(self.fitness.iter().copied())
    }

    fn recompute_worst(&mut self) {
        let mut worst = 0;
        for (i, f) in self.fitness.iter().enumerate() {
            if *f < self.fitness[worst] {
                worst = i;
            }
        }
        self.worst = worst;
    }
}

/// Fills a memory with `hms` uniform draws. Fitness starts at `-inf`
/// (unevaluated).
pub fn init_memory<R: Rng + ?Sized>(bounds: &SearchBounds, hms: usize, rng: &mut R) -> Result<HarmonyMemory> {
    bounds.validate()?;
    if hms < 2 {
        return Err(Error::invalid(format!("hms must be at least 2, got {hms}")));
    }
    let vectors = (0..hms).map(|_| bounds.sample(rng)).collect();
    HarmonyMemory::from_rows(vectors, vec![f64::NEG_INFINITY; hms])
}

/// Builds one new vector by memory consideration, pitch adjustment and
/// random selection.
pub fn improvise<R: Rng + ?Sized>(
    hm: &HarmonyMemory,
    bounds: &SearchBounds,
    hmcr: f64,
    par: f64,
    pitch: PitchMode,
    rng: &mut R,
) -> Vec<f64> {
    (0..bounds.dim())
        .map(|i| {
            if rng.random::<f64>() < hmcr {
                let row = rng.random_range(0..hm.len());
                let v = hm.vectors[row][i];
                if rng.random::<f64>() < par {
                    match pitch {
                        PitchMode::Full => bounds.sample_component(i, rng),
                        PitchMode::Bandwidth { fraction } => {
                            let shift = rng.random_range(-1.0..=1.0) * fraction * bounds.range(i);
                            bounds.clip(i, v + shift)
                        }
                    }
                } else {
                    v
                }
            } else {
                bounds.sample_component(i, rng)
            }
        })
        .collect()
}

/// Replaces the worst row with `candidate` when `fitness` is strictly
/// greater than the worst fitness. Returns whether it was accepted.
pub fn update_memory(hm: &mut HarmonyMemory, candidate: &[f64], fitness: f64) -> bool {
    let fitness = sanitize(fitness);
    let w = hm.worst;
    if fitness > hm.fitness[w] {
        hm.vectors[w].clear();
        hm.vectors[w].extend_from_slice(candidate);
        hm.fitness[w] = fitness;
        hm.recompute_worst();
        true
    } else {
        false
    }
}

/// Runs harmony search for exactly `hms + ni` objective evaluations.
///
/// `progress` receives one [`HistoryRow`] per evaluation: the best fitness
/// seen so far and the mean fitness of the evaluated memory.
pub fn hs_optimize<F, P>(
    mut objective: F,
    bounds: &SearchBounds,
    params: &HsParams,
    mut progress: P,
) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&HistoryRow),
{
    params.validate()?;
    bounds.validate()?;
    let mut rng = rng_from_seed(params.seed);
    let mut hm = init_memory(bounds, params.hms, &mut rng)?;
    let mut history = Vec::with_capacity(params.budget());
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;

    let mut record = |evaluations: usize, best: &Option<(Vec<f64>, f64)>, mean: f64, history: &mut Vec<HistoryRow>| {
        let row = HistoryRow {
            index: evaluations,
            best_fitness: best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1),
            mean_fitness: mean,
        };
        progress(&row);
        history.push(row);
    };

    for row in 0..params.hms {
        let f = sanitize(objective(&hm.vectors[row]));
        evaluations += 1;
        hm.fitness[row] = f;
        if best.as_ref().is_none_or(|b| f > b.1) {
            best = Some((hm.vectors[row].clone(), f));
        }
        let mean = finite_mean(hm.fitness[..=row].iter().copied());
        record(evaluations, &best, mean, &mut history);
    }
    hm.recompute_worst();

    for _ in 0..params.ni {
        let candidate = improvise(&hm, bounds, params.hmcr, params.par, params.pitch, &mut rng);
        let f = sanitize(objective(&candidate));
        evaluations += 1;
        if best.as_ref().is_none_or(|b| f > b.1) {
            best = Some((candidate.clone(), f));
        }
        update_memory(&mut hm, &candidate, f);
        record(evaluations, &best, hm.mean_fitness(), &mut history);
    }

    // Only empty when every evaluation was NaN.
    let (best, best_fitness) = best.unwrap_or_else(|| (hm.vectors[0].clone(), f64::NEG_INFINITY));
    Ok(OptimizeResult {
        best,
        best_fitness,
        history,
        evaluations,
        kind: HistoryKind::Evaluation,
    })
}
