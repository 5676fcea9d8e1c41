use super::history::{HistoryKind, HistoryRow, OptimizeResult};
use super::{rng_from_seed, sanitize, SearchBounds};
use crate::error::Result;

/// Uniform random search with `budget` evaluations. The history's mean
/// column is the running mean of all finite evaluations.
pub fn random_search<F, P>(
    mut objective: F,
    bounds: &SearchBounds,
    budget: usize,
    seed: u64,
    mut progress: P,
) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&HistoryRow),
{
    bounds.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut history = Vec::with_capacity(budget);
    let (mut sum, mut finite) = (0.0, 0usize);
    for k in 1..=budget {
        let x = bounds.sample(&mut rng);
        let f = sanitize(objective(&x));
        if f.is_finite() {
            sum += f;
            finite += 1;
        }
        if best.as_ref().is_none_or(|b| f > b.1) {
            best = Some((x, f));
        }
        let row = HistoryRow {
            index: k,
            best_fitness: best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1),
            mean_fitness: if finite == 0 { f64::NEG_INFINITY } else { sum / finite as f64 },
        };
        progress(&row);
        history.push(row);
    }
    let (best, best_fitness) = best.unwrap_or_else(|| (bounds.lower().to_vec(), f64::NEG_INFINITY));
    Ok(OptimizeResult {
        best,
        best_fitness,
        history,
        evaluations: budget,
        kind: HistoryKind::Evaluation,
    })
}
