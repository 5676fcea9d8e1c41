//! Bounded-vector black-box maximisation.
//!
//! All optimizers here maximise. Minimisation problems (the benchmark
//! functions) are negated by their wrappers.

mod bench;
mod ga;
mod genome;
mod harmony;
mod history;
mod random;

pub use bench::Benchmark;
pub use ga::{ga_optimize, GaParams};
pub use genome::{Genome, SearchBounds, GENOME_LEN, GENOME_NAMES};
pub use harmony::{hs_optimize, improvise, init_memory, update_memory, HarmonyMemory, HsParams, PitchMode};
pub use history::{write_history_csv, HistoryKind, HistoryRow, OptimizeResult};
pub use random::random_search;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator used by every optimizer.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// NaN fitness ranks below everything.
pub(crate) fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        log::warn!("objective returned NaN; treating as -inf");
        f64::NEG_INFINITY
    } else {
        f
    }
}
