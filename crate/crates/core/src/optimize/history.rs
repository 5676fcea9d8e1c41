use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a history row is indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryKind {
    /// One row per objective evaluation (harmony search, random search).
    Evaluation,
    /// One row per generation (GA).
    Generation,
}

impl HistoryKind {
    fn index_column(self) -> &'static str {
        match self {
            HistoryKind::Evaluation => "eval_index",
            HistoryKind::Generation => "generation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    /// 1-based evaluation or generation number.
    pub index: usize,
    /// Best fitness seen so far.
    pub best_fitness: f64,
    /// Mean over the current memory or population.
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub history: Vec<HistoryRow>,
    pub evaluations: usize,
    pub kind: HistoryKind,
}

/// Writes `eval_index,best_fitness,mean_fitness` or
/// `generation,best_fitness,mean_fitness`.
pub fn write_history_csv<W: Write>(out: W, kind: HistoryKind, rows: &[HistoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([kind.index_column(), "best_fitness", "mean_fitness"])?;
    for r in rows {
        w.write_record([r.index.to_string(), r.best_fitness.to_string(), r.mean_fitness.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Mean ignoring non-finite entries; `-inf` when none are finite.
pub(crate) fn finite_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NEG_INFINITY
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers() {
        let rows = [HistoryRow {
            index: 1,
            best_fitness: 2.5,
            mean_fitness: 1.0,
        }];
        let mut buf = Vec::new();
        write_history_csv(&mut buf, HistoryKind::Evaluation, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eval_index,best_fitness,mean_fitness\n1,2.5,1\n");
        let mut buf = Vec::new();
        write_history_csv(&mut buf, HistoryKind::Generation, &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("generation,"));
    }

    #[test]
    fn mean_skips_non_finite() {
        assert_eq!(finite_mean([1.0, f64::NEG_INFINITY, 3.0]), 2.0);
        assert_eq!(finite_mean([f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
