//! Experiment drivers behind the command-line tool.
//!
//! Every driver takes a validated configuration, writes plot-ready CSV and
//! JSON artifacts under an output directory and returns a summary. Runs for
//! different seeds go to disjoint `seed-<n>` subdirectories.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{
    ga_optimize, hs_optimize, random_search, write_history_csv, Benchmark, GaParams, Genome, HsParams,
    OptimizeResult, SearchBounds, GENOME_NAMES,
};
use crate::oscillator::{self, OscillationReport, OscillatorParams, OscillatorState, DEFAULT_DT};
use crate::simulator::{self, ResultRecord, SimConfig, SimResult};

/// Artifact format version written into manifests.
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Hs,
    Ga,
    Random,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" => Ok(Self::Hs),
            "ga" => Ok(Self::Ga),
            "random" => Ok(Self::Random),
            other => Err(Error::invalid(format!("unknown optimizer '{other}' (expected hs, ga or random)"))),
        }
    }
}

/// Everything needed to run `optimize` or `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub optimizer: OptimizerKind,
    pub hs: HsParams,
    pub ga: GaParams,
    /// Evaluations for random search; defaults to the harmony search budget.
    pub random_budget: Option<usize>,
    pub sim: SimConfig,
    pub bounds: SearchBounds,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    /// Lets `compare` run optimizers with different evaluation budgets.
    pub allow_unequal_budget: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Hs,
            hs: HsParams::default(),
            ga: GaParams::default(),
            random_budget: None,
            sim: SimConfig::default(),
            bounds: SearchBounds::gait(),
            out: PathBuf::from("runs"),
            seeds: vec![0],
            allow_unequal_budget: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if self.bounds.dim() != GENOME_NAMES.len() {
            return Err(Error::invalid(format!(
                "bounds must have {} entries, got {}",
                GENOME_NAMES.len(),
                self.bounds.dim()
            )));
        }
        self.bounds.validate()?;
        self.hs.validate()?;
        self.ga.validate()?;
        self.sim.validate()?;
        if self.random_budget == Some(0) {
            return Err(Error::invalid("random budget must be positive"));
        }
        Ok(())
    }

    pub fn random_budget(&self) -> usize {
        self.random_budget.unwrap_or_else(|| self.hs.budget())
    }

    /// Evaluation budget of the selected optimizer.
    pub fn budget(&self) -> usize {
        match self.optimizer {
            OptimizerKind::Hs => self.hs.budget(),
            OptimizerKind::Ga => self.ga.budget(),
            OptimizerKind::Random => self.random_budget(),
        }
    }

    /// A copy configured for a single seed; optimizer and noise streams
    /// both follow the seed.
    pub fn for_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seeds = vec![seed];
        c.hs.seed = seed;
        c.ga.seed = seed;
        c.sim.seed = seed;
        c
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, message: impl ToString) -> Error {
    Error::Parse {
        context: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Loads an experiment configuration from TOML, or from the `config` field
/// of a run manifest when the file ends in `.json`.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = read_to_string(path)?;
    let config = if path.extension().is_some_and(|e| e == "json") {
        let m: Manifest = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
        m.config
    } else {
        toml::from_str(&text).map_err(|e| parse_error(path, e))?
    };
    config.validate()?;
    Ok(config)
}

/// Loads and parses a TOML file.
pub fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    toml::from_str(&text).map_err(|e| parse_error(path, e))
}

/// Re-run record written next to each run's artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub evaluations: usize,
    pub best_fitness: f64,
    pub config: ExperimentConfig,
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub dir: PathBuf,
    pub best: Genome,
    pub best_fitness: f64,
    pub evaluations: usize,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_history(path: &Path, result: &OptimizeResult) -> Result<()> {
    write_history_csv(create(path)?, result.kind, &result.history)
}

/// Gait fitness of a raw search vector. Simulator errors score as the worst
/// possible fitness.
fn gait_objective<'a>(sim: &'a SimConfig, evaluations: &'a mut usize) -> impl FnMut(&[f64]) -> f64 + 'a {
    move |v: &[f64]| {
        *evaluations += 1;
        match Genome::from_slice(v).and_then(|g| simulator::evaluate(&g, sim)) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("evaluation failed, scored as -inf: {e}");
                f64::NEG_INFINITY
            }
        }
    }
}

fn optimize_once(config: &ExperimentConfig, kind: OptimizerKind) -> Result<(OptimizeResult, usize)> {
    let mut evaluations = 0;
    let objective = gait_objective(&config.sim, &mut evaluations);
    let progress = |row: &crate::optimize::HistoryRow| {
        log::trace!("{kind:?} {} best {:.4}", row.index, row.best_fitness);
    };
    let result = match kind {
        OptimizerKind::Hs => hs_optimize(objective, &config.bounds, &config.hs, progress)?,
        OptimizerKind::Ga => ga_optimize(objective, &config.bounds, &config.ga, progress)?,
        OptimizerKind::Random => random_search(
            objective,
            &config.bounds,
            config.random_budget(),
            config.hs.seed,
            progress,
        )?,
    };
    Ok((result, evaluations))
}

fn optimize_seed(config: &ExperimentConfig, kind: OptimizerKind, seed: u64, dir: &Path, prefix: &str) -> Result<RunSummary> {
    let mut single = config.for_seed(seed);
    single.optimizer = kind;
    create_dir(dir)?;
    let (result, evaluations) = optimize_once(&single, kind)?;
    let best = Genome::from_slice(&result.best)?;
    write_json(&dir.join(format!("{prefix}best_genome.json")), &best)?;
    write_history(&dir.join(format!("{prefix}history.csv")), &result)?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        optimizer: kind,
        seed,
        evaluations,
        best_fitness: result.best_fitness,
        config: single,
    };
    write_json(&dir.join(format!("{prefix}manifest.json")), &manifest)?;
    log::info!("{kind:?} seed {seed}: best fitness {:.4} after {evaluations} evaluations", result.best_fitness);
    Ok(RunSummary {
        seed,
        dir: dir.to_path_buf(),
        best,
        best_fitness: result.best_fitness,
        evaluations,
    })
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Runs the configured optimizer once per seed and writes
/// `seed-<n>/{best_genome.json, history.csv, manifest.json}`.
pub fn run_optimize(config: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    config.validate()?;
    config
        .seeds
        .iter()
        .map(|&s| optimize_seed(config, config.optimizer, s, &seed_dir(&config.out, s), ""))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub seed: u64,
    pub hs_best: f64,
    pub ga_best: f64,
    pub hs_evaluations: usize,
    pub ga_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub hs_median: f64,
    pub ga_median: f64,
    /// Seeds where harmony search scored strictly higher.
    pub hs_wins: usize,
    pub ties: usize,
}

/// Median of the finite-or-infinite values; NaN sorts below everything.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl CompareReport {
    pub fn from_rows(rows: Vec<CompareRow>) -> Self {
        let hs: Vec<f64> = rows.iter().map(|r| r.hs_best).collect();
        let ga: Vec<f64> = rows.iter().map(|r| r.ga_best).collect();
        Self {
            hs_median: median(&hs),
            ga_median: median(&ga),
            hs_wins: rows.iter().filter(|r| r.hs_best > r.ga_best).count(),
            ties: rows.iter().filter(|r| r.hs_best == r.ga_best).count(),
            rows,
        }
    }

    /// Writes `seed,hs_best,ga_best,hs_evaluations,ga_evaluations`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Runs harmony search and the GA on the same seeds and writes per-seed
/// artifacts (`hs_*`, `ga_*`), `compare.csv` and `compare_summary.json`.
pub fn run_compare(config: &ExperimentConfig) -> Result<CompareReport> {
    config.validate()?;
    let (hs_budget, ga_budget) = (config.hs.budget(), config.ga.budget());
    if hs_budget != ga_budget && !config.allow_unequal_budget {
        return Err(Error::invalid(format!(
            "harmony search budget {hs_budget} (hms + ni) differs from GA budget {ga_budget} \
             (population x generations); match them or allow unequal budgets"
        )));
    }
    create_dir(&config.out)?;
    let mut rows = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let dir = seed_dir(&config.out, seed);
        let hs = optimize_seed(config, OptimizerKind::Hs, seed, &dir, "hs_")?;
        let ga = optimize_seed(config, OptimizerKind::Ga, seed, &dir, "ga_")?;
        rows.push(CompareRow {
            seed,
            hs_best: hs.best_fitness,
            ga_best: ga.best_fitness,
            hs_evaluations: hs.evaluations,
            ga_evaluations: ga.evaluations,
        });
    }
    let report = CompareReport::from_rows(rows);
    report.write_csv(create(&config.out.join("compare.csv"))?)?;
    write_json(&config.out.join("compare_summary.json"), &report)?;
    Ok(report)
}

/// Reads a genome JSON object with exactly the ten named numeric fields.
pub fn read_genome(path: &Path) -> Result<Genome> {
    let text = read_to_string(path)?;
    parse_genome(&text).map_err(|m| parse_error(path, m))
}

/// Parses a genome from JSON; errors name the offending field.
pub fn parse_genome(text: &str) -> std::result::Result<Genome, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("genome must be a JSON object")?;
    if let Some(extra) = obj.keys().find(|k| !GENOME_NAMES.contains(&k.as_str())) {
        return Err(format!("unknown field `{extra}`"));
    }
    let mut v = [0.0; GENOME_NAMES.len()];
    for (slot, name) in v.iter_mut().zip(GENOME_NAMES) {
        *slot = obj
            .get(name)
            .ok_or_else(|| format!("missing field `{name}`"))?
            .as_f64()
            .ok_or_else(|| format!("field `{name}` must be a number"))?;
    }
    Ok(Genome::from_array(v))
}

/// Rolls out a genome with the trace retained and writes `trace.csv` and
/// `result.json` into `out`.
pub fn run_trace(genome: &Genome, sim: &SimConfig, out: &Path) -> Result<SimResult> {
    sim.validate()?;
    let result = simulator::trace(genome, sim)?;
    create_dir(out)?;
    let samples = result.trace.as_deref().unwrap_or_default();
    simulator::write_trace_csv(create(&out.join("trace.csv"))?, samples)?;
    write_json(&out.join("result.json"), &ResultRecord::new(&result, sim))?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub function: Benchmark,
    pub dim: usize,
    pub optimizer: OptimizerKind,
    pub hs: HsParams,
    pub ga: GaParams,
    pub seeds: Vec<u64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            function: Benchmark::Sphere,
            dim: 10,
            optimizer: OptimizerKind::Hs,
            hs: HsParams {
                ni: 5000,
                ..HsParams::default()
            },
            ga: GaParams::default(),
            seeds: (0..20).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub seed: u64,
    pub best_fitness: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub function: Benchmark,
    pub rows: Vec<BenchRow>,
    pub median: f64,
}

impl BenchReport {
    /// Writes `seed,best_fitness,evaluations`; fitness is the negated
    /// function value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Runs an optimizer on a benchmark function once per seed.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    if config.dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let bounds = config.function.default_bounds(config.dim)?;
    let f = config.function;
    let mut rows = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let mut evaluations = 0;
        let objective = |x: &[f64]| {
            evaluations += 1;
            f.fitness(x)
        };
        let result = match config.optimizer {
            OptimizerKind::Hs => hs_optimize(objective, &bounds, &HsParams { seed, ..config.hs }, |_| {})?,
            OptimizerKind::Ga => ga_optimize(objective, &bounds, &GaParams { seed, ..config.ga }, |_| {})?,
            OptimizerKind::Random => random_search(objective, &bounds, config.hs.budget(), seed, |_| {})?,
        };
        rows.push(BenchRow {
            seed,
            best_fitness: result.best_fitness,
            evaluations,
        });
    }
    let median = median(&rows.iter().map(|r| r.best_fitness).collect::<Vec<_>>());
    Ok(BenchReport {
        function: f,
        rows,
        median,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillateConfig {
    pub params: OscillatorParams,
    pub initial: OscillatorState,
    pub duration: f64,
    pub dt: f64,
}

impl Default for OscillateConfig {
    fn default() -> Self {
        Self {
            params: OscillatorParams::CANONICAL,
            initial: OscillatorState::PERTURBED,
            duration: 60.0,
            dt: DEFAULT_DT,
        }
    }
}

/// Open-loop oscillator run; writes `oscillator.csv` and `report.json`.
pub fn run_oscillate(config: &OscillateConfig, out: &Path) -> Result<OscillationReport> {
    let series = oscillator::simulate(
        &config.params,
        &config.initial,
        oscillator::NoFeedback,
        config.duration,
        config.dt,
    )?;
    let report = oscillator::analyze(&series, config.dt);
    create_dir(out)?;
    oscillator::write_series_csv(create(&out.join("oscillator.csv"))?, &series, config.dt)?;
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn genome_parse_names_field() {
        let ok = r#"{"tau1":1,"tau2":2,"alpha":0,"beta":2.5,"gamma":2.5,"c":3,"w11":-1,"w12":-2,"b1":0,"b2":-20}"#;
        assert_eq!(parse_genome(ok).unwrap().b2, -20.0);
        let missing = ok.replace(r#","b2":-20"#, "");
        assert!(parse_genome(&missing).unwrap_err().contains("`b2`"));
        let wrong = ok.replace(r#""w12":-2"#, r#""w12":"x""#);
        assert!(parse_genome(&wrong).unwrap_err().contains("`w12`"));
        let extra = ok.replace('}', r#","w13":0}"#);
        assert!(parse_genome(&extra).unwrap_err().contains("`w13`"));
    }

    #[test]
    fn default_config_flags_unequal_budget() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hs.budget(), 760);
        assert_eq!(c.ga.budget(), 2000);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), c);
    }

    #[test]
    fn empty_seed_list_rejected() {
        let c = ExperimentConfig {
            seeds: vec![],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
