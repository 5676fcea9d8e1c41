//! Browser bindings for the gait demo page.
//!
//! Each export takes and returns JSON strings so the page needs no extra
//! glue beyond the generated module.

use cpg_gait::experiments::parse_genome;
use cpg_gait::optimize::{hs_optimize, Genome, HsParams, SearchBounds};
use cpg_gait::oscillator::{self, NoFeedback, OscillatorParams, OscillatorState, DEFAULT_DT};
use cpg_gait::simulator::{self, SimConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct Series {
    t: Vec<f64>,
    y1: Vec<f64>,
    y2: Vec<f64>,
    period: Option<f64>,
    phase_difference: f64,
    sustained: bool,
}

/// Open-loop oscillator run. `params` is a JSON object with `tau1`, `tau2`,
/// `beta`, `gamma`, `alpha` and `c`.
#[wasm_bindgen]
pub fn oscillate(params: &str, duration: f64) -> Result<String, JsError> {
    let p: OscillatorParams = serde_json::from_str(params).map_err(js_err)?;
    let series = oscillator::simulate(&p, &OscillatorState::PERTURBED, NoFeedback, duration, DEFAULT_DT)
        .map_err(js_err)?;
    let report = oscillator::analyze(&series, DEFAULT_DT);
    let (y1, y2) = series.iter().map(|s| s.outputs()).unzip();
    let out = Series {
        t: (0..series.len()).map(|k| k as f64 * DEFAULT_DT).collect(),
        y1,
        y2,
        period: report.period,
        phase_difference: report.phase_difference,
        sustained: report.sustained,
    };
    serde_json::to_string(&out).map_err(js_err)
}

#[derive(Serialize)]
struct Walk {
    t: Vec<f64>,
    frames: Vec<[f64; 6]>,
    torso_z: Vec<f64>,
    x: Vec<f64>,
    fell: bool,
    fall_time: Option<f64>,
    fitness: f64,
    steps: usize,
    leg: [f64; 2],
}

/// Rolls out a genome given as JSON and returns the per-tick trace.
#[wasm_bindgen]
pub fn walk(genome: &str, noise_std: f64, seed: u64) -> Result<String, JsError> {
    let g = parse_genome(genome).map_err(js_err)?;
    let config = SimConfig {
        noise_std,
        seed,
        ..SimConfig::default()
    };
    let r = simulator::trace(&g, &config).map_err(js_err)?;
    let samples = r.trace.unwrap_or_default();
    let out = Walk {
        t: samples.iter().map(|s| s.t).collect(),
        frames: samples.iter().map(|s| s.frame.as_array()).collect(),
        torso_z: samples.iter().map(|s| s.torso_z).collect(),
        x: samples.iter().map(|s| s.x).collect(),
        fell: r.fell,
        fall_time: r.fall_time,
        fitness: r.fitness,
        steps: r.steps,
        leg: [config.thigh_length, config.shank_length],
    };
    serde_json::to_string(&out).map_err(js_err)
}

#[derive(Serialize)]
struct Search {
    best: Genome,
    best_fitness: f64,
    best_curve: Vec<f64>,
    mean_curve: Vec<f64>,
}

/// Harmony search over the gait genome with `ni` improvisations.
#[wasm_bindgen]
pub fn search(seed: u64, ni: usize) -> Result<String, JsError> {
    let config = SimConfig::default();
    let params = HsParams {
        seed,
        ni,
        ..HsParams::default()
    };
    let objective = |v: &[f64]| {
        Genome::from_slice(v)
            .and_then(|g| simulator::evaluate(&g, &config))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let r = hs_optimize(objective, &SearchBounds::gait(), &params, |_| {}).map_err(js_err)?;
    let out = Search {
        best: Genome::from_slice(&r.best).map_err(js_err)?,
        best_fitness: r.best_fitness,
        best_curve: r.history.iter().map(|h| h.best_fitness).collect(),
        mean_curve: r.history.iter().map(|h| h.mean_fitness).collect(),
    };
    serde_json::to_string(&out).map_err(js_err)
}
