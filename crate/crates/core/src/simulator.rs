//! Planar walking rollout.
//!
//! A kinematic sagittal-plane biped stands in for a physics simulator. Each
//! leg is a thigh and a shank hanging from a shared hip; the foot is kept
//! level by the ankle, so only hip and knee pitch shape the leg. One foot is
//! the stance foot and stays fixed on the ground; the hip position follows
//! from the stance leg's pose. Support passes to the swing foot when it
//! comes down to ground level while moving forward.
//!
//! An episode lasts `duration` seconds. During the first `lock_phase`
//! seconds the oscillator runs but the robot holds the neutral pose. The
//! episode ends early on a fall:
//!
//! - torso (stance hip) height below `fall_height_ratio` of the leg length
//!   for `fall_ticks` consecutive ticks, or at or below the ground at once;
//! - no support exchange for `frozen_timeout` seconds;
//! - oscillator divergence.
//!
//! Fitness is `x - y` for a completed episode and `(x - y) / (duration - t)`
//! for a fall at time `t`, where the denominator is kept at or above one
//! tick.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::{clamp_frame, Controller, ControllerConfig, GaitFrame, JointCommands, LegCommands};
use crate::error::{Error, Result};
use crate::optimize::{Genome, GENOME_NAMES};
use crate::oscillator::{self, OscillatorState, MAX_DT};

/// What the robot does during the lock phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LockMode {
    /// Hold the neutral pose while the oscillator runs.
    #[default]
    Warmup,
    /// Hold the neutral pose and do not advance the oscillator.
    Freeze,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Episode length (s).
    pub duration: f64,
    /// Initial hold (s).
    pub lock_phase: f64,
    /// Ticks per second.
    pub tick_rate: f64,
    /// Thigh length (m).
    pub thigh_length: f64,
    /// Shank length (m).
    pub shank_length: f64,
    /// Standard deviation of the Gaussian added to each commanded joint
    /// angle (degrees).
    pub noise_std: f64,
    /// Rollouts averaged by [`evaluate`].
    pub resamples: usize,
    pub seed: u64,
    pub fall_height_ratio: f64,
    pub fall_ticks: usize,
    /// Longest time without a support exchange before the gait counts as
    /// frozen (s).
    pub frozen_timeout: f64,
    /// Heading change per radian of left/right hip noise difference.
    pub drift_gain: f64,
    /// Largest joint angular speed (deg/s); the applied frame moves toward
    /// the command by at most this much per second.
    pub max_joint_speed: f64,
    /// Height the swing foot must reach before it can take support (m).
    pub min_clearance: f64,
    pub lock_mode: LockMode,
    pub controller: ControllerConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 15.0,
            lock_phase: 3.0,
            tick_rate: 50.0,
            thigh_length: 0.12,
            shank_length: 0.12,
            noise_std: 0.0,
            resamples: 1,
            seed: 0,
            fall_height_ratio: 0.6,
            fall_ticks: 5,
            frozen_timeout: 5.0,
            drift_gain: 0.05,
            max_joint_speed: 350.0,
            min_clearance: 0.01,
            lock_mode: LockMode::Warmup,
            controller: ControllerConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.lock_phase >= 0.0 && self.lock_phase < self.duration) {
            return bad(format!(
                "lock phase must lie in [0, duration), got {} with duration {}",
                self.lock_phase, self.duration
            ));
        }
        if !(self.tick_rate.is_finite() && self.tick_rate > 0.0) {
            return bad(format!("tick rate must be positive, got {}", self.tick_rate));
        }
        if 1.0 / self.tick_rate > MAX_DT + 1e-12 {
            return bad(format!("tick rate must be at least {} Hz, got {}", 1.0 / MAX_DT, self.tick_rate));
        }
        if !(self.thigh_length > 0.0 && self.shank_length > 0.0) {
            return bad("segment lengths must be positive".into());
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise std must be non-negative, got {}", self.noise_std));
        }
        if self.resamples < 1 {
            return bad("resamples must be at least 1".into());
        }
        if !(self.fall_height_ratio > 0.0 && self.fall_height_ratio < 1.0) {
            return bad(format!("fall height ratio must lie in (0, 1), got {}", self.fall_height_ratio));
        }
        if self.fall_ticks < 1 {
            return bad("fall ticks must be at least 1".into());
        }
        if self.frozen_timeout.is_nan() || self.frozen_timeout <= 0.0 {
            return bad("frozen timeout must be positive".into());
        }
        if self.max_joint_speed.is_nan() || self.max_joint_speed <= 0.0 {
            return bad(format!("max joint speed must be positive, got {}", self.max_joint_speed));
        }
        if !(self.min_clearance.is_finite() && self.min_clearance >= 0.0) {
            return bad(format!("min clearance must be non-negative, got {}", self.min_clearance));
        }
        if !self.drift_gain.is_finite() || !self.controller.feedback_scale.is_finite() {
            return bad("drift gain and feedback scale must be finite".into());
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate
    }

    pub fn ticks(&self) -> usize {
        oscillator::step_count(self.duration, self.dt())
    }

    pub fn leg_length(&self) -> f64 {
        self.thigh_length + self.shank_length
    }

    fn in_lock(&self, t: f64) -> bool {
        t < self.lock_phase - 1e-9
    }
}

/// One retained tick of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    pub t: f64,
    pub frame: GaitFrame,
    /// Stance hip height (m).
    pub torso_z: f64,
    /// Forward progress (m).
    pub x: f64,
    /// Absolute lateral deviation (m).
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub x: f64,
    pub y: f64,
    pub fell: bool,
    pub fall_time: Option<f64>,
    pub fitness: f64,
    /// Support exchanges during the episode.
    pub steps: usize,
    #[serde(skip)]
    pub trace: Option<Vec<TraceSample>>,
}

impl SimResult {
    /// Time at which the episode ended.
    pub fn end_time(&self, config: &SimConfig) -> f64 {
        self.fall_time.unwrap_or(config.duration)
    }

    pub fn frames(&self) -> Option<Vec<GaitFrame>> {
        self.trace.as_ref().map(|t| t.iter().map(|s| s.frame).collect())
    }

    pub fn torso_height(&self) -> Option<Vec<f64>> {
        self.trace.as_ref().map(|t| t.iter().map(|s| s.torso_z).collect())
    }
}

/// Walking fitness. `epsilon` bounds the fall-time denominator from below.
pub fn fitness(x: f64, y: f64, current_time: f64, duration: f64, fell: bool, epsilon: f64) -> f64 {
    if !fell {
        return x - y;
    }
    let remaining = duration - current_time;
    if remaining < epsilon {
        log::debug!("fall at {current_time} s within one tick of the {duration} s deadline");
    }
    (x - y) / remaining.max(epsilon)
}

/// Produces raw joint commands once per tick.
pub trait GaitSource {
    /// Commands for the tick ending at time `t`; `prev` is the frame applied
    /// on the previous tick.
    fn commands(&mut self, t: f64, prev: &GaitFrame) -> Result<JointCommands>;

    /// Called instead of [`GaitSource::commands`] during a frozen lock phase.
    fn hold(&mut self) {}
}

/// Drives an episode from the oscillator controller.
pub struct ControllerSource(pub Controller);

impl GaitSource for ControllerSource {
    fn commands(&mut self, _t: f64, prev: &GaitFrame) -> Result<JointCommands> {
        self.0.commands(prev)
    }
}

impl<F> GaitSource for F
where
    F: FnMut(f64, &GaitFrame) -> Result<JointCommands>,
{
    fn commands(&mut self, t: f64, prev: &GaitFrame) -> Result<JointCommands> {
        self(t, prev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Leg {
    Left,
    Right,
}

/// Foot offset from the hip: (forward, downward extent).
fn leg_geometry(thigh: f64, shank: f64, hip_deg: f64, knee_deg: f64) -> (f64, f64) {
    let th = hip_deg.to_radians();
    let sh = (hip_deg + knee_deg).to_radians();
    (thigh * th.sin() + shank * sh.sin(), thigh * th.cos() + shank * sh.cos())
}

struct Walker {
    thigh: f64,
    shank: f64,
    stance: Leg,
    stance_foot_x: f64,
    hip_x: f64,
    heading: f64,
    x: f64,
    y_signed: f64,
    prev_swing_height: f64,
    prev_swing_foot_x: f64,
    /// Highest swing foot height since the last exchange.
    lift: f64,
    min_clearance: f64,
    steps: usize,
}

impl Walker {
    fn new(config: &SimConfig) -> Self {
        Self {
            thigh: config.thigh_length,
            shank: config.shank_length,
            stance: Leg::Right,
            stance_foot_x: 0.0,
            hip_x: 0.0,
            heading: 0.0,
            x: 0.0,
            y_signed: 0.0,
            prev_swing_height: 0.0,
            prev_swing_foot_x: 0.0,
            lift: 0.0,
            min_clearance: config.min_clearance,
            steps: 0,
        }
    }

    fn legs(&self, f: &GaitFrame) -> ((f64, f64), (f64, f64)) {
        let left = leg_geometry(self.thigh, self.shank, f.hip_l(), f.knee_l());
        let right = leg_geometry(self.thigh, self.shank, f.hip_r(), f.knee_r());
        match self.stance {
            Leg::Left => (left, right),
            Leg::Right => (right, left),
        }
    }

    /// Applies one frame; returns (torso height, exchanged).
    fn update(&mut self, frame: &GaitFrame) -> (f64, bool) {
        let ((stance_fx, stance_h), (swing_fx, swing_h)) = self.legs(frame);
        let hip_x = self.stance_foot_x - stance_fx;
        let dx = hip_x - self.hip_x;
        self.hip_x = hip_x;
        if dx != 0.0 {
            self.x += dx * self.heading.cos();
            self.y_signed += dx * self.heading.sin();
        }

        let swing_height = stance_h - swing_h;
        let swing_foot_x = hip_x + swing_fx;
        let forward = swing_foot_x - self.prev_swing_foot_x > 0.0;
        self.lift = self.lift.max(swing_height);
        let cleared = self.lift >= self.min_clearance;
        if cleared && self.prev_swing_height > 0.0 && swing_height <= 0.0 && forward {
            self.stance = match self.stance {
                Leg::Left => Leg::Right,
                Leg::Right => Leg::Left,
            };
            self.stance_foot_x = swing_foot_x;
            self.prev_swing_height = -swing_height;
            self.prev_swing_foot_x = hip_x + stance_fx;
            self.lift = 0.0;
            self.steps += 1;
            (swing_h, true)
        } else {
            self.prev_swing_height = swing_height;
            self.prev_swing_foot_x = swing_foot_x;
            (stance_h, false)
        }
    }

    fn y(&self) -> f64 {
        self.y_signed.abs()
    }
}

/// Runs one episode from an arbitrary gait source.
///
/// `noise_seed` seeds the joint noise; `retain` keeps the per-tick trace.
pub fn run_episode<S: GaitSource>(
    source: &mut S,
    config: &SimConfig,
    noise_seed: u64,
    retain: bool,
) -> Result<SimResult> {
    config.validate()?;
    let dt = config.dt();
    let ticks = config.ticks();
    let leg = config.leg_length();
    let low = config.fall_height_ratio * leg;
    let noise = if config.noise_std > 0.0 {
        Some(Normal::new(0.0, config.noise_std).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);

    let mut walker = Walker::new(config);
    let mut prev = GaitFrame::NEUTRAL;
    let mut trace = retain.then(|| Vec::with_capacity(ticks));
    let mut low_ticks = 0;
    let mut last_exchange = config.lock_phase;
    let mut fall_time = None;

    for k in 1..=ticks {
        let t = k as f64 * dt;
        let lock = config.in_lock(t);

        let raw = if lock && config.lock_mode == LockMode::Freeze {
            source.hold();
            Ok(JointCommands::default())
        } else {
            source.commands(t, &prev)
        };
        let raw = match raw {
            Ok(r) => r,
            Err(Error::Divergence { state, .. }) => {
                log::debug!("controller diverged at t={t}: {state:?}");
                fall_time = Some(t.max(config.lock_phase));
                break;
            }
            Err(e) => return Err(e),
        };

        let mut commanded = if lock { JointCommands::default() } else { raw };
        if let (Some(dist), false) = (&noise, lock) {
            let mut a = commanded.as_array();
            let mut n = [0.0; 6];
            for (v, e) in a.iter_mut().zip(n.iter_mut()) {
                *e = dist.sample(&mut rng);
                *v += *e;
            }
            commanded = JointCommands::from_array(a);
            walker.heading += config.drift_gain * (n[0] - n[3]).to_radians();
        }
        let (target, _) = clamp_frame(&commanded)?;
        let frame = slew(&prev, &target, config.max_joint_speed * dt)?;
        let (torso, exchanged) = walker.update(&frame);
        if exchanged {
            last_exchange = t;
        }
        prev = frame;

        if let Some(tr) = trace.as_mut() {
            tr.push(TraceSample {
                t,
                frame,
                torso_z: torso,
                x: walker.x,
                y: walker.y(),
            });
        }

        if lock {
            continue;
        }
        low_ticks = if torso < low { low_ticks + 1 } else { 0 };
        let collapsed = torso <= 0.0 || low_ticks >= config.fall_ticks;
        let frozen = t - last_exchange >= config.frozen_timeout - 1e-9;
        if collapsed || frozen {
            fall_time = Some(t);
            break;
        }
    }

    let fell = fall_time.is_some();
    let end = fall_time.unwrap_or(config.duration);
    let (x, y) = (walker.x, walker.y());
    Ok(SimResult {
        x,
        y,
        fell,
        fall_time,
        fitness: fitness(x, y, end, config.duration, fell, dt),
        steps: walker.steps,
        trace,
    })
}

/// Moves each hip and knee of `from` toward `to` by at most `max_step`
/// degrees; ankles are re-derived so the feet stay level.
fn slew(from: &GaitFrame, to: &GaitFrame, max_step: f64) -> Result<GaitFrame> {
    let step = |a: f64, b: f64| a + (b - a).clamp(-max_step, max_step);
    let legs = LegCommands {
        hip_l: step(from.hip_l(), to.hip_l()),
        knee_l: step(from.knee_l(), to.knee_l()),
        hip_r: step(from.hip_r(), to.hip_r()),
        knee_r: step(from.knee_r(), to.knee_r()),
    };
    Ok(clamp_frame(&JointCommands::from_legs(legs))?.0)
}

fn check_genome(genome: &Genome) -> Result<()> {
    let v = genome.to_array();
    for (name, value) in GENOME_NAMES.iter().zip(v) {
        if !value.is_finite() {
            return Err(Error::invalid(format!("genome {name} is not finite")));
        }
    }
    if genome.tau1 < 0.0 || genome.tau2 < 0.0 {
        return Err(Error::invalid(format!(
            "genome time constants must be non-negative, got tau1={}, tau2={}",
            genome.tau1, genome.tau2
        )));
    }
    Ok(())
}

fn genome_rollout(genome: &Genome, config: &SimConfig, noise_seed: u64, retain: bool) -> Result<SimResult> {
    check_genome(genome)?;
    config.validate()?;
    let controller = match Controller::new(
        genome.oscillator(),
        genome.network(),
        config.controller,
        OscillatorState::PERTURBED,
    ) {
        Ok(c) => c,
        Err(Error::InvalidParameter(msg)) => {
            // Time constants inside the search box but too small to integrate.
            log::debug!("degenerate genome scored as a fall at lock end: {msg}");
            let t = config.lock_phase;
            return Ok(SimResult {
                x: 0.0,
                y: 0.0,
                fell: true,
                fall_time: Some(t),
                fitness: fitness(0.0, 0.0, t, config.duration, true, config.dt()),
                steps: 0,
                trace: retain.then(Vec::new),
            });
        }
        Err(e) => return Err(e),
    };
    run_episode(&mut ControllerSource(controller), config, noise_seed, retain)
}

/// Seed for resample `k` of a configuration seeded with `seed`.
pub fn resample_seed(seed: u64, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng.random()
}

/// One episode of the oscillator controller built from `genome`.
pub fn rollout(genome: &Genome, config: &SimConfig) -> Result<SimResult> {
    genome_rollout(genome, config, resample_seed(config.seed, 0), false)
}

/// Mean fitness over `config.resamples` rollouts, each with its own noise
/// seed derived from `config.seed`.
pub fn evaluate(genome: &Genome, config: &SimConfig) -> Result<f64> {
    config.validate()?;
    let mut sum = 0.0;
    for k in 0..config.resamples {
        sum += genome_rollout(genome, config, resample_seed(config.seed, k), false)?.fitness;
    }
    Ok(sum / config.resamples as f64)
}

/// Like [`rollout`] with the per-tick trace retained.
pub fn trace(genome: &Genome, config: &SimConfig) -> Result<SimResult> {
    genome_rollout(genome, config, resample_seed(config.seed, 0), true)
}

/// Writes `t,hip_l,knee_l,ankle_l,hip_r,knee_r,ankle_r,torso_z,x,y`.
pub fn write_trace_csv<W: Write>(out: W, samples: &[TraceSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t", "hip_l", "knee_l", "ankle_l", "hip_r", "knee_r", "ankle_r", "torso_z", "x", "y",
    ])?;
    for s in samples {
        let mut row = vec![format!("{:.4}", s.t)];
        row.extend(s.frame.as_array().iter().map(|v| v.to_string()));
        row.push(s.torso_z.to_string());
        row.push(s.x.to_string());
        row.push(s.y.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// The result JSON written next to a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub x: f64,
    pub y: f64,
    pub fell: bool,
    pub fall_time: Option<f64>,
    pub fitness: f64,
    pub steps: usize,
    pub config: SimConfig,
    pub seed: u64,
}

impl ResultRecord {
    pub fn new(result: &SimResult, config: &SimConfig) -> Self {
        Self {
            x: result.x,
            y: result.y,
            fell: result.fell,
            fall_time: result.fall_time,
            fitness: result.fitness,
            steps: result.steps,
            config: *config,
            seed: config.seed,
        }
    }
}
