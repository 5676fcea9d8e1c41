//! Matsuoka two-neuron oscillator.
//!
//! Two mutually inhibiting neurons with self-adaptation:
//!
//! ```text
//! tau1 * dx1/dt = c - x1 - beta*v1 - gamma*[x2]+ - alpha*uf1
//! tau2 * dv1/dt = [x1]+ - v1
//! tau1 * dx2/dt = c - x2 - beta*v2 - gamma*[x1]+ - alpha*uf2
//! tau2 * dv2/dt = [x2]+ - v2
//! ```
//!
//! The field is linear between the switching surfaces `x1 = 0` and
//! `x2 = 0`. [`step`] integrates each linear piece with classical RK4 and
//! locates the surface crossings inside a step, which keeps the global error
//! fourth order; a plain RK4 step over a kink degrades to roughly second
//! order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted time constant, in seconds.
pub const MIN_TAU: f64 = 1e-6;

/// Default integration step: one tick of a 50 Hz simulator.
pub const DEFAULT_DT: f64 = 0.02;

/// Largest step [`step`] accepts.
pub const MAX_DT: f64 = 0.02;

/// Fraction of a series discarded as transient by [`analyze`].
pub const TRANSIENT_FRACTION: f64 = 0.2;

/// Minimum number of complete cycles for [`analyze`] to report a period.
pub const MIN_CYCLES: usize = 4;

/// Last-cycle to first-cycle amplitude ratio required for `sustained`.
pub const SUSTAINED_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Rise time constant (s).
    pub tau1: f64,
    /// Adaptation time constant (s).
    pub tau2: f64,
    /// Adaptation intensity.
    pub beta: f64,
    /// Mutual inhibition.
    pub gamma: f64,
    /// Feedback gain.
    pub alpha: f64,
    /// Tonic input.
    pub c: f64,
}

impl OscillatorParams {
    /// Parameters that produce a sustained antiphase oscillation with a
    /// period of roughly 4.5 s.
    pub const CANONICAL: OscillatorParams = OscillatorParams {
        tau1: 0.5,
        tau2: 1.0,
        beta: 2.5,
        gamma: 2.5,
        alpha: 0.0,
        c: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tau1, self.tau2, self.beta, self.gamma, self.alpha, self.c,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "oscillator parameters must be finite: {self:?}"
            )));
        }
        if self.tau1 <= MIN_TAU || self.tau2 <= MIN_TAU {
            return Err(Error::invalid(format!(
                "time constants must exceed {MIN_TAU}: tau1={}, tau2={}",
                self.tau1, self.tau2
            )));
        }
        Ok(())
    }
}

/// Internal state of the pair. Also used for the four time derivatives
/// returned by [`derivatives`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OscillatorState {
    pub x1: f64,
    pub v1: f64,
    pub x2: f64,
    pub v2: f64,
}

impl OscillatorState {
    pub const ZERO: OscillatorState = OscillatorState {
        x1: 0.0,
        v1: 0.0,
        x2: 0.0,
        v2: 0.0,
    };

    /// Small asymmetric kick that breaks the neuron-exchange symmetry so the
    /// pair can start alternating.
    pub const PERTURBED: OscillatorState = OscillatorState {
        x1: 0.1,
        v1: 0.0,
        x2: 0.0,
        v2: 0.0,
    };

    pub fn new(x1: f64, v1: f64, x2: f64, v2: f64) -> Self {
        Self { x1, v1, x2, v2 }
    }

    /// Exchanges the roles of neuron 1 and neuron 2.
    pub fn swapped(&self) -> Self {
        Self {
            x1: self.x2,
            v1: self.v2,
            x2: self.x1,
            v2: self.v1,
        }
    }

    /// Rectified outputs `([x1]+, [x2]+)`.
    pub fn outputs(&self) -> (f64, f64) {
        (rectify(self.x1), rectify(self.x2))
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.v1.is_finite() && self.x2.is_finite() && self.v2.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.x1
            .abs()
            .max(self.v1.abs())
            .max(self.x2.abs())
            .max(self.v2.abs())
    }

    fn axpy(&self, h: f64, d: &OscillatorState) -> Self {
        Self {
            x1: self.x1 + h * d.x1,
            v1: self.v1 + h * d.v1,
            x2: self.x2 + h * d.x2,
            v2: self.v2 + h * d.v2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSignal {
    pub uf1: f64,
    pub uf2: f64,
}

impl FeedbackSignal {
    pub const NONE: FeedbackSignal = FeedbackSignal { uf1: 0.0, uf2: 0.0 };

    pub fn new(uf1: f64, uf2: f64) -> Self {
        Self { uf1, uf2 }
    }

    pub fn swapped(&self) -> Self {
        Self {
            uf1: self.uf2,
            uf2: self.uf1,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.uf1.is_finite() && self.uf2.is_finite()
    }
}

/// Positive part, `max(x, 0)`.
#[inline]
pub fn rectify(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Which neurons are above threshold. Fixing this makes the field linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Mode {
    active1: bool,
    active2: bool,
}

impl Mode {
    fn of(s: &OscillatorState) -> Self {
        Self {
            active1: s.x1 > 0.0,
            active2: s.x2 > 0.0,
        }
    }
}

#[inline]
fn field(s: &OscillatorState, p: &OscillatorParams, fb: &FeedbackSignal, mode: Mode) -> OscillatorState {
    let r1 = if mode.active1 { s.x1 } else { 0.0 };
    let r2 = if mode.active2 { s.x2 } else { 0.0 };
    OscillatorState {
        x1: (p.c - s.x1 - p.beta * s.v1 - p.gamma * r2 - p.alpha * fb.uf1) / p.tau1,
        v1: (r1 - s.v1) / p.tau2,
        x2: (p.c - s.x2 - p.beta * s.v2 - p.gamma * r1 - p.alpha * fb.uf2) / p.tau1,
        v2: (r2 - s.v2) / p.tau2,
    }
}

/// Time derivatives `(dx1, dv1, dx2, dv2)` per second.
pub fn derivatives(
    state: &OscillatorState,
    params: &OscillatorParams,
    fb: &FeedbackSignal,
) -> Result<OscillatorState> {
    params.validate()?;
    Ok(field(state, params, fb, Mode::of(state)))
}

fn rk4(s: &OscillatorState, p: &OscillatorParams, fb: &FeedbackSignal, mode: Mode, h: f64) -> OscillatorState {
    let k1 = field(s, p, fb, mode);
    let k2 = field(&s.axpy(0.5 * h, &k1), p, fb, mode);
    let k3 = field(&s.axpy(0.5 * h, &k2), p, fb, mode);
    let k4 = field(&s.axpy(h, &k3), p, fb, mode);
    OscillatorState {
        x1: s.x1 + h / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
        v1: s.v1 + h / 6.0 * (k1.v1 + 2.0 * k2.v1 + 2.0 * k3.v1 + k4.v1),
        x2: s.x2 + h / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
        v2: s.v2 + h / 6.0 * (k1.v2 + 2.0 * k2.v2 + 2.0 * k3.v2 + k4.v2),
    }
}

fn leaves(active: bool, x: f64) -> bool {
    if active {
        x < 0.0
    } else {
        x > 0.0
    }
}

/// Earliest `h` in `(0, hi]` where the frozen-mode step takes component
/// `pick` out of its mode's half line. Requires `leaves` to hold at `hi`.
fn locate_switch(
    s: &OscillatorState,
    p: &OscillatorParams,
    fb: &FeedbackSignal,
    mode: Mode,
    hi: f64,
    pick: fn(&OscillatorState) -> f64,
    active: bool,
) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if leaves(active, pick(&rk4(s, p, fb, mode, mid))) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

const MAX_SWITCHES_PER_STEP: usize = 8;

/// Advances the state by `dt` seconds holding `fb` constant.
pub fn step(
    state: &OscillatorState,
    params: &OscillatorParams,
    fb: &FeedbackSignal,
    dt: f64,
) -> Result<OscillatorState> {
    params.validate()?;
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::invalid(format!("step size {dt} outside (0, {MAX_DT}]")));
    }
    if !state.is_finite() || !fb.is_finite() {
        return Err(Error::Divergence {
            tick: None,
            state: *state,
        });
    }

    let mut s = *state;
    let mut mode = Mode::of(&s);
    let mut remaining = dt;
    let mut switches = 0;
    let out = loop {
        let trial = rk4(&s, params, fb, mode, remaining);
        let cross1 = leaves(mode.active1, trial.x1);
        let cross2 = leaves(mode.active2, trial.x2);
        if !(cross1 || cross2) || switches >= MAX_SWITCHES_PER_STEP || !trial.is_finite() {
            break trial;
        }
        let h1 = if cross1 {
            locate_switch(&s, params, fb, mode, remaining, |s| s.x1, mode.active1)
        } else {
            f64::INFINITY
        };
        let h2 = if cross2 {
            locate_switch(&s, params, fb, mode, remaining, |s| s.x2, mode.active2)
        } else {
            f64::INFINITY
        };
        let h = h1.min(h2);
        let mut next = rk4(&s, params, fb, mode, h);
        if h1 == h {
            next.x1 = 0.0;
            mode.active1 = !mode.active1;
        }
        if h2 == h {
            next.x2 = 0.0;
            mode.active2 = !mode.active2;
        }
        switches += 1;
        s = next;
        if h >= remaining {
            break s;
        }
        remaining -= h;
    };

    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Divergence {
            tick: None,
            state: out,
        })
    }
}

/// Supplies the feedback applied during tick `tick` (which starts at `t`).
pub trait FeedbackSource {
    fn feedback(&mut self, tick: usize, t: f64, state: &OscillatorState) -> FeedbackSignal;
}

impl<F> FeedbackSource for F
where
    F: FnMut(usize, f64, &OscillatorState) -> FeedbackSignal,
{
    fn feedback(&mut self, tick: usize, t: f64, state: &OscillatorState) -> FeedbackSignal {
        self(tick, t, state)
    }
}

/// Open-loop source.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFeedback;

impl FeedbackSource for NoFeedback {
    fn feedback(&mut self, _: usize, _: f64, _: &OscillatorState) -> FeedbackSignal {
        FeedbackSignal::NONE
    }
}

/// Number of steps needed to cover `duration` with step `dt`.
pub fn step_count(duration: f64, dt: f64) -> usize {
    // Tolerate the rounding in e.g. 15.0 / 0.02.
    (duration / dt - 1e-9).ceil().max(0.0) as usize
}

/// Integrates from `initial` for `duration` seconds. The returned series
/// holds the initial state followed by one state per step.
pub fn simulate(
    params: &OscillatorParams,
    initial: &OscillatorState,
    mut source: impl FeedbackSource,
    duration: f64,
    dt: f64,
) -> Result<Vec<OscillatorState>> {
    params.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid(format!("duration must be positive, got {duration}")));
    }
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::invalid(format!("step size {dt} outside (0, {MAX_DT}]")));
    }
    let n = step_count(duration, dt);
    let mut series = Vec::with_capacity(n + 1);
    let mut s = *initial;
    series.push(s);
    for tick in 0..n {
        let fb = source.feedback(tick, tick as f64 * dt, &s);
        s = step(&s, params, &fb, dt).map_err(|e| match e {
            Error::Divergence { state, .. } => Error::Divergence {
                tick: Some(tick),
                state,
            },
            other => other,
        })?;
        series.push(s);
    }
    Ok(series)
}

/// Summary of a simulated series produced by [`analyze`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    /// Mean cycle length (s); `None` when fewer than [`MIN_CYCLES`] cycles
    /// were found.
    pub period: Option<f64>,
    /// Mean per-cycle peak of `[x1]+`.
    pub amplitude: f64,
    /// Lag of neuron 2's peak behind neuron 1's, as a fraction of the period.
    pub phase_difference: f64,
    pub sustained: bool,
    /// Individual cycle lengths over the retained window.
    pub cycle_periods: Vec<f64>,
    /// Per-cycle peak of `[x1]+`.
    pub cycle_amplitudes: Vec<f64>,
}

impl OscillationReport {
    fn not_oscillating() -> Self {
        Self {
            period: None,
            amplitude: 0.0,
            phase_difference: 0.0,
            sustained: false,
            cycle_periods: Vec::new(),
            cycle_amplitudes: Vec::new(),
        }
    }

    pub fn cycles(&self) -> usize {
        self.cycle_periods.len()
    }
}

/// Sub-sample peak location of `y` in `[from, to)`, as (time, value).
fn peak_in(y: &[f64], from: usize, to: usize, dt: f64) -> (f64, f64) {
    let mut k = from;
    for i in from..to {
        if y[i] > y[k] {
            k = i;
        }
    }
    let mut t = k as f64 * dt;
    let mut v = y[k];
    if k > 0 && k + 1 < y.len() {
        let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            let off = 0.5 * (a - c) / denom;
            if off.abs() <= 1.0 {
                t += off * dt;
                v = b - 0.25 * (a - c) * off;
            }
        }
    }
    (t, v)
}

/// Measures period, amplitude and phase of the rectified outputs.
///
/// The first 20% of the series is dropped as transient. Cycles are bounded
/// by upward zero crossings of `[x1]+ - [x2]+` (linearly interpolated).
pub fn analyze(series: &[OscillatorState], dt: f64) -> OscillationReport {
    if series.len() < 4 || dt.is_nan() || dt <= 0.0 {
        return OscillationReport::not_oscillating();
    }
    let start = (series.len() as f64 * TRANSIENT_FRACTION).floor() as usize;
    let y1: Vec<f64> = series.iter().map(|s| rectify(s.x1)).collect();
    let y2: Vec<f64> = series.iter().map(|s| rectify(s.x2)).collect();
    let d: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();

    // (sample index after the crossing, interpolated time)
    let mut crossings: Vec<(usize, f64)> = Vec::new();
    for k in (start + 1)..d.len() {
        if d[k - 1] < 0.0 && d[k] >= 0.0 {
            let frac = -d[k - 1] / (d[k] - d[k - 1]);
            crossings.push((k, (k as f64 - 1.0 + frac) * dt));
        }
    }
    if crossings.len() < MIN_CYCLES + 1 {
        return OscillationReport::not_oscillating();
    }

    let cycle_periods: Vec<f64> = crossings.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let period = (crossings[crossings.len() - 1].1 - crossings[0].1) / cycle_periods.len() as f64;

    let mut cycle_amplitudes = Vec::with_capacity(cycle_periods.len());
    let mut phase_sum = 0.0;
    for w in crossings.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        let (t1, v1) = peak_in(&y1, a, b, dt);
        let (t2, _) = peak_in(&y2, a, b, dt);
        cycle_amplitudes.push(v1);
        phase_sum += ((t2 - t1) / period).rem_euclid(1.0);
    }
    let amplitude = cycle_amplitudes.iter().sum::<f64>() / cycle_amplitudes.len() as f64;
    let first = cycle_amplitudes[0];
    let last = cycle_amplitudes[cycle_amplitudes.len() - 1];
    let sustained = first > 0.0 && last >= SUSTAINED_RATIO * first;

    OscillationReport {
        period: Some(period),
        amplitude,
        phase_difference: phase_sum / cycle_amplitudes.len() as f64,
        sustained,
        cycle_periods,
        cycle_amplitudes,
    }
}

/// Writes `t,x1,v1,x2,v2,y1,y2`, one row per sample, `t = k * dt`.
pub fn write_series_csv<W: Write>(out: W, series: &[OscillatorState], dt: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x1", "v1", "x2", "v2", "y1", "y2"])?;
    for (k, s) in series.iter().enumerate() {
        let (y1, y2) = s.outputs();
        w.write_record([
            format!("{:.4}", k as f64 * dt),
            s.x1.to_string(),
            s.v1.to_string(),
            s.x2.to_string(),
            s.v2.to_string(),
            y1.to_string(),
            y2.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(tau1: f64, tau2: f64, beta: f64, gamma: f64, c: f64, alpha: f64) -> OscillatorParams {
        OscillatorParams {
            tau1,
            tau2,
            beta,
            gamma,
            alpha,
            c,
        }
    }

    #[test]
    fn rectify_cases() {
        assert_eq!(rectify(3.2), 3.2);
        assert_eq!(rectify(-1.7), 0.0);
        assert_eq!(rectify(0.0), 0.0);
    }

    #[test]
    fn derivatives_at_origin_vanish() {
        let p = params(0.7, 1.3, 2.0, -1.5, 0.0, 3.0);
        let d = derivatives(&OscillatorState::ZERO, &p, &FeedbackSignal::NONE).unwrap();
        assert_eq!(d, OscillatorState::ZERO);
    }

    #[test]
    fn derivatives_direct_substitution() {
        let p = params(1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        let d = derivatives(&OscillatorState::new(1.0, 0.0, 0.0, 0.0), &p, &FeedbackSignal::NONE).unwrap();
        assert_eq!(d, OscillatorState::new(-1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn derivatives_hand_evaluated() {
        // tau1=1, tau2=2, beta=2.5, gamma=2, c=1, alpha=1, uf=(0.1,-0.1)
        // dx1 = 1 - 0.5 - 2.5*0.2 - 2*0 - 0.1           = -0.1
        // dv1 = (0.5 - 0.2) / 2                          =  0.15
        // dx2 = 1 + 0.3 - 2.5*0.1 - 2*0.5 + 0.1          =  0.15
        // dv2 = (0 - 0.1) / 2                            = -0.05
        let p = params(1.0, 2.0, 2.5, 2.0, 1.0, 1.0);
        let s = OscillatorState::new(0.5, 0.2, -0.3, 0.1);
        let d = derivatives(&s, &p, &FeedbackSignal::new(0.1, -0.1)).unwrap();
        assert!((d.x1 - -0.1).abs() < 1e-12);
        assert!((d.v1 - 0.15).abs() < 1e-12);
        assert!((d.x2 - 0.15).abs() < 1e-12);
        assert!((d.v2 - -0.05).abs() < 1e-12);
    }

    #[test]
    fn zero_tau_rejected() {
        let p = params(0.0, 1.0, 1.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            derivatives(&OscillatorState::ZERO, &p, &FeedbackSignal::NONE),
            Err(Error::InvalidParameter(_))
        ));
        let p = params(1.0, 1e-7, 1.0, 1.0, 1.0, 0.0);
        assert!(step(&OscillatorState::ZERO, &p, &FeedbackSignal::NONE, 0.01).is_err());
        let p = params(1.0, 1.0, f64::NAN, 1.0, 1.0, 0.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn step_rejects_bad_dt() {
        let p = OscillatorParams::CANONICAL;
        let s = OscillatorState::PERTURBED;
        assert!(step(&s, &p, &FeedbackSignal::NONE, 0.0).is_err());
        assert!(step(&s, &p, &FeedbackSignal::NONE, 0.021).is_err());
        assert!(step(&s, &p, &FeedbackSignal::NONE, 0.02).is_ok());
    }

    #[test]
    fn step_reports_divergence() {
        // tau1 far below what an explicit step of 0.02 s can resolve.
        let p = params(1e-4, 1.0, 2.5, 2.5, 1.0, 0.0);
        let mut s = OscillatorState::PERTURBED;
        let mut err = None;
        for _ in 0..200 {
            match step(&s, &p, &FeedbackSignal::NONE, 0.02) {
                Ok(n) => s = n,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        assert!(matches!(err, Some(Error::Divergence { .. })));
    }

    #[test]
    fn origin_is_fixed() {
        let mut p = OscillatorParams::CANONICAL;
        p.c = 0.0;
        let s = step(&OscillatorState::ZERO, &p, &FeedbackSignal::NONE, 0.02).unwrap();
        assert_eq!(s, OscillatorState::ZERO);
    }

    #[test]
    fn sample_count() {
        let series = simulate(
            &OscillatorParams::CANONICAL,
            &OscillatorState::PERTURBED,
            NoFeedback,
            15.0,
            0.02,
        )
        .unwrap();
        assert_eq!(series.len(), 751);
    }

    #[test]
    fn divergence_carries_tick() {
        let p = params(1e-4, 1.0, 2.5, 2.5, 1.0, 0.0);
        match simulate(&p, &OscillatorState::PERTURBED, NoFeedback, 5.0, 0.02) {
            Err(Error::Divergence { tick: Some(_), .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn constant_series_not_sustained() {
        let series = vec![OscillatorState::new(0.3, 0.1, 0.3, 0.1); 500];
        let r = analyze(&series, 0.02);
        assert!(!r.sustained);
        assert!(r.period.is_none());
    }

    #[test]
    fn synthetic_antiphase_signal() {
        use std::f64::consts::PI;
        let dt = 0.02;
        let series: Vec<OscillatorState> = (0..=500)
            .map(|k| {
                let t = k as f64 * dt;
                OscillatorState::new(
                    rectify((2.0 * PI * t).sin()),
                    0.0,
                    rectify((2.0 * PI * (t - 0.5)).sin()),
                    0.0,
                )
            })
            .collect();
        let r = analyze(&series, dt);
        let period = r.period.unwrap();
        assert!((period - 1.0).abs() <= dt, "period {period}");
        assert!((r.phase_difference - 0.5).abs() <= 0.02, "{}", r.phase_difference);
        assert!(r.sustained);
    }

    #[test]
    fn csv_header_and_time_format() {
        let series = vec![OscillatorState::new(0.5, 0.1, -0.2, 0.0); 3];
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &series, 0.02).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,v1,x2,v2,y1,y2");
        assert!(lines[2].starts_with("0.0200,0.5,0.1,-0.2,0,0.5,0"));
        assert_eq!(lines.len(), 4);
    }
}
