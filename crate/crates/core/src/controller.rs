//! Joint network driven by the oscillator.
//!
//! Each oscillator neuron drives the hip and knee of one leg through a
//! linear (identity activation) unit. Left and right share weights and
//! biases, so only `w11, w12, b1, b2` are free. Ankles are not driven: they
//! are set to keep the sole parallel to the ground. Angles are pitch in
//! degrees, positive hip pitch swinging the thigh forward and negative knee
//! pitch flexing the knee.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillator::{self, FeedbackSignal, OscillatorParams, OscillatorState};

pub const HIP_RANGE: (f64, f64) = (-100.0, 25.0);
pub const KNEE_RANGE: (f64, f64) = (-130.0, 0.0);
pub const ANKLE_RANGE: (f64, f64) = (-75.0, 55.0);

/// Hip degrees to feedback units.
pub const DEFAULT_FEEDBACK_SCALE: f64 = 1.0 / 90.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Neuron output to hip (left uses `y1`, right uses `y2`).
    pub w11: f64,
    /// Neuron output to knee.
    pub w12: f64,
    /// Hip bias, degrees.
    pub b1: f64,
    /// Knee bias, degrees.
    pub b2: f64,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if [self.w11, self.w12, self.b1, self.b2].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("network parameters must be finite: {self:?}")))
        }
    }
}

/// Hip and knee commands for both legs, before limits are applied.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LegCommands {
    pub hip_l: f64,
    pub knee_l: f64,
    pub hip_r: f64,
    pub knee_r: f64,
}

/// Six joint commands in degrees, not yet limited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JointCommands {
    pub hip_l: f64,
    pub knee_l: f64,
    pub ankle_l: f64,
    pub hip_r: f64,
    pub knee_r: f64,
    pub ankle_r: f64,
}

impl JointCommands {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.hip_l,
            self.knee_l,
            self.ankle_l,
            self.hip_r,
            self.knee_r,
            self.ankle_r,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            hip_l: a[0],
            knee_l: a[1],
            ankle_l: a[2],
            hip_r: a[3],
            knee_r: a[4],
            ankle_r: a[5],
        }
    }

    /// Adds ankles that keep both feet parallel to the ground.
    pub fn from_legs(legs: LegCommands) -> Self {
        Self {
            hip_l: legs.hip_l,
            knee_l: legs.knee_l,
            ankle_l: derive_ankle(legs.hip_l, legs.knee_l),
            hip_r: legs.hip_r,
            knee_r: legs.knee_r,
            ankle_r: derive_ankle(legs.hip_r, legs.knee_r),
        }
    }
}

/// One 50 Hz sample of the six leg pitch joints, always inside the joint
/// limits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GaitFrame {
    hip_l: f64,
    knee_l: f64,
    ankle_l: f64,
    hip_r: f64,
    knee_r: f64,
    ankle_r: f64,
}

/// Which joints of a frame hit a limit, in `JointCommands::as_array` order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Saturation(pub [bool; 6]);

impl Saturation {
    pub fn any(&self) -> bool {
        self.0.iter().any(|&s| s)
    }
}

impl GaitFrame {
    /// All joints at zero: upright, feet flat.
    pub const NEUTRAL: GaitFrame = GaitFrame {
        hip_l: 0.0,
        knee_l: 0.0,
        ankle_l: 0.0,
        hip_r: 0.0,
        knee_r: 0.0,
        ankle_r: 0.0,
    };

    pub fn hip_l(&self) -> f64 {
        self.hip_l
    }
    pub fn knee_l(&self) -> f64 {
        self.knee_l
    }
    pub fn ankle_l(&self) -> f64 {
        self.ankle_l
    }
    pub fn hip_r(&self) -> f64 {
        self.hip_r
    }
    pub fn knee_r(&self) -> f64 {
        self.knee_r
    }
    pub fn ankle_r(&self) -> f64 {
        self.ankle_r
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.hip_l,
            self.knee_l,
            self.ankle_l,
            self.hip_r,
            self.knee_r,
            self.ankle_r,
        ]
    }

    /// Left and right legs exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            hip_l: self.hip_r,
            knee_l: self.knee_r,
            ankle_l: self.ankle_r,
            hip_r: self.hip_l,
            knee_r: self.knee_l,
            ankle_r: self.ankle_l,
        }
    }

    pub fn within_limits(&self) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(self.hip_l, HIP_RANGE)
            && inside(self.hip_r, HIP_RANGE)
            && inside(self.knee_l, KNEE_RANGE)
            && inside(self.knee_r, KNEE_RANGE)
            && inside(self.ankle_l, ANKLE_RANGE)
            && inside(self.ankle_r, ANKLE_RANGE)
    }
}

/// Linear joint units: `hip = w11*y + b1`, `knee = w12*y + b2`, with `y1`
/// feeding the left leg and `y2` the right.
pub fn network_output(y1: f64, y2: f64, net: &NetworkParams) -> LegCommands {
    LegCommands {
        hip_l: net.w11 * y1 + net.b1,
        knee_l: net.w12 * y1 + net.b2,
        hip_r: net.w11 * y2 + net.b1,
        knee_r: net.w12 * y2 + net.b2,
    }
}

/// Ankle pitch that levels the foot, `-(hip + knee)`, limited to the ankle
/// range.
pub fn derive_ankle(hip: f64, knee: f64) -> f64 {
    (-(hip + knee)).clamp(ANKLE_RANGE.0, ANKLE_RANGE.1)
}

fn clamp_joint(v: f64, (lo, hi): (f64, f64)) -> (f64, bool) {
    if v < lo {
        (lo, true)
    } else if v > hi {
        (hi, true)
    } else {
        (v, false)
    }
}

/// Saturates each joint into its range. NaN commands are an error.
pub fn clamp_frame(raw: &JointCommands) -> Result<(GaitFrame, Saturation)> {
    let values = raw.as_array();
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid(format!("NaN joint command: {raw:?}")));
    }
    let ranges = [
        HIP_RANGE,
        KNEE_RANGE,
        ANKLE_RANGE,
        HIP_RANGE,
        KNEE_RANGE,
        ANKLE_RANGE,
    ];
    let mut out = [0.0; 6];
    let mut sat = [false; 6];
    for i in 0..6 {
        (out[i], sat[i]) = clamp_joint(values[i], ranges[i]);
    }
    Ok((
        GaitFrame {
            hip_l: out[0],
            knee_l: out[1],
            ankle_l: out[2],
            hip_r: out[3],
            knee_r: out[4],
            ankle_r: out[5],
        },
        Saturation(sat),
    ))
}

/// Hip angles fed back to the oscillator. The gain `alpha` is applied by
/// the oscillator itself.
pub fn feedback_from_frame(frame: &GaitFrame, scale: f64) -> FeedbackSignal {
    FeedbackSignal {
        uf1: scale * frame.hip_l,
        uf2: scale * frame.hip_r,
    }
}

/// Which oscillator quantity drives the joint units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// `[x_i]+`
    #[default]
    Rectified,
    /// `x_i`
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub feedback_scale: f64,
    pub output: OutputMode,
    pub dt: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            feedback_scale: DEFAULT_FEEDBACK_SCALE,
            output: OutputMode::Rectified,
            dt: oscillator::DEFAULT_DT,
        }
    }
}

fn outputs(state: &OscillatorState, mode: OutputMode) -> (f64, f64) {
    match mode {
        OutputMode::Rectified => state.outputs(),
        OutputMode::Raw => (state.x1, state.x2),
    }
}

/// One control step before joint limits: feedback from `prev`, one
/// oscillator step, network, ankles.
pub fn controller_commands(
    state: &OscillatorState,
    params: &OscillatorParams,
    net: &NetworkParams,
    prev: &GaitFrame,
    config: &ControllerConfig,
) -> Result<(OscillatorState, JointCommands)> {
    let fb = feedback_from_frame(prev, config.feedback_scale);
    let next = oscillator::step(state, params, &fb, config.dt)?;
    let (y1, y2) = outputs(&next, config.output);
    Ok((next, JointCommands::from_legs(network_output(y1, y2, net))))
}

/// One full control step, returning the next oscillator state and the
/// limited frame.
pub fn controller_tick(
    state: &OscillatorState,
    params: &OscillatorParams,
    net: &NetworkParams,
    prev: &GaitFrame,
    config: &ControllerConfig,
) -> Result<(OscillatorState, GaitFrame)> {
    let (next, raw) = controller_commands(state, params, net, prev, config)?;
    let (frame, _) = clamp_frame(&raw)?;
    Ok((next, frame))
}

/// Oscillator plus network, stepped one tick at a time.
#[derive(Debug, Clone)]
pub struct Controller {
    pub params: OscillatorParams,
    pub net: NetworkParams,
    pub config: ControllerConfig,
    state: OscillatorState,
}

impl Controller {
    pub fn new(
        params: OscillatorParams,
        net: NetworkParams,
        config: ControllerConfig,
        initial: OscillatorState,
    ) -> Result<Self> {
        params.validate()?;
        net.validate()?;
        if !config.feedback_scale.is_finite() {
            return Err(Error::invalid("feedback scale must be finite"));
        }
        Ok(Self {
            params,
            net,
            config,
            state: initial,
        })
    }

    pub fn state(&self) -> &OscillatorState {
        &self.state
    }

    /// Advances the oscillator and returns the unlimited joint commands.
    pub fn commands(&mut self, prev: &GaitFrame) -> Result<JointCommands> {
        let (next, raw) = controller_commands(&self.state, &self.params, &self.net, prev, &self.config)?;
        self.state = next;
        Ok(raw)
    }

    pub fn tick(&mut self, prev: &GaitFrame) -> Result<GaitFrame> {
        let raw = self.commands(prev)?;
        Ok(clamp_frame(&raw)?.0)
    }
}

/// Writes `t,hip_l,knee_l,ankle_l,hip_r,knee_r,ankle_r`; row `k` is at
/// `t0 + k * dt`.
pub fn write_gait_csv<W: Write>(out: W, frames: &[GaitFrame], t0: f64, dt: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "hip_l", "knee_l", "ankle_l", "hip_r", "knee_r", "ankle_r"])?;
    for (k, f) in frames.iter().enumerate() {
        let mut row = vec![format!("{:.4}", t0 + k as f64 * dt)];
        row.extend(f.as_array().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(w11: f64, w12: f64, b1: f64, b2: f64) -> NetworkParams {
        NetworkParams { w11, w12, b1, b2 }
    }

    #[test]
    fn zero_input_exposes_biases() {
        let c = network_output(0.0, 0.0, &net(-2.0, -3.0, 7.0, -20.0));
        assert_eq!(
            c,
            LegCommands {
                hip_l: 7.0,
                knee_l: -20.0,
                hip_r: 7.0,
                knee_r: -20.0
            }
        );
    }

    #[test]
    fn identity_weight() {
        let c = network_output(5.0, 3.0, &net(1.0, 0.0, 0.0, 0.0));
        assert_eq!((c.hip_l, c.knee_l, c.hip_r, c.knee_r), (5.0, 0.0, 3.0, 0.0));
    }

    #[test]
    fn equal_outputs_give_equal_legs() {
        let c = network_output(1.7, 1.7, &net(-1.3, -4.1, -12.0, -40.0));
        assert_eq!((c.hip_l, c.knee_l), (c.hip_r, c.knee_r));
    }

    #[test]
    fn ankle_cases() {
        assert_eq!(derive_ankle(0.0, 0.0), 0.0);
        assert_eq!(derive_ankle(20.0, -40.0), 20.0);
        assert_eq!(derive_ankle(-100.0, 0.0), 55.0);
        assert_eq!(derive_ankle(25.0, 100.0), -75.0);
    }

    #[test]
    fn clamp_cases() {
        let raw = JointCommands {
            hip_l: 30.0,
            knee_l: -130.0,
            ..Default::default()
        };
        let (f, sat) = clamp_frame(&raw).unwrap();
        assert_eq!(f.hip_l(), 25.0);
        assert!(sat.0[0]);
        assert_eq!(f.knee_l(), -130.0);
        assert!(!sat.0[1]);

        let inside = JointCommands {
            hip_l: -10.0,
            knee_l: -30.0,
            ankle_l: 40.0,
            hip_r: 5.0,
            knee_r: -1.0,
            ankle_r: -4.0,
        };
        let (f, sat) = clamp_frame(&inside).unwrap();
        assert_eq!(f.as_array(), inside.as_array());
        assert!(!sat.any());

        let nan = JointCommands {
            knee_r: f64::NAN,
            ..Default::default()
        };
        assert!(clamp_frame(&nan).is_err());
    }

    #[test]
    fn feedback_cases() {
        assert_eq!(feedback_from_frame(&GaitFrame::NEUTRAL, 1.0 / 90.0), FeedbackSignal::NONE);
        let raw = JointCommands {
            hip_l: 25.0,
            hip_r: -10.0,
            ..Default::default()
        };
        let (f, _) = clamp_frame(&raw).unwrap();
        let fb = feedback_from_frame(&f, 0.0);
        assert_eq!((fb.uf1, fb.uf2), (0.0, 0.0));
        let fb = feedback_from_frame(&f, 1.0 / 90.0);
        assert!((fb.uf1 - 0.277_777_777_777_777_8).abs() < 1e-15);
        assert!((fb.uf2 + 0.111_111_111_111_111_1).abs() < 1e-15);
    }

    #[test]
    fn zero_network_is_neutral() {
        let mut c = Controller::new(
            OscillatorParams::CANONICAL,
            NetworkParams::default(),
            ControllerConfig::default(),
            OscillatorState::PERTURBED,
        )
        .unwrap();
        let mut prev = GaitFrame::NEUTRAL;
        for _ in 0..200 {
            prev = c.tick(&prev).unwrap();
            assert_eq!(prev, GaitFrame::NEUTRAL);
        }
    }

    #[test]
    fn symmetric_oscillator_gives_symmetric_hips() {
        let mut params = OscillatorParams::CANONICAL;
        params.alpha = 1.5;
        let mut c = Controller::new(
            params,
            net(-2.0, -3.0, -10.0, -30.0),
            ControllerConfig::default(),
            OscillatorState::new(0.2, 0.1, 0.2, 0.1),
        )
        .unwrap();
        let mut prev = GaitFrame::NEUTRAL;
        for _ in 0..500 {
            prev = c.tick(&prev).unwrap();
            assert_eq!(prev.hip_l(), prev.hip_r());
        }
    }

    #[test]
    fn gait_csv_layout() {
        let frames = vec![GaitFrame::NEUTRAL; 50];
        let mut buf = Vec::new();
        write_gait_csv(&mut buf, &frames, 0.02, 0.02).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 51);
        assert_eq!(lines[0], "t,hip_l,knee_l,ankle_l,hip_r,knee_r,ankle_r");
        assert_eq!(lines[1], "0.0200,0,0,0,0,0,0");
        assert_eq!(lines[50].split(',').next(), Some("1.0000"));
    }
}
