use cpg_gait::controller::{
    clamp_frame, controller_commands, network_output, Controller, ControllerConfig, GaitFrame, JointCommands,
    NetworkParams, ANKLE_RANGE, HIP_RANGE, KNEE_RANGE,
};
use cpg_gait::oscillator::{OscillatorParams, OscillatorState};
use proptest::prelude::*;

fn net() -> impl Strategy<Value = NetworkParams> {
    (-4.0..1.0, -5.0..0.0, -95.0..20.0, -125.0..-5.0).prop_map(|(w11, w12, b1, b2)| NetworkParams { w11, w12, b1, b2 })
}

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&v)
}

proptest! {
    #[test]
    fn frames_stay_within_joint_limits(
        n in net(), y1 in 0.0..50.0f64, y2 in 0.0..50.0f64, scale in -10.0..10.0f64,
    ) {
        let raw = JointCommands::from_legs(network_output(y1 * scale.abs(), y2, &n));
        let (f, _) = clamp_frame(&raw).unwrap();
        prop_assert!(f.within_limits());
        prop_assert!(within(f.hip_l(), HIP_RANGE) && within(f.hip_r(), HIP_RANGE));
        prop_assert!(within(f.knee_l(), KNEE_RANGE) && within(f.knee_r(), KNEE_RANGE));
        prop_assert!(within(f.ankle_l(), ANKLE_RANGE) && within(f.ankle_r(), ANKLE_RANGE));
    }

    #[test]
    fn swapping_outputs_swaps_legs(n in net(), y1 in 0.0..5.0, y2 in 0.0..5.0) {
        let a = JointCommands::from_legs(network_output(y1, y2, &n));
        let b = JointCommands::from_legs(network_output(y2, y1, &n));
        prop_assert_eq!(
            (a.hip_l, a.knee_l, a.ankle_l, a.hip_r, a.knee_r, a.ankle_r),
            (b.hip_r, b.knee_r, b.ankle_r, b.hip_l, b.knee_l, b.ankle_l)
        );
        let (fa, _) = clamp_frame(&a).unwrap();
        let (fb, _) = clamp_frame(&b).unwrap();
        prop_assert_eq!(fa.mirrored(), fb);
    }

    #[test]
    fn ankle_keeps_foot_level_when_unclamped(hip in -100.0..25.0f64, knee in -130.0..0.0f64) {
        let raw = JointCommands::from_legs(cpg_gait::controller::LegCommands {
            hip_l: hip, knee_l: knee, hip_r: hip, knee_r: knee,
        });
        prop_assume!(within(-(hip + knee), ANKLE_RANGE));
        prop_assert_eq!(hip + knee + raw.ankle_l, 0.0);
        let (f, _) = clamp_frame(&raw).unwrap();
        prop_assert_eq!(f.hip_r() + f.knee_r() + f.ankle_r(), 0.0);
    }

    #[test]
    fn controller_frames_respect_limits(
        n in net(), tau1 in 0.05..5.0, tau2 in 0.05..5.0, alpha in -5.0..5.0, beta in -5.0..5.0,
        gamma in -5.0..5.0, c in 2.0..4.0,
    ) {
        let p = OscillatorParams { tau1, tau2, alpha, beta, gamma, c };
        let mut ctl = Controller::new(p, n, ControllerConfig::default(), OscillatorState::PERTURBED).unwrap();
        let mut prev = GaitFrame::NEUTRAL;
        for _ in 0..50 {
            match ctl.tick(&prev) {
                Ok(f) => { prop_assert!(f.within_limits()); prev = f; }
                Err(_) => break,
            }
        }
    }
}

/// Left and right hips of a converged run agree under a half-period shift.
#[test]
fn hips_alternate_with_half_period_lag() {
    let p = OscillatorParams::CANONICAL;
    let n = NetworkParams { w11: -3.0, w12: -4.0, b1: 10.0, b2: -30.0 };
    let config = ControllerConfig { feedback_scale: 0.0, ..ControllerConfig::default() };
    let mut state = OscillatorState::PERTURBED;
    let mut prev = GaitFrame::NEUTRAL;
    let mut frames = Vec::new();
    for _ in 0..6000 {
        let (s, raw) = controller_commands(&state, &p, &n, &prev, &config).unwrap();
        state = s;
        prev = clamp_frame(&raw).unwrap().0;
        frames.push(prev);
    }
    let series = cpg_gait::oscillator::simulate(&p, &OscillatorState::PERTURBED, cpg_gait::oscillator::NoFeedback, 120.0, 0.02)
        .unwrap();
    let period = cpg_gait::oscillator::analyze(&series, 0.02).period.unwrap();
    let shift = (period / 2.0 / 0.02).round() as usize;
    let tail = &frames[3000..];
    let rms = (tail[..tail.len() - shift]
        .iter()
        .zip(&tail[shift..])
        .map(|(a, b)| (a.hip_l() - b.hip_r()).powi(2))
        .sum::<f64>()
        / (tail.len() - shift) as f64)
        .sqrt();
    assert!(rms < 2.0, "rms {rms}");
}
