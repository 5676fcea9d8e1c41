use cpg_gait::controller::{GaitFrame, JointCommands, LegCommands};
use cpg_gait::optimize::{Genome, SearchBounds};
use cpg_gait::simulator::{
    evaluate, fitness, resample_seed, rollout, run_episode, trace, ResultRecord, SimConfig,
};
use cpg_gait::Result;
use proptest::prelude::*;
use rand::SeedableRng;

/// Alternating gait with straight stance legs: hips swing +-amp in
/// antiphase and each knee is bent by `knee` while its leg swings forward,
/// straightening at the front turning point. With knee > 2 amp the swing
/// foot stays clear of the ground until then.
fn sinusoid(lock: f64, period: f64, amp: f64, knee: f64) -> impl FnMut(f64, &GaitFrame) -> Result<JointCommands> {
    let w = 2.0 * std::f64::consts::PI / period;
    move |t, _| {
        let ph = w * (t - lock);
        let hip = amp * ph.sin();
        Ok(JointCommands::from_legs(LegCommands {
            hip_l: hip,
            knee_l: if ph.cos() > 1e-9 { -knee } else { 0.0 },
            hip_r: -hip,
            knee_r: if -ph.cos() > 1e-9 { -knee } else { 0.0 },
        }))
    }
}

#[test]
fn sinusoidal_gait_matches_stride_geometry() {
    let config = SimConfig {
        max_joint_speed: 1e9,
        ..SimConfig::default()
    };
    let (amp, period) = (20.0f64, 1.2);
    let r = run_episode(&mut sinusoid(3.0, period, amp, 60.0), &config, 0, true).unwrap();
    assert!(!r.fell);
    // One exchange per half period over the 12 s after the lock phase; each
    // half period the hip travels one full stride of 2 L sin(amp).
    let steps = ((config.duration - config.lock_phase) / (period / 2.0)).round() as usize;
    let stride = 2.0 * config.leg_length() * amp.to_radians().sin();
    let expected = steps as f64 * stride;
    assert_eq!(r.steps, steps);
    assert!((r.x - expected).abs() / expected < 0.01, "x {} expected {}", r.x, expected);
    assert_eq!(r.y, 0.0);
    assert_eq!(r.fitness, r.x);
    let trace = r.trace.unwrap();
    assert_eq!(trace.len(), 750);
    let z: Vec<f64> = trace.iter().map(|s| s.torso_z).collect();
    let (lo, hi) = z.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    assert!((hi - config.leg_length()).abs() < 1e-12);
    assert!((lo - config.leg_length() * amp.to_radians().cos()).abs() < 1e-3);
}

#[test]
fn slew_limit_keeps_feet_level() {
    let config = SimConfig::default();
    let r = run_episode(&mut sinusoid(3.0, 0.4, 40.0, 90.0), &config, 0, true).unwrap();
    let step = config.max_joint_speed / config.tick_rate;
    let trace = r.trace.unwrap();
    for pair in trace.windows(2) {
        let (a, b) = (pair[0].frame, pair[1].frame);
        for (x, y) in [(a.hip_l(), b.hip_l()), (a.knee_l(), b.knee_l()), (a.hip_r(), b.hip_r()), (a.knee_r(), b.knee_r())] {
            assert!((x - y).abs() <= step + 1e-9);
        }
        assert_eq!(b.hip_l() + b.knee_l() + b.ankle_l(), 0.0);
    }
}

#[test]
fn zero_weight_genome_freezes_in_place() {
    let g = Genome::from_array([0.5, 1.0, 0.0, 2.5, 2.5, 3.0, 0.0, 0.0, 0.0, 0.0]);
    let config = SimConfig::default();
    let r = trace(&g, &config).unwrap();
    assert!(r.fell);
    assert_eq!(r.fall_time, Some(8.0));
    assert_eq!(r.x, 0.0);
    assert_eq!(r.fitness, 0.0);
    assert_eq!(r.trace.unwrap().len(), 400);
}

#[test]
fn fitness_formula_cases() {
    assert!((fitness(5.3, 0.0, 15.0, 15.0, false, 0.02) - 5.3).abs() < 1e-12);
    assert!((fitness(2.5, 0.5, 10.0, 15.0, true, 0.02) - 0.4).abs() < 1e-12);
    assert!((fitness(1.0, 0.0, 15.0, 15.0, true, 0.02) - 50.0).abs() < 1e-12);
}

#[test]
fn noise_drift_is_seeded() {
    let g = Genome::from_array([0.3, 0.6, 1.0, 2.5, 2.5, 3.0, -3.0, -4.0, -10.0, -20.0]);
    let noisy = SimConfig { noise_std: 2.0, ..SimConfig::default() };
    let a = trace(&g, &noisy).unwrap();
    let b = trace(&g, &noisy).unwrap();
    assert_eq!(a, b);
    let c = trace(&g, &SimConfig { seed: 1, ..noisy }).unwrap();
    assert_ne!(a.trace, c.trace);
    assert!(a.trace.unwrap().iter().all(|s| s.y >= 0.0));
}

#[test]
fn evaluate_averages_resampled_rollouts() {
    let g = Genome::from_array([0.3, 0.6, 1.0, 2.5, 2.5, 3.0, -3.0, -4.0, -10.0, -20.0]);
    let config = SimConfig { noise_std: 1.5, resamples: 4, seed: 9, ..SimConfig::default() };
    let mean = evaluate(&g, &config).unwrap();
    // Recompute each resample through a source-level rollout.
    let mut sum = 0.0;
    for k in 0..4 {
        let c = cpg_gait::controller::Controller::new(
            g.oscillator(),
            g.network(),
            config.controller,
            cpg_gait::oscillator::OscillatorState::PERTURBED,
        )
        .unwrap();
        let mut src = cpg_gait::simulator::ControllerSource(c);
        sum += run_episode(&mut src, &config, resample_seed(9, k), false).unwrap().fitness;
    }
    assert!((mean - sum / 4.0).abs() < 1e-12);
    assert_eq!(evaluate(&g, &config).unwrap(), mean);
}

#[test]
fn resampling_reduces_estimator_variance() {
    let g = Genome::from_array([0.3, 0.6, 1.0, 2.5, 2.5, 3.0, -3.0, -4.0, -10.0, -20.0]);
    let variance = |resamples: usize| {
        let v: Vec<f64> = (0..100)
            .map(|seed| evaluate(&g, &SimConfig { noise_std: 1.0, resamples, seed, ..SimConfig::default() }).unwrap())
            .collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (one, eight) = (variance(1), variance(8));
    assert!(one > 0.0);
    assert!(eight < one, "n=8 {eight} vs n=1 {one}");
}

#[test]
fn noise_free_resamples_equal_single_rollout() {
    let g = Genome::from_array([0.3, 0.6, 1.0, 2.5, 2.5, 3.0, -3.0, -4.0, -10.0, -20.0]);
    let single = rollout(&g, &SimConfig::default()).unwrap().fitness;
    assert_eq!(evaluate(&g, &SimConfig { resamples: 5, ..SimConfig::default() }).unwrap(), single);
    assert_eq!(evaluate(&g, &SimConfig::default()).unwrap(), single);
}

#[test]
fn result_record_has_expected_keys() {
    let g = Genome::from_array([0.5, 1.0, 0.0, 2.5, 2.5, 3.0, 0.0, 0.0, 0.0, 0.0]);
    let config = SimConfig::default();
    let r = rollout(&g, &config).unwrap();
    let v = serde_json::to_value(ResultRecord::new(&r, &config)).unwrap();
    for key in ["x", "y", "fell", "fall_time", "fitness", "config", "seed"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

fn genome() -> impl Strategy<Value = Genome> {
    let b = SearchBounds::gait();
    any::<u64>().prop_map(move |s| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
        Genome::from_slice(&b.sample(&mut rng)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn episodes_respect_lock_phase_and_geometry(g in genome(), noise in prop::sample::select(vec![0.0, 1.0])) {
        let config = SimConfig { noise_std: noise, ..SimConfig::default() };
        let r = trace(&g, &config).unwrap();
        let samples = r.trace.clone().unwrap();
        if let Some(t) = r.fall_time {
            prop_assert!(t >= config.lock_phase && t <= config.duration);
        }
        let before_fall = if r.fell { samples.len().saturating_sub(1) } else { samples.len() };
        for s in &samples[..before_fall] {
            prop_assert!(s.torso_z > 0.0 && s.torso_z <= config.leg_length() + 1e-12);
        }
        for s in samples.iter().filter(|s| s.t < config.lock_phase - 1e-9) {
            prop_assert_eq!(s.x, 0.0);
            prop_assert_eq!(s.frame, GaitFrame::NEUTRAL);
        }
        if noise == 0.0 {
            prop_assert_eq!(r.y, 0.0);
        }
        prop_assert_eq!(rollout(&g, &config).unwrap().fitness, r.fitness);
    }

    #[test]
    fn falling_never_beats_completing(x in 0.0..10.0f64, dy in 0.0..1.0f64, t in 3.0..14.0f64) {
        let y = x * dy;
        prop_assert!(fitness(x, y, t, 15.0, true, 0.02) <= fitness(x, y, 15.0, 15.0, false, 0.02));
    }
}

