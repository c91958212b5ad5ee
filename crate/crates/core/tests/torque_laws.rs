use proptest::prelude::*;
use skilldrive_core::haptics::{
    accelerator_torque, brake_torque, steering_torque, unilateral_endpoint, HapticParams,
};

const TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

#[test]
fn steering_worked_examples() {
    let p = HapticParams::default();
    assert!(close(steering_torque(0.0, 0.0, 0.0, &p), 0.0));
    // 0.75 * (4 + 4) / 2
    assert!(close(steering_torque(4.0, 4.0, 0.0, &p), 3.0));
    // -(0.002 * 100) - 0.1
    assert!(close(steering_torque(0.0, 0.0, 100.0, &p), -0.3));
    assert!(close(steering_torque(0.0, 0.0, -100.0, &p), 0.3));
}

#[test]
fn accelerator_worked_examples() {
    let p = HapticParams::default();
    assert!(close(accelerator_torque(0.0, 0.0, &p), 1.0));
    assert!(close(accelerator_torque(10.0, 0.0, &p), 3.0));
    assert!(close(accelerator_torque(12.0, 0.0, &p), 7.4));
    assert!(close(unilateral_endpoint(10.0, 10.0, p.k_a_max), 0.0));
}

#[test]
fn brake_worked_examples() {
    let p = HapticParams::default();
    assert!(close(brake_torque(0.0, 0.0, &p), 1.0));
    assert!(close(brake_torque(5.0, 0.0, &p), 2.0));
    assert!(close(brake_torque(6.0, 0.0, &p), 4.2));
}

#[test]
fn table_constants() {
    let p = HapticParams::default();
    assert_eq!(p.g_shaft, 0.75);
    assert_eq!(p.d_s, 0.002);
    assert_eq!(p.t_friction, 0.1);
    assert_eq!((p.k_a, p.k_b), (0.2, 0.2));
    assert_eq!((p.d_a, p.d_b), (0.001, 0.001));
    assert_eq!(p.k_a_max, 10.0 * p.k_a);
    assert_eq!(p.theta_a0, -5.0);
    assert_eq!((p.theta_a_max, p.theta_b_max), (10.0, 5.0));
}

#[test]
fn endpoint_continuity_at_travel_limits() {
    let p = HapticParams::default();
    for (limit, f) in [
        (p.theta_a_max, accelerator_torque as fn(f64, f64, &HapticParams) -> f64),
        (p.theta_b_max, brake_torque),
    ] {
        for eps in [1e-6, 1e-9, 1e-12] {
            let below = f(limit - eps, 0.0, &p);
            let at = f(limit, 0.0, &p);
            let above = f(limit + eps, 0.0, &p);
            // only the spring slope (0.2) and endpoint slope (2.0) separate the sides
            assert!((at - below).abs() <= 0.2 * eps + 1e-12);
            assert!((above - at).abs() <= 2.2 * eps + 1e-12);
        }
        assert!(unilateral_endpoint(limit, limit, 2.0).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn accelerator_strictly_increasing(a in -10.0f64..30.0, gap in 1e-6f64..5.0, rate in -200.0f64..200.0) {
        let p = HapticParams::default();
        prop_assert!(accelerator_torque(a + gap, rate, &p) > accelerator_torque(a, rate, &p));
    }

    #[test]
    fn free_steering_opposes_motion(rate in -500.0f64..500.0) {
        prop_assume!(rate != 0.0);
        let p = HapticParams::default();
        let t = steering_torque(0.0, 0.0, rate, &p);
        prop_assert_eq!(t.signum(), -rate.signum());
    }

    #[test]
    fn torque_laws_match_formula(a in -10.0f64..30.0, rate in -100.0f64..100.0, f1 in -5e3f64..5e3, f2 in -5e3f64..5e3) {
        let p = HapticParams::default();
        let endpoint = if a < 10.0 { 0.0 } else { 2.0 * (a - 10.0) };
        let expected = 0.2 * (a + 5.0) + endpoint + 0.001 * rate;
        prop_assert!((accelerator_torque(a, rate, &p) - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        let coulomb = if rate > 0.0 { -0.1 } else if rate < 0.0 { 0.1 } else { 0.0 };
        let expected_s = 0.75 * (f1 + f2) / 2.0 - 0.002 * rate + coulomb;
        prop_assert!((steering_torque(f1, f2, rate, &p) - expected_s).abs() <= 1e-9 * expected_s.abs().max(1.0));
    }

    #[test]
    fn laws_are_pure(a in -10.0f64..30.0, rate in -100.0f64..100.0) {
        let p = HapticParams::default();
        prop_assert_eq!(accelerator_torque(a, rate, &p).to_bits(), accelerator_torque(a, rate, &p).to_bits());
        prop_assert_eq!(brake_torque(a, rate, &p).to_bits(), brake_torque(a, rate, &p).to_bits());
    }
}
