//! Ambient torque feedback for the steering wheel and the two pedals.
//!
//! Sign conventions used throughout the crate:
//!
//! * steering torque is the torque applied at the rim, positive
//!   counterclockwise (the direction of increasing wheel angle);
//! * pedal torque is positive when it pushes the pedal up against the foot
//!   (the direction of decreasing pedal angle).

use serde::{Deserialize, Serialize};

/// Constants of the ambient feedback laws. Defaults are the simulator's
/// tuned values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HapticParams {
    /// Shaft transmission gain, m.
    pub g_shaft: f64,
    /// Steering viscous friction, N*m*s/deg.
    pub d_s: f64,
    /// Steering Coulomb friction, N*m.
    pub t_friction: f64,
    /// Pedal spring coefficients, N*m/deg.
    pub k_a: f64,
    pub k_b: f64,
    /// Pedal damping, N*m*s/deg.
    pub d_a: f64,
    pub d_b: f64,
    /// Virtual-endpoint stiffness, `10 * k_a`.
    pub k_a_max: f64,
    pub k_b_max: f64,
    /// Spring rest angles, deg.
    pub theta_a0: f64,
    pub theta_b0: f64,
    /// Pedal travel used for throttle/brake normalization, deg.
    pub theta_a_min: f64,
    pub theta_a_max: f64,
    pub theta_b_min: f64,
    pub theta_b_max: f64,
    /// Scale from tire lateral force (N) to the force entering the
    /// self-alignment law at the rim.
    pub align_force_scale: f64,
}

impl Default for HapticParams {
    fn default() -> Self {
        let k_a = 0.2;
        let k_b = 0.2;
        Self {
            g_shaft: 0.75,
            d_s: 0.002,
            t_friction: 0.1,
            k_a,
            k_b,
            d_a: 0.001,
            d_b: 0.001,
            k_a_max: 10.0 * k_a,
            k_b_max: 10.0 * k_b,
            theta_a0: -5.0,
            theta_b0: -5.0,
            theta_a_min: 0.0,
            theta_a_max: 10.0,
            theta_b_min: 0.0,
            theta_b_max: 5.0,
            align_force_scale: 0.001,
        }
    }
}

/// Gravity compensation; the simulated pedals carry no weight.
pub fn gravity_compensation(_theta: f64) -> f64 {
    0.0
}

/// Self-alignment term: `G_shaft * (F_fl + F_fr) / 2`.
pub fn self_alignment_torque(f_fl: f64, f_fr: f64, p: &HapticParams) -> f64 {
    p.g_shaft * 0.5 * (f_fl + f_fr)
}

/// Viscous plus Coulomb friction, both opposing wheel rotation. No static
/// friction: the Coulomb term vanishes at zero rate.
pub fn steering_friction_torque(rate: f64, p: &HapticParams) -> f64 {
    let coulomb = if rate > 0.0 {
        -p.t_friction
    } else if rate < 0.0 {
        p.t_friction
    } else {
        0.0
    };
    -p.d_s * rate + coulomb
}

/// Ambient steering torque from the front lateral forces and wheel rate.
pub fn steering_torque(f_fl: f64, f_fr: f64, rate: f64, p: &HapticParams) -> f64 {
    self_alignment_torque(f_fl, f_fr, p) + steering_friction_torque(rate, p)
}

/// Steering torque felt at the rim for the given tire forces.
///
/// The rack carries the reaction of the road force on the tires, so the
/// alignment term is fed with the negated, scaled forces and returns the
/// wheel toward center.
pub fn rim_steering_torque(f_fl: f64, f_fr: f64, rate: f64, p: &HapticParams) -> f64 {
    let s = p.align_force_scale;
    steering_torque(-s * f_fl, -s * f_fr, rate, p)
}

/// Unilateral endpoint term: zero below `limit`, `k * (theta - limit)` at or above.
pub fn unilateral_endpoint(theta: f64, limit: f64, k: f64) -> f64 {
    if theta < limit {
        0.0
    } else {
        k * (theta - limit)
    }
}

pub fn accelerator_spring(theta_a: f64, p: &HapticParams) -> f64 {
    p.k_a * (theta_a - p.theta_a0)
}

/// Accelerator torque: spring + virtual endpoint + damping + gravity term.
pub fn accelerator_torque(theta_a: f64, rate: f64, p: &HapticParams) -> f64 {
    accelerator_spring(theta_a, p)
        + unilateral_endpoint(theta_a, p.theta_a_max, p.k_a_max)
        + p.d_a * rate
        + gravity_compensation(theta_a)
}

pub fn brake_torque(theta_b: f64, rate: f64, p: &HapticParams) -> f64 {
    p.k_b * (theta_b - p.theta_b0)
        + unilateral_endpoint(theta_b, p.theta_b_max, p.k_b_max)
        + p.d_b * rate
        + gravity_compensation(theta_b)
}

/// Throttle fraction from the accelerator angle.
pub fn throttle_fraction(theta_a: f64, p: &HapticParams) -> f64 {
    (theta_a.clamp(p.theta_a_min, p.theta_a_max) - p.theta_a_min) / (p.theta_a_max - p.theta_a_min)
}

pub fn brake_fraction(theta_b: f64, p: &HapticParams) -> f64 {
    (theta_b.clamp(p.theta_b_min, p.theta_b_max) - p.theta_b_min) / (p.theta_b_max - p.theta_b_min)
}
