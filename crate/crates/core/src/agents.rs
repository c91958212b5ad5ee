//! Synthetic drivers. An agent forms intended device angles from what it
//! sees (pure pursuit for steering, a PI speed law for the accelerator),
//! delays and perturbs them, and applies torque to the devices through an
//! arm/leg impedance. Guidance torque therefore competes with the agent
//! instead of overriding it.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::plant::{Axis, AxisTorques, DeviceState, VehicleParams, VehicleState, VEHICLE_DT};
use crate::track::{wrap_angle, TrackPath};
use crate::units::{target_speed, RAD_TO_DEG};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentParams {
    /// Pure-pursuit look-ahead time, s.
    pub lookahead_time: f64,
    /// Shortest look-ahead distance, m.
    pub min_lookahead: f64,
    pub pursuit_gain: f64,
    /// Accelerator angle held at the target speed, deg.
    pub cruise_pedal: f64,
    /// deg per m/s
    pub speed_kp: f64,
    /// deg per m
    pub speed_ki: f64,
    /// Reaction delay, s (a multiple of the vehicle period).
    pub delay: f64,
    /// Intent noise, deg (stationary standard deviation).
    pub sigma_s: f64,
    pub sigma_a: f64,
    /// Correlation time of the steering intent noise, s; zero gives white
    /// noise. Accelerator noise is always white.
    pub steer_noise_time: f64,
    /// Arm impedance on the wheel, N*m/deg and N*m*s/deg.
    pub k_arm: f64,
    pub d_arm: f64,
    /// Leg impedance on the pedals.
    pub k_leg: f64,
    pub d_leg: f64,
    /// m/s
    pub target_speed: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        SkillPreset::Expert.params()
    }
}

impl AgentParams {
    pub fn delay_ticks(&self) -> usize {
        (self.delay / VEHICLE_DT).round() as usize
    }

    pub fn validate(&self) -> Result<(), String> {
        let vals = [
            self.lookahead_time,
            self.min_lookahead,
            self.pursuit_gain,
            self.cruise_pedal,
            self.speed_kp,
            self.speed_ki,
            self.delay,
            self.sigma_s,
            self.sigma_a,
            self.steer_noise_time,
            self.k_arm,
            self.d_arm,
            self.k_leg,
            self.d_leg,
            self.target_speed,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err("agent parameters must be finite and non-negative".into());
        }
        if (self.delay / VEHICLE_DT - self.delay_ticks() as f64).abs() > 1e-9 {
            return Err(format!("delay {} s is not a multiple of {VEHICLE_DT} s", self.delay));
        }
        Ok(())
    }

    /// Same driver without intent noise.
    pub fn noiseless(&self) -> Self {
        Self { sigma_s: 0.0, sigma_a: 0.0, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillPreset {
    Expert,
    Novice,
}

impl SkillPreset {
    pub fn params(self) -> AgentParams {
        let common = AgentParams {
            lookahead_time: 1.0,
            min_lookahead: 6.0,
            pursuit_gain: 1.0,
            cruise_pedal: 3.4,
            speed_kp: 2.0,
            speed_ki: 0.3,
            delay: 0.1,
            sigma_s: 0.5,
            sigma_a: 0.15,
            steer_noise_time: 0.0,
            k_arm: 0.5,
            d_arm: 0.04,
            k_leg: 1.5,
            d_leg: 0.03,
            target_speed: target_speed(),
        };
        match self {
            SkillPreset::Expert => common,
            SkillPreset::Novice => AgentParams {
                lookahead_time: 0.8,
                speed_kp: 1.2,
                speed_ki: 0.15,
                delay: 0.3,
                sigma_s: 3.0,
                sigma_a: 0.6,
                steer_noise_time: 0.5,
                k_arm: 0.2,
                d_arm: 0.02,
                k_leg: 0.8,
                d_leg: 0.015,
                ..common
            },
        }
    }

    /// The `index`-th member of a roster: the preset with deterministic
    /// perturbations of look-ahead, noise, impedance and delay.
    pub fn individual(self, index: usize) -> AgentParams {
        let base = self.params();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index as u64 + if self == SkillPreset::Novice { 1000 } else { 0 });
        let mut scale = |spread: f64| 1.0 + spread * (2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0);
        let delay_shift = [-1i32, 0, 1][index % 3] as f64 * VEHICLE_DT;
        AgentParams {
            lookahead_time: base.lookahead_time * scale(0.1),
            sigma_s: base.sigma_s * scale(0.2),
            sigma_a: base.sigma_a * scale(0.2),
            k_arm: base.k_arm * scale(0.1),
            k_leg: base.k_leg * scale(0.1),
            speed_kp: base.speed_kp * scale(0.1),
            delay: ((base.delay + delay_shift) / VEHICLE_DT).round() * VEHICLE_DT,
            ..base
        }
    }
}

impl std::fmt::Display for SkillPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkillPreset::Expert => "expert",
            SkillPreset::Novice => "novice",
        })
    }
}

impl std::str::FromStr for SkillPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expert" => Ok(SkillPreset::Expert),
            "novice" => Ok(SkillPreset::Novice),
            other => Err(format!("unknown preset `{other}`")),
        }
    }
}

/// Intended device angles, deg.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Intent {
    pub steer: f64,
    pub accel: f64,
}

/// Pure-pursuit wheel angle (deg) toward the midline point one look-ahead
/// ahead of the closest point. `None` when the car is outside the query region.
pub fn pursuit_steer(path: &TrackPath, state: &VehicleState, params: &AgentParams, vehicle: &VehicleParams) -> Option<f64> {
    let q = path.closest_midline_point(state.x, state.y).ok()?;
    let ld = (state.v * params.lookahead_time).max(params.min_lookahead);
    let (tx, ty) = path.point_at_extended(q.s + ld);
    let (dx, dy) = (tx - state.x, ty - state.y);
    let dist = dx.hypot(dy).max(1e-6);
    let alpha = wrap_angle(dy.atan2(dx) - state.heading);
    let delta = (2.0 * vehicle.wheelbase * alpha.sin() / dist).atan();
    Some(params.pursuit_gain * delta * RAD_TO_DEG * vehicle.steering_ratio)
}

/// Torque of an impedance pulling an axis toward `intent`.
pub fn agent_torque(intent: f64, axis: Axis, k: f64, d: f64) -> f64 {
    k * (intent - axis.angle) - d * axis.rate
}

/// Driver state machine: intent formation, reaction delay, noise.
#[derive(Debug, Clone)]
pub struct Agent {
    pub params: AgentParams,
    vehicle: VehicleParams,
    rng: ChaCha8Rng,
    noise_s: Normal<f64>,
    noise_a: Normal<f64>,
    queue: VecDeque<Intent>,
    steer_noise: f64,
    speed_integral: f64,
    last_steer: f64,
    current: Intent,
}

impl Agent {
    pub fn new(params: AgentParams, vehicle: VehicleParams, seed: u64) -> Self {
        let noise_s = Normal::new(0.0, params.sigma_s).expect("non-negative sigma");
        let noise_a = Normal::new(0.0, params.sigma_a).expect("non-negative sigma");
        Self {
            params,
            vehicle,
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise_s,
            noise_a,
            queue: VecDeque::new(),
            steer_noise: 0.0,
            speed_integral: 0.0,
            last_steer: 0.0,
            current: Intent::default(),
        }
    }

    /// Undelayed, noise-free intent for the current state.
    pub fn raw_intent(&mut self, path: &TrackPath, state: &VehicleState) -> Intent {
        let p = &self.params;
        if let Some(s) = pursuit_steer(path, state, p, &self.vehicle) {
            self.last_steer = s;
        }
        let err = p.target_speed - state.v;
        let unclamped = p.cruise_pedal + p.speed_kp * err + p.speed_ki * self.speed_integral;
        // conditional integration keeps the integrator from winding up
        if (unclamped < 10.0 || err < 0.0) && (unclamped > 0.0 || err > 0.0) {
            self.speed_integral += err * VEHICLE_DT;
        }
        let accel = (p.cruise_pedal + p.speed_kp * err + p.speed_ki * self.speed_integral).clamp(0.0, 10.0);
        Intent { steer: self.last_steer, accel }
    }

    /// Advances one vehicle tick and returns the delayed, perturbed intent.
    pub fn update(&mut self, path: &TrackPath, state: &VehicleState) -> Intent {
        let raw = self.raw_intent(path, state);
        let delay = self.params.delay_ticks();
        if self.queue.is_empty() {
            self.queue.extend(std::iter::repeat_n(raw, delay));
        }
        self.queue.push_back(raw);
        let delayed = self.queue.pop_front().expect("queue holds at least one intent");
        // first-order autoregressive steering noise with the configured stationary spread
        let (a, b) = match self.params.steer_noise_time {
            t if t > 0.0 => {
                let a = (-VEHICLE_DT / t).exp();
                (a, (1.0 - a * a).sqrt())
            }
            _ => (0.0, 1.0),
        };
        self.steer_noise = a * self.steer_noise + b * self.noise_s.sample(&mut self.rng);
        let accel_noise = self.noise_a.sample(&mut self.rng);
        self.current = Intent { steer: delayed.steer + self.steer_noise, accel: delayed.accel + accel_noise };
        self.current
    }

    pub fn intent(&self) -> Intent {
        self.current
    }

    /// Device torques for the latest intent. `hands_off` leaves the wheel free.
    pub fn torques(&self, dev: &DeviceState, hands_off: bool) -> AxisTorques {
        let p = &self.params;
        AxisTorques {
            steer: if hands_off { 0.0 } else { agent_torque(self.current.steer, dev.steer, p.k_arm, p.d_arm) },
            accel: agent_torque(self.current.accel, dev.accel, p.k_leg, p.d_leg),
            brake: agent_torque(0.0, dev.brake, p.k_leg, p.d_leg),
        }
    }
}
