//! Shared-control methods: no guidance (N), skill-model guidance (G) and
//! conventional look-ahead guidance (C).
//!
//! G and C differ only in where the desired angles come from. Both feed
//! [`SharedControlLaw`], which renders the PID steering assist with stable
//! damping and the unilateral pedal endpoint at the device rate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::haptics::{self, HapticParams};
use crate::plant::{DeviceState, VehicleState, SUBSTEPS_PER_TICK};
use crate::track::{wrap_angle, TrackError, TrackPath};
use crate::units::{kmh_to_ms, RAD_TO_DEG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuidanceMethod {
    N,
    G,
    C,
}

impl GuidanceMethod {
    pub const ALL: [GuidanceMethod; 3] = [GuidanceMethod::N, GuidanceMethod::G, GuidanceMethod::C];
}

impl fmt::Display for GuidanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GuidanceMethod::N => "N",
            GuidanceMethod::G => "G",
            GuidanceMethod::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for GuidanceMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" => Ok(GuidanceMethod::N),
            "G" => Ok(GuidanceMethod::G),
            "C" => Ok(GuidanceMethod::C),
            other => Err(format!("unknown guidance method `{other}` (expected N, G or C)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceGains {
    /// N*m/deg
    pub k_pid: f64,
    /// N*m/(deg*s)
    pub i_pid: f64,
    /// N*m*s/deg
    pub d_pid: f64,
    /// Stable damping under guidance, N*m*s/deg (five times the ambient `D_s`).
    pub d_stable: f64,
    /// Look-ahead direction gain (deg of wheel per deg of error).
    pub k_p: f64,
    /// Distance gain, deg/m.
    pub k_d: f64,
    /// Look-ahead time, s.
    pub lookahead_time: f64,
    /// Overspeed threshold, km/h.
    pub v_max_kmh: f64,
    /// Keep the self-alignment torque on the wheel while guiding.
    pub keep_alignment: bool,
}

impl Default for GuidanceGains {
    fn default() -> Self {
        Self {
            k_pid: 0.60,
            i_pid: 0.12,
            d_pid: 0.06,
            d_stable: 5.0 * HapticParams::default().d_s,
            k_p: 7.65,
            k_d: 1.00,
            lookahead_time: 1.0,
            v_max_kmh: 66.0,
            keep_alignment: false,
        }
    }
}

impl GuidanceGains {
    /// All assist gains zero: guidance renders nothing beyond the ambient feel.
    pub fn zeroed() -> Self {
        Self { k_pid: 0.0, i_pid: 0.0, d_pid: 0.0, d_stable: 0.0, k_p: 0.0, k_d: 0.0, ..Self::default() }
    }

    pub fn is_null(&self) -> bool {
        self.k_pid == 0.0 && self.i_pid == 0.0 && self.d_pid == 0.0 && self.d_stable == 0.0
    }
}

/// Zero-order hold from the vehicle rate to the device rate followed by a
/// moving average over one vehicle period.
#[derive(Debug, Clone, PartialEq)]
pub struct Upsampler {
    taps: [f64; SUBSTEPS_PER_TICK as usize],
    next: usize,
    held: f64,
    primed: bool,
}

impl Default for Upsampler {
    fn default() -> Self {
        Self::new()
    }
}

impl Upsampler {
    pub fn new() -> Self {
        Self { taps: [0.0; SUBSTEPS_PER_TICK as usize], next: 0, held: 0.0, primed: false }
    }

    /// Latch a new vehicle-rate sample. The first sample fills the window.
    pub fn push_sample(&mut self, value: f64) {
        if !self.primed {
            self.taps = [value; SUBSTEPS_PER_TICK as usize];
            self.primed = true;
        }
        self.held = value;
    }

    /// Advance one device tick and return the smoothed value.
    pub fn tick(&mut self) -> f64 {
        self.taps[self.next] = self.held;
        self.next = (self.next + 1) % self.taps.len();
        self.taps.iter().sum::<f64>() / self.taps.len() as f64
    }

    pub fn reset(&mut self) {
        *self = Self::new();
    }
}

/// PID state whose integral restarts whenever the error crosses or touches zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
    /// Time since the most recent zero crossing, s.
    pub since_zero: f64,
}

impl PidState {
    /// Updates the integral (trapezoidal) and returns `(integral, derivative)`.
    pub fn advance(&mut self, error: f64, dt: f64) -> (f64, f64) {
        let derivative = match self.prev_error {
            Some(prev) => {
                if prev * error <= 0.0 {
                    self.integral = 0.0;
                    self.since_zero = 0.0;
                } else {
                    self.integral += 0.5 * (prev + error) * dt;
                    self.since_zero += dt;
                }
                (error - prev) / dt
            }
            None => {
                if error == 0.0 {
                    self.since_zero = 0.0;
                }
                0.0
            }
        };
        self.prev_error = Some(error);
        (self.integral, derivative)
    }
}

/// `K_pid * e + I_pid * integral + D_pid * de/dt`; advances the PID state.
pub fn pid_steering_assist(error: f64, pid: &mut PidState, dt: f64, gains: &GuidanceGains) -> f64 {
    let (integral, derivative) = pid.advance(error, dt);
    gains.k_pid * error + gains.i_pid * integral + gains.d_pid * derivative
}

/// Unilateral assist: `k * e` when `e >= 0`, else 0.
pub fn unilateral_assist(error: f64, k: f64) -> f64 {
    if error >= 0.0 {
        k * error
    } else {
        0.0
    }
}

/// Pedal assist toward the predicted angle; only ever pushes the foot up.
pub fn nn_pedal_assist(theta_a: f64, predicted: f64, p: &HapticParams) -> f64 {
    if theta_a < predicted {
        0.0
    } else {
        unilateral_assist(theta_a - predicted, p.k_a_max)
    }
}

/// Desired wheel angle of conventional guidance, deg.
pub fn conventional_desired_steer(e_p: f64, e_d: f64, gains: &GuidanceGains) -> f64 {
    gains.k_p * e_p + gains.k_d * e_d
}

/// Desired accelerator angle of conventional guidance: the normal endpoint
/// below the overspeed threshold, the pedal minimum at or above it.
pub fn conventional_desired_pedal(v_kmh: f64, gains: &GuidanceGains, p: &HapticParams) -> f64 {
    if v_kmh < gains.v_max_kmh {
        p.theta_a_max
    } else {
        p.theta_a_min
    }
}

pub fn conventional_pedal_error(theta_a: f64, v_kmh: f64, gains: &GuidanceGains, p: &HapticParams) -> f64 {
    theta_a - conventional_desired_pedal(v_kmh, gains, p)
}

pub fn is_overspeed(v: f64, gains: &GuidanceGains) -> bool {
    v >= kmh_to_ms(gains.v_max_kmh)
}

/// Path-relative errors: `e_p` (deg), `e_d` (m, left of midline positive)
/// and `e_delta` (deg).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LookaheadErrors {
    pub e_p: f64,
    pub e_d: f64,
    pub e_delta: f64,
    pub s: f64,
}

/// `e_p` is the angle from the vehicle heading to the line of sight toward
/// the midline point `v * lookahead_time` ahead of the closest point.
pub fn lookahead_errors(
    path: &TrackPath,
    state: &VehicleState,
    lookahead_time: f64,
) -> Result<LookaheadErrors, TrackError> {
    let q = path.closest_midline_point(state.x, state.y)?;
    let (tx, ty) = path.point_at_extended(q.s + state.v * lookahead_time);
    let los = (ty - state.y).atan2(tx - state.x);
    let e_p = if (tx - state.x).hypot(ty - state.y) > 1e-9 {
        wrap_angle(los - state.heading) * RAD_TO_DEG
    } else {
        wrap_angle(q.tangent_heading - state.heading) * RAD_TO_DEG
    };
    Ok(LookaheadErrors {
        e_p,
        e_d: q.lateral_offset,
        e_delta: wrap_angle(state.heading - q.tangent_heading) * RAD_TO_DEG,
        s: q.s,
    })
}

/// Desired angles handed from the vehicle-rate loop to the device loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredAngles {
    pub steer: f64,
    pub accel: f64,
}

/// Device-rate feedback produced by a shared-control law.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Feedback {
    /// Torque applied to the wheel, counterclockwise positive.
    pub steer: f64,
    /// Pedal torques, positive pushing the pedal up.
    pub accel: f64,
    pub brake: f64,
    pub assist_steer: f64,
    pub assist_accel: f64,
}

/// Ambient feedback of method N (and of guidance while inactive).
pub fn ambient_feedback(dev: &DeviceState, vehicle: &VehicleState, p: &HapticParams) -> Feedback {
    Feedback {
        steer: haptics::rim_steering_torque(vehicle.f_fl, vehicle.f_fr, dev.steer.rate, p),
        accel: haptics::accelerator_torque(dev.accel.angle, dev.accel.rate, p),
        brake: haptics::brake_torque(dev.brake.angle, dev.brake.rate, p),
        assist_steer: 0.0,
        assist_accel: 0.0,
    }
}

/// Device-rate law shared by methods G and C.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedControlLaw {
    pub gains: GuidanceGains,
    pub haptic: HapticParams,
    steer_filter: Upsampler,
    accel_filter: Upsampler,
    smooth_accel: bool,
    pid: PidState,
    accel_target: f64,
}

impl SharedControlLaw {
    /// `smooth_accel` routes the desired pedal angle through the upsampler
    /// (used for model predictions; endpoint switches are rendered at once).
    pub fn new(gains: GuidanceGains, haptic: HapticParams, smooth_accel: bool) -> Self {
        Self {
            gains,
            haptic,
            steer_filter: Upsampler::new(),
            accel_filter: Upsampler::new(),
            smooth_accel,
            pid: PidState::default(),
            accel_target: 0.0,
        }
    }

    /// Latch the desired angles for the coming vehicle period.
    pub fn set_desired(&mut self, desired: DesiredAngles) {
        self.steer_filter.push_sample(desired.steer);
        if self.smooth_accel {
            self.accel_filter.push_sample(desired.accel);
        }
        self.accel_target = desired.accel;
    }

    pub fn pid(&self) -> &PidState {
        &self.pid
    }

    /// One device tick: steering `-(T_assist + D_stable * rate)`, pedal
    /// `T_assist + spring + damping + g`.
    pub fn tick(&mut self, dev: &DeviceState, vehicle: &VehicleState, dt: f64) -> Feedback {
        let g = &self.gains;
        let p = &self.haptic;
        let steer_des = self.steer_filter.tick();
        let accel_des = if self.smooth_accel { self.accel_filter.tick() } else { self.accel_target };

        let e_s = dev.steer.angle - steer_des;
        let assist_steer = pid_steering_assist(e_s, &mut self.pid, dt, g);
        let mut steer = -(assist_steer + g.d_stable * dev.steer.rate);
        if g.keep_alignment {
            steer += haptics::rim_steering_torque(vehicle.f_fl, vehicle.f_fr, 0.0, p);
        }

        let theta_a = dev.accel.angle;
        let assist_accel = unilateral_assist(theta_a - accel_des, p.k_a_max);
        let accel = assist_accel
            + haptics::accelerator_spring(theta_a, p)
            + p.d_a * dev.accel.rate
            + haptics::gravity_compensation(theta_a);

        Feedback {
            steer,
            accel,
            brake: haptics::brake_torque(dev.brake.angle, dev.brake.rate, p),
            assist_steer,
            assist_accel,
        }
    }
}
