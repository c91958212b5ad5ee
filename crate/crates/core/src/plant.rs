//! Simplified vehicle plant and simulated control devices.
//!
//! The vehicle is a kinematic bicycle referenced at the rear-axle center,
//! with a single effective gear, aerodynamic drag and rolling resistance.
//! Front lateral tire forces come from a linear, saturating tire model
//! driven by the quasi-static front slip needed for the current lateral
//! acceleration.
//!
//! The device side integrates wheel, accelerator and brake as independent
//! rotational axes at the device rate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{kmh_to_ms, RAD_TO_DEG};

/// Vehicle simulation rate, Hz.
pub const VEHICLE_RATE_HZ: u32 = 50;
/// Device (torque) loop rate, Hz.
pub const DEVICE_RATE_HZ: u32 = 800;
pub const SUBSTEPS_PER_TICK: u32 = DEVICE_RATE_HZ / VEHICLE_RATE_HZ;
pub const VEHICLE_DT: f64 = 1.0 / VEHICLE_RATE_HZ as f64;
pub const DEVICE_DT: f64 = 1.0 / DEVICE_RATE_HZ as f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("non-finite {0} after integration step")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub mass: f64,
    pub wheelbase: f64,
    pub width: f64,
    pub length: f64,
    pub steering_ratio: f64,
    /// Fraction of the mass carried by the front axle.
    pub front_axle_share: f64,
    /// Front-axle cornering stiffness, N/rad.
    pub cornering_stiffness_front: f64,
    /// Saturation of the front-axle lateral force, N.
    pub front_force_max: f64,
    pub wheel_radius: f64,
    pub effective_drive_ratio: f64,
    pub idle_rpm: f64,
    pub max_engine_torque: f64,
    /// `0.5 * rho * Cd * A`, N/(m/s)^2.
    pub drag_coefficient: f64,
    pub rolling_resistance: f64,
    pub max_brake_force: f64,
    pub gravity: f64,
}

/// Speed at which the calibrated drive ratio puts the engine at `CALIBRATION_RPM`.
pub const CALIBRATION_SPEED_KMH: f64 = 62.64;
pub const CALIBRATION_RPM: f64 = 2000.0;

impl Default for VehicleParams {
    fn default() -> Self {
        let wheel_radius = 0.33;
        let wheel_rpm = kmh_to_ms(CALIBRATION_SPEED_KMH) / (2.0 * PI * wheel_radius) * 60.0;
        Self {
            mass: 1900.0,
            wheelbase: 2.9,
            width: 1.8,
            length: 5.0,
            steering_ratio: 12.0,
            front_axle_share: 0.55,
            cornering_stiffness_front: 80_000.0,
            front_force_max: 8_000.0,
            wheel_radius,
            effective_drive_ratio: CALIBRATION_RPM / wheel_rpm,
            idle_rpm: 800.0,
            max_engine_torque: 450.0,
            drag_coefficient: 0.42,
            rolling_resistance: 0.012,
            max_brake_force: 12_000.0,
            gravity: 9.81,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Radians.
    pub heading: f64,
    /// Longitudinal speed, m/s.
    pub v: f64,
    /// Yaw rate, deg/s.
    pub yaw_rate: f64,
    /// Engine speed, RPM.
    pub rpm: f64,
    /// Front-left / front-right lateral tire force, N, left positive.
    pub f_fl: f64,
    pub f_fr: f64,
    /// Road-wheel angle applied during the last step, rad.
    pub road_wheel_angle: f64,
}

impl VehicleState {
    /// Vehicle at rest at `pose` with the engine idling.
    pub fn at_rest(x: f64, y: f64, heading: f64, params: &VehicleParams) -> Self {
        Self {
            x,
            y,
            heading,
            v: 0.0,
            yaw_rate: 0.0,
            rpm: params.idle_rpm,
            f_fl: 0.0,
            f_fr: 0.0,
            road_wheel_angle: 0.0,
        }
    }

    pub fn pose(&self) -> crate::track::Pose {
        crate::track::Pose::new(self.x, self.y, self.heading)
    }

    fn check_finite(&self) -> Result<(), PlantError> {
        let fields = [
            ("x", self.x),
            ("y", self.y),
            ("heading", self.heading),
            ("v", self.v),
            ("yaw_rate", self.yaw_rate),
            ("rpm", self.rpm),
            ("f_fl", self.f_fl),
            ("f_fr", self.f_fr),
        ];
        match fields.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, _)) => Err(PlantError::NonFinite(name)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleControls {
    /// 0..1
    pub throttle: f64,
    /// 0..1
    pub brake: f64,
    /// Road-wheel angle, rad, left positive.
    pub road_wheel_angle: f64,
}

/// `r = max(idle, v / (2 pi r_w) * ratio * 60)`.
pub fn engine_rpm(v: f64, params: &VehicleParams) -> f64 {
    let rpm = v / (2.0 * PI * params.wheel_radius) * params.effective_drive_ratio * 60.0;
    rpm.max(params.idle_rpm)
}

/// Front tire forces for motion at `state.v` with road-wheel angle `delta`.
///
/// The front slip angle is the one a linear tire needs to carry the front
/// share of the lateral acceleration `v * yaw_rate`; each tire carries half
/// of the saturated axle force.
pub fn lateral_front_forces(state: &VehicleState, delta: f64, params: &VehicleParams) -> (f64, f64) {
    let v = state.v;
    let lateral_accel = v * v * delta.tan() / params.wheelbase;
    let slip = params.front_axle_share * params.mass * lateral_accel / params.cornering_stiffness_front;
    let axle = (params.cornering_stiffness_front * slip)
        .clamp(-params.front_force_max, params.front_force_max);
    (0.5 * axle, 0.5 * axle)
}

/// Longitudinal drive force for a throttle fraction. The pedal map is
/// progressive: engine torque scales with throttle squared.
pub fn drive_force(throttle: f64, params: &VehicleParams) -> f64 {
    let t = throttle.clamp(0.0, 1.0);
    params.max_engine_torque * t * t * params.effective_drive_ratio / params.wheel_radius
}

/// Advances the vehicle by `dt` seconds.
pub fn step_vehicle(
    state: &VehicleState,
    controls: VehicleControls,
    dt: f64,
    params: &VehicleParams,
) -> Result<VehicleState, PlantError> {
    let m = params.mass;
    let v0 = state.v;
    let mut v = v0 + dt * (drive_force(controls.throttle, params) - params.drag_coefficient * v0 * v0) / m;
    let resist = params.rolling_resistance * m * params.gravity
        + controls.brake.clamp(0.0, 1.0) * params.max_brake_force;
    v = (v - dt * resist / m).max(0.0);

    let delta = controls.road_wheel_angle;
    let yaw_rate = v * delta.tan() / params.wheelbase;
    let dpsi = yaw_rate * dt;
    let heading = state.heading + dpsi;
    let (x, y) = if dpsi.abs() > 1e-12 {
        let r = v / yaw_rate;
        (
            state.x + r * (heading.sin() - state.heading.sin()),
            state.y - r * (heading.cos() - state.heading.cos()),
        )
    } else {
        (state.x + v * dt * state.heading.cos(), state.y + v * dt * state.heading.sin())
    };
    let mut next = VehicleState {
        x,
        y,
        heading,
        v,
        yaw_rate: yaw_rate * RAD_TO_DEG,
        rpm: engine_rpm(v, params),
        f_fl: 0.0,
        f_fr: 0.0,
        road_wheel_angle: delta,
    };
    (next.f_fl, next.f_fr) = lateral_front_forces(&next, delta, params);
    next.check_finite()?;
    Ok(next)
}

/// One rotational device axis. Angles in degrees, rates in deg/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Axis {
    pub angle: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviceState {
    pub steer: Axis,
    pub accel: Axis,
    pub brake: Axis,
}

/// Torques per axis, positive in the direction of increasing angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisTorques {
    pub steer: f64,
    pub accel: f64,
    pub brake: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisParams {
    /// N*m*s^2/deg
    pub inertia: f64,
    pub min_angle: f64,
    pub max_angle: f64,
    pub stop_stiffness: f64,
    pub stop_damping: f64,
    /// Motor limit applied to the feedback command, N*m.
    pub torque_limit: f64,
}

impl AxisParams {
    fn stop_torque(&self, a: Axis) -> f64 {
        if a.angle > self.max_angle {
            self.stop_stiffness * (self.max_angle - a.angle) - self.stop_damping * a.rate.max(0.0)
        } else if a.angle < self.min_angle {
            self.stop_stiffness * (self.min_angle - a.angle) - self.stop_damping * a.rate.min(0.0)
        } else {
            0.0
        }
    }

    /// Semi-implicit Euler step of `J * acc = driver + clamp(feedback) + stop`.
    pub fn step(&self, a: Axis, feedback: f64, driver: f64, dt: f64) -> Axis {
        let fb = feedback.clamp(-self.torque_limit, self.torque_limit);
        let acc = (driver + fb + self.stop_torque(a)) / self.inertia;
        let rate = a.rate + acc * dt;
        Axis { angle: a.angle + rate * dt, rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceParams {
    pub steer: AxisParams,
    pub accel: AxisParams,
    pub brake: AxisParams,
}

pub const STEER_LIMIT_DEG: f64 = 459.0;
pub const STEER_TORQUE_LIMIT: f64 = 16.58;
pub const PEDAL_TORQUE_LIMIT: f64 = 27.8;

impl Default for DeviceParams {
    fn default() -> Self {
        let pedal = |max_angle| AxisParams {
            inertia: 0.0005,
            min_angle: 0.0,
            max_angle,
            stop_stiffness: 20.0,
            stop_damping: 0.15,
            torque_limit: PEDAL_TORQUE_LIMIT,
        };
        Self {
            steer: AxisParams {
                inertia: 0.001,
                min_angle: -STEER_LIMIT_DEG,
                max_angle: STEER_LIMIT_DEG,
                stop_stiffness: 50.0,
                stop_damping: 0.3,
                torque_limit: STEER_TORQUE_LIMIT,
            },
            // The virtual endpoints at 10 and 5 deg are rendered by the haptic
            // laws; the mechanical travel ends further out.
            accel: pedal(25.0),
            brake: pedal(25.0),
        }
    }
}

/// Advances all three device axes by `dt`.
pub fn step_device(
    dev: &DeviceState,
    feedback: AxisTorques,
    driver: AxisTorques,
    dt: f64,
    params: &DeviceParams,
) -> Result<DeviceState, PlantError> {
    let next = DeviceState {
        steer: params.steer.step(dev.steer, feedback.steer, driver.steer, dt),
        accel: params.accel.step(dev.accel, feedback.accel, driver.accel, dt),
        brake: params.brake.step(dev.brake, feedback.brake, driver.brake, dt),
    };
    for (name, a) in [("steer", next.steer), ("accel", next.accel), ("brake", next.brake)] {
        if !(a.angle.is_finite() && a.rate.is_finite()) {
            return Err(PlantError::NonFinite(name));
        }
    }
    Ok(next)
}

/// Road-wheel angle (rad) for a steering-wheel angle (deg).
pub fn road_wheel_angle(steer_deg: f64, params: &VehicleParams) -> f64 {
    (steer_deg / params.steering_ratio).to_radians()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_is_equilibrium() {
        let p = VehicleParams::default();
        let s = VehicleState::at_rest(1.0, 2.0, 0.3, &p);
        let n = step_vehicle(&s, VehicleControls::default(), VEHICLE_DT, &p).unwrap();
        assert_eq!(n.x, s.x);
        assert_eq!(n.y, s.y);
        assert_eq!(n.heading, s.heading);
        assert_eq!(n.v, 0.0);
        assert_eq!(n.rpm, 800.0);
    }

    #[test]
    fn rpm_calibration() {
        let p = VehicleParams::default();
        assert_eq!(engine_rpm(0.0, &p), 800.0);
        assert!((engine_rpm(17.4, &p) - 2000.0).abs() < 1e-9);
        let mut last = engine_rpm(8.0, &p);
        for i in 9..60 {
            let r = engine_rpm(i as f64, &p);
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn straight_driving_keeps_heading() {
        let p = VehicleParams::default();
        let mut s = VehicleState::at_rest(0.0, 0.0, 0.7, &p);
        s.v = 15.0;
        for _ in 0..100 {
            s = step_vehicle(&s, VehicleControls { throttle: 0.3, ..Default::default() }, VEHICLE_DT, &p)
                .unwrap();
            assert_eq!(s.yaw_rate, 0.0);
            assert_eq!(s.heading, 0.7);
        }
    }

    #[test]
    fn coasting_never_speeds_up() {
        let p = VehicleParams::default();
        let mut s = VehicleState::at_rest(0.0, 0.0, 0.0, &p);
        s.v = 20.0;
        let c = VehicleControls { road_wheel_angle: 0.05, ..Default::default() };
        for _ in 0..20_000 {
            let n = step_vehicle(&s, c, VEHICLE_DT, &p).unwrap();
            assert!(n.v <= s.v);
            s = n;
        }
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn forces_zero_when_straight_and_signed_in_turns() {
        let p = VehicleParams::default();
        let mut s = VehicleState::at_rest(0.0, 0.0, 0.0, &p);
        s.v = 17.0;
        assert_eq!(lateral_front_forces(&s, 0.0, &p), (0.0, 0.0));
        let (l, r) = lateral_front_forces(&s, 0.05, &p);
        assert!(l > 0.0 && r > 0.0 && l == r);
        let (l, _) = lateral_front_forces(&s, -0.05, &p);
        assert!(l < 0.0);
        s.v = 40.0;
        let (l, r) = lateral_front_forces(&s, 0.3, &p);
        assert_eq!(l + r, p.front_force_max);
    }

    #[test]
    fn device_force_balance_holds_angle() {
        let dp = DeviceParams::default();
        let mut d = DeviceState::default();
        d.steer.angle = 30.0;
        d.accel.angle = 4.0;
        let fb = AxisTorques { steer: 2.0, accel: -1.2, brake: 0.0 };
        let dr = AxisTorques { steer: -2.0, accel: 1.2, brake: 0.0 };
        let n = step_device(&d, fb, dr, DEVICE_DT, &dp).unwrap();
        assert_eq!(n, d);
    }

    #[test]
    fn device_constant_torque_is_rigid_body() {
        let mut dp = DeviceParams::default();
        dp.steer.stop_stiffness = 0.0;
        let mut d = DeviceState::default();
        let t = 0.5;
        let n = 800;
        for _ in 0..n {
            d = step_device(&d, AxisTorques::default(), AxisTorques { steer: t, ..Default::default() }, DEVICE_DT, &dp)
                .unwrap();
        }
        let acc = t / dp.steer.inertia;
        assert!((d.steer.rate - acc * 1.0).abs() < 1e-9);
        // semi-implicit Euler: angle = acc * dt^2 * n(n+1)/2
        let expect = acc * DEVICE_DT * DEVICE_DT * (n * (n + 1) / 2) as f64;
        assert!((d.steer.angle - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn steering_end_stop_returns_wheel() {
        let dp = DeviceParams::default();
        let mut d = DeviceState::default();
        d.steer.angle = 470.0;
        // a driver leaning on the wheel with the full motor-rated torque
        let push = AxisTorques { steer: STEER_TORQUE_LIMIT, ..Default::default() };
        for _ in 0..8000 {
            d = step_device(&d, AxisTorques::default(), push, DEVICE_DT, &dp).unwrap();
        }
        assert!(d.steer.angle <= STEER_LIMIT_DEG + 0.5, "{}", d.steer.angle);
        assert!(d.steer.rate.abs() < 1e-6);
    }

    #[test]
    fn feedback_is_clamped_to_motor_limit() {
        let dp = DeviceParams::default();
        let d = DeviceState::default();
        let a = step_device(&d, AxisTorques { steer: 100.0, ..Default::default() }, AxisTorques::default(), DEVICE_DT, &dp)
            .unwrap();
        let b = step_device(
            &d,
            AxisTorques { steer: STEER_TORQUE_LIMIT, ..Default::default() },
            AxisTorques::default(),
            DEVICE_DT,
            &dp,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
