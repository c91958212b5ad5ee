//! Unit conversions and shared task constants.

pub const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;

/// Instructed cruising speed shown on the speedometer, km/h.
pub const TARGET_SPEED_DISPLAY_KMH: f64 = 60.0;
/// True speed at which the speedometer reads the target, km/h.
pub const TARGET_SPEED_KMH: f64 = 62.64;

pub fn kmh_to_ms(v: f64) -> f64 {
    v / 3.6
}

pub fn ms_to_kmh(v: f64) -> f64 {
    v * 3.6
}

/// True target speed, m/s.
pub fn target_speed() -> f64 {
    kmh_to_ms(TARGET_SPEED_KMH)
}

pub fn rms(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}
