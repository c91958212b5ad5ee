//! Time-indexed record of one driving trial at the vehicle rate.
//!
//! The CSV form has a fixed header ([`COLUMNS`]) and one row per 20-ms tick.
//! Floats are written in shortest round-trip form, so a log survives a
//! write/read cycle bit-for-bit.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidance::GuidanceMethod;
use crate::plant::VEHICLE_DT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogError {
    #[error("log header mismatch: expected `{expected}`")]
    Header { expected: String },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("row {row}: non-finite value in column `{column}`")]
    NonFinite { row: usize, column: &'static str },
    #[error("row {row}: time {t} breaks the uniform {VEHICLE_DT}-s grid")]
    Timing { row: usize, t: f64 },
    #[error("row {row}: method {found} differs from the log's method {expected}")]
    MixedMethod { row: usize, expected: GuidanceMethod, found: GuidanceMethod },
}

/// One tick. Angles in degrees, rates in deg/s, distances in meters, speed
/// in m/s, torques in N*m. `heading` is in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub yaw_rate: f64,
    pub rpm: f64,
    pub f_fl: f64,
    pub f_fr: f64,
    /// Arc length of the closest first-lane midline point.
    pub s: f64,
    pub e_d: f64,
    pub e_delta: f64,
    pub e_p: f64,
    pub theta_s: f64,
    pub theta_s_rate: f64,
    pub theta_a: f64,
    pub theta_a_rate: f64,
    pub theta_b: f64,
    pub theta_b_rate: f64,
    pub d: [f64; 5],
    /// Driver intent angles (0 when the driver applies raw torque).
    pub intent_s: f64,
    pub intent_a: f64,
    /// Skill-model predictions (the measured angle while warming up).
    pub pred_s: f64,
    pub pred_a: f64,
    /// Desired angles used by the active guidance method.
    pub desired_s: f64,
    pub desired_a: f64,
    /// Feedback torque applied to each device, device-angle positive.
    pub fb_s: f64,
    pub fb_a: f64,
    pub assist_s: f64,
    pub assist_a: f64,
    pub driver_s: f64,
    pub driver_a: f64,
    pub overspeed: bool,
}

pub const COLUMNS: [&str; NUM_COLUMNS] = [
    "t", "x", "y", "heading", "v", "yaw_rate", "rpm", "f_fl", "f_fr", "s", "e_d", "e_delta", "e_p",
    "theta_s", "theta_s_rate", "theta_a", "theta_a_rate", "theta_b", "theta_b_rate", "d1", "d2", "d3",
    "d4", "d5", "intent_s", "intent_a", "pred_s", "pred_a", "desired_s", "desired_a", "fb_s", "fb_a",
    "assist_s", "assist_a", "driver_s", "driver_a", "overspeed", "method",
];

pub const NUM_COLUMNS: usize = 38;

fn header() -> String {
    COLUMNS.join(",")
}

impl LogRow {
    fn numeric(&self) -> [f64; 36] {
        [
            self.t,
            self.x,
            self.y,
            self.heading,
            self.v,
            self.yaw_rate,
            self.rpm,
            self.f_fl,
            self.f_fr,
            self.s,
            self.e_d,
            self.e_delta,
            self.e_p,
            self.theta_s,
            self.theta_s_rate,
            self.theta_a,
            self.theta_a_rate,
            self.theta_b,
            self.theta_b_rate,
            self.d[0],
            self.d[1],
            self.d[2],
            self.d[3],
            self.d[4],
            self.intent_s,
            self.intent_a,
            self.pred_s,
            self.pred_a,
            self.desired_s,
            self.desired_a,
            self.fb_s,
            self.fb_a,
            self.assist_s,
            self.assist_a,
            self.driver_s,
            self.driver_a,
        ]
    }

    fn from_numeric(v: &[f64; 36], overspeed: bool) -> Self {
        LogRow {
            t: v[0],
            x: v[1],
            y: v[2],
            heading: v[3],
            v: v[4],
            yaw_rate: v[5],
            rpm: v[6],
            f_fl: v[7],
            f_fr: v[8],
            s: v[9],
            e_d: v[10],
            e_delta: v[11],
            e_p: v[12],
            theta_s: v[13],
            theta_s_rate: v[14],
            theta_a: v[15],
            theta_a_rate: v[16],
            theta_b: v[17],
            theta_b_rate: v[18],
            d: [v[19], v[20], v[21], v[22], v[23]],
            intent_s: v[24],
            intent_a: v[25],
            pred_s: v[26],
            pred_a: v[27],
            desired_s: v[28],
            desired_a: v[29],
            fb_s: v[30],
            fb_a: v[31],
            assist_s: v[32],
            assist_a: v[33],
            driver_s: v[34],
            driver_a: v[35],
            overspeed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub method: GuidanceMethod,
    pub rows: Vec<LogRow>,
}

impl RunLog {
    pub fn new(method: GuidanceMethod) -> Self {
        Self { method, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.rows.len() as f64 * VEHICLE_DT
    }

    /// Checks uniform timing and finiteness of every channel.
    pub fn validate(&self) -> Result<(), LogError> {
        for (k, row) in self.rows.iter().enumerate() {
            for (value, column) in row.numeric().iter().zip(COLUMNS) {
                if !value.is_finite() {
                    return Err(LogError::NonFinite { row: k, column });
                }
            }
            if (row.t - k as f64 * VEHICLE_DT).abs() > 1e-9 {
                return Err(LogError::Timing { row: k, t: row.t });
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 400 + 400);
        out.push_str(&header());
        out.push('\n');
        for row in &self.rows {
            for v in row.numeric() {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{},{}", u8::from(row.overspeed), self.method);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, LogError> {
        let mut lines = text.lines();
        let expected = header();
        if lines.next().map(str::trim_end) != Some(expected.as_str()) {
            return Err(LogError::Header { expected });
        }
        let mut method = None;
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != NUM_COLUMNS {
                return Err(LogError::Row {
                    row: k,
                    msg: format!("expected {NUM_COLUMNS} fields, found {}", fields.len()),
                });
            }
            let mut nums = [0.0; 36];
            for (i, f) in fields[..36].iter().enumerate() {
                nums[i] = f.parse().map_err(|e| LogError::Row {
                    row: k,
                    msg: format!("column {}: {e}", COLUMNS[i]),
                })?;
            }
            let overspeed = match fields[36] {
                "0" => false,
                "1" => true,
                other => return Err(LogError::Row { row: k, msg: format!("overspeed flag `{other}`") }),
            };
            let m = GuidanceMethod::from_str(fields[37])
                .map_err(|e| LogError::Row { row: k, msg: e })?;
            match method {
                None => method = Some(m),
                Some(expected) if expected != m => {
                    return Err(LogError::MixedMethod { row: k, expected, found: m })
                }
                _ => {}
            }
            rows.push(LogRow::from_numeric(&nums, overspeed));
        }
        let log = RunLog { method: method.unwrap_or(GuidanceMethod::N), rows };
        log.validate()?;
        Ok(log)
    }
}
