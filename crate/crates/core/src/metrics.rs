//! Run measures: predictive errors against the skill model, lane-keeping
//! errors, speed error after reaching the target and pedaling speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runlog::{LogRow, RunLog};
use crate::skillnet::{assemble_features, feature_rows, valid_window_range, SkillNet, HISTORY, TAU};
use crate::track::{wrap_angle, TrackError, TrackPath};
use crate::units::{rms, target_speed, RAD_TO_DEG};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("log of {len} samples holds no complete prediction window")]
    LogTooShort { len: usize },
    #[error("speed never reached the target")]
    NeverReachedTarget,
    #[error(transparent)]
    Track(#[from] TrackError),
}

/// Prediction errors `pred[k] - theta[k + TAU]` of one network over a log.
pub fn prediction_errors(log: &RunLog, net: &SkillNet) -> Result<Vec<f64>, MetricsError> {
    let rows = feature_rows(log);
    let range = valid_window_range(rows.len());
    if range.is_empty() {
        return Err(MetricsError::LogTooShort { len: rows.len() });
    }
    Ok(range
        .map(|k| {
            let w = assemble_features(&rows, k, net.channel).expect("index inside the valid range");
            net.predict(&w.inputs) - w.label
        })
        .collect())
}

/// Normalized RMS prediction errors of the steering and accelerator
/// networks, in percent of each network's corpus range.
pub fn predictive_errors(log: &RunLog, net_s: &SkillNet, net_a: &SkillNet) -> Result<(f64, f64), MetricsError> {
    let norm = |net: &SkillNet| -> Result<f64, MetricsError> {
        Ok(rms(prediction_errors(log, net)?) / net.normalizer.output_range() * 100.0)
    };
    Ok((norm(net_s)?, norm(net_a)?))
}

/// Distance (m) and heading (deg) error of one pose against the first-lane midline.
pub fn pose_errors(path: &TrackPath, x: f64, y: f64, heading: f64) -> Result<(f64, f64), TrackError> {
    let q = path.closest_midline_point(x, y)?;
    Ok((q.lateral_offset, wrap_angle(heading - q.tangent_heading) * RAD_TO_DEG))
}

/// `(E_d, E_delta)`: RMS of the distance and heading errors over every tick.
pub fn steering_errors(log: &RunLog, path: &TrackPath) -> Result<(f64, f64), MetricsError> {
    let mut ed = Vec::with_capacity(log.len());
    let mut edelta = Vec::with_capacity(log.len());
    for r in &log.rows {
        let (d, a) = pose_errors(path, r.x, r.y, r.heading)?;
        ed.push(d);
        edelta.push(a);
    }
    Ok((rms(ed), rms(edelta)))
}

/// Index of the first tick with `v >= v_d`.
pub fn first_target_crossing(log: &RunLog) -> Option<usize> {
    let vd = target_speed();
    log.rows.iter().position(|r| r.v >= vd)
}

/// RMS of `v - v_d` over the ticks strictly after the first time the speed
/// reaches `v_d`.
pub fn velocity_error(log: &RunLog) -> Result<f64, MetricsError> {
    let k = first_target_crossing(log).ok_or(MetricsError::NeverReachedTarget)?;
    let vd = target_speed();
    Ok(rms(log.rows[k + 1..].iter().map(|r| r.v - vd)))
}

/// RMS of the accelerator angular rate, deg/s.
pub fn pedaling_speed(log: &RunLog) -> f64 {
    rms(log.rows.iter().map(|r| r.theta_a_rate.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Percent; absent without skill networks.
    pub es_p: Option<f64>,
    pub ea_p: Option<f64>,
    /// m
    pub e_d: f64,
    /// deg
    pub e_delta: f64,
    /// m/s; absent when the target speed was never reached.
    pub e_v: Option<f64>,
    /// deg/s
    pub omega_a: f64,
    pub ticks: usize,
    pub windows: usize,
    pub ticks_after_target: usize,
}

pub const REPORT_COLUMNS: [&str; 9] =
    ["es_p", "ea_p", "e_d", "e_delta", "e_v", "omega_a", "ticks", "windows", "ticks_after_target"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsReport {
    pub fn csv_header() -> String {
        REPORT_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            opt(self.es_p),
            opt(self.ea_p),
            self.e_d,
            self.e_delta,
            opt(self.e_v),
            self.omega_a,
            self.ticks,
            self.windows,
            self.ticks_after_target
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != REPORT_COLUMNS.len() {
            return Err(format!("expected {} fields, found {}", REPORT_COLUMNS.len(), f.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
        let maybe = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        let count = |s: &str| s.parse::<usize>().map_err(|e| format!("`{s}`: {e}"));
        Ok(Self {
            es_p: maybe(f[0])?,
            ea_p: maybe(f[1])?,
            e_d: num(f[2])?,
            e_delta: num(f[3])?,
            e_v: maybe(f[4])?,
            omega_a: num(f[5])?,
            ticks: count(f[6])?,
            windows: count(f[7])?,
            ticks_after_target: count(f[8])?,
        })
    }
}

/// Full report for one run, recomputed from the log.
pub fn evaluate(log: &RunLog, path: &TrackPath, nets: Option<(&SkillNet, &SkillNet)>) -> Result<MetricsReport, MetricsError> {
    let (es_p, ea_p) = match nets {
        Some((s, a)) => {
            let (es, ea) = predictive_errors(log, s, a)?;
            (Some(es), Some(ea))
        }
        None => (None, None),
    };
    let (e_d, e_delta) = steering_errors(log, path)?;
    let crossing = first_target_crossing(log);
    Ok(MetricsReport {
        es_p,
        ea_p,
        e_d,
        e_delta,
        e_v: velocity_error(log).ok(),
        omega_a: pedaling_speed(log),
        ticks: log.len(),
        windows: valid_window_range(log.len()).len(),
        ticks_after_target: crossing.map_or(0, |k| log.len() - k - 1),
    })
}

/// Running sums fed one logged row at a time during a session.
///
/// Predictive errors use the logged online predictions (`pred_s`, `pred_a`)
/// and the angle `TAU` ticks later; distance and heading errors use the
/// logged `e_d` and `e_delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsAccumulator {
    range_s: Option<f64>,
    range_a: Option<f64>,
    pending: std::collections::VecDeque<(f64, f64)>,
    ticks: usize,
    sq_s: f64,
    sq_a: f64,
    windows: usize,
    sq_d: f64,
    sq_delta: f64,
    sq_rate: f64,
    reached: bool,
    sq_v: f64,
    after_target: usize,
}

impl MetricsAccumulator {
    /// `ranges` are the networks' output ranges; `None` disables the
    /// predictive errors.
    pub fn new(ranges: Option<(f64, f64)>) -> Self {
        Self {
            range_s: ranges.map(|r| r.0),
            range_a: ranges.map(|r| r.1),
            pending: std::collections::VecDeque::with_capacity(TAU + 1),
            ticks: 0,
            sq_s: 0.0,
            sq_a: 0.0,
            windows: 0,
            sq_d: 0.0,
            sq_delta: 0.0,
            sq_rate: 0.0,
            reached: false,
            sq_v: 0.0,
            after_target: 0,
        }
    }

    pub fn for_nets(net_s: &SkillNet, net_a: &SkillNet) -> Self {
        Self::new(Some((net_s.normalizer.output_range(), net_a.normalizer.output_range())))
    }

    pub fn push(&mut self, row: &LogRow) {
        let k = self.ticks;
        self.ticks += 1;
        if self.pending.len() == TAU {
            let (ps, pa) = self.pending.pop_front().expect("non-empty");
            if k - TAU >= HISTORY {
                self.sq_s += (ps - row.theta_s).powi(2);
                self.sq_a += (pa - row.theta_a).powi(2);
                self.windows += 1;
            }
        }
        self.pending.push_back((row.pred_s, row.pred_a));

        self.sq_d += row.e_d * row.e_d;
        self.sq_delta += row.e_delta * row.e_delta;
        self.sq_rate += row.theta_a_rate * row.theta_a_rate;
        if self.reached {
            self.sq_v += (row.v - target_speed()).powi(2);
            self.after_target += 1;
        } else if row.v >= target_speed() {
            self.reached = true;
        }
    }

    fn mean_root(sum: f64, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            (sum / n as f64).sqrt()
        }
    }

    pub fn report(&self) -> MetricsReport {
        let pct = |sq: f64, range: Option<f64>| range.map(|r| Self::mean_root(sq, self.windows) / r * 100.0);
        MetricsReport {
            es_p: pct(self.sq_s, self.range_s),
            ea_p: pct(self.sq_a, self.range_a),
            e_d: Self::mean_root(self.sq_d, self.ticks),
            e_delta: Self::mean_root(self.sq_delta, self.ticks),
            e_v: self.reached.then(|| Self::mean_root(self.sq_v, self.after_target)),
            omega_a: Self::mean_root(self.sq_rate, self.ticks),
            ticks: self.ticks,
            windows: self.windows,
            ticks_after_target: self.after_target,
        }
    }
}

/// Mean of each metric over a group of reports (absent values skipped).
pub fn mean_report(reports: &[MetricsReport]) -> MetricsReport {
    let mean = |vals: Vec<f64>| if vals.is_empty() { None } else { Some(vals.iter().sum::<f64>() / vals.len() as f64) };
    let pick = |f: &dyn Fn(&MetricsReport) -> Option<f64>| mean(reports.iter().filter_map(f).collect());
    MetricsReport {
        es_p: pick(&|r| r.es_p),
        ea_p: pick(&|r| r.ea_p),
        e_d: pick(&|r| Some(r.e_d)).unwrap_or(0.0),
        e_delta: pick(&|r| Some(r.e_delta)).unwrap_or(0.0),
        e_v: pick(&|r| r.e_v),
        omega_a: pick(&|r| Some(r.omega_a)).unwrap_or(0.0),
        ticks: reports.iter().map(|r| r.ticks).sum(),
        windows: reports.iter().map(|r| r.windows).sum(),
        ticks_after_target: reports.iter().map(|r| r.ticks_after_target).sum(),
    }
}
